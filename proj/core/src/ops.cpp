#include "mcg/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "mcg/error.hpp"

namespace mcg::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

Node* raw(const Var& v) { return v.node().get(); }

void push(Node* n, const Tensor& g) {
    if (n->requires_grad) n->accumulate(g);
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
    if (v.value().rank() != rank) {
        throw ValidationError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                              shape_to_string(v.shape()));
    }
}

std::size_t trailing(const Tensor& t) { return t.size() / t.dim(0); }

}  // namespace

Var add(const Var& a, const Var& b) {
    Tensor out = a.value() + b.value();
    Node *pa = raw(a), *pb = raw(b);
    return make_op(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        push(pa, g);
        push(pb, g);
    });
}

Var sub(const Var& a, const Var& b) {
    Tensor out = a.value() - b.value();
    Node *pa = raw(a), *pb = raw(b);
    return make_op(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        push(pa, g);
        if (pb->requires_grad) pb->accumulate(g * -1.0);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    Node *pa = raw(a), *pb = raw(b);
    return make_op(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        if (pa->requires_grad) {
            Tensor& ga = pa->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            Tensor& gb = pb->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa->value[i];
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out = a.value() * s;
    Node* pa = raw(a);
    return make_op(std::move(out), {a}, [pa, s](const Tensor& g) { push(pa, g * s); });
}

Var add_channel(const Var& x, const Var& v) {
    const Tensor& xv = x.value();
    const std::size_t c = xv.dim(0);
    if (v.value().size() != c) throw ValidationError("add_channel: vector length does not match channels");
    const std::size_t n = trailing(xv);
    Tensor out = xv;
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double bias = v.value()[ci];
        double* row = out.data() + ci * n;
        for (std::size_t i = 0; i < n; ++i) row[i] += bias;
    }
    Node *px = raw(x), *pv = raw(v);
    return make_op(std::move(out), {x, v}, [px, pv, c, n](const Tensor& g) {
        push(px, g);
        if (pv->requires_grad) {
            Tensor& gv = pv->grad_buffer();
            for (std::size_t ci = 0; ci < c; ++ci) {
                double s = 0.0;
                const double* row = g.data() + ci * n;
                for (std::size_t i = 0; i < n; ++i) s += row[i];
                gv[ci] += s;
            }
        }
    });
}

Var silu(const Var& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] / (1.0 + std::exp(-xv[i]));
    Node* px = raw(x);
    return make_op(std::move(out), {x}, [px](const Tensor& g) {
        if (!px->requires_grad) return;
        Tensor& gx = px->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-px->value[i]));
            gx[i] += g[i] * s * (1.0 + px->value[i] * (1.0 - s));
        }
    });
}

Var conv3x3(const Var& x, const Var& w, const Var& b) {
    require_rank(x, 4, "conv3x3");
    const Tensor& xv = x.value();
    const std::size_t ci = xv.dim(0), f = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
    const Shape& ws = w.shape();
    if (ws.size() != 4 || ws[1] != ci || ws[2] != 3 || ws[3] != 3) {
        throw ValidationError("conv3x3: weight shape " + shape_to_string(ws) + " incompatible with input " +
                              shape_to_string(xv.shape()));
    }
    const std::size_t co = ws[0];
    const std::size_t hw = h * wd, cols_n = f * hw, k = ci * 9;

    auto cols = std::make_shared<Tensor>(Shape{k, cols_n});
    for (std::size_t c = 0; c < ci; ++c) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* dst = cols->data() + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * cols_n;
                for (std::size_t fi = 0; fi < f; ++fi) {
                    const double* src = xv.data() + (c * f + fi) * hw;
                    for (std::size_t y = 0; y < h; ++y) {
                        const long sy = static_cast<long>(y) + ky - 1;
                        double* d = dst + fi * hw + y * wd;
                        if (sy < 0 || sy >= static_cast<long>(h)) {
                            std::fill(d, d + wd, 0.0);
                            continue;
                        }
                        const double* s = src + static_cast<std::size_t>(sy) * wd;
                        for (std::size_t xx = 0; xx < wd; ++xx) {
                            const long sx = static_cast<long>(xx) + kx - 1;
                            d[xx] = (sx < 0 || sx >= static_cast<long>(wd)) ? 0.0 : s[sx];
                        }
                    }
                }
            }
        }
    }

    Tensor out({co, f, h, wd});
    MatMap y(out.data(), static_cast<long>(co), static_cast<long>(cols_n));
    ConstMatMap wm(w.value().data(), static_cast<long>(co), static_cast<long>(k));
    ConstMatMap cm(cols->data(), static_cast<long>(k), static_cast<long>(cols_n));
    y.noalias() = wm * cm;
    for (std::size_t o = 0; o < co; ++o) y.row(static_cast<long>(o)).array() += b.value()[o];

    Node *px = raw(x), *pw = raw(w), *pb = raw(b);
    return make_op(std::move(out), {x, w, b}, [=](const Tensor& g) {
        ConstMatMap gy(g.data(), static_cast<long>(co), static_cast<long>(cols_n));
        ConstMatMap colsm(cols->data(), static_cast<long>(k), static_cast<long>(cols_n));
        if (pw->requires_grad) {
            MatMap gw(pw->grad_buffer().data(), static_cast<long>(co), static_cast<long>(k));
            gw.noalias() += gy * colsm.transpose();
        }
        if (pb->requires_grad) {
            Tensor& gb = pb->grad_buffer();
            for (std::size_t o = 0; o < co; ++o) gb[o] += gy.row(static_cast<long>(o)).sum();
        }
        if (px->requires_grad) {
            ConstMatMap wmat(pw->value.data(), static_cast<long>(co), static_cast<long>(k));
            RowMat gcols = wmat.transpose() * gy;
            Tensor& gx = px->grad_buffer();
            for (std::size_t c = 0; c < ci; ++c) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const double* src = gcols.data() + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * cols_n;
                        for (std::size_t fi = 0; fi < f; ++fi) {
                            double* dst = gx.data() + (c * f + fi) * hw;
                            for (std::size_t yy = 0; yy < h; ++yy) {
                                const long sy = static_cast<long>(yy) + ky - 1;
                                if (sy < 0 || sy >= static_cast<long>(h)) continue;
                                const double* s = src + fi * hw + yy * wd;
                                double* d = dst + static_cast<std::size_t>(sy) * wd;
                                for (std::size_t xx = 0; xx < wd; ++xx) {
                                    const long sx = static_cast<long>(xx) + kx - 1;
                                    if (sx >= 0 && sx < static_cast<long>(wd)) d[sx] += s[xx];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    const Tensor& xv = x.value();
    const Shape& ws = w.shape();
    if (ws.size() != 2 || ws[1] != xv.dim(0) || b.value().size() != ws[0]) {
        throw ValidationError("linear: weight " + shape_to_string(ws) + " incompatible with input " +
                              shape_to_string(xv.shape()));
    }
    const std::size_t ci = ws[1], co = ws[0], n = trailing(xv);
    Shape out_shape = xv.shape();
    out_shape[0] = co;
    Tensor out(out_shape);
    MatMap y(out.data(), static_cast<long>(co), static_cast<long>(n));
    ConstMatMap wm(w.value().data(), static_cast<long>(co), static_cast<long>(ci));
    ConstMatMap xm(xv.data(), static_cast<long>(ci), static_cast<long>(n));
    y.noalias() = wm * xm;
    for (std::size_t o = 0; o < co; ++o) y.row(static_cast<long>(o)).array() += b.value()[o];

    Node *px = raw(x), *pw = raw(w), *pb = raw(b);
    return make_op(std::move(out), {x, w, b}, [=](const Tensor& g) {
        ConstMatMap gy(g.data(), static_cast<long>(co), static_cast<long>(n));
        if (pw->requires_grad) {
            ConstMatMap xin(px->value.data(), static_cast<long>(ci), static_cast<long>(n));
            MatMap gw(pw->grad_buffer().data(), static_cast<long>(co), static_cast<long>(ci));
            gw.noalias() += gy * xin.transpose();
        }
        if (pb->requires_grad) {
            Tensor& gb = pb->grad_buffer();
            for (std::size_t o = 0; o < co; ++o) gb[o] += gy.row(static_cast<long>(o)).sum();
        }
        if (px->requires_grad) {
            ConstMatMap wmat(pw->value.data(), static_cast<long>(co), static_cast<long>(ci));
            MatMap gx(px->grad_buffer().data(), static_cast<long>(ci), static_cast<long>(n));
            gx.noalias() += wmat.transpose() * gy;
        }
    });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, std::size_t groups, double eps) {
    const Tensor& xv = x.value();
    const std::size_t c = xv.dim(0);
    if (groups == 0 || c % groups != 0) throw ValidationError("group_norm: channels not divisible by groups");
    if (gamma.value().size() != c || beta.value().size() != c) {
        throw ValidationError("group_norm: affine parameters must have one entry per channel");
    }
    const std::size_t per_channel = trailing(xv);
    const std::size_t cpg = c / groups;
    const std::size_t group_n = cpg * per_channel;

    auto xhat = std::make_shared<Tensor>(xv.shape());
    auto inv_std = std::make_shared<std::vector<double>>(groups);
    Tensor out(xv.shape());
    for (std::size_t gi = 0; gi < groups; ++gi) {
        const double* src = xv.data() + gi * group_n;
        double mean = 0.0;
        for (std::size_t i = 0; i < group_n; ++i) mean += src[i];
        mean /= static_cast<double>(group_n);
        double var = 0.0;
        for (std::size_t i = 0; i < group_n; ++i) var += (src[i] - mean) * (src[i] - mean);
        var /= static_cast<double>(group_n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[gi] = is;
        double* xh = xhat->data() + gi * group_n;
        for (std::size_t i = 0; i < group_n; ++i) xh[i] = (src[i] - mean) * is;
    }
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double gm = gamma.value()[ci], bt = beta.value()[ci];
        const double* xh = xhat->data() + ci * per_channel;
        double* o = out.data() + ci * per_channel;
        for (std::size_t i = 0; i < per_channel; ++i) o[i] = gm * xh[i] + bt;
    }

    Node *px = raw(x), *pg = raw(gamma), *pb = raw(beta);
    return make_op(std::move(out), {x, gamma, beta}, [=](const Tensor& g) {
        if (pg->requires_grad || pb->requires_grad) {
            for (std::size_t ci = 0; ci < c; ++ci) {
                double sg = 0.0, sb = 0.0;
                const double* gr = g.data() + ci * per_channel;
                const double* xh = xhat->data() + ci * per_channel;
                for (std::size_t i = 0; i < per_channel; ++i) {
                    sg += gr[i] * xh[i];
                    sb += gr[i];
                }
                if (pg->requires_grad) pg->grad_buffer()[ci] += sg;
                if (pb->requires_grad) pb->grad_buffer()[ci] += sb;
            }
        }
        if (!px->requires_grad) return;
        Tensor& gx = px->grad_buffer();
        std::vector<double> dxh(group_n);
        for (std::size_t gi = 0; gi < groups; ++gi) {
            double mean_d = 0.0, mean_dx = 0.0;
            const double* xh = xhat->data() + gi * group_n;
            for (std::size_t cc = 0; cc < cpg; ++cc) {
                const std::size_t ch = gi * cpg + cc;
                const double gm = pg->value[ch];
                const double* gr = g.data() + ch * per_channel;
                for (std::size_t i = 0; i < per_channel; ++i) dxh[cc * per_channel + i] = gr[i] * gm;
            }
            for (std::size_t i = 0; i < group_n; ++i) {
                mean_d += dxh[i];
                mean_dx += dxh[i] * xh[i];
            }
            mean_d /= static_cast<double>(group_n);
            mean_dx /= static_cast<double>(group_n);
            const double is = (*inv_std)[gi];
            double* out_g = gx.data() + gi * group_n;
            for (std::size_t i = 0; i < group_n; ++i) out_g[i] += is * (dxh[i] - mean_d - xh[i] * mean_dx);
        }
    });
}

Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Tensor& xv = x.value();
    const std::size_t c = xv.dim(0), n = trailing(xv);
    if (gamma.value().size() != c || beta.value().size() != c) {
        throw ValidationError("layer_norm_channels: affine parameters must have one entry per channel");
    }
    auto xhat = std::make_shared<Tensor>(xv.shape());
    auto inv_std = std::make_shared<std::vector<double>>(n);
    Tensor out(xv.shape());
    for (std::size_t p = 0; p < n; ++p) {
        double mean = 0.0;
        for (std::size_t ci = 0; ci < c; ++ci) mean += xv[ci * n + p];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double d = xv[ci * n + p] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[p] = is;
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double xh = (xv[ci * n + p] - mean) * is;
            (*xhat)[ci * n + p] = xh;
            out[ci * n + p] = gamma.value()[ci] * xh + beta.value()[ci];
        }
    }

    Node *px = raw(x), *pg = raw(gamma), *pb = raw(beta);
    return make_op(std::move(out), {x, gamma, beta}, [=](const Tensor& g) {
        if (pg->requires_grad || pb->requires_grad) {
            for (std::size_t ci = 0; ci < c; ++ci) {
                double sg = 0.0, sb = 0.0;
                for (std::size_t p = 0; p < n; ++p) {
                    sg += g[ci * n + p] * (*xhat)[ci * n + p];
                    sb += g[ci * n + p];
                }
                if (pg->requires_grad) pg->grad_buffer()[ci] += sg;
                if (pb->requires_grad) pb->grad_buffer()[ci] += sb;
            }
        }
        if (!px->requires_grad) return;
        Tensor& gx = px->grad_buffer();
        for (std::size_t p = 0; p < n; ++p) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const double d = g[ci * n + p] * pg->value[ci];
                mean_d += d;
                mean_dx += d * (*xhat)[ci * n + p];
            }
            mean_d /= static_cast<double>(c);
            mean_dx /= static_cast<double>(c);
            for (std::size_t ci = 0; ci < c; ++ci) {
                const double d = g[ci * n + p] * pg->value[ci];
                gx[ci * n + p] += (*inv_std)[p] * (d - mean_d - (*xhat)[ci * n + p] * mean_dx);
            }
        }
    });
}

Var avg_pool2(const Var& x) {
    require_rank(x, 4, "avg_pool2");
    const Tensor& xv = x.value();
    const std::size_t c = xv.dim(0), f = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    if (h % 2 || w % 2) throw ValidationError("avg_pool2: spatial dims must be even");
    const std::size_t ho = h / 2, wo = w / 2;
    Tensor out({c, f, ho, wo});
    for (std::size_t p = 0; p < c * f; ++p) {
        const double* s = xv.data() + p * h * w;
        double* d = out.data() + p * ho * wo;
        for (std::size_t y = 0; y < ho; ++y)
            for (std::size_t xx = 0; xx < wo; ++xx)
                d[y * wo + xx] = 0.25 * (s[2 * y * w + 2 * xx] + s[2 * y * w + 2 * xx + 1] +
                                         s[(2 * y + 1) * w + 2 * xx] + s[(2 * y + 1) * w + 2 * xx + 1]);
    }
    Node* px = raw(x);
    return make_op(std::move(out), {x}, [=](const Tensor& g) {
        if (!px->requires_grad) return;
        Tensor& gx = px->grad_buffer();
        for (std::size_t p = 0; p < c * f; ++p) {
            const double* s = g.data() + p * ho * wo;
            double* d = gx.data() + p * h * w;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t xx = 0; xx < w; ++xx) d[y * w + xx] += 0.25 * s[(y / 2) * wo + xx / 2];
        }
    });
}

Var upsample2(const Var& x) {
    require_rank(x, 4, "upsample2");
    const Tensor& xv = x.value();
    const std::size_t c = xv.dim(0), f = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const std::size_t ho = h * 2, wo = w * 2;
    Tensor out({c, f, ho, wo});
    for (std::size_t p = 0; p < c * f; ++p) {
        const double* s = xv.data() + p * h * w;
        double* d = out.data() + p * ho * wo;
        for (std::size_t y = 0; y < ho; ++y)
            for (std::size_t xx = 0; xx < wo; ++xx) d[y * wo + xx] = s[(y / 2) * w + xx / 2];
    }
    Node* px = raw(x);
    return make_op(std::move(out), {x}, [=](const Tensor& g) {
        if (!px->requires_grad) return;
        Tensor& gx = px->grad_buffer();
        for (std::size_t p = 0; p < c * f; ++p) {
            const double* s = g.data() + p * ho * wo;
            double* d = gx.data() + p * h * w;
            for (std::size_t y = 0; y < ho; ++y)
                for (std::size_t xx = 0; xx < wo; ++xx) d[(y / 2) * w + xx / 2] += s[y * wo + xx];
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const Tensor &av = a.value(), &bv = b.value();
    if (av.rank() != bv.rank() || trailing(av) != trailing(bv)) {
        throw ValidationError("concat_channels: trailing shapes differ " + shape_to_string(av.shape()) + " vs " +
                              shape_to_string(bv.shape()));
    }
    Shape s = av.shape();
    s[0] += bv.dim(0);
    Tensor out(s);
    std::copy(av.data(), av.data() + av.size(), out.data());
    std::copy(bv.data(), bv.data() + bv.size(), out.data() + av.size());
    Node *pa = raw(a), *pb = raw(b);
    const std::size_t na = av.size();
    return make_op(std::move(out), {a, b}, [=](const Tensor& g) {
        if (pa->requires_grad) {
            Tensor& ga = pa->grad_buffer();
            for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        if (pb->requires_grad) {
            Tensor& gb = pb->grad_buffer();
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
        }
    });
}

Var attention(const Var& q, const Var& k, const Var& v, AttentionAxis axis) {
    require_rank(q, 4, "attention");
    require_same_shape(q.value(), k.value(), "attention(q, k)");
    require_same_shape(q.value(), v.value(), "attention(q, v)");
    const Shape& s = q.shape();
    const std::size_t c = s[0], f = s[1], hw = s[2] * s[3];
    const std::size_t cs = f * hw;  // channel stride
    const bool temporal = axis == AttentionAxis::kTemporal;
    const std::size_t nseq = temporal ? hw : f;
    const std::size_t len = temporal ? f : hw;
    const std::size_t step = temporal ? hw : 1;
    auto base = [=](std::size_t seq) { return temporal ? seq : seq * hw; };
    const double scl = 1.0 / std::sqrt(static_cast<double>(c));

    auto gather = [=](const Tensor& t, std::size_t seq, RowMat& m) {
        m.resize(static_cast<long>(len), static_cast<long>(c));
        const std::size_t b0 = base(seq);
        for (std::size_t l = 0; l < len; ++l)
            for (std::size_t ci = 0; ci < c; ++ci) m(static_cast<long>(l), static_cast<long>(ci)) = t[ci * cs + b0 + l * step];
    };
    auto scatter_add = [=](Tensor& t, std::size_t seq, const RowMat& m) {
        const std::size_t b0 = base(seq);
        for (std::size_t l = 0; l < len; ++l)
            for (std::size_t ci = 0; ci < c; ++ci) t[ci * cs + b0 + l * step] += m(static_cast<long>(l), static_cast<long>(ci));
    };

    auto probs = std::make_shared<std::vector<RowMat>>(nseq);
    Tensor out(s);
    RowMat qm, km, vm;
    for (std::size_t seq = 0; seq < nseq; ++seq) {
        gather(q.value(), seq, qm);
        gather(k.value(), seq, km);
        gather(v.value(), seq, vm);
        RowMat a = (qm * km.transpose()) * scl;
        for (long r = 0; r < a.rows(); ++r) {
            const double mx = a.row(r).maxCoeff();
            a.row(r) = (a.row(r).array() - mx).exp();
            a.row(r) /= a.row(r).sum();
        }
        RowMat o = a * vm;
        scatter_add(out, seq, o);
        (*probs)[seq] = std::move(a);
    }

    Node *pq = raw(q), *pk = raw(k), *pv = raw(v);
    return make_op(std::move(out), {q, k, v}, [=](const Tensor& g) {
        RowMat qm2, km2, vm2, gm;
        for (std::size_t seq = 0; seq < nseq; ++seq) {
            const RowMat& a = (*probs)[seq];
            gather(g, seq, gm);
            gather(pv->value, seq, vm2);
            if (pv->requires_grad) scatter_add(pv->grad_buffer(), seq, RowMat(a.transpose() * gm));
            if (!pq->requires_grad && !pk->requires_grad) continue;
            RowMat da = gm * vm2.transpose();
            RowMat ds(a.rows(), a.cols());
            for (long r = 0; r < a.rows(); ++r) {
                const double dot = (da.row(r).array() * a.row(r).array()).sum();
                ds.row(r) = a.row(r).array() * (da.row(r).array() - dot);
            }
            ds *= scl;
            if (pq->requires_grad) {
                gather(pk->value, seq, km2);
                scatter_add(pq->grad_buffer(), seq, RowMat(ds * km2));
            }
            if (pk->requires_grad) {
                gather(pq->value, seq, qm2);
                scatter_add(pk->grad_buffer(), seq, RowMat(ds.transpose() * qm2));
            }
        }
    });
}

Var row(const Var& table, std::size_t index) {
    require_rank(table, 2, "row");
    const std::size_t k = table.shape()[0], e = table.shape()[1];
    if (index >= k) throw ValidationError("row: index " + std::to_string(index) + " out of range");
    Tensor out({e});
    std::copy(table.value().data() + index * e, table.value().data() + (index + 1) * e, out.data());
    Node* pt = raw(table);
    return make_op(std::move(out), {table}, [=](const Tensor& g) {
        if (!pt->requires_grad) return;
        Tensor& gt = pt->grad_buffer();
        for (std::size_t i = 0; i < e; ++i) gt[index * e + i] += g[i];
    });
}

Var sum_squared_error(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "sum_squared_error");
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) {
        const double d = a.value()[i] - b.value()[i];
        s += d * d;
    }
    Node *pa = raw(a), *pb = raw(b);
    return make_op(Tensor::scalar(s), {a, b}, [pa, pb](const Tensor& g) {
        const double go = g[0];
        const std::size_t n = pa->value.size();
        if (pa->requires_grad) {
            Tensor& ga = pa->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) ga[i] += 2.0 * go * (pa->value[i] - pb->value[i]);
        }
        if (pb->requires_grad) {
            Tensor& gb = pb->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) gb[i] -= 2.0 * go * (pa->value[i] - pb->value[i]);
        }
    });
}

}  // namespace mcg::ad

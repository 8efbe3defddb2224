#include "mcg/guidance.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>

#include "mcg/error.hpp"
#include "mcg/ops.hpp"

namespace mcg {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;
using ConstStrided = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;

std::string pattern_key(const CorrelationPattern& p) {
    return "layer " + std::to_string(p.layer_id) + ", point " + std::to_string(p.point) + ", frame " +
           std::to_string(p.source_frame);
}

}  // namespace

double consistency_loss(const PatternBundle& current, const PatternBundle& reference) {
    if (current.size() != reference.size()) {
        throw ValidationError("bundles differ in pattern count: " + std::to_string(current.size()) + " vs " +
                              std::to_string(reference.size()));
    }
    double total = 0.0;
    for (std::size_t n = 0; n < current.size(); ++n) {
        const auto& a = current.patterns[n];
        const auto& b = reference.patterns[n];
        if (a.layer_id != b.layer_id || a.point != b.point || a.source_frame != b.source_frame) {
            throw ValidationError("bundles differ at pattern " + std::to_string(n) + ": " + pattern_key(a) + " vs " +
                                  pattern_key(b));
        }
        if (a.maps.shape() != b.maps.shape()) {
            throw ValidationError("bundles differ in map shape at " + pattern_key(a) + ": " + shape_to_string(a.maps.shape()) +
                                  " vs " + shape_to_string(b.maps.shape()));
        }
        for (std::size_t k = 0; k < a.maps.size(); ++k) {
            const double d = a.maps[k] - b.maps[k];
            total += d * d;
        }
    }
    return total;
}

ad::Var tap_consistency_loss(const ad::Var& tap, int layer_id, const PatternBundle& reference) {
    const Tensor& x = tap.value();
    const UnitFeatures u = normalize_sites(x);
    const std::size_t c = x.dim(0), frames = x.dim(1), w = x.dim(3), hw = x.dim(2) * w;
    const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(frames * hw));
    const auto ci = static_cast<Eigen::Index>(c), hwi = static_cast<Eigen::Index>(hw);

    struct Term {
        const CorrelationPattern* ref;
        Tensor maps;
    };
    std::vector<Term> terms;
    double loss = 0.0;
    for (const auto& p : reference.patterns) {
        if (p.layer_id != layer_id) continue;
        if (p.maps.rank() != 3 || p.maps.dim(1) * p.maps.dim(2) != hw || p.first_target() + p.count() > frames) {
            throw ValidationError("reference pattern at " + pattern_key(p) + " does not fit tap " +
                                  shape_to_string(x.shape()));
        }
        Term t{&p, pattern_maps(u, p.anchor, p.source_frame, p.count(), p.tau, p.mode)};
        for (std::size_t k = 0; k < t.maps.size(); ++k) {
            const double d = t.maps[k] - p.maps[k];
            loss += d * d;
        }
        terms.push_back(std::move(t));
    }

    ad::Node* parent = tap.node().get();
    return ad::make_op(Tensor::scalar(loss), {tap}, [parent, u, terms, c, frames, w, hw, stride, ci, hwi](const Tensor& g) {
        // Gradient with respect to the unit vectors first, then through the normalization.
        Tensor gu(u.unit.shape());
        Eigen::VectorXd ds(hwi);
        for (const auto& t : terms) {
            const CorrelationPattern& p = *t.ref;
            const std::size_t anchor = (p.source_frame * hw) + p.anchor.j * w + p.anchor.k;
            const double gain = p.mode == TemperatureMode::kDivide ? 1.0 / p.tau : p.tau;
            Eigen::VectorXd fp(ci), gfp = Eigen::VectorXd::Zero(ci);
            for (std::size_t k = 0; k < c; ++k) fp[k] = u.unit[k * frames * hw + anchor];
            for (std::size_t n = 0; n < p.count(); ++n) {
                const std::size_t i = p.first_target() + n;
                const double* m = t.maps.data() + n * hw;
                const double* r = p.maps.data() + n * hw;
                double mg = 0.0;
                for (std::size_t s = 0; s < hw; ++s) mg += m[s] * 2.0 * (m[s] - r[s]);
                for (std::size_t s = 0; s < hw; ++s) ds[s] = g[0] * gain * m[s] * (2.0 * (m[s] - r[s]) - mg);
                const ConstStrided v(u.unit.data() + i * hw, ci, hwi, stride);
                Strided gv(gu.data() + i * hw, ci, hwi, stride);
                gv.noalias() += fp * ds.transpose();
                gfp.noalias() += v * ds;
            }
            for (std::size_t k = 0; k < c; ++k) gu[k * frames * hw + anchor] += gfp[k];
        }
        Tensor gx(u.unit.shape());
        const Eigen::Map<const RowMajor> um(u.unit.data(), ci, static_cast<Eigen::Index>(frames) * hwi);
        const Eigen::Map<const RowMajor> gum(gu.data(), ci, static_cast<Eigen::Index>(frames) * hwi);
        Eigen::Map<RowMajor> gxm(gx.data(), ci, static_cast<Eigen::Index>(frames) * hwi);
        const Eigen::RowVectorXd dots = (um.array() * gum.array()).colwise().sum();
        for (Eigen::Index s = 0; s < um.cols(); ++s) {
            const double n = u.norms[static_cast<std::size_t>(s)];
            // A floored norm is treated as a constant.
            if (n <= kNormFloor) {
                gxm.col(s) = gum.col(s) / n;
            } else {
                gxm.col(s) = (gum.col(s) - dots[s] * um.col(s)) / n;
            }
        }
        if (parent->requires_grad) parent->accumulate(gx);
    });
}

std::string to_string(GuidanceMode mode) { return mode == GuidanceMode::kReference ? "reference" : "trajectory"; }

GuidanceMode guidance_mode_from_string(const std::string& s) {
    if (s == "reference") return GuidanceMode::kReference;
    if (s == "trajectory") return GuidanceMode::kTrajectory;
    throw ValidationError("mode must be 'reference' or 'trajectory', got '" + s + "'");
}

void GuidanceConfig::validate(int max_step) const {
    if (!(sigma >= 0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and >= 0");
    if (!(tau > 0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
    if (guided_steps < -1 || guided_steps > max_step) {
        throw ValidationError("guided steps n must lie in 0.." + std::to_string(max_step));
    }
    if (!(cfg_scale >= 0)) throw ValidationError("cfg scale must be >= 0");
    if (!(lambda >= 0 && lambda <= 1)) throw ValidationError("lambda must lie in [0, 1]");
    if (t_prime < 1 || t_prime > max_step) throw ValidationError("t' must lie in 1.." + std::to_string(max_step));
}

LossAndGrad consistency_gradient(const Backbone& backbone, const Tensor& z_t, const Step& step, Condition y,
                                 const PatternBundle& reference) {
    const ad::Var z = ad::leaf(z_t);
    const auto trace = backbone.forward(z, step, y, backbone.bind(false));
    ad::Var total;
    for (std::size_t l = 0; l < trace.taps.size(); ++l) {
        ad::Var term = tap_consistency_loss(trace.taps[l], static_cast<int>(l + 1), reference);
        total = total.defined() ? ad::add(total, term) : term;
    }
    LossAndGrad out{total.value()[0], {}, trace.eps.value()};
    ad::backward(total);
    out.grad = z.grad();
    return out;
}

GuidedEstimate guided_noise_estimate(const Backbone& backbone, const Tensor& z_t, const Step& step, Condition y,
                                     const PatternBundle& reference, const GuidanceConfig& config) {
    GuidedEstimate out;
    if (config.sigma == 0.0) {
        out.eps_plain = cfg_noise(backbone, z_t, step, y, config.cfg_scale);
        out.eps_hat = out.eps_plain;
        out.grad = Tensor::zeros_like(z_t);
        return out;
    }
    const bool conditional = y.has_value() && config.cfg_scale != 0.0;
    const Condition pattern_y = config.match_conditions ? kNullCondition : (conditional ? y : kNullCondition);
    LossAndGrad lg = consistency_gradient(backbone, z_t, step, pattern_y, reference);
    if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
        throw NumericalError("non-finite consistency gradient at t=" + std::to_string(step.t));
    }
    // Reuse the tapped pass for whichever CFG branch it computed.
    if (!y.has_value() || config.cfg_scale == 1.0) {
        out.eps_plain = pattern_y == y ? std::move(lg.eps) : backbone.predict_noise(z_t, step, y);
    } else if (config.cfg_scale == 0.0) {
        out.eps_plain = pattern_y == kNullCondition ? std::move(lg.eps) : backbone.predict_noise(z_t, step, kNullCondition);
    } else {
        const Tensor eps_null = pattern_y == kNullCondition ? lg.eps : backbone.predict_noise(z_t, step, kNullCondition);
        const Tensor eps_cond = pattern_y == y ? lg.eps : backbone.predict_noise(z_t, step, y);
        out.eps_plain = cfg_combine(eps_null, eps_cond, config.cfg_scale);
    }
    out.grad = std::move(lg.grad);
    out.loss = lg.loss;
    out.eps_hat = out.eps_plain;
    for (std::size_t k = 0; k < out.eps_hat.size(); ++k) out.eps_hat[k] = out.eps_plain[k] + config.sigma * out.grad[k];
    return out;
}

PixelVideo trajectory_reference(const TrajectorySpec& trajectory, const VideoDims& dims) {
    if (trajectory.frames() != dims.frames) {
        throw ValidationError("trajectory has " + std::to_string(trajectory.frames()) + " boxes for " +
                              std::to_string(dims.frames) + " frames");
    }
    return synthesize_box_reference(trajectory, dims);
}

std::vector<KeyPoint> box_center_path(const TrajectorySpec& trajectory, const VideoDims& dims) {
    std::vector<KeyPoint> path;
    for (std::size_t f = 0; f < trajectory.frames(); ++f) {
        const PixelBox b = to_pixel_box(trajectory.boxes[f], dims.height, dims.width);
        // The centroid pixel of the half-open box.
        path.push_back({f, std::floor(b.center_y()), std::floor(b.center_x())});
    }
    return path;
}

Tensor initial_latent(const Backbone& backbone, const NoiseSchedule& schedule, const PixelVideo& reference, Condition y,
                      const GuidanceConfig& config) {
    const Tensor z0 = PixelCodec{}.encode(reference);
    const Condition inv_y = config.conditional_inversion ? y : kNullCondition;
    const Tensor inverted = ddim_invert(z0, backbone, inv_y, schedule.max_step(), schedule);
    if (config.lambda == 1.0) return inverted;
    return mix_initial_noise(inverted, standard_normal(z0.shape(), config.seed), config.lambda);
}

Tensor guided_sample(const Backbone& backbone, const NoiseSchedule& schedule, const Tensor& z_T, Condition y,
                     const PatternBundle& reference, const GuidanceConfig& config, GuidanceTrace& trace,
                     const TraceSink& sink) {
    const int T = schedule.max_step();
    config.validate(T);
    backbone.check_input(z_T, y);
    const int n = config.resolved_steps(T);
    Tensor z = z_T;
    for (int t = T; t >= 1; --t) {
        const Step step = step_at(schedule, t);
        Tensor eps;
        if (T - t < n && config.sigma != 0.0) {
            const auto start = std::chrono::steady_clock::now();
            GuidedEstimate g = guided_noise_estimate(backbone, z, step, y, reference, config);
            const TraceRecord rec{t, g.loss, std::sqrt(g.grad.squared_norm()),
                                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
            trace.records.push_back(rec);
            if (sink) sink(rec);
            eps = std::move(g.eps_hat);
        } else {
            eps = cfg_noise(backbone, z, step, y, config.cfg_scale);
        }
        z = ddim_step(z, eps, t, schedule);
        if (!z.all_finite()) throw NumericalError("non-finite latent after step t=" + std::to_string(t));
    }
    return z;
}

GenerationResult generate(const Backbone& backbone, const NoiseSchedule& schedule, const GenerationRequest& request,
                          const GuidanceConfig& config, const TraceSink& sink) {
    config.validate(schedule.max_step());
    PixelVideo reference;
    ReferencePatternConfig rc{config.t_prime, config.pattern_seed, config.pattern_params(), {}};
    std::vector<KeyPoint> points = config.points;
    if (config.mode == GuidanceMode::kTrajectory) {
        if (!request.trajectory) throw ValidationError("trajectory mode needs a trajectory");
        if (request.reference) throw ValidationError("trajectory mode does not take a reference video");
        reference = trajectory_reference(*request.trajectory, request.dims);
        const auto path = box_center_path(*request.trajectory, request.dims);
        points = {path.front()};
        rc.ground_truth_paths = {path};
    } else {
        if (!request.reference) throw ValidationError("reference mode needs a reference video");
        if (request.trajectory) throw ValidationError("reference mode does not take a trajectory");
        if (points.empty()) throw ValidationError("reference mode needs at least one key point");
        reference = *request.reference;
    }
    GenerationResult out;
    out.reference = reference_pattern(reference, points, backbone, schedule, rc).bundle;
    out.z_T = initial_latent(backbone, schedule, reference, request.y, config);
    out.z0 = guided_sample(backbone, schedule, out.z_T, request.y, out.reference, config, out.trace, sink);
    out.video = PixelCodec{}.decode(out.z0);
    out.video.fps = reference.fps;
    return out;
}

}  // namespace mcg

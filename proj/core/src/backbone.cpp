#include "mcg/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mcg/error.hpp"
#include "mcg/ops.hpp"
#include "mcg/records.hpp"

namespace mcg {

using ad::Var;

struct LinearIdx {
    std::size_t w = 0, b = 0;
};

struct NormIdx {
    std::size_t gamma = 0, beta = 0;
};

struct ResBlockIdx {
    NormIdx norm1;
    LinearIdx conv1;
    LinearIdx emb;
    NormIdx norm2;
    LinearIdx conv2;
};

struct AttentionIdx {
    NormIdx norm;
    LinearIdx q, k, v, out;
};

struct Backbone::Layout {
    struct Block {
        ResBlockIdx res;
        std::optional<AttentionIdx> spatial;
        std::optional<AttentionIdx> temporal;
        std::optional<LinearIdx> merge;   // up blocks: concat(skip) -> channels
        std::optional<LinearIdx> resize;  // down: to next level, up: to previous level
    };

    LinearIdx conv_in;
    LinearIdx time1, time2;
    std::size_t cond_table = 0;
    std::vector<Block> down;
    Block mid;
    std::vector<Block> up;  // indexed by level
    NormIdx out_norm;
    LinearIdx conv_out;
};

namespace {

class ParamFactory {
public:
    ParamFactory(std::vector<NamedParam>& params, std::uint64_t seed) : params_(params), rng_(seed) {}

    std::size_t normal(const std::string& name, Shape shape, double stddev) {
        Tensor t(std::move(shape));
        std::normal_distribution<double> nd(0.0, stddev);
        for (double& v : t.values()) v = nd(rng_);
        return push(name, std::move(t));
    }
    std::size_t constant(const std::string& name, Shape shape, double value) { return push(name, Tensor(std::move(shape), value)); }

    LinearIdx linear(const std::string& name, std::size_t in, std::size_t out, double gain = 1.0) {
        return {normal(name + ".w", {out, in}, gain / std::sqrt(static_cast<double>(in))), constant(name + ".b", {out}, 0.0)};
    }
    LinearIdx conv(const std::string& name, std::size_t in, std::size_t out, double gain = 1.0) {
        return {normal(name + ".w", {out, in, 3, 3}, gain / std::sqrt(static_cast<double>(in * 9))),
                constant(name + ".b", {out}, 0.0)};
    }
    NormIdx norm(const std::string& name, std::size_t c) {
        return {constant(name + ".gamma", {c}, 1.0), constant(name + ".beta", {c}, 0.0)};
    }
    ResBlockIdx res(const std::string& name, std::size_t c, std::size_t emb) {
        ResBlockIdx r;
        r.norm1 = norm(name + ".norm1", c);
        r.conv1 = conv(name + ".conv1", c, c);
        r.emb = linear(name + ".emb", emb, c);
        r.norm2 = norm(name + ".norm2", c);
        r.conv2 = conv(name + ".conv2", c, c, 0.1);
        return r;
    }
    AttentionIdx attention(const std::string& name, std::size_t c) {
        AttentionIdx a;
        a.norm = norm(name + ".norm", c);
        a.q = linear(name + ".q", c, c);
        a.k = linear(name + ".k", c, c);
        a.v = linear(name + ".v", c, c);
        a.out = linear(name + ".out", c, c, 0.1);
        return a;
    }

private:
    std::size_t push(const std::string& name, Tensor t) {
        params_.push_back({name, std::move(t)});
        return params_.size() - 1;
    }

    std::vector<NamedParam>& params_;
    std::mt19937_64 rng_;
};

bool has_block(const BackboneConfig& c, const std::string& name) {
    return std::find(c.temporal_attention.begin(), c.temporal_attention.end(), name) != c.temporal_attention.end();
}

// Sinusoidal features of the log signal-to-noise ratio.
Tensor noise_level_features(double alpha_bar, std::size_t dim) {
    const double ab = std::clamp(alpha_bar, 1e-12, 1.0 - 1e-12);
    const double log_snr = std::log(ab / (1.0 - ab));
    Tensor out({dim});
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = 0.02 * std::pow(500.0, static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(half - 1, 1)));
        out[2 * i] = std::sin(freq * log_snr);
        out[2 * i + 1] = std::cos(freq * log_snr);
    }
    return out;
}

// Per-frame sinusoidal encoding broadcast over space: [C, F, H, W].
Tensor frame_encoding(const Shape& shape) {
    const std::size_t c = shape[0], f = shape[1], hw = shape[2] * shape[3];
    Tensor out(shape);
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double freq = 1.0 / std::pow(100.0, static_cast<double>(ci / 2 * 2) / static_cast<double>(c));
        for (std::size_t fi = 0; fi < f; ++fi) {
            const double v = ci % 2 == 0 ? std::sin(freq * static_cast<double>(fi)) : std::cos(freq * static_cast<double>(fi));
            std::fill(out.data() + (ci * f + fi) * hw, out.data() + (ci * f + fi + 1) * hw, v);
        }
    }
    return out;
}

struct Forward {
    const BackboneConfig& cfg;
    const std::vector<Var>& w;

    Var lin(const Var& x, const LinearIdx& i) const { return ad::linear(x, w[i.w], w[i.b]); }
    Var conv(const Var& x, const LinearIdx& i) const { return ad::conv3x3(x, w[i.w], w[i.b]); }
    Var gnorm(const Var& x, const NormIdx& i) const { return ad::group_norm(x, w[i.gamma], w[i.beta], cfg.groups); }

    Var res(const Var& x, const Var& emb, const ResBlockIdx& r) const {
        Var h = conv(ad::silu(gnorm(x, r.norm1)), r.conv1);
        h = ad::add_channel(h, lin(emb, r.emb));
        h = conv(ad::silu(gnorm(h, r.norm2)), r.conv2);
        return ad::add(x, h);
    }

    Var attend(const Var& x, const AttentionIdx& a, ad::AttentionAxis axis) const {
        return attention_block(x,
                               {w[a.norm.gamma], w[a.norm.beta], w[a.q.w], w[a.q.b], w[a.k.w], w[a.k.b], w[a.v.w], w[a.v.b],
                                w[a.out.w], w[a.out.b]},
                               axis);
    }
};

}  // namespace

Var attention_block(const Var& x, const AttentionWeights& w, ad::AttentionAxis axis) {
    Var n = ad::layer_norm_channels(x, w.gamma, w.beta);
    if (axis == ad::AttentionAxis::kTemporal) n = ad::add(n, ad::constant(frame_encoding(x.shape())));
    Var o = ad::attention(ad::linear(n, w.wq, w.bq), ad::linear(n, w.wk, w.bk), ad::linear(n, w.wv, w.bv), axis);
    return ad::add(x, ad::linear(o, w.wo, w.bo));
}

void BackboneConfig::validate() const {
    if (latent_channels == 0) throw ValidationError("backbone: latent_channels must be positive");
    if (level_channels.empty() || level_channels.size() > 4) throw ValidationError("backbone: 1..4 resolution levels");
    for (std::size_t c : level_channels) {
        if (c == 0 || groups == 0 || c % groups != 0) {
            throw ValidationError("backbone: level channels must be positive multiples of groups");
        }
    }
    if (embed_dim < 2 || embed_dim % 2) throw ValidationError("backbone: embed_dim must be even and >= 2");
    if (num_classes == 0) throw ValidationError("backbone: num_classes must be positive");
    std::vector<std::string> known{"mid"};
    for (std::size_t l = 0; l < levels(); ++l) {
        known.push_back("down" + std::to_string(l));
        known.push_back("up" + std::to_string(l));
    }
    for (const auto& name : temporal_attention) {
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ValidationError("backbone: unknown temporal attention block '" + name + "'");
        }
    }
    for (std::size_t l = 0; l < levels(); ++l) {
        const bool any = has_block(*this, "down" + std::to_string(l)) || has_block(*this, "up" + std::to_string(l)) ||
                         (l + 1 == levels() && has_block(*this, "mid"));
        if (!any) throw ValidationError("backbone: level " + std::to_string(l) + " has no temporal attention module");
    }
}

nlohmann::json BackboneConfig::to_json() const {
    return {{"latent_channels", latent_channels},
            {"level_channels", level_channels},
            {"embed_dim", embed_dim},
            {"groups", groups},
            {"num_classes", num_classes},
            {"temporal_attention", temporal_attention},
            {"spatial_attention_from_level", spatial_attention_from_level},
            {"seed", seed}};
}

BackboneConfig BackboneConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j,
                        {"latent_channels", "level_channels", "embed_dim", "groups", "num_classes", "temporal_attention",
                         "spatial_attention_from_level", "seed"},
                        "backbone config");
    BackboneConfig c;
    try {
        if (j.contains("latent_channels")) c.latent_channels = j.at("latent_channels").get<std::size_t>();
        if (j.contains("level_channels")) c.level_channels = j.at("level_channels").get<std::vector<std::size_t>>();
        if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim").get<std::size_t>();
        if (j.contains("groups")) c.groups = j.at("groups").get<std::size_t>();
        if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<std::size_t>();
        if (j.contains("temporal_attention")) c.temporal_attention = j.at("temporal_attention").get<std::vector<std::string>>();
        if (j.contains("spatial_attention_from_level")) {
            c.spatial_attention_from_level = j.at("spatial_attention_from_level").get<std::size_t>();
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("backbone config: ") + e.what());
    }
    c.validate();
    return c;
}

Backbone::Backbone(BackboneConfig config) : config_(std::move(config)) {
    config_.validate();
    auto layout = std::make_shared<Layout>();
    ParamFactory pf(params_, config_.seed);
    const auto& ch = config_.level_channels;
    const std::size_t levels = config_.levels(), emb = config_.embed_dim;

    layout->conv_in = pf.conv("conv_in", config_.latent_channels, ch[0]);
    layout->time1 = pf.linear("time.fc1", emb, emb);
    layout->time2 = pf.linear("time.fc2", emb, emb);
    layout->cond_table = pf.normal("cond.table", {config_.num_classes + 1, emb}, 0.5);

    for (std::size_t l = 0; l < levels; ++l) {
        const std::string name = "down" + std::to_string(l);
        Layout::Block b;
        b.res = pf.res(name + ".res", ch[l], emb);
        if (l >= config_.spatial_attention_from_level) b.spatial = pf.attention(name + ".spatial", ch[l]);
        if (has_block(config_, name)) {
            b.temporal = pf.attention(name + ".temporal", ch[l]);
            tap_scales_.push_back(std::size_t{1} << l);
        }
        if (l + 1 < levels) b.resize = pf.linear(name + ".to_next", ch[l], ch[l + 1]);
        layout->down.push_back(b);
    }
    {
        const std::size_t l = levels - 1;
        layout->mid.res = pf.res("mid.res", ch[l], emb);
        if (l >= config_.spatial_attention_from_level) layout->mid.spatial = pf.attention("mid.spatial", ch[l]);
        if (has_block(config_, "mid")) {
            layout->mid.temporal = pf.attention("mid.temporal", ch[l]);
            tap_scales_.push_back(std::size_t{1} << l);
        }
    }
    layout->up.resize(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        const std::size_t l = levels - 1 - i;
        const std::string name = "up" + std::to_string(l);
        Layout::Block& b = layout->up[l];
        b.merge = pf.linear(name + ".merge", 2 * ch[l], ch[l]);
        b.res = pf.res(name + ".res", ch[l], emb);
        if (has_block(config_, name)) {
            b.temporal = pf.attention(name + ".temporal", ch[l]);
            tap_scales_.push_back(std::size_t{1} << l);
        }
        if (l > 0) b.resize = pf.linear(name + ".to_prev", ch[l], ch[l - 1]);
    }
    layout->out_norm = pf.norm("out.norm", ch[0]);
    layout->conv_out = pf.conv("out.conv", ch[0], config_.latent_channels, 0.1);
    layout_ = std::move(layout);
}

std::size_t Backbone::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::vector<Var> Backbone::bind(bool trainable) const {
    std::vector<Var> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(trainable ? ad::leaf(p.value) : ad::constant(p.value));
    return out;
}

void Backbone::check_input(const Tensor& z, Condition y) const {
    if (z.rank() != 4 || z.dim(0) != config_.latent_channels) {
        throw ValidationError("backbone expects a [" + std::to_string(config_.latent_channels) + ", F, H, W] latent, got " +
                              shape_to_string(z.shape()));
    }
    const std::size_t div = std::size_t{1} << (config_.levels() - 1);
    if (z.dim(2) % div || z.dim(3) % div || z.dim(2) == 0 || z.dim(3) == 0) {
        throw ValidationError("latent height/width must be divisible by " + std::to_string(div));
    }
    if (y && *y >= config_.num_classes) {
        throw ValidationError("condition label " + std::to_string(*y) + " outside vocabulary of " +
                              std::to_string(config_.num_classes));
    }
}

Backbone::Trace Backbone::forward(const Var& z, const Step& step, Condition y, const std::vector<Var>& weights) const {
    check_input(z.value(), y);
    if (weights.size() != params_.size()) throw ValidationError("backbone: weight binding has the wrong size");
    const Layout& L = *layout_;
    const Forward fw{config_, weights};
    const std::size_t levels = config_.levels();
    Trace trace;

    Var t_emb = fw.lin(ad::silu(fw.lin(ad::constant(noise_level_features(step.alpha_bar, config_.embed_dim)), L.time1)), L.time2);
    Var c_emb = ad::row(weights[L.cond_table], y ? *y : config_.num_classes);
    Var emb = ad::silu(ad::add(t_emb, c_emb));

    Var h = fw.conv(z, L.conv_in);
    std::vector<Var> skips;
    for (std::size_t l = 0; l < levels; ++l) {
        const auto& b = L.down[l];
        h = fw.res(h, emb, b.res);
        if (b.spatial) h = fw.attend(h, *b.spatial, ad::AttentionAxis::kSpatial);
        if (b.temporal) {
            h = fw.attend(h, *b.temporal, ad::AttentionAxis::kTemporal);
            trace.taps.push_back(h);
        }
        skips.push_back(h);
        if (b.resize) h = fw.lin(ad::avg_pool2(h), *b.resize);
    }
    h = fw.res(h, emb, L.mid.res);
    if (L.mid.spatial) h = fw.attend(h, *L.mid.spatial, ad::AttentionAxis::kSpatial);
    if (L.mid.temporal) {
        h = fw.attend(h, *L.mid.temporal, ad::AttentionAxis::kTemporal);
        trace.taps.push_back(h);
    }
    for (std::size_t i = 0; i < levels; ++i) {
        const std::size_t l = levels - 1 - i;
        const auto& b = L.up[l];
        h = fw.lin(ad::concat_channels(h, skips[l]), *b.merge);
        h = fw.res(h, emb, b.res);
        if (b.temporal) {
            h = fw.attend(h, *b.temporal, ad::AttentionAxis::kTemporal);
            trace.taps.push_back(h);
        }
        if (b.resize) h = fw.lin(ad::upsample2(h), *b.resize);
    }
    trace.eps = fw.conv(ad::silu(fw.gnorm(h, L.out_norm)), L.conv_out);
    return trace;
}

Tensor Backbone::predict_noise(const Tensor& z, const Step& step, Condition y) const {
    return forward(ad::constant(z), step, y, bind(false)).eps.value();
}

Backbone::TappedOutput Backbone::denoise_with_taps(const Tensor& z, const Step& step, Condition y) const {
    Trace tr = forward(ad::constant(z), step, y, bind(false));
    TappedOutput out{tr.eps.value(), {}};
    for (std::size_t i = 0; i < tr.taps.size(); ++i) {
        out.taps.push_back({tr.taps[i].value(), static_cast<int>(i + 1), tap_scales_[i]});
    }
    return out;
}

// --- codec ----------------------------------------------------------------

namespace {
// Columns are orthonormal: three rows of a 4x4 Hadamard matrix / 2.
constexpr double kCodec[4][3] = {{0.5, 0.5, 0.5}, {0.5, -0.5, 0.5}, {0.5, 0.5, -0.5}, {0.5, -0.5, -0.5}};
}  // namespace

Tensor PixelCodec::encode(const PixelVideo& video) const {
    const Tensor& x = video.data;
    if (x.rank() != 4 || x.dim(0) != 3) throw ValidationError("codec expects a [3, F, H, W] video");
    const std::size_t n = x.size() / 3;
    Tensor z({4, x.dim(1), x.dim(2), x.dim(3)});
    for (std::size_t i = 0; i < n; ++i) {
        const double r = 2 * x[i] - 1, g = 2 * x[n + i] - 1, b = 2 * x[2 * n + i] - 1;
        for (std::size_t c = 0; c < 4; ++c) z[c * n + i] = kCodec[c][0] * r + kCodec[c][1] * g + kCodec[c][2] * b;
    }
    return z;
}

PixelVideo PixelCodec::decode(const Tensor& latent) const {
    if (latent.rank() != 4 || latent.dim(0) != 4) throw ValidationError("codec expects a [4, F, H, W] latent");
    const std::size_t n = latent.size() / 4;
    PixelVideo out{Tensor({3, latent.dim(1), latent.dim(2), latent.dim(3)})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) s += kCodec[c][k] * latent[c * n + i];
            out.data[k * n + i] = std::clamp((s + 1.0) / 2.0, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace mcg

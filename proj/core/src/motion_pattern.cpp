#include "mcg/motion_pattern.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "mcg/error.hpp"

namespace mcg {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FrameMap = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;

void require_volume(const Tensor& f, const char* what) {
    if (f.rank() != 4 || f.dim(1) == 0 || f.dim(2) == 0 || f.dim(3) == 0 || f.dim(0) == 0) {
        throw ValidationError(std::string(what) + ": expected a non-empty [C, F, H, W] volume, got " +
                              shape_to_string(f.shape()));
    }
}

void require_tau(double tau) {
    if (!(tau > 0) || !std::isfinite(tau)) throw ValidationError("temperature must be positive");
}

}  // namespace

GridPos map_point_to_grid(double y, double x, std::size_t grid_h, std::size_t grid_w, std::size_t height,
                          std::size_t width) {
    auto map = [](double p, std::size_t g, std::size_t n) {
        const double v = std::floor(p * static_cast<double>(g) / static_cast<double>(n));
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(g - 1)));
    };
    return {map(y, grid_h, height), map(x, grid_w, width)};
}

std::string to_string(TemperatureMode mode) { return mode == TemperatureMode::kDivide ? "divide" : "multiply"; }

TemperatureMode temperature_mode_from_string(const std::string& s) {
    if (s == "divide") return TemperatureMode::kDivide;
    if (s == "multiply") return TemperatureMode::kMultiply;
    throw ValidationError("temperature mode must be 'divide' or 'multiply', got '" + s + "'");
}

UnitFeatures normalize_sites(const Tensor& features) {
    require_volume(features, "normalize_sites");
    const std::size_t c = features.dim(0), sites = features.size() / c;
    UnitFeatures out{features, Tensor({features.dim(1), features.dim(2), features.dim(3)}), 0};
    Eigen::Map<RowMajor> u(out.unit.data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(sites));
    Eigen::Map<Eigen::RowVectorXd> n(out.norms.data(), static_cast<Eigen::Index>(sites));
    n = u.colwise().norm();
    for (Eigen::Index s = 0; s < n.size(); ++s) {
        if (n[s] < kNormFloor) {
            n[s] = kNormFloor;
            ++out.floored;
        }
    }
    u.array().rowwise() /= n.array();
    return out;
}

std::size_t pattern_span(std::size_t frames, std::size_t source, std::size_t local) {
    if (source + 1 >= frames) return 0;
    const std::size_t rest = frames - 1 - source;
    return local == 0 ? rest : std::min(local, rest);
}

Tensor pattern_maps(const UnitFeatures& u, GridPos anchor, std::size_t source_frame, std::size_t count, double tau,
                    TemperatureMode mode) {
    const std::size_t c = u.unit.dim(0), frames = u.unit.dim(1), h = u.unit.dim(2), w = u.unit.dim(3), hw = h * w;
    if (anchor.j >= h || anchor.k >= w) throw ValidationError("pattern anchor outside the feature grid");
    if (source_frame + count >= frames + 1 || source_frame >= frames) throw ValidationError("pattern frames out of range");
    const Eigen::Index stride = static_cast<Eigen::Index>(frames * hw);
    Eigen::VectorXd fp(static_cast<Eigen::Index>(c));
    for (std::size_t ci = 0; ci < c; ++ci) fp[ci] = u.unit[(ci * frames + source_frame) * hw + anchor.j * w + anchor.k];
    const double gain = mode == TemperatureMode::kDivide ? 1.0 / tau : tau;

    Tensor maps({count, h, w});
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t i = source_frame + 1 + n;
        const FrameMap v(u.unit.data() + i * hw, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(hw),
                         Eigen::OuterStride<>(stride));
        Eigen::Map<Eigen::RowVectorXd> m(maps.data() + n * hw, static_cast<Eigen::Index>(hw));
        m = (fp.transpose() * v) * gain;
        m.array() = (m.array() - m.maxCoeff()).exp();
        m /= m.sum();
    }
    return maps;
}

CorrelationPattern extract_pattern(const Tensor& features, GridPos anchor, std::size_t source_frame, double tau,
                                   std::size_t local, TemperatureMode mode, std::size_t* floored_sites) {
    require_volume(features, "extract_pattern");
    require_tau(tau);
    if (source_frame + 1 >= features.dim(1)) {
        throw ValidationError("extract_pattern: source frame " + std::to_string(source_frame) + " has no later frame");
    }
    const UnitFeatures u = normalize_sites(features);
    if (floored_sites) *floored_sites = u.floored;
    CorrelationPattern p;
    p.source_frame = source_frame;
    p.anchor = anchor;
    p.tau = tau;
    p.mode = mode;
    p.maps = pattern_maps(u, anchor, source_frame, pattern_span(features.dim(1), source_frame, local), tau, mode);
    return p;
}

PointTrack track_point(const Tensor& features, GridPos start, std::size_t start_frame, double tau, TemperatureMode mode,
                       int layer_id) {
    require_volume(features, "track_point");
    require_tau(tau);
    const std::size_t frames = features.dim(1), w = features.dim(3);
    if (start_frame >= frames) throw ValidationError("track_point: start frame outside the video");
    if (start.j >= features.dim(2) || start.k >= w) throw ValidationError("track_point: start outside the grid");
    const UnitFeatures u = normalize_sites(features);
    PointTrack track{layer_id, start_frame, {start}, {false}};
    for (std::size_t f = start_frame; f + 1 < frames; ++f) {
        const Tensor m = pattern_maps(u, track.cells.back(), f, 1, tau, mode);
        const auto vals = m.values();
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        if (*hi == *lo) {
            track.cells.push_back(track.cells.back());
            track.flat.push_back(true);
            continue;
        }
        // max_element returns the first maximum, which is the row-major smallest.
        const auto best = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
        track.cells.push_back({best / w, best % w});
        track.flat.push_back(false);
    }
    return track;
}

std::vector<PointTrack> track_point(const TapSet& taps, const KeyPoint& p0, std::size_t height, std::size_t width,
                                    double tau, TemperatureMode mode) {
    if (p0.y < 0 || p0.x < 0 || p0.y >= static_cast<double>(height) || p0.x >= static_cast<double>(width)) {
        throw ValidationError("key point lies outside the frame");
    }
    std::vector<PointTrack> out;
    for (const auto& tap : taps) {
        const GridPos g = map_point_to_grid(p0.y, p0.x, tap.data.dim(2), tap.data.dim(3), height, width);
        out.push_back(track_point(tap.data, g, p0.frame, tau, mode, tap.layer_id));
    }
    return out;
}

std::vector<PointTrack> tracks_from_path(const TapSet& taps, const std::vector<KeyPoint>& path, std::size_t height,
                                         std::size_t width) {
    if (path.empty()) throw ValidationError("tracks_from_path: empty path");
    std::vector<PointTrack> out;
    for (const auto& tap : taps) {
        if (path.size() + path.front().frame != tap.data.dim(1)) {
            throw ValidationError("tracks_from_path: path must cover every frame from its start");
        }
        PointTrack t{tap.layer_id, path.front().frame, {}, {}};
        for (const auto& p : path) {
            t.cells.push_back(map_point_to_grid(p.y, p.x, tap.data.dim(2), tap.data.dim(3), height, width));
            t.flat.push_back(false);
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::size_t PatternBundle::map_count() const {
    std::size_t n = 0;
    for (const auto& p : patterns) n += p.count();
    return n;
}

bool uses_layer(const PatternParams& params, int layer_id) {
    return params.layers.empty() || std::find(params.layers.begin(), params.layers.end(), layer_id) != params.layers.end();
}

PatternBundle bundle_from_taps(const TapSet& taps, const std::vector<std::vector<PointTrack>>& tracks,
                               const PatternParams& params) {
    require_tau(params.tau);
    PatternBundle bundle;
    for (std::size_t l = 0; l < taps.size(); ++l) {
        if (!uses_layer(params, taps[l].layer_id)) continue;
        const UnitFeatures u = normalize_sites(taps[l].data);
        const std::size_t frames = taps[l].data.dim(1);
        for (std::size_t p = 0; p < tracks.size(); ++p) {
            if (tracks[p].size() != taps.size()) throw ValidationError("bundle_from_taps: one track per tap layer required");
            const PointTrack& track = tracks[p][l];
            for (std::size_t f = track.start_frame; f + 1 < frames; ++f) {
                CorrelationPattern cp;
                cp.layer_id = taps[l].layer_id;
                cp.point = p;
                cp.source_frame = f;
                cp.anchor = track.at(f);
                cp.tau = params.tau;
                cp.mode = params.mode;
                cp.maps = pattern_maps(u, cp.anchor, f, pattern_span(frames, f, params.local), params.tau, params.mode);
                bundle.patterns.push_back(std::move(cp));
            }
        }
    }
    return bundle;
}

ReferencePattern reference_pattern(const PixelVideo& reference, const std::vector<KeyPoint>& points,
                                   const Backbone& backbone, const NoiseSchedule& schedule,
                                   const ReferencePatternConfig& config) {
    reference.validate();
    if (reference.frames() < 2) throw ValidationError("reference video needs at least 2 frames");
    if (config.t_prime < 1 || config.t_prime > schedule.max_step()) {
        throw ValidationError("t' must lie in 1.." + std::to_string(schedule.max_step()));
    }
    if (points.empty()) throw ValidationError("at least one key point is required");
    if (!config.ground_truth_paths.empty() && config.ground_truth_paths.size() != points.size()) {
        throw ValidationError("ground-truth paths must match the key points one to one");
    }
    for (int id : config.params.layers) {
        if (id < 1 || static_cast<std::size_t>(id) > backbone.num_taps()) {
            throw ValidationError("tap layer " + std::to_string(id) + " does not exist");
        }
    }

    const Tensor z0 = PixelCodec{}.encode(reference);
    const Tensor zt = add_noise(z0, config.t_prime, standard_normal(z0.shape(), config.noise_seed), schedule);
    const auto out = backbone.denoise_with_taps(zt, step_at(schedule, config.t_prime), kNullCondition);

    ReferencePattern result;
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (config.ground_truth_paths.empty()) {
            result.tracks.push_back(track_point(out.taps, points[p], reference.height(), reference.width(),
                                                config.params.tau, config.params.mode));
        } else {
            result.tracks.push_back(
                tracks_from_path(out.taps, config.ground_truth_paths[p], reference.height(), reference.width()));
        }
    }
    for (const auto& tap : out.taps) result.floored_sites += normalize_sites(tap.data).floored;
    result.bundle = bundle_from_taps(out.taps, result.tracks, config.params);
    return result;
}

}  // namespace mcg

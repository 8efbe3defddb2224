#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcg/backbone.hpp"
#include "mcg/diffusion.hpp"
#include "mcg/tensor.hpp"
#include "mcg/video.hpp"

namespace mcg {

/// Key point in reference-video pixel coordinates; `frame` is 0-based.
struct KeyPoint {
    std::size_t frame = 0;
    double y = 0.0;
    double x = 0.0;
};

struct GridPos {
    std::size_t j = 0;  // row
    std::size_t k = 0;  // column
    friend bool operator==(const GridPos&, const GridPos&) = default;
};

/// floor(p * H_l / H), clamped into the grid.
GridPos map_point_to_grid(double y, double x, std::size_t grid_h, std::size_t grid_w, std::size_t height, std::size_t width);

enum class TemperatureMode {
    kDivide,    // exp(sim / τ)
    kMultiply,  // exp(sim * τ)
};

std::string to_string(TemperatureMode mode);
TemperatureMode temperature_mode_from_string(const std::string& s);

inline constexpr double kNormFloor = 1e-8;

/// Per-site unit vectors of a [C, F, H, W] volume, norms floored at kNormFloor.
struct UnitFeatures {
    Tensor unit;
    Tensor norms;  // [F, H, W]
    std::size_t floored = 0;
};
UnitFeatures normalize_sites(const Tensor& features);

/// Maps for target frames first_target .. first_target + count - 1.
struct CorrelationPattern {
    int layer_id = 0;
    std::size_t point = 0;
    std::size_t source_frame = 0;
    GridPos anchor;
    double tau = 10.0;
    TemperatureMode mode = TemperatureMode::kDivide;
    Tensor maps;  // [count, H_l, W_l]

    [[nodiscard]] std::size_t first_target() const noexcept { return source_frame + 1; }
    [[nodiscard]] std::size_t count() const { return maps.dim(0); }
};

/// Number of target frames for source frame f: min(local, F - 1 - f); local = 0 means "all".
std::size_t pattern_span(std::size_t frames, std::size_t source, std::size_t local);

/// Softmax over every grid site of target frame i of the cosine similarity to the anchor feature.
/// Zero-norm features are floored; `floored_sites` (optional) receives how many were.
CorrelationPattern extract_pattern(const Tensor& features, GridPos anchor, std::size_t source_frame, double tau,
                                   std::size_t local, TemperatureMode mode = TemperatureMode::kDivide,
                                   std::size_t* floored_sites = nullptr);

/// Same maps, computed from precomputed unit features.
Tensor pattern_maps(const UnitFeatures& u, GridPos anchor, std::size_t source_frame, std::size_t count, double tau,
                    TemperatureMode mode);

struct PointTrack {
    int layer_id = 0;
    std::size_t start_frame = 0;
    std::vector<GridPos> cells;      // cells[f - start_frame]
    std::vector<bool> flat;          // frame fell back to carrying the previous cell

    [[nodiscard]] const GridPos& at(std::size_t frame) const { return cells.at(frame - start_frame); }
};

/// Greedy argmax chain with local = 1; ties go to the row-major smallest cell.
/// A map whose max equals its min is "flat" and keeps the previous position.
PointTrack track_point(const Tensor& features, GridPos start, std::size_t start_frame, double tau,
                       TemperatureMode mode = TemperatureMode::kDivide, int layer_id = 0);

/// One track per tap layer; the key point is mapped into each layer's grid.
std::vector<PointTrack> track_point(const TapSet& taps, const KeyPoint& p0, std::size_t height, std::size_t width,
                                    double tau, TemperatureMode mode = TemperatureMode::kDivide);

/// Tracks built from known per-frame pixel positions (e.g. box centers).
std::vector<PointTrack> tracks_from_path(const TapSet& taps, const std::vector<KeyPoint>& path, std::size_t height,
                                         std::size_t width);

/// All patterns used by the consistency loss, ordered by (layer, point, source frame).
struct PatternBundle {
    std::vector<CorrelationPattern> patterns;

    [[nodiscard]] std::size_t size() const noexcept { return patterns.size(); }
    [[nodiscard]] std::size_t map_count() const;
};

struct PatternParams {
    double tau = 10.0;
    std::size_t local = 0;  // 0: local = F - f
    TemperatureMode mode = TemperatureMode::kDivide;
    std::vector<int> layers;  // empty: every tap
};

[[nodiscard]] bool uses_layer(const PatternParams& params, int layer_id);

/// tracks[point][layer index in taps]. Source frames run from each track's start to F - 2.
PatternBundle bundle_from_taps(const TapSet& taps, const std::vector<std::vector<PointTrack>>& tracks,
                               const PatternParams& params);

struct ReferencePatternConfig {
    int t_prime = 1;
    std::uint64_t noise_seed = 0;
    PatternParams params;
    /// Per point, a full per-frame pixel path replacing the greedy track.
    std::vector<std::vector<KeyPoint>> ground_truth_paths;
};

struct ReferencePattern {
    PatternBundle bundle;
    std::vector<std::vector<PointTrack>> tracks;  // [point][layer]
    std::size_t floored_sites = 0;
};

/// Encode, noise to t', one tapped pass under ∅, track each key point, extract every pattern.
ReferencePattern reference_pattern(const PixelVideo& reference, const std::vector<KeyPoint>& points,
                                   const Backbone& backbone, const NoiseSchedule& schedule,
                                   const ReferencePatternConfig& config);

}  // namespace mcg

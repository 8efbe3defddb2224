#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mcg/tensor.hpp"

namespace mcg {

/// Axis-aligned box in normalized [0,1] frame coordinates (center + size).
struct NormBox {
    double cx = 0.5;
    double cy = 0.5;
    double w = 0.25;
    double h = 0.25;

    friend bool operator==(const NormBox&, const NormBox&) = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelBox {
    long x0 = 0;
    long y0 = 0;
    long x1 = 0;
    long y1 = 0;

    [[nodiscard]] double center_x() const noexcept { return 0.5 * static_cast<double>(x0 + x1); }
    [[nodiscard]] double center_y() const noexcept { return 0.5 * static_cast<double>(y0 + y1); }
    [[nodiscard]] long area() const noexcept { return (x1 - x0) * (y1 - y0); }
    friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

/// One box per frame.
struct TrajectorySpec {
    std::vector<NormBox> boxes;

    [[nodiscard]] std::size_t frames() const noexcept { return boxes.size(); }
    /// Throws ValidationError naming the first offending frame.
    void validate() const;
};

enum class ShapeKind { kSquare, kCircle };

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{1.0, 1.0, 1.0};
inline constexpr Rgb kBlack{0.0, 0.0, 0.0};

/// A single hard-edged shape following a trajectory's box centers.
/// `size` is the side length in pixels for squares and the radius for circles.
struct MotionSpec {
    ShapeKind shape = ShapeKind::kSquare;
    int size = 4;
    Rgb color = kBlack;
    TrajectorySpec trajectory;
    Rgb background = kWhite;
};

struct VideoDims {
    std::size_t frames = 16;
    std::size_t height = 16;
    std::size_t width = 16;
};

inline constexpr std::size_t kMaxFrames = 256;
inline constexpr std::size_t kMaxSide = 512;

/// RGB video, data laid out [3, F, H, W] with values in [0, 1].
struct PixelVideo {
    Tensor data;
    int fps = 8;

    [[nodiscard]] std::size_t frames() const { return data.dim(1); }
    [[nodiscard]] std::size_t height() const { return data.dim(2); }
    [[nodiscard]] std::size_t width() const { return data.dim(3); }
    [[nodiscard]] VideoDims dims() const { return {frames(), height(), width()}; }
    void validate() const;
};

void validate_dims(const VideoDims& dims);

/// Converts a normalized coordinate to a pixel edge, rounding half up.
long to_pixel(double normalized, std::size_t extent);
PixelBox to_pixel_box(const NormBox& box, std::size_t height, std::size_t width);
/// Continuous-pixel center of a normalized box.
inline double box_center_px(double normalized, std::size_t extent) {
    return normalized * static_cast<double>(extent);
}

PixelVideo generate_moving_shape_video(const MotionSpec& spec, const VideoDims& dims);

/// Black filled box on white background per frame.
PixelVideo synthesize_box_reference(const TrajectorySpec& trajectory, const VideoDims& dims);

// Trajectory builders.
TrajectorySpec static_trajectory(const NormBox& box, std::size_t frames);
TrajectorySpec linear_trajectory(double x0, double y0, double x1, double y1, std::size_t frames, double w, double h);
TrajectorySpec sinusoidal_trajectory(double x0, double x1, double y_center, double amplitude, double cycles,
                                     std::size_t frames, double w, double h);
/// Visits each waypoint in order with constant speed per segment.
TrajectorySpec piecewise_linear_trajectory(const std::vector<std::pair<double, double>>& waypoints,
                                           std::size_t frames, double w, double h);

/// Eight distinct box trajectories used by the trajectory-control benchmark.
std::vector<TrajectorySpec> benchmark_trajectories(std::size_t frames, double box_size = 0.25);
std::vector<std::string> benchmark_trajectory_names();

// Training corpus.

/// Shape/color classes; the class index is the condition label.
struct ShapeClass {
    ShapeKind shape;
    Rgb color;
    std::string name;
};
const std::vector<ShapeClass>& shape_classes();

struct CorpusConfig {
    std::size_t count = 256;
    VideoDims dims{};
    std::size_t classes = 4;  ///< 2..4
    int min_size = 3;
    int max_size = 6;
    std::uint64_t seed = 1;
};

struct LabeledVideo {
    PixelVideo video;
    std::size_t label = 0;
    MotionSpec spec;
};

/// Mixture of linear, sinusoidal and piecewise-linear motions. Deterministic in `seed`.
std::vector<LabeledVideo> generate_corpus(const CorpusConfig& config);

}  // namespace mcg

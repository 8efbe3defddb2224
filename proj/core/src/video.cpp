#include "mcg/video.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mcg/error.hpp"

namespace mcg {
namespace {

void paint(Tensor& data, std::size_t f, long y, long x, const Rgb& c) {
    const auto yy = static_cast<std::size_t>(y), xx = static_cast<std::size_t>(x);
    data.at(0, f, yy, xx) = c.r;
    data.at(1, f, yy, xx) = c.g;
    data.at(2, f, yy, xx) = c.b;
}

Tensor filled(const VideoDims& dims, const Rgb& bg) {
    Tensor data({3, dims.frames, dims.height, dims.width});
    const std::size_t n = dims.frames * dims.height * dims.width;
    std::fill(data.data(), data.data() + n, bg.r);
    std::fill(data.data() + n, data.data() + 2 * n, bg.g);
    std::fill(data.data() + 2 * n, data.data() + 3 * n, bg.b);
    return data;
}

void require_frames(const TrajectorySpec& traj, const VideoDims& dims) {
    traj.validate();
    if (traj.frames() != dims.frames) {
        throw ValidationError("trajectory has " + std::to_string(traj.frames()) + " boxes but video has " +
                              std::to_string(dims.frames) + " frames");
    }
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void validate_color(const Rgb& c, const char* what) {
    if (!in_unit(c.r) || !in_unit(c.g) || !in_unit(c.b)) throw ValidationError(std::string(what) + " outside [0,1]");
}

}  // namespace

void TrajectorySpec::validate() const {
    if (boxes.empty()) throw ValidationError("trajectory has no boxes");
    for (std::size_t f = 0; f < boxes.size(); ++f) {
        const NormBox& b = boxes[f];
        const bool finite = std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) && std::isfinite(b.h);
        if (!finite || b.w <= 0.0 || b.h <= 0.0) {
            throw ValidationError("trajectory frame " + std::to_string(f) + ": box needs finite coordinates and w, h > 0");
        }
        const bool intersects = b.cx + b.w / 2 > 0.0 && b.cx - b.w / 2 < 1.0 && b.cy + b.h / 2 > 0.0 && b.cy - b.h / 2 < 1.0;
        if (!intersects) throw ValidationError("trajectory frame " + std::to_string(f) + ": box does not intersect the frame");
    }
}

void validate_dims(const VideoDims& dims) {
    if (dims.frames < 2 || dims.frames > kMaxFrames) {
        throw ValidationError("frame count must be in [2, " + std::to_string(kMaxFrames) + "]");
    }
    if (dims.height < 8 || dims.width < 8 || dims.height > kMaxSide || dims.width > kMaxSide) {
        throw ValidationError("height and width must be in [8, " + std::to_string(kMaxSide) + "]");
    }
}

void PixelVideo::validate() const {
    if (data.rank() != 4 || data.dim(0) != 3) {
        throw ValidationError("pixel video must be [3, F, H, W], got " + shape_to_string(data.shape()));
    }
    validate_dims(dims());
    for (double v : data.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("pixel video values must lie in [0, 1]");
    }
}

long to_pixel(double normalized, std::size_t extent) {
    return static_cast<long>(std::floor(normalized * static_cast<double>(extent) + 0.5));
}

PixelBox to_pixel_box(const NormBox& box, std::size_t height, std::size_t width) {
    PixelBox p{to_pixel(box.cx - box.w / 2, width), to_pixel(box.cy - box.h / 2, height),
               to_pixel(box.cx + box.w / 2, width), to_pixel(box.cy + box.h / 2, height)};
    if (p.x1 <= p.x0) p.x1 = p.x0 + 1;
    if (p.y1 <= p.y0) p.y1 = p.y0 + 1;
    return p;
}

PixelVideo generate_moving_shape_video(const MotionSpec& spec, const VideoDims& dims) {
    validate_dims(dims);
    require_frames(spec.trajectory, dims);
    validate_color(spec.color, "shape color");
    validate_color(spec.background, "background color");
    if (spec.size < 0 || (spec.shape == ShapeKind::kSquare && spec.size < 1)) {
        throw ValidationError("shape size must be >= 1 for squares and >= 0 for circles");
    }
    const auto h = static_cast<long>(dims.height), w = static_cast<long>(dims.width);

    PixelVideo out{filled(dims, spec.background)};
    for (std::size_t f = 0; f < dims.frames; ++f) {
        const NormBox& b = spec.trajectory.boxes[f];
        const double cx = box_center_px(b.cx, dims.width), cy = box_center_px(b.cy, dims.height);
        const auto reject = [f] {
            throw ValidationError("shape leaves the frame at frame " + std::to_string(f));
        };
        if (spec.shape == ShapeKind::kSquare) {
            const long x0 = static_cast<long>(std::floor(cx - spec.size / 2.0 + 0.5));
            const long y0 = static_cast<long>(std::floor(cy - spec.size / 2.0 + 0.5));
            if (x0 < 0 || y0 < 0 || x0 + spec.size > w || y0 + spec.size > h) reject();
            for (long y = y0; y < y0 + spec.size; ++y)
                for (long x = x0; x < x0 + spec.size; ++x) paint(out.data, f, y, x, spec.color);
        } else {
            const long px = static_cast<long>(std::floor(cx)), py = static_cast<long>(std::floor(cy));
            const long r = spec.size;
            if (px - r < 0 || py - r < 0 || px + r >= w || py + r >= h) reject();
            for (long y = py - r; y <= py + r; ++y)
                for (long x = px - r; x <= px + r; ++x)
                    if ((y - py) * (y - py) + (x - px) * (x - px) <= r * r) paint(out.data, f, y, x, spec.color);
        }
    }
    return out;
}

PixelVideo synthesize_box_reference(const TrajectorySpec& trajectory, const VideoDims& dims) {
    validate_dims(dims);
    require_frames(trajectory, dims);
    const auto h = static_cast<long>(dims.height), w = static_cast<long>(dims.width);
    PixelVideo out{filled(dims, kWhite)};
    for (std::size_t f = 0; f < dims.frames; ++f) {
        const PixelBox p = to_pixel_box(trajectory.boxes[f], dims.height, dims.width);
        if (p.x0 < 0 || p.y0 < 0 || p.x1 > w || p.y1 > h) {
            throw ValidationError("box leaves the frame at frame " + std::to_string(f));
        }
        for (long y = p.y0; y < p.y1; ++y)
            for (long x = p.x0; x < p.x1; ++x) paint(out.data, f, y, x, kBlack);
    }
    return out;
}

TrajectorySpec static_trajectory(const NormBox& box, std::size_t frames) {
    return TrajectorySpec{std::vector<NormBox>(frames, box)};
}

TrajectorySpec linear_trajectory(double x0, double y0, double x1, double y1, std::size_t frames, double w, double h) {
    return piecewise_linear_trajectory({{x0, y0}, {x1, y1}}, frames, w, h);
}

TrajectorySpec sinusoidal_trajectory(double x0, double x1, double y_center, double amplitude, double cycles,
                                     std::size_t frames, double w, double h) {
    TrajectorySpec t;
    for (std::size_t f = 0; f < frames; ++f) {
        const double u = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
        t.boxes.push_back({x0 + (x1 - x0) * u, y_center + amplitude * std::sin(2.0 * std::numbers::pi * cycles * u), w, h});
    }
    return t;
}

TrajectorySpec piecewise_linear_trajectory(const std::vector<std::pair<double, double>>& waypoints,
                                           std::size_t frames, double w, double h) {
    if (waypoints.empty()) throw ValidationError("piecewise trajectory needs at least one waypoint");
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const double dx = waypoints[i].first - waypoints[i - 1].first;
        const double dy = waypoints[i].second - waypoints[i - 1].second;
        cumulative.push_back(cumulative.back() + std::hypot(dx, dy));
    }
    const double total = cumulative.back();
    TrajectorySpec t;
    for (std::size_t f = 0; f < frames; ++f) {
        const double u = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
        const double d = u * total;
        std::size_t seg = 1;
        while (seg + 1 < cumulative.size() && cumulative[seg] < d) ++seg;
        if (waypoints.size() == 1 || total == 0.0) {
            t.boxes.push_back({waypoints[0].first, waypoints[0].second, w, h});
            continue;
        }
        const double len = cumulative[seg] - cumulative[seg - 1];
        const double a = len > 0.0 ? (d - cumulative[seg - 1]) / len : 0.0;
        const auto& p = waypoints[seg - 1];
        const auto& q = waypoints[seg];
        t.boxes.push_back({p.first + a * (q.first - p.first), p.second + a * (q.second - p.second), w, h});
    }
    return t;
}

std::vector<std::string> benchmark_trajectory_names() {
    return {"left_to_right", "right_to_left", "top_to_bottom", "bottom_to_top",
            "diagonal_down", "diagonal_up",   "v_shape",       "sine_wave"};
}

std::vector<TrajectorySpec> benchmark_trajectories(std::size_t frames, double box_size) {
    const double lo = 0.15, hi = 0.85, s = box_size;
    return {
        linear_trajectory(lo, 0.5, hi, 0.5, frames, s, s),
        linear_trajectory(hi, 0.5, lo, 0.5, frames, s, s),
        linear_trajectory(0.5, lo, 0.5, hi, frames, s, s),
        linear_trajectory(0.5, hi, 0.5, lo, frames, s, s),
        linear_trajectory(lo, lo, hi, hi, frames, s, s),
        linear_trajectory(lo, hi, hi, lo, frames, s, s),
        piecewise_linear_trajectory({{lo, lo}, {0.5, hi}, {hi, lo}}, frames, s, s),
        sinusoidal_trajectory(lo, hi, 0.5, 0.3, 1.0, frames, s, s),
    };
}

const std::vector<ShapeClass>& shape_classes() {
    static const std::vector<ShapeClass> classes{
        {ShapeKind::kSquare, kBlack, "black_square"},
        {ShapeKind::kCircle, {0.9, 0.1, 0.1}, "red_circle"},
        {ShapeKind::kSquare, {0.1, 0.2, 0.9}, "blue_square"},
        {ShapeKind::kCircle, {0.1, 0.7, 0.2}, "green_circle"},
    };
    return classes;
}

std::vector<LabeledVideo> generate_corpus(const CorpusConfig& config) {
    validate_dims(config.dims);
    if (config.classes < 2 || config.classes > shape_classes().size()) {
        throw ValidationError("corpus classes must be in [2, 4]");
    }
    if (config.min_size < 1 || config.max_size < config.min_size) throw ValidationError("invalid corpus size range");

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<LabeledVideo> corpus;
    corpus.reserve(config.count);
    const VideoDims& d = config.dims;
    const double side = static_cast<double>(std::min(d.height, d.width));

    for (std::size_t i = 0; i < config.count; ++i) {
        const std::size_t label = i % config.classes;
        const ShapeClass& cls = shape_classes()[label];
        const int side_px = config.min_size + static_cast<int>(unit(rng) * (config.max_size - config.min_size + 1));
        MotionSpec spec;
        spec.shape = cls.shape;
        spec.color = cls.color;
        spec.size = cls.shape == ShapeKind::kSquare ? std::min(side_px, config.max_size) : std::max(1, side_px / 2);
        // Keep a one-pixel margin so the rounded shape always fits.
        const double extent = cls.shape == ShapeKind::kSquare ? spec.size / 2.0 + 1.0 : spec.size + 1.5;
        const double lo = extent / side, hi = 1.0 - extent / side;
        auto pick = [&] { return lo + (hi - lo) * unit(rng); };
        const double wh = spec.size / side;

        switch (static_cast<int>(unit(rng) * 3.0)) {
            case 0:
                spec.trajectory = linear_trajectory(pick(), pick(), pick(), pick(), d.frames, wh, wh);
                break;
            case 1: {
                const double yc = pick();
                const double amp = std::min(yc - lo, hi - yc) * unit(rng);
                const bool reverse = unit(rng) < 0.5;
                const double a = pick(), b = pick();
                spec.trajectory = sinusoidal_trajectory(reverse ? std::max(a, b) : std::min(a, b),
                                                        reverse ? std::min(a, b) : std::max(a, b), yc, amp,
                                                        0.5 + unit(rng), d.frames, wh, wh);
                break;
            }
            default:
                spec.trajectory = piecewise_linear_trajectory({{pick(), pick()}, {pick(), pick()}, {pick(), pick()}},
                                                              d.frames, wh, wh);
                break;
        }
        corpus.push_back({generate_moving_shape_video(spec, d), label, spec});
    }
    return corpus;
}

}  // namespace mcg

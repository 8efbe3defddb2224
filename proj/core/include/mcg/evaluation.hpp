#pragma once

#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mcg/backbone.hpp"
#include "mcg/video.hpp"

namespace mcg {

/// Continuous pixel rectangle [x0, x1) x [y0, y1).
struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    [[nodiscard]] double area() const noexcept { return (x1 - x0) * (y1 - y0); }
    [[nodiscard]] double cx() const noexcept { return 0.5 * (x0 + x1); }
    [[nodiscard]] double cy() const noexcept { return 0.5 * (y0 + y1); }
    friend bool operator==(const Box&, const Box&) = default;
};

Box to_box(const PixelBox& b);

/// std::nullopt marks an undetected frame.
using BoxSequence = std::vector<std::optional<Box>>;

inline constexpr double kContrastThreshold = 0.5;

/// Tight box of the largest 4-connected blob whose max-channel difference to
/// `background` exceeds the threshold. Equal-size blobs: the one whose first
/// pixel in row-major order comes first wins.
std::optional<PixelBox> detect_shape(const PixelVideo& video, std::size_t frame, const Rgb& background = kWhite,
                                     double threshold = kContrastThreshold);
BoxSequence detect_boxes(const PixelVideo& video, const Rgb& background = kWhite);

double iou(const Box& a, const Box& b);

/// Rounded pixel boxes of a trajectory, as the renderer draws them.
BoxSequence trajectory_boxes(const TrajectorySpec& gt, std::size_t height, std::size_t width);

/// Mean IoU; undetected frames score 0.
double miou(const BoxSequence& pred, const BoxSequence& gt);
double miou(const BoxSequence& pred, const TrajectorySpec& gt, std::size_t height, std::size_t width);

/// Mean center distance over the image diagonal; undetected frames score 1.
double centroid_distance(const BoxSequence& pred, const BoxSequence& gt, std::size_t height, std::size_t width);
double centroid_distance(const BoxSequence& pred, const TrajectorySpec& gt, std::size_t height, std::size_t width);

/// Per-frame features [C, F, H_l, W_l] at possibly several grid sizes.
using FeatureProvider = std::function<std::vector<Tensor>(const PixelVideo&)>;

/// Tapped features of each frame run through the backbone on its own (F = 1,
/// t = 1, ∅, no noise), so frames never see each other.
FeatureProvider backbone_features(const Backbone& backbone, const NoiseSchedule& schedule);

/// Mean cosine similarity between consecutive frames of spatially pooled
/// features, optionally pooled only inside the per-frame boxes of `crop`.
double frame_similarity(const PixelVideo& video, const FeatureProvider& features,
                        const std::optional<TrajectorySpec>& crop = std::nullopt);

struct FrameMetric {
    bool detected = false;
    double iou = 0.0;
    double cd = 1.0;
};

struct MetricReport {
    std::string name;
    double miou = 0.0;
    double cd = 0.0;
    double detection_rate = 0.0;
    std::optional<double> frame_similarity;
    std::vector<FrameMetric> frames;

    [[nodiscard]] nlohmann::json to_json() const;
};

MetricReport evaluate_video(const PixelVideo& video, const TrajectorySpec& gt, const Rgb& background = kWhite);

struct AggregateReport {
    std::vector<MetricReport> rows;
    double mean_miou = 0.0;
    double mean_cd = 0.0;
    double mean_detection_rate = 0.0;
    std::optional<double> mean_frame_similarity;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string table() const;
};

AggregateReport aggregate(std::vector<MetricReport> rows);

}  // namespace mcg

#include "mcg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mcg/error.hpp"

namespace mcg {

Box to_box(const PixelBox& b) {
    return {static_cast<double>(b.x0), static_cast<double>(b.y0), static_cast<double>(b.x1), static_cast<double>(b.y1)};
}

std::optional<PixelBox> detect_shape(const PixelVideo& video, std::size_t frame, const Rgb& background, double threshold) {
    const std::size_t frames = video.frames(), h = video.height(), w = video.width(), plane = frames * h * w;
    if (frame >= frames) throw ValidationError("detect_shape: frame " + std::to_string(frame) + " out of range");
    const double bg[3] = {background.r, background.g, background.b};
    std::vector<char> fg(h * w, 0);
    for (std::size_t s = 0; s < h * w; ++s) {
        double contrast = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            contrast = std::max(contrast, std::abs(video.data[c * plane + frame * h * w + s] - bg[c]));
        }
        fg[s] = contrast > threshold;
    }

    std::vector<int> label(h * w, -1);
    std::optional<PixelBox> best;
    long best_area = 0;
    std::vector<std::size_t> stack;
    int next = 0;
    for (std::size_t seed = 0; seed < h * w; ++seed) {
        if (!fg[seed] || label[seed] >= 0) continue;
        long count = 0;
        PixelBox box{static_cast<long>(w), static_cast<long>(h), 0, 0};
        label[seed] = next;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const std::size_t s = stack.back();
            stack.pop_back();
            ++count;
            const long y = static_cast<long>(s / w), x = static_cast<long>(s % w);
            box.x0 = std::min(box.x0, x);
            box.y0 = std::min(box.y0, y);
            box.x1 = std::max(box.x1, x + 1);
            box.y1 = std::max(box.y1, y + 1);
            auto visit = [&](long yy, long xx) {
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) return;
                const std::size_t n = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
                if (fg[n] && label[n] < 0) {
                    label[n] = next;
                    stack.push_back(n);
                }
            };
            visit(y - 1, x);
            visit(y + 1, x);
            visit(y, x - 1);
            visit(y, x + 1);
        }
        ++next;
        // Seeds are visited in row-major order, so strict '>' keeps the earlier blob on ties.
        if (count > best_area) {
            best_area = count;
            best = box;
        }
    }
    return best;
}

BoxSequence detect_boxes(const PixelVideo& video, const Rgb& background) {
    BoxSequence out;
    for (std::size_t f = 0; f < video.frames(); ++f) {
        const auto b = detect_shape(video, f, background);
        out.push_back(b ? std::optional<Box>(to_box(*b)) : std::nullopt);
    }
    return out;
}

double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = ix * iy;
    // max + min keeps the union symmetric even when products get fused.
    const double sa = a.area(), sb = b.area();
    const double uni = std::max(sa, sb) + std::min(sa, sb) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

BoxSequence trajectory_boxes(const TrajectorySpec& gt, std::size_t height, std::size_t width) {
    BoxSequence out;
    for (const auto& b : gt.boxes) out.push_back(to_box(to_pixel_box(b, height, width)));
    return out;
}

namespace {

void require_lengths(const BoxSequence& a, const BoxSequence& b, const char* what) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(what) + ": " + std::to_string(a.size()) + " predicted frames vs " +
                              std::to_string(b.size()) + " ground-truth frames");
    }
    if (a.empty()) throw ValidationError(std::string(what) + ": empty sequences");
}

double frame_iou(const std::optional<Box>& p, const std::optional<Box>& g) { return p && g ? iou(*p, *g) : 0.0; }

double frame_cd(const std::optional<Box>& p, const std::optional<Box>& g, double diagonal) {
    if (!p || !g) return 1.0;
    return std::hypot(p->cx() - g->cx(), p->cy() - g->cy()) / diagonal;
}

}  // namespace

double miou(const BoxSequence& pred, const BoxSequence& gt) {
    require_lengths(pred, gt, "miou");
    double sum = 0.0;
    for (std::size_t f = 0; f < pred.size(); ++f) sum += frame_iou(pred[f], gt[f]);
    return sum / static_cast<double>(pred.size());
}

double miou(const BoxSequence& pred, const TrajectorySpec& gt, std::size_t height, std::size_t width) {
    return miou(pred, trajectory_boxes(gt, height, width));
}

double centroid_distance(const BoxSequence& pred, const BoxSequence& gt, std::size_t height, std::size_t width) {
    require_lengths(pred, gt, "centroid_distance");
    const double diagonal = std::hypot(static_cast<double>(height), static_cast<double>(width));
    double sum = 0.0;
    for (std::size_t f = 0; f < pred.size(); ++f) sum += frame_cd(pred[f], gt[f], diagonal);
    return sum / static_cast<double>(pred.size());
}

double centroid_distance(const BoxSequence& pred, const TrajectorySpec& gt, std::size_t height, std::size_t width) {
    return centroid_distance(pred, trajectory_boxes(gt, height, width), height, width);
}

FeatureProvider backbone_features(const Backbone& backbone, const NoiseSchedule& schedule) {
    return [&backbone, &schedule](const PixelVideo& video) {
        const Tensor z = PixelCodec{}.encode(video);
        std::vector<Tensor> out;
        for (std::size_t f = 0; f < video.frames(); ++f) {
            const auto tapped = backbone.denoise_with_taps(slice_frames(z, f, 1), step_at(schedule, 1), kNullCondition);
            if (out.empty()) {
                for (const auto& t : tapped.taps) {
                    out.emplace_back(Shape{t.data.dim(0), video.frames(), t.data.dim(2), t.data.dim(3)});
                }
            }
            for (std::size_t l = 0; l < tapped.taps.size(); ++l) {
                const Tensor& src = tapped.taps[l].data;
                const std::size_t hw = src.dim(2) * src.dim(3);
                for (std::size_t c = 0; c < src.dim(0); ++c) {
                    std::copy_n(src.data() + c * hw, hw, out[l].data() + (c * video.frames() + f) * hw);
                }
            }
        }
        return out;
    };
}

double frame_similarity(const PixelVideo& video, const FeatureProvider& features, const std::optional<TrajectorySpec>& crop) {
    video.validate();
    const std::size_t frames = video.frames(), h = video.height(), w = video.width();
    if (frames < 2) throw ValidationError("frame_similarity needs at least 2 frames");
    if (crop) {
        if (crop->frames() != frames) throw ValidationError("crop trajectory must have one box per frame");
        for (const auto& b : crop->boxes) {
            if (!(b.w > 0) || !(b.h > 0)) throw ValidationError("crop box is empty");
        }
    }
    const std::vector<Tensor> volumes = features(video);
    std::vector<std::vector<double>> pooled(frames);
    for (const Tensor& v : volumes) {
        if (v.rank() != 4 || v.dim(1) != frames) throw ValidationError("feature provider returned a bad volume");
        const std::size_t c = v.dim(0), gh = v.dim(2), gw = v.dim(3);
        for (std::size_t f = 0; f < frames; ++f) {
            std::size_t j0 = 0, j1 = gh, k0 = 0, k1 = gw;
            if (crop) {
                const PixelBox pb = to_pixel_box(crop->boxes[f], h, w);
                j0 = static_cast<std::size_t>(std::max(0L, pb.y0)) * gh / h;
                k0 = static_cast<std::size_t>(std::max(0L, pb.x0)) * gw / w;
                j1 = std::max(j0 + 1, (static_cast<std::size_t>(std::min<long>(pb.y1, static_cast<long>(h))) * gh + h - 1) / h);
                k1 = std::max(k0 + 1, (static_cast<std::size_t>(std::min<long>(pb.x1, static_cast<long>(w))) * gw + w - 1) / w);
            }
            for (std::size_t ci = 0; ci < c; ++ci) {
                double s = 0.0;
                for (std::size_t j = j0; j < j1; ++j) {
                    for (std::size_t k = k0; k < k1; ++k) s += v[((ci * frames + f) * gh + j) * gw + k];
                }
                pooled[f].push_back(s / static_cast<double>((j1 - j0) * (k1 - k0)));
            }
        }
    }
    double total = 0.0;
    for (std::size_t f = 0; f + 1 < frames; ++f) {
        const auto& a = pooled[f];
        const auto& b = pooled[f + 1];
        double ab = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            ab += a[k] * b[k];
            aa += a[k] * a[k];
            bb += b[k] * b[k];
        }
        total += ab / std::max(std::sqrt(aa * bb), 1e-12);
    }
    return total / static_cast<double>(frames - 1);
}

MetricReport evaluate_video(const PixelVideo& video, const TrajectorySpec& gt, const Rgb& background) {
    video.validate();
    const BoxSequence pred = detect_boxes(video, background);
    const BoxSequence truth = trajectory_boxes(gt, video.height(), video.width());
    MetricReport r;
    r.miou = miou(pred, truth);
    r.cd = centroid_distance(pred, truth, video.height(), video.width());
    const double diagonal = std::hypot(static_cast<double>(video.height()), static_cast<double>(video.width()));
    std::size_t detected = 0;
    for (std::size_t f = 0; f < pred.size(); ++f) {
        r.frames.push_back({pred[f].has_value(), frame_iou(pred[f], truth[f]), frame_cd(pred[f], truth[f], diagonal)});
        detected += pred[f].has_value();
    }
    r.detection_rate = static_cast<double>(detected) / static_cast<double>(pred.size());
    return r;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json per_frame = nlohmann::json::array();
    for (const auto& f : frames) per_frame.push_back({{"detected", f.detected}, {"iou", f.iou}, {"cd", f.cd}});
    nlohmann::json j{{"name", name}, {"miou", miou}, {"cd", cd}, {"detection_rate", detection_rate}, {"frames", per_frame}};
    j["frame_similarity"] = frame_similarity ? nlohmann::json(*frame_similarity) : nlohmann::json(nullptr);
    return j;
}

AggregateReport aggregate(std::vector<MetricReport> rows) {
    AggregateReport a;
    a.rows = std::move(rows);
    if (a.rows.empty()) return a;
    double fs = 0.0;
    std::size_t fs_count = 0;
    for (const auto& r : a.rows) {
        a.mean_miou += r.miou;
        a.mean_cd += r.cd;
        a.mean_detection_rate += r.detection_rate;
        if (r.frame_similarity) {
            fs += *r.frame_similarity;
            ++fs_count;
        }
    }
    const double n = static_cast<double>(a.rows.size());
    a.mean_miou /= n;
    a.mean_cd /= n;
    a.mean_detection_rate /= n;
    if (fs_count) a.mean_frame_similarity = fs / static_cast<double>(fs_count);
    return a;
}

nlohmann::json AggregateReport::to_json() const {
    nlohmann::json j{{"count", rows.size()}, {"mean_miou", mean_miou}, {"mean_cd", mean_cd},
                     {"mean_detection_rate", mean_detection_rate}};
    j["mean_frame_similarity"] = mean_frame_similarity ? nlohmann::json(*mean_frame_similarity) : nlohmann::json(nullptr);
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(r.to_json());
    return j;
}

std::string AggregateReport::table() const {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-32s %8s %8s %8s %8s\n", "video", "mIoU", "CD", "det", "fsim");
    os << line;
    auto fsim = [](const std::optional<double>& v) {
        char b[32];
        if (v) {
            std::snprintf(b, sizeof b, "%8.4f", *v);
        } else {
            std::snprintf(b, sizeof b, "%8s", "-");
        }
        return std::string(b);
    };
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-32s %8.4f %8.4f %8.3f %s\n", r.name.c_str(), r.miou, r.cd, r.detection_rate,
                      fsim(r.frame_similarity).c_str());
        os << line;
    }
    if (rows.empty()) {
        os << "(no results)\n";
        return os.str();
    }
    std::snprintf(line, sizeof line, "%-32s %8.4f %8.4f %8.3f %s\n", "mean", mean_miou, mean_cd, mean_detection_rate,
                  fsim(mean_frame_similarity).c_str());
    os << line;
    return os.str();
}

}  // namespace mcg

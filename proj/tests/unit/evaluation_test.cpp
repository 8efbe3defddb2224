#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcg/error.hpp"
#include "mcg/evaluation.hpp"
#include "support/gradcheck.hpp"

namespace mcg {
namespace {

PixelVideo blank(std::size_t frames, std::size_t h, std::size_t w) { return PixelVideo{Tensor({3, frames, h, w}, 1.0)}; }

void paint(PixelVideo& v, std::size_t f, long x0, long y0, long x1, long y1, Rgb c = kBlack) {
    for (long y = y0; y < y1; ++y)
        for (long x = x0; x < x1; ++x) {
            v.data.at(0, f, y, x) = c.r;
            v.data.at(1, f, y, x) = c.g;
            v.data.at(2, f, y, x) = c.b;
        }
}

TEST(DetectShape, BackgroundOnlyIsNone) {
    EXPECT_FALSE(detect_shape(blank(1, 16, 16), 0).has_value());
    PixelVideo v = blank(1, 8, 8);
    paint(v, 0, 1, 1, 3, 3, {0.6, 0.6, 0.6});  // contrast 0.4 stays below threshold
    EXPECT_FALSE(detect_shape(v, 0).has_value());
}

TEST(DetectShape, ExactBoxOnRenderedSquare) {
    MotionSpec m;
    m.size = 8;
    m.trajectory = static_trajectory({0.5, 0.375, 0.5, 0.5}, 2);
    const PixelVideo v = generate_moving_shape_video(m, {2, 32, 32});
    const auto box = detect_shape(v, 0);
    ASSERT_TRUE(box.has_value());
    EXPECT_EQ(*box, (PixelBox{12, 8, 20, 16}));
}

TEST(DetectShape, LargerBlobWinsAndTiesGoTopLeft) {
    PixelVideo v = blank(2, 16, 16);
    paint(v, 0, 1, 1, 3, 3);
    paint(v, 0, 8, 8, 12, 12);
    EXPECT_EQ(*detect_shape(v, 0), (PixelBox{8, 8, 12, 12}));
    paint(v, 1, 10, 2, 13, 5);
    paint(v, 1, 2, 9, 5, 12);
    EXPECT_EQ(*detect_shape(v, 1), (PixelBox{10, 2, 13, 5}));
}

TEST(DetectShape, ColoredShapeOnCustomBackground) {
    PixelVideo v = blank(1, 8, 8);
    v.data.fill(0.0);
    paint(v, 0, 2, 3, 5, 6, {0.9, 0.1, 0.1});
    EXPECT_EQ(*detect_shape(v, 0, kBlack), (PixelBox{2, 3, 5, 6}));
}

TEST(Detector, ReproducesRendererBoxes) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.3, 0.7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto traj = linear_trajectory(u(rng), u(rng), u(rng), u(rng), 6, 0.25, 0.25);
        const PixelVideo v = synthesize_box_reference(traj, {6, 24, 24});
        const BoxSequence pred = detect_boxes(v);
        const BoxSequence truth = trajectory_boxes(traj, 24, 24);
        for (std::size_t f = 0; f < 6; ++f) {
            ASSERT_TRUE(pred[f].has_value());
            EXPECT_LE(std::abs(pred[f]->x0 - truth[f]->x0), 1.0);
            EXPECT_LE(std::abs(pred[f]->x1 - truth[f]->x1), 1.0);
            EXPECT_LE(std::abs(pred[f]->y0 - truth[f]->y0), 1.0);
            EXPECT_LE(std::abs(pred[f]->y1 - truth[f]->y1), 1.0);
        }
    }
}

TEST(Miou, Cases) {
    const BoxSequence a{Box{0, 0, 1, 1}, Box{2, 2, 4, 4}};
    EXPECT_DOUBLE_EQ(miou(a, a), 1.0);
    const BoxSequence far{Box{5, 5, 6, 6}, Box{10, 10, 11, 11}};
    EXPECT_DOUBLE_EQ(miou(a, far), 0.0);
    // Unit squares shifted by half a width: 0.5 / 1.5.
    const BoxSequence shifted{Box{0.5, 0, 1.5, 1}, Box{3, 2, 5, 4}};
    EXPECT_DOUBLE_EQ(iou(Box{0, 0, 1, 1}, Box{0.5, 0, 1.5, 1}), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(miou(a, shifted), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(miou(BoxSequence{std::nullopt, a[1]}, a), 0.5);
    EXPECT_THROW(miou(a, BoxSequence{a[0]}), ValidationError);
}

TEST(Miou, Symmetric) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 100; ++trial) {
        BoxSequence a, b;
        for (int f = 0; f < 4; ++f) {
            const double x = u(rng), y = u(rng);
            a.push_back(Box{x, y, x + 1 + u(rng), y + 1 + u(rng)});
            const double p = u(rng), q = u(rng);
            b.push_back(Box{p, q, p + 1 + u(rng), q + 1 + u(rng)});
        }
        EXPECT_EQ(miou(a, b), miou(b, a));
    }
}

TEST(CentroidDistance, Cases) {
    const auto traj = static_trajectory({0.5, 0.5, 0.25, 0.25}, 3);
    const BoxSequence truth = trajectory_boxes(traj, 32, 32);
    EXPECT_DOUBLE_EQ(centroid_distance(truth, traj, 32, 32), 0.0);
    BoxSequence off = truth;
    for (auto& b : off) {
        b->x0 += 3;
        b->x1 += 3;
    }
    EXPECT_NEAR(centroid_distance(off, traj, 32, 32), 3.0 / std::sqrt(2.0 * 32 * 32), 1e-12);
    EXPECT_NEAR(centroid_distance(off, traj, 32, 32), 0.0663, 5e-5);
    EXPECT_DOUBLE_EQ(centroid_distance(BoxSequence(3), traj, 32, 32), 1.0);
}

TEST(CentroidDistance, TranslationEquivariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 20);
    for (int trial = 0; trial < 50; ++trial) {
        BoxSequence a, b;
        for (int f = 0; f < 3; ++f) {
            const double x = u(rng), y = u(rng), p = u(rng), q = u(rng);
            a.push_back(Box{x, y, x + 2, y + 3});
            b.push_back(Box{p, q, p + 4, q + 1});
        }
        const double dx = u(rng) - 10, dy = u(rng) - 10;
        BoxSequence sa = a, sb = b;
        for (auto* s : {&sa, &sb})
            for (auto& bx : *s) *bx = Box{bx->x0 + dx, bx->y0 + dy, bx->x1 + dx, bx->y1 + dy};
        EXPECT_NEAR(centroid_distance(a, b, 32, 32), centroid_distance(sa, sb, 32, 32), 1e-12);
    }
}

BackboneConfig small_config() {
    BackboneConfig c;
    c.level_channels = {8, 16};
    c.embed_dim = 16;
    return c;
}

TEST(FrameSimilarity, StaticIsOneNoiseIsLower) {
    const Backbone net(small_config());
    const auto sched = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const auto features = backbone_features(net, sched);
    MotionSpec m;
    m.size = 3;
    m.trajectory = static_trajectory({0.5, 0.5, 0.3, 0.3}, 4);
    const double still = frame_similarity(generate_moving_shape_video(m, {4, 8, 8}), features);
    EXPECT_NEAR(still, 1.0, 1e-4);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PixelVideo noise{testing::random_tensor({3, 4, 8, 8}, seed)};
        for (double& x : noise.data.values()) x = x > 0 ? 1.0 : 0.0;
        EXPECT_LT(frame_similarity(noise, features), still);
    }
}

TEST(FrameSimilarity, FullFrameCropEqualsFullFrame) {
    const Backbone net(small_config());
    const auto sched = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const auto features = backbone_features(net, sched);
    MotionSpec m;
    m.size = 2;
    m.trajectory = linear_trajectory(0.3, 0.5, 0.7, 0.5, 4, 0.2, 0.2);
    const PixelVideo v = generate_moving_shape_video(m, {4, 8, 8});
    const auto full = static_trajectory({0.5, 0.5, 1.0, 1.0}, 4);
    EXPECT_DOUBLE_EQ(frame_similarity(v, features, full), frame_similarity(v, features));
    auto empty = full;
    empty.boxes[2].w = 0.0;
    EXPECT_THROW(frame_similarity(v, features, empty), ValidationError);
}

TEST(Report, EvaluateAndAggregate) {
    const auto traj = linear_trajectory(0.3, 0.5, 0.7, 0.5, 4, 0.25, 0.25);
    const PixelVideo v = synthesize_box_reference(traj, {4, 16, 16});
    MetricReport r = evaluate_video(v, traj);
    EXPECT_DOUBLE_EQ(r.miou, 1.0);
    EXPECT_DOUBLE_EQ(r.cd, 0.0);
    EXPECT_DOUBLE_EQ(r.detection_rate, 1.0);
    ASSERT_EQ(r.frames.size(), 4u);
    r.name = "same";
    MetricReport miss = evaluate_video(blank(4, 16, 16), traj);
    miss.name = "blank";
    EXPECT_DOUBLE_EQ(miss.cd, 1.0);
    const auto agg = aggregate({r, miss});
    EXPECT_DOUBLE_EQ(agg.mean_miou, 0.5);
    EXPECT_DOUBLE_EQ(agg.mean_cd, 0.5);
    EXPECT_EQ(agg.to_json()["rows"].size(), 2u);
    EXPECT_NE(agg.table().find("blank"), std::string::npos);
    const auto none = aggregate({});
    EXPECT_EQ(none.to_json()["count"], 0);
}

}  // namespace
}  // namespace mcg

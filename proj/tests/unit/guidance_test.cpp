#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcg/error.hpp"
#include "mcg/guidance.hpp"
#include "support/gradcheck.hpp"

namespace mcg {
namespace {

using testing::gradcheck;
using testing::random_tensor;

CorrelationPattern pattern(int layer, std::size_t src, Tensor maps) {
    CorrelationPattern p;
    p.layer_id = layer;
    p.source_frame = src;
    p.maps = std::move(maps);
    return p;
}

TEST(ConsistencyLoss, HandExample) {
    PatternBundle cur{{pattern(1, 0, Tensor({1, 2, 2}, {0.5, 0.5, 0.0, 0.0}))}};
    PatternBundle ref{{pattern(1, 0, Tensor({1, 2, 2}, {1.0, 0.0, 0.0, 0.0}))}};
    EXPECT_DOUBLE_EQ(consistency_loss(cur, ref), 0.5);
    EXPECT_EQ(consistency_loss(ref, ref), 0.0);
}

TEST(ConsistencyLoss, MatchesFlatOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PatternBundle a, b;
        std::vector<double> fa, fb;
        for (int layer = 1; layer <= 3; ++layer) {
            for (std::size_t src = 0; src < 4; ++src) {
                const Shape s{4 - src, 3, 5};
                a.patterns.push_back(pattern(layer, src, random_tensor(s, seed * 100 + layer * 10 + src)));
                b.patterns.push_back(pattern(layer, src, random_tensor(s, seed * 100 + layer * 10 + src + 5000)));
                fa.insert(fa.end(), a.patterns.back().maps.values().begin(), a.patterns.back().maps.values().end());
                fb.insert(fb.end(), b.patterns.back().maps.values().begin(), b.patterns.back().maps.values().end());
            }
        }
        double oracle = 0.0;
        for (std::size_t k = 0; k < fa.size(); ++k) oracle += (fa[k] - fb[k]) * (fa[k] - fb[k]);
        EXPECT_NEAR(consistency_loss(a, b), oracle, 1e-7);
        EXPECT_EQ(consistency_loss(a, a), 0.0);
    }
}

TEST(ConsistencyLoss, StructuralMismatchNamesKey) {
    PatternBundle a{{pattern(1, 0, Tensor({1, 2, 2})), pattern(1, 1, Tensor({1, 2, 2}))}};
    PatternBundle b{{pattern(1, 0, Tensor({1, 2, 2})), pattern(2, 1, Tensor({1, 2, 2}))}};
    try {
        consistency_loss(a, b);
        FAIL() << "expected a ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 1, point 0, frame 1"), std::string::npos) << e.what();
    }
    PatternBundle c{{pattern(1, 0, Tensor({1, 2, 2}))}};
    EXPECT_THROW(consistency_loss(a, c), ValidationError);
}

PatternBundle random_reference(const Tensor& tap, int layer, std::uint64_t seed, double tau, TemperatureMode mode) {
    const Tensor other = random_tensor(tap.shape(), seed);
    std::mt19937_64 rng(seed);
    std::vector<PointTrack> tracks{{layer, 0, {}, {}}};
    for (std::size_t f = 0; f < tap.dim(1); ++f) tracks[0].cells.push_back({rng() % tap.dim(2), rng() % tap.dim(3)});
    tracks[0].flat.assign(tap.dim(1), false);
    return bundle_from_taps({{other, layer, 1}}, {tracks}, {tau, 0, mode, {}});
}

TEST(TapConsistencyLoss, ValueMatchesBundleLoss) {
    const Tensor tap = random_tensor({5, 4, 3, 3}, 1);
    const PatternBundle ref = random_reference(tap, 1, 2, 0.5, TemperatureMode::kDivide);
    std::vector<std::vector<PointTrack>> tracks(1);
    for (std::size_t n = 0; n < 1; ++n) {
        PointTrack t{1, 0, {}, {}};
        for (const auto& p : ref.patterns) t.cells.push_back(p.anchor);
        t.cells.push_back(t.cells.back());
        t.flat.assign(t.cells.size(), false);
        tracks[0].push_back(t);
    }
    const PatternBundle cur = bundle_from_taps({{tap, 1, 1}}, tracks, {0.5, 0, TemperatureMode::kDivide, {}});
    EXPECT_NEAR(tap_consistency_loss(ad::constant(tap), 1, ref).value()[0], consistency_loss(cur, ref), 1e-14);
    EXPECT_EQ(tap_consistency_loss(ad::constant(tap), 2, ref).value()[0], 0.0);
}

TEST(TapConsistencyLoss, GradientMatchesFiniteDifferences) {
    for (auto mode : {TemperatureMode::kDivide, TemperatureMode::kMultiply}) {
        const Tensor tap = random_tensor({5, 4, 3, 3}, 3);
        const PatternBundle ref = random_reference(tap, 1, 4, mode == TemperatureMode::kDivide ? 0.3 : 3.0, mode);
        const double err = gradcheck([&](const std::vector<ad::Var>& in) { return tap_consistency_loss(in[0], 1, ref); },
                                     {tap}, 1e-5);
        EXPECT_LT(err, 1e-5) << to_string(mode);
    }
}

BackboneConfig small_config() {
    BackboneConfig c;
    c.level_channels = {8, 16};
    c.embed_dim = 16;
    c.seed = 5;
    return c;
}

struct Fixture : ::testing::Test {
    Backbone net{small_config()};
    NoiseSchedule sched = NoiseSchedule::build(6, ScheduleKind::kLinear);
    Tensor z = random_tensor({4, 4, 8, 8}, 11);
    PatternBundle ref;
    GuidanceConfig cfg;

    void SetUp() override {
        const Tensor other = random_tensor({4, 4, 8, 8}, 12);
        const auto taps = net.denoise_with_taps(other, step_at(sched, 1), kNullCondition).taps;
        std::vector<KeyPoint> path;
        for (std::size_t f = 0; f < 4; ++f) path.push_back({f, 2.0 + f, 3.0});
        ref = bundle_from_taps(taps, {tracks_from_path(taps, path, 8, 8)}, {0.5, 0, TemperatureMode::kDivide, {}});
        cfg.tau = 0.5;
        cfg.cfg_scale = 3.0;
        cfg.sigma = 50.0;
    }
};

TEST_F(Fixture, SigmaZeroIsPlainCfgBitwise) {
    cfg.sigma = 0.0;
    const auto g = guided_noise_estimate(net, z, step_at(sched, 3), 1, ref, cfg);
    EXPECT_EQ(g.eps_hat, cfg_noise(net, z, step_at(sched, 3), 1, cfg.cfg_scale));
}

TEST_F(Fixture, GuidedMinusPlainIsSigmaGradBitwise) {
    for (double scale : {0.0, 1.0, 3.0}) {
        cfg.cfg_scale = scale;
        const auto g = guided_noise_estimate(net, z, step_at(sched, 3), 2, ref, cfg);
        EXPECT_EQ(g.eps_plain, cfg_noise(net, z, step_at(sched, 3), 2, scale));
        EXPECT_GT(std::sqrt(g.grad.squared_norm()), 0.0);
        for (std::size_t k = 0; k < z.size(); ++k) ASSERT_EQ(g.eps_hat[k], g.eps_plain[k] + cfg.sigma * g.grad[k]);
    }
}

TEST_F(Fixture, SelfReferenceIsStationary) {
    const auto taps = net.denoise_with_taps(z, step_at(sched, 3), 1).taps;
    std::vector<KeyPoint> path;
    for (std::size_t f = 0; f < 4; ++f) path.push_back({f, 5.0, 1.0 + f});
    const PatternBundle self =
        bundle_from_taps(taps, {tracks_from_path(taps, path, 8, 8)}, {0.5, 0, TemperatureMode::kDivide, {}});
    const auto g = guided_noise_estimate(net, z, step_at(sched, 3), 1, self, cfg);
    EXPECT_EQ(g.loss, 0.0);
    EXPECT_LT(g.grad.max_abs(), 1e-15);
    EXPECT_LT(max_abs_diff(g.eps_hat, g.eps_plain), 1e-12);
}

TEST_F(Fixture, GradientMatchesFiniteDifferences) {
    const Step step = step_at(sched, 2);
    const auto lg = consistency_gradient(net, z, step, 1, ref);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, z.size() - 1);
    double worst = 0.0;
    for (int probe = 0; probe < 8; ++probe) {
        const std::size_t i = pick(rng);
        auto loss_at = [&](double d) {
            Tensor zp = z;
            zp[i] += d;
            return consistency_gradient(net, zp, step, 1, ref).loss;
        };
        const double h = 1e-5;
        const double numeric = (loss_at(h) - loss_at(-h)) / (2 * h);
        worst = std::max(worst, std::abs(numeric - lg.grad[i]) / std::max({std::abs(numeric), std::abs(lg.grad[i]), 1e-9}));
    }
    EXPECT_LT(worst, 1e-3);
}

TEST_F(Fixture, SmallStepAgainstGradientLowersLoss) {
    for (int t : {1, 3, 6}) {
        const auto lg = consistency_gradient(net, z, step_at(sched, t), 1, ref);
        ASSERT_GT(lg.grad.squared_norm(), 0.0);
        const double h = 1e-3 / std::sqrt(lg.grad.squared_norm());
        const auto after = consistency_gradient(net, axpby(1.0, z, -h, lg.grad), step_at(sched, t), 1, ref);
        EXPECT_LT(after.loss, lg.loss) << "t=" << t;
    }
}

TEST_F(Fixture, NoGuidedStepsMatchesPlainSampling) {
    cfg.guided_steps = 0;
    GuidanceTrace trace;
    const Tensor a = guided_sample(net, sched, z, 1, ref, cfg, trace);
    const Tensor b = ddim_sample(z, sched.max_step(),
                                 [&](const Tensor& x, int t) { return cfg_noise(net, x, step_at(sched, t), 1, cfg.cfg_scale); },
                                 sched);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(trace.records.empty());
    cfg.guided_steps = 2;
    cfg.sigma = 0.0;
    EXPECT_EQ(guided_sample(net, sched, z, 1, ref, cfg, trace), b);
}

TEST_F(Fixture, GuidedStepsFollowTheBranchRule) {
    cfg.guided_steps = 2;
    GuidanceTrace trace;
    std::vector<int> seen;
    guided_sample(net, sched, z, 1, ref, cfg, trace, [&](const TraceRecord& r) { seen.push_back(r.t); });
    EXPECT_EQ(seen, (std::vector<int>{6, 5}));
    ASSERT_EQ(trace.records.size(), 2u);
    EXPECT_GT(trace.records[0].loss, 0.0);
    cfg.guided_steps = 7;
    EXPECT_THROW(guided_sample(net, sched, z, 1, ref, cfg, trace), ValidationError);
}

TEST_F(Fixture, GenerateBothModes) {
    const VideoDims dims{4, 8, 8};
    GenerationRequest traj;
    traj.trajectory = linear_trajectory(0.3, 0.5, 0.7, 0.5, 4, 0.25, 0.25);
    traj.dims = dims;
    traj.y = 0;
    cfg.guided_steps = 2;
    cfg.lambda = 0.5;
    const auto a = generate(net, sched, traj, cfg);
    const auto b = generate(net, sched, traj, cfg);
    EXPECT_EQ(a.video.data.shape(), (Shape{3, 4, 8, 8}));
    EXPECT_EQ(a.video.data, b.video.data);
    EXPECT_EQ(a.trace.records.size(), 2u);
    cfg.seed = 1;
    EXPECT_NE(generate(net, sched, traj, cfg).z_T, a.z_T);

    GenerationRequest reference;
    reference.reference = synthesize_box_reference(*traj.trajectory, dims);
    reference.y = 1;
    cfg.mode = GuidanceMode::kReference;
    EXPECT_THROW(generate(net, sched, reference, cfg), ValidationError);  // no key point
    cfg.points = {{0, 4.0, 2.0}};
    const auto r = generate(net, sched, reference, cfg);
    EXPECT_EQ(r.video.data.shape(), (Shape{3, 4, 8, 8}));
    reference.trajectory = traj.trajectory;
    EXPECT_THROW(generate(net, sched, reference, cfg), ValidationError);
}

TEST(BoxCenterPath, UsesRenderedBoxCenters) {
    const auto traj = linear_trajectory(0.25, 0.5, 0.75, 0.25, 3, 0.25, 0.25);
    const auto path = box_center_path(traj, {3, 16, 16});
    ASSERT_EQ(path.size(), 3u);
    EXPECT_EQ(path[0].frame, 0u);
    EXPECT_DOUBLE_EQ(path[0].x, 4.0);
    EXPECT_DOUBLE_EQ(path[0].y, 8.0);
    EXPECT_DOUBLE_EQ(path[2].x, 12.0);
    EXPECT_DOUBLE_EQ(path[2].y, 4.0);
}

TEST(GuidanceConfig, Validation) {
    GuidanceConfig c;
    EXPECT_NO_THROW(c.validate(50));
    c.sigma = -1;
    EXPECT_THROW(c.validate(50), ValidationError);
    c = {};
    c.guided_steps = 51;
    EXPECT_THROW(c.validate(50), ValidationError);
    c = {};
    c.lambda = 1.5;
    EXPECT_THROW(c.validate(50), ValidationError);
    EXPECT_EQ(GuidanceConfig{}.resolved_steps(30), 30);
}

}  // namespace
}  // namespace mcg

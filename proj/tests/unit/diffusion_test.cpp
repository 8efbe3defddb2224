#include <gtest/gtest.h>

#include <cmath>

#include "mcg/diffusion.hpp"
#include "mcg/error.hpp"
#include "support/gradcheck.hpp"

namespace mcg {
namespace {

using testing::random_tensor;

struct AffineDenoiser final : Denoiser {
    double a = 0.3, b = -0.2;
    Tensor predict_noise(const Tensor& z, const Step&, Condition) const override {
        Tensor out(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = a * z[i] + b;
        return out;
    }
};

struct ZeroDenoiser final : Denoiser {
    Tensor predict_noise(const Tensor& z, const Step&, Condition) const override { return Tensor(z.shape()); }
};

// Recovers the injected noise from z_t given the clean latent.
struct OracleDenoiser final : Denoiser {
    Tensor z0;
    Tensor predict_noise(const Tensor& z, const Step& s, Condition) const override {
        Tensor out(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i)
            out[i] = (z[i] - std::sqrt(s.alpha_bar) * z0[i]) / std::sqrt(1.0 - s.alpha_bar);
        return out;
    }
};

struct LabelDenoiser final : Denoiser {
    Tensor predict_noise(const Tensor& z, const Step&, Condition y) const override {
        return Tensor(z.shape(), y ? 2.0 + static_cast<double>(*y) : -1.0);
    }
};

struct NanAfterDenoiser final : Denoiser {
    int bad_step = 3;
    Tensor predict_noise(const Tensor& z, const Step& s, Condition) const override {
        return Tensor(z.shape(), s.t == bad_step ? std::nan("") : 0.1);
    }
};

TEST(Schedule, MinimalLinear) {
    const auto s = NoiseSchedule::build(2, ScheduleKind::kLinear);
    EXPECT_EQ(s.max_step(), 2);
    EXPECT_EQ(s.alpha_bar(0), 1.0);
    EXPECT_GT(s.alpha_bar(1), s.alpha_bar(2));
    EXPECT_GT(s.alpha_bar(2), 0.0);
}

TEST(Schedule, RejectsTooShort) {
    EXPECT_THROW(NoiseSchedule::build(1, ScheduleKind::kLinear), ValidationError);
    EXPECT_THROW(NoiseSchedule::build(1, ScheduleKind::kCosine), ValidationError);
}

TEST(Schedule, LinearMatchesDirectProduct) {
    const int T = 50;
    const auto s = NoiseSchedule::build(T, ScheduleKind::kLinear);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double beta = 0.002 + (0.4 - 0.002) * (t - 1) / 49.0;
        prod *= 1.0 - beta;
        EXPECT_NEAR(s.alpha_bar(t), prod, 1e-14) << t;
    }
    EXPECT_LT(s.alpha_bar(T), 1e-3);
}

TEST(Schedule, StrictlyMonotoneBothKinds) {
    for (auto kind : {ScheduleKind::kLinear, ScheduleKind::kCosine}) {
        for (int T : {2, 30, 50, 1000}) {
            const auto s = NoiseSchedule::build(T, kind);
            EXPECT_NEAR(s.alpha_bar(0), 1.0, 1e-12);
            for (int t = 1; t <= T; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
            EXPECT_LT(s.alpha_bar(T), 1e-2);
        }
    }
}

TEST(AddNoise, Limits) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z0 = random_tensor({4, 2, 3, 3}, 1), eps = random_tensor({4, 2, 3, 3}, 2);
    EXPECT_EQ(add_noise(z0, 0, eps, s), z0);
    const Tensor zt = add_noise(Tensor(z0.shape()), 10, eps, s);
    for (std::size_t i = 0; i < zt.size(); ++i) EXPECT_DOUBLE_EQ(zt[i], std::sqrt(1 - s.alpha_bar(10)) * eps[i]);
    EXPECT_THROW(add_noise(z0, 5, random_tensor({4, 2, 3, 2}, 3), s), ValidationError);
}

TEST(AddNoise, FirstStepClosedForm) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z0 = random_tensor({2, 2, 2, 2}, 4), eps = random_tensor({2, 2, 2, 2}, 5);
    const Tensor z1 = add_noise(z0, 1, eps, s);
    // ᾱ_1 = 1 - 0.002 on the T=50 scaled linear schedule.
    for (std::size_t i = 0; i < z0.size(); ++i) EXPECT_NEAR(z1[i], std::sqrt(0.998) * z0[i] + std::sqrt(0.002) * eps[i], 1e-15);
}

TEST(DdimStep, TrueNoiseRecoversCleanLatent) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z0 = random_tensor({4, 3, 4, 4}, 6), eps = random_tensor({4, 3, 4, 4}, 7);
    EXPECT_LT(max_abs_diff(ddim_step(add_noise(z0, 1, eps, s), eps, 1, s), z0), 1e-12);
    for (int t : {1, 7, 25, 50}) {
        const Tensor back = ddim_sample(add_noise(z0, t, eps, s), t, [&](const Tensor&, int) { return eps; }, s);
        EXPECT_LT(max_abs_diff(back, z0), 1e-5) << "t=" << t;
    }
}

TEST(DdimStep, TwoAffineStepsMatchSymbolicComposition) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const AffineDenoiser d;
    const Tensor z = random_tensor({2, 2, 3, 3}, 8);
    const int t = 20;
    Tensor step1 = ddim_step(z, d.predict_noise(z, step_at(s, t), std::nullopt), t, s);
    Tensor step2 = ddim_step(step1, d.predict_noise(step1, step_at(s, t - 1), std::nullopt), t - 1, s);

    // z_{t-1} = (c1 + c2 a) z + c2 b with c1 = sqrt(ᾱ_{t-1}/ᾱ_t), c2 = sqrt(1-ᾱ_{t-1}) - c1 sqrt(1-ᾱ_t).
    auto coeffs = [&](int tt) {
        const double ab = s.alpha_bar(tt), abp = s.alpha_bar(tt - 1);
        const double c1 = std::sqrt(abp / ab), c2 = std::sqrt(1 - abp) - c1 * std::sqrt(1 - ab);
        return std::pair{c1 + c2 * d.a, c2 * d.b};
    };
    const auto [m1, k1] = coeffs(t);
    const auto [m2, k2] = coeffs(t - 1);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(step2[i], m2 * (m1 * z[i] + k1) + k2, 1e-12);
}

TEST(DdimStep, LargeTimestepLimit) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z = random_tensor({2, 2, 3, 3}, 9);
    EXPECT_LT(predict_x0(z, z, 50, s).max_abs(), 0.05 * z.max_abs());
    EXPECT_THROW(ddim_step(z, z, 0, s), ValidationError);
    EXPECT_THROW(ddim_step(z, z, 51, s), ValidationError);
}

TEST(DdimInvert, ZeroStepsIsIdentity) {
    const auto s = NoiseSchedule::build(30, ScheduleKind::kLinear);
    const Tensor z0 = random_tensor({4, 2, 3, 3}, 10);
    EXPECT_EQ(ddim_invert(z0, AffineDenoiser{}, std::nullopt, 0, s), z0);
    EXPECT_THROW(ddim_invert(z0, AffineDenoiser{}, std::nullopt, 31, s), ValidationError);
}

TEST(DdimInvert, AffineDenoiserMatchesClosedFormInverse) {
    const auto s = NoiseSchedule::build(30, ScheduleKind::kLinear);
    const AffineDenoiser d;
    const Tensor z0 = random_tensor({4, 2, 3, 3}, 11);
    const Tensor zT = ddim_invert(z0, d, std::nullopt, 30, s);
    double m = 1.0, k = 0.0;  // z_t = m z0 + k
    for (int t = 1; t <= 30; ++t) {
        const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1);
        const double c1 = std::sqrt(ab / abp), c2 = std::sqrt(1 - ab) - c1 * std::sqrt(1 - abp);
        const double mm = c1 + c2 * d.a, kk = c2 * d.b;
        k = mm * k + kk;
        m = mm * m;
    }
    for (std::size_t i = 0; i < z0.size(); ++i) EXPECT_NEAR(zT[i], m * z0[i] + k, 1e-6);
}

TEST(DdimInvert, NonFiniteNamesStep) {
    const auto s = NoiseSchedule::build(10, ScheduleKind::kLinear);
    try {
        ddim_invert(random_tensor({1, 2, 2, 2}, 1), NanAfterDenoiser{}, std::nullopt, 10, s);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos);
    }
}

TEST(DdimInvert, OracleRoundTripIsExact) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    OracleDenoiser oracle;
    oracle.z0 = random_tensor({2, 2, 3, 3}, 12);
    // With the oracle every intermediate lies on the same noise direction, so
    // sampling back returns the start.
    const Tensor zT = ddim_invert(oracle.z0, oracle, std::nullopt, 50, s);
    const Tensor back = ddim_sample(zT, 50, [&](const Tensor& z, int t) { return oracle.predict_noise(z, step_at(s, t), std::nullopt); }, s);
    EXPECT_LT(max_abs_diff(back, oracle.z0), 1e-6);
}

TEST(Cfg, ScaleEndpointsAreExact) {
    const LabelDenoiser d;
    const Tensor z({1, 2, 2, 2});
    const Step st{5, 0.5};
    EXPECT_EQ(cfg_noise(d, z, st, 1, 0.0), d.predict_noise(z, st, std::nullopt));
    EXPECT_EQ(cfg_noise(d, z, st, 1, 1.0), d.predict_noise(z, st, 1));
    const Tensor twelve = cfg_noise(d, z, st, 1, 12.0);
    EXPECT_DOUBLE_EQ(twelve[0], -1.0 + 12.0 * (3.0 + 1.0));
    EXPECT_THROW(cfg_noise(d, z, st, 1, -1.0), ValidationError);
}

TEST(MixNoise, Endpoints) {
    const Tensor a = random_tensor({2, 2}, 1), b = random_tensor({2, 2}, 2);
    EXPECT_EQ(mix_initial_noise(a, b, 1.0), a);
    EXPECT_EQ(mix_initial_noise(a, b, 0.0), b);
    EXPECT_NEAR(mix_initial_noise(a, b, 0.5)[0], std::sqrt(0.5) * (a[0] + b[0]), 1e-15);
    EXPECT_THROW(mix_initial_noise(a, b, 1.5), ValidationError);
}

TEST(TrainingLoss, OracleScoresZero) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    OracleDenoiser oracle;
    oracle.z0 = random_tensor({4, 4, 8, 8}, 13);
    const std::vector<TrainingExample> batch{{oracle.z0, 0}, {oracle.z0, 1}};
    EXPECT_NEAR(training_loss(oracle, batch, s, 5), 0.0, 1e-12);
}

TEST(TrainingLoss, ZeroPredictorScoresElementCount) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z0 = random_tensor({4, 16, 16, 16}, 14);
    const std::vector<TrainingExample> batch(4, TrainingExample{z0, std::nullopt});
    const double loss = training_loss(ZeroDenoiser{}, batch, s, 21);
    EXPECT_NEAR(loss / static_cast<double>(z0.size()), 1.0, 0.05);
}

TEST(TrainingLoss, ReproducibleAndRejectsNonFinite) {
    const auto s = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const std::vector<TrainingExample> batch{{random_tensor({4, 2, 4, 4}, 15), 1}};
    const AffineDenoiser d;
    EXPECT_EQ(training_loss(d, batch, s, 3), training_loss(d, batch, s, 3));
    NanAfterDenoiser nan;
    nan.bad_step = -1;
    EXPECT_NO_THROW(training_loss(nan, batch, s, 3));
    struct AlwaysNan final : Denoiser {
        Tensor predict_noise(const Tensor& z, const Step&, Condition) const override { return Tensor(z.shape(), std::nan("")); }
    };
    EXPECT_THROW(training_loss(AlwaysNan{}, batch, s, 3), NumericalError);
    EXPECT_THROW(training_loss(d, std::span<const TrainingExample>{}, s, 3), ValidationError);
}

}  // namespace
}  // namespace mcg

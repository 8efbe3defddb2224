#include "mcg/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "mcg/error.hpp"

namespace mcg {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::kLinear ? "linear" : "cosine"; }

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::kLinear;
    if (s == "cosine") return ScheduleKind::kCosine;
    throw ValidationError("schedule kind must be 'linear' or 'cosine', got '" + s + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, std::vector<double> betas) : kind_(kind), beta_(std::move(betas)) {
    alpha_bar_.resize(beta_.size());
    alpha_bar_[0] = 1.0;
    for (std::size_t t = 1; t < beta_.size(); ++t) alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
}

NoiseSchedule NoiseSchedule::build(int max_step, ScheduleKind kind) {
    if (max_step < 2) throw ValidationError("schedule needs T >= 2, got " + std::to_string(max_step));
    constexpr double kMaxBeta = 0.999;
    const auto T = static_cast<std::size_t>(max_step);
    std::vector<double> betas(T + 1, 0.0);
    if (kind == ScheduleKind::kLinear) {
        const double scale = 1000.0 / static_cast<double>(T);
        const double lo = 1e-4 * scale, hi = 0.02 * scale;
        for (std::size_t t = 1; t <= T; ++t) {
            const double b = lo + (hi - lo) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
            betas[t] = std::min(b, kMaxBeta);
        }
    } else {
        constexpr double s = 0.008;
        auto f = [&](std::size_t t) {
            const double c = std::cos((static_cast<double>(t) / static_cast<double>(T) + s) / (1.0 + s) * std::numbers::pi / 2);
            return c * c;
        };
        for (std::size_t t = 1; t <= T; ++t) betas[t] = std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
    }
    return NoiseSchedule(kind, std::move(betas));
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > max_step()) throw ValidationError("timestep " + std::to_string(t) + " outside [0, T]");
    return alpha_bar_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > max_step()) throw ValidationError("timestep " + std::to_string(t) + " outside [1, T]");
    return beta_[static_cast<std::size_t>(t)];
}

Tensor add_noise(const Tensor& z0, int t, const Tensor& noise, const NoiseSchedule& schedule) {
    require_same_shape(z0, noise, "add_noise");
    const double ab = schedule.alpha_bar(t);
    if (t == 0) return z0;
    return axpby(std::sqrt(ab), z0, std::sqrt(1.0 - ab), noise);
}

Tensor predict_x0(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule) {
    require_same_shape(z_t, eps, "predict_x0");
    const double ab = schedule.alpha_bar(t);
    if (!(ab > 0.0)) throw NumericalError("alpha_bar(" + std::to_string(t) + ") <= 0");
    const double inv = 1.0 / std::sqrt(ab), ns = std::sqrt(1.0 - ab);
    Tensor out(z_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - ns * eps[i]) * inv;
    return out;
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.max_step()) throw ValidationError("ddim_step: t must be in [1, T]");
    const Tensor x0 = predict_x0(z_t, eps, t, schedule);
    const double ab_prev = schedule.alpha_bar(t - 1);
    if (t == 1) return x0;
    return axpby(std::sqrt(ab_prev), x0, std::sqrt(1.0 - ab_prev), eps);
}

Tensor ddim_invert(const Tensor& z0, const Denoiser& denoiser, Condition y, int steps, const NoiseSchedule& schedule) {
    if (steps < 0 || steps > schedule.max_step()) {
        throw ValidationError("ddim_invert: steps must be in [0, T], got " + std::to_string(steps));
    }
    Tensor z = z0;
    for (int t = 1; t <= steps; ++t) {
        const Tensor eps = denoiser.predict_noise(z, step_at(schedule, t), y);
        const double ab_prev = schedule.alpha_bar(t - 1), ab = schedule.alpha_bar(t);
        // x0 estimate at level t-1, re-noised to level t with the same ε.
        const double a = std::sqrt(ab / ab_prev);
        const double b = std::sqrt(1.0 - ab) - std::sqrt(ab / ab_prev) * std::sqrt(1.0 - ab_prev);
        z = axpby(a, z, b, eps);
        if (!z.all_finite()) throw NumericalError("ddim_invert: non-finite latent at step " + std::to_string(t));
    }
    return z;
}

Tensor ddim_sample(const Tensor& z_start, int start, const NoiseFn& eps, const NoiseSchedule& schedule) {
    if (start < 0 || start > schedule.max_step()) throw ValidationError("ddim_sample: start outside [0, T]");
    Tensor z = z_start;
    for (int t = start; t >= 1; --t) {
        z = ddim_step(z, eps(z, t), t, schedule);
        if (!z.all_finite()) throw NumericalError("ddim_sample: non-finite latent at step " + std::to_string(t));
    }
    return z;
}

Tensor cfg_combine(const Tensor& eps_uncond, const Tensor& eps_cond, double scale) {
    if (scale == 1.0) return eps_cond;
    if (scale == 0.0) return eps_uncond;
    require_same_shape(eps_uncond, eps_cond, "cfg_combine");
    Tensor out(eps_cond.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_uncond[i] + scale * (eps_cond[i] - eps_uncond[i]);
    return out;
}

Tensor cfg_noise(const Denoiser& denoiser, const Tensor& z_t, const Step& step, Condition y, double scale) {
    if (!(scale >= 0.0)) throw ValidationError("cfg scale must be >= 0");
    if (scale == 1.0 || !y) return denoiser.predict_noise(z_t, step, y);
    const Tensor uncond = denoiser.predict_noise(z_t, step, kNullCondition);
    if (scale == 0.0) return uncond;
    return cfg_combine(uncond, denoiser.predict_noise(z_t, step, y), scale);
}

Tensor mix_initial_noise(const Tensor& inverted, const Tensor& noise, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("noise mix weight must lie in [0, 1]");
    if (lambda == 1.0) return inverted;
    if (lambda == 0.0) return noise;
    return axpby(std::sqrt(lambda), inverted, std::sqrt(1.0 - lambda), noise);
}

Tensor standard_normal(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Tensor t(shape);
    for (double& v : t.values()) v = nd(rng);
    return t;
}

NoisingDraw draw_noising(std::mt19937_64& rng, const Shape& shape, int max_step) {
    std::uniform_int_distribution<int> ut(1, max_step);
    NoisingDraw d{ut(rng), Tensor(shape)};
    std::normal_distribution<double> nd;
    for (double& v : d.noise.values()) v = nd(rng);
    return d;
}

double training_loss(const Denoiser& denoiser, std::span<const TrainingExample> batch, const NoiseSchedule& schedule,
                     std::uint64_t seed) {
    if (batch.empty()) throw ValidationError("training_loss: empty batch");
    std::mt19937_64 rng(seed);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TrainingExample& ex = batch[i];
        const NoisingDraw d = draw_noising(rng, ex.z0.shape(), schedule.max_step());
        const Tensor z_t = add_noise(ex.z0, d.t, d.noise, schedule);
        const Tensor pred = denoiser.predict_noise(z_t, step_at(schedule, d.t), ex.y);
        require_same_shape(pred, d.noise, "training_loss prediction");
        double sse = 0.0;
        for (std::size_t k = 0; k < pred.size(); ++k) sse += (d.noise[k] - pred[k]) * (d.noise[k] - pred[k]);
        if (!std::isfinite(sse)) {
            throw NumericalError("training_loss: non-finite loss at batch item " + std::to_string(i) + " (t=" +
                                 std::to_string(d.t) + ")");
        }
        total += sse;
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace mcg

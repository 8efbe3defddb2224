#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcg/tensor.hpp"

namespace mcg {

enum class ScheduleKind { kLinear, kCosine };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

/// Discrete variance-preserving schedule over timesteps 0..T with ᾱ_0 = 1.
///
/// The linear schedule scales the usual (1e-4, 0.02) endpoints by 1000/T so
/// that ᾱ_T is close to zero for any T; betas are clamped to 0.999.
class NoiseSchedule {
public:
    static NoiseSchedule build(int max_step, ScheduleKind kind);

    [[nodiscard]] int max_step() const noexcept { return static_cast<int>(alpha_bar_.size()) - 1; }
    [[nodiscard]] ScheduleKind kind() const noexcept { return kind_; }
    [[nodiscard]] double alpha_bar(int t) const;
    [[nodiscard]] double beta(int t) const;
    [[nodiscard]] const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

private:
    NoiseSchedule(ScheduleKind kind, std::vector<double> betas);

    ScheduleKind kind_;
    std::vector<double> beta_;       // beta_[0] = 0
    std::vector<double> alpha_bar_;  // alpha_bar_[0] = 1
};

/// Class label; std::nullopt is the null condition ∅.
using Condition = std::optional<std::size_t>;
inline constexpr Condition kNullCondition = std::nullopt;

struct Step {
    int t = 0;
    double alpha_bar = 1.0;
};

inline Step step_at(const NoiseSchedule& s, int t) { return {t, s.alpha_bar(t)}; }

/// ε_θ(z_t, t, y).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    [[nodiscard]] virtual Tensor predict_noise(const Tensor& z, const Step& step, Condition y) const = 0;
};

/// z_t = sqrt(ᾱ_t) z0 + sqrt(1 - ᾱ_t) ε, for 0 <= t <= T.
Tensor add_noise(const Tensor& z0, int t, const Tensor& noise, const NoiseSchedule& schedule);

/// Deterministic (η = 0) DDIM update from t to t-1.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule);

/// Predicted clean latent from (z_t, ε̂).
Tensor predict_x0(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule);

/// Reverse-ODE traversal 0 -> `steps`; ε is evaluated at (z_{t-1}, t).
/// Throws NumericalError naming the step at which a non-finite value appears.
Tensor ddim_invert(const Tensor& z0, const Denoiser& denoiser, Condition y, int steps, const NoiseSchedule& schedule);

using NoiseFn = std::function<Tensor(const Tensor& z_t, int t)>;

/// Plain deterministic sampling loop t = start..1.
Tensor ddim_sample(const Tensor& z_start, int start, const NoiseFn& eps, const NoiseSchedule& schedule);

/// ε_∅ + scale (ε_y − ε_∅). scale 0 and 1 return the respective branch exactly.
Tensor cfg_noise(const Denoiser& denoiser, const Tensor& z_t, const Step& step, Condition y, double scale);
Tensor cfg_combine(const Tensor& eps_uncond, const Tensor& eps_cond, double scale);

/// sqrt(λ) inv + sqrt(1 - λ) ε with λ in [0, 1].
Tensor mix_initial_noise(const Tensor& inverted, const Tensor& noise, double lambda);

Tensor standard_normal(const Shape& shape, std::uint64_t seed);

struct TrainingExample {
    Tensor z0;
    Condition y;
};

/// One Monte-Carlo draw of the training objective for an example.
struct NoisingDraw {
    int t = 1;
    Tensor noise;
};
NoisingDraw draw_noising(std::mt19937_64& rng, const Shape& shape, int max_step);

/// Mean over the batch of ||ε − ε_θ(z_t, t, y)||² (sum over elements, so a
/// zero predictor scores ≈ element count). t ~ U{1..T}, ε ~ N(0, I), both
/// drawn from `seed`. Throws NumericalError on a non-finite loss.
double training_loss(const Denoiser& denoiser, std::span<const TrainingExample> batch, const NoiseSchedule& schedule,
                     std::uint64_t seed);

}  // namespace mcg

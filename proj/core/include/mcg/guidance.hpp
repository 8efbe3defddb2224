#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcg/autograd.hpp"
#include "mcg/backbone.hpp"
#include "mcg/diffusion.hpp"
#include "mcg/motion_pattern.hpp"
#include "mcg/video.hpp"

namespace mcg {

/// Σ over every pattern and map of ||M' - M||², unnormalized. Throws
/// ValidationError naming the first structural difference.
double consistency_loss(const PatternBundle& current, const PatternBundle& reference);

/// Differentiable loss of one tap against the patterns of `reference` that
/// belong to `layer_id`. Current maps are anchored at the same cells.
ad::Var tap_consistency_loss(const ad::Var& tap, int layer_id, const PatternBundle& reference);

enum class GuidanceMode { kReference, kTrajectory };

std::string to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& s);

struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::kTrajectory;
    double sigma = 1e4;
    double tau = 10.0;
    TemperatureMode temperature_mode = TemperatureMode::kDivide;
    int guided_steps = -1;        // n; -1 means T
    std::vector<int> layers;      // empty: every tap
    std::size_t local = 0;        // 0: F - f
    std::vector<KeyPoint> points; // reference mode; trajectory mode uses box centers
    double cfg_scale = 12.0;
    double lambda = 1.0;          // z_T = sqrt(λ) inv + sqrt(1-λ) ε
    std::uint64_t seed = 0;       // ε for the mix
    int t_prime = 1;
    std::uint64_t pattern_seed = 0;
    bool match_conditions = false;      // current patterns from ∅ instead of y
    bool conditional_inversion = false; // invert under y instead of ∅

    void validate(int max_step) const;
    [[nodiscard]] int resolved_steps(int max_step) const { return guided_steps < 0 ? max_step : guided_steps; }
    [[nodiscard]] PatternParams pattern_params() const { return {tau, local, temperature_mode, layers}; }
};

struct GuidedEstimate {
    Tensor eps_hat;
    Tensor eps_plain;  // CFG estimate without guidance
    Tensor grad;       // ∇_{z_t} L_c
    double loss = 0.0;
};

/// ε̂ = ε_cfg + σ ∇_{z_t} L_c. The conditional branch of CFG and the current
/// patterns share one tapped forward pass; σ = 0 returns the plain estimate.
GuidedEstimate guided_noise_estimate(const Backbone& backbone, const Tensor& z_t, const Step& step, Condition y,
                                     const PatternBundle& reference, const GuidanceConfig& config);

/// L_c and its gradient at z_t, for a given condition.
struct LossAndGrad {
    double loss = 0.0;
    Tensor grad;
    Tensor eps;
};
LossAndGrad consistency_gradient(const Backbone& backbone, const Tensor& z_t, const Step& step, Condition y,
                                 const PatternBundle& reference);

struct TraceRecord {
    int t = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double seconds = 0.0;
};

struct GuidanceTrace {
    std::vector<TraceRecord> records;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct GenerationRequest {
    std::optional<PixelVideo> reference;      // reference mode
    std::optional<TrajectorySpec> trajectory; // trajectory mode
    VideoDims dims;                           // trajectory mode output size
    Condition y = kNullCondition;
};

struct GenerationResult {
    PixelVideo video;
    Tensor z0;
    Tensor z_T;
    PatternBundle reference;
    GuidanceTrace trace;
};

/// Box video for trajectory mode and per-frame box-center key path.
PixelVideo trajectory_reference(const TrajectorySpec& trajectory, const VideoDims& dims);
std::vector<KeyPoint> box_center_path(const TrajectorySpec& trajectory, const VideoDims& dims);

/// DDIM inversion of the reference to step T mixed with seeded noise.
Tensor initial_latent(const Backbone& backbone, const NoiseSchedule& schedule, const PixelVideo& reference, Condition y,
                      const GuidanceConfig& config);

/// Guided sampling from a given z_T with a fixed reference bundle.
/// Guidance runs while T - t < n. On failure a NumericalError is thrown
/// after the records so far were passed to `sink`.
Tensor guided_sample(const Backbone& backbone, const NoiseSchedule& schedule, const Tensor& z_T, Condition y,
                     const PatternBundle& reference, const GuidanceConfig& config, GuidanceTrace& trace,
                     const TraceSink& sink = {});

GenerationResult generate(const Backbone& backbone, const NoiseSchedule& schedule, const GenerationRequest& request,
                          const GuidanceConfig& config, const TraceSink& sink = {});

}  // namespace mcg

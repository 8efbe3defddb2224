#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "mcg/autograd.hpp"
#include "mcg/diffusion.hpp"
#include "mcg/ops.hpp"
#include "mcg/video.hpp"

namespace mcg {

/// Architecture of the toy 3D U-Net denoiser.
///
/// Block names used by `temporal_attention`: "down<l>", "mid", "up<l>" where
/// l is the resolution level (0 = full latent resolution). Spatial attention
/// runs in every down/mid block at level >= `spatial_attention_from_level`.
struct BackboneConfig {
    std::size_t latent_channels = 4;
    std::vector<std::size_t> level_channels{16, 32};
    std::size_t embed_dim = 32;
    std::size_t groups = 4;
    std::size_t num_classes = 4;
    std::vector<std::string> temporal_attention{"down0", "down1", "mid", "up0"};
    std::size_t spatial_attention_from_level = 1;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static BackboneConfig from_json(const nlohmann::json& j);
    [[nodiscard]] std::size_t levels() const noexcept { return level_channels.size(); }
};

/// Output of one temporal attention module, [C_l, F, H_l, W_l].
struct FeatureVolume {
    Tensor data;
    int layer_id = 0;           ///< 1-based, in forward order
    std::size_t scale = 1;      ///< latent grid / feature grid
};

using TapSet = std::vector<FeatureVolume>;

struct NamedParam {
    std::string name;
    Tensor value;
};

/// Pre-norm attention block with residual: x + out(attn(q(n), k(n), v(n))),
/// n = channel layer norm of x (plus a frame encoding on the temporal axis).
struct AttentionWeights {
    ad::Var gamma, beta;
    ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
};
ad::Var attention_block(const ad::Var& x, const AttentionWeights& w, ad::AttentionAxis axis);

class Backbone final : public Denoiser {
public:
    explicit Backbone(BackboneConfig config);

    [[nodiscard]] const BackboneConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::vector<NamedParam>& params() noexcept { return params_; }
    [[nodiscard]] const std::vector<NamedParam>& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;

    /// Number of temporal attention modules (L).
    [[nodiscard]] std::size_t num_taps() const noexcept { return tap_scales_.size(); }
    /// Downsampling factor of each tap's grid relative to the latent, in layer order.
    [[nodiscard]] const std::vector<std::size_t>& tap_scales() const noexcept { return tap_scales_; }

    struct Trace {
        ad::Var eps;
        std::vector<ad::Var> taps;
    };

    /// Differentiable forward pass. `weights` must hold one Var per params()
    /// entry (see bind()). Taps stay connected to `z` in the graph.
    [[nodiscard]] Trace forward(const ad::Var& z, const Step& step, Condition y, const std::vector<ad::Var>& weights) const;

    /// Wraps the parameters as graph leaves (trainable) or constants.
    [[nodiscard]] std::vector<ad::Var> bind(bool trainable) const;

    [[nodiscard]] Tensor predict_noise(const Tensor& z, const Step& step, Condition y) const override;

    struct TappedOutput {
        Tensor eps;
        TapSet taps;
    };
    /// Same numbers as predict_noise() plus every temporal attention output.
    [[nodiscard]] TappedOutput denoise_with_taps(const Tensor& z, const Step& step, Condition y) const;

    /// Throws ValidationError when `z` or `y` do not fit this network.
    void check_input(const Tensor& z, Condition y) const;

private:
    struct Layout;

    BackboneConfig config_;
    std::vector<NamedParam> params_;
    std::vector<std::size_t> tap_scales_;
    std::shared_ptr<const Layout> layout_;
};

/// Fixed linear pixel <-> latent map: z = A (2x - 1) with a 4x3 matrix A of
/// orthonormal columns; decode applies Aᵀ and clamps back to [0, 1].
class PixelCodec {
public:
    [[nodiscard]] Tensor encode(const PixelVideo& video) const;
    [[nodiscard]] PixelVideo decode(const Tensor& latent) const;
    [[nodiscard]] static std::size_t latent_channels() noexcept { return 4; }
};

struct TrainConfig {
    int steps = 1500;
    std::size_t batch = 4;
    double learning_rate = 2e-3;
    double cond_dropout = 0.15;
    std::uint64_t seed = 0;
    std::size_t heldout = 8;
    int log_every = 50;
    double ema_decay = 0.999;       ///< 0 disables; the saved weights are the average
    double final_lr_fraction = 0.1; ///< cosine decay after warmup down to lr * fraction
};

struct TrainResult {
    std::vector<double> loss_history;   ///< per step, mean squared error per element
    double heldout_initial = 0.0;       ///< training_loss() on the held-out batch before training
    double heldout_final = 0.0;
};

using TrainLogger = std::function<void(int step, double loss)>;

/// Adam on the denoising objective. Held-out items are the last `heldout`
/// examples and are never trained on. Throws NumericalError on a non-finite
/// loss or when the loss exceeds 10x the initial loss.
TrainResult train_toy_backbone(Backbone& backbone, const std::vector<TrainingExample>& corpus,
                               const NoiseSchedule& schedule, const TrainConfig& config,
                               const TrainLogger& logger = {});

/// Checkpoint directory: backbone.json (config + parameter manifest) and weights.mcgt.
void save_checkpoint(const Backbone& backbone, const std::filesystem::path& dir);
Backbone load_checkpoint(const std::filesystem::path& dir);

/// Git-style content hash (SHA-1 of "blob <size>\0" + bytes) of a file.
std::string content_hash(const std::filesystem::path& file);
/// Hash of all parameter values (same scheme, over the raw doubles).
std::string parameter_hash(const Backbone& backbone);

}  // namespace mcg

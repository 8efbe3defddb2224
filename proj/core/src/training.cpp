#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "mcg/backbone.hpp"
#include "mcg/container.hpp"
#include "mcg/error.hpp"
#include "mcg/ops.hpp"
#include "mcg/records.hpp"

namespace mcg {
namespace {

struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<Tensor> m, v;
    int t = 0;

    void step(std::vector<NamedParam>& params, const std::vector<Tensor>& grads, double lr_now) {
        if (m.empty()) {
            for (const auto& p : params) {
                m.emplace_back(p.value.shape());
                v.emplace_back(p.value.shape());
            }
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& w = params[i].value;
            for (std::size_t k = 0; k < w.size(); ++k) {
                const double g = grads[i][k];
                m[i][k] = beta1 * m[i][k] + (1 - beta1) * g;
                v[i][k] = beta2 * v[i][k] + (1 - beta2) * g * g;
                w[k] -= lr_now * (m[i][k] / c1) / (std::sqrt(v[i][k] / c2) + eps);
            }
        }
    }
};

std::string sha1_hex(const unsigned char* data, std::size_t n) {
    const std::string header = "blob " + std::to_string(n) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 || EVP_DigestUpdate(ctx, data, n) != 1 ||
        EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-1 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[md[i] >> 4];
        out += kHex[md[i] & 15];
    }
    return out;
}

}  // namespace

TrainResult train_toy_backbone(Backbone& backbone, const std::vector<TrainingExample>& corpus,
                               const NoiseSchedule& schedule, const TrainConfig& config, const TrainLogger& logger) {
    if (config.steps < 0 || config.batch == 0 || !(config.learning_rate > 0)) {
        throw ValidationError("train: steps >= 0, batch > 0 and learning_rate > 0 required");
    }
    if (config.cond_dropout < 0 || config.cond_dropout > 1) throw ValidationError("train: cond_dropout must lie in [0, 1]");
    if (!(config.ema_decay >= 0 && config.ema_decay < 1)) throw ValidationError("train: ema_decay must lie in [0, 1)");
    if (!(config.final_lr_fraction > 0 && config.final_lr_fraction <= 1)) {
        throw ValidationError("train: final_lr_fraction must lie in (0, 1]");
    }
    if (corpus.size() <= config.heldout) throw ValidationError("train: corpus must be larger than the held-out split");
    for (const auto& ex : corpus) backbone.check_input(ex.z0, ex.y);

    const std::size_t n_train = corpus.size() - config.heldout;
    const std::span<const TrainingExample> heldout(corpus.data() + n_train, config.heldout);
    const std::uint64_t heldout_seed = config.seed ^ 0x5eedULL;

    TrainResult result;
    if (!heldout.empty()) result.heldout_initial = training_loss(backbone, heldout, schedule, heldout_seed);

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_train - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Adam adam;
    adam.lr = config.learning_rate;
    const int warmup = std::min(50, std::max(1, config.steps / 20));
    double first_loss = -1.0;
    std::vector<Tensor> ema;
    if (config.ema_decay > 0)
        for (const auto& p : backbone.params()) ema.push_back(p.value);

    for (int step = 1; step <= config.steps; ++step) {
        const std::vector<ad::Var> weights = backbone.bind(true);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < config.batch; ++b) {
            const TrainingExample& ex = corpus[pick(rng)];
            const NoisingDraw d = draw_noising(rng, ex.z0.shape(), schedule.max_step());
            const Condition y = unit(rng) < config.cond_dropout ? kNullCondition : ex.y;
            const Tensor z_t = add_noise(ex.z0, d.t, d.noise, schedule);
            const auto trace = backbone.forward(ad::constant(z_t), step_at(schedule, d.t), y, weights);
            const ad::Var loss = ad::sum_squared_error(trace.eps, ad::constant(d.noise));
            const double norm = static_cast<double>(d.noise.size() * config.batch);
            loss_sum += loss.value()[0] / norm;
            ad::backward(loss, 1.0 / norm);
        }
        const double loss = loss_sum;
        if (!std::isfinite(loss)) throw NumericalError("train: non-finite loss at step " + std::to_string(step));
        if (first_loss < 0) first_loss = loss;
        if (loss > 10.0 * first_loss) {
            throw NumericalError("train: loss diverged at step " + std::to_string(step) + " (" + std::to_string(loss) + ")");
        }
        result.loss_history.push_back(loss);

        std::vector<Tensor> grads;
        grads.reserve(weights.size());
        double sq = 0.0;
        for (const auto& w : weights) {
            grads.push_back(w.grad());
            sq += grads.back().squared_norm();
        }
        const double gnorm = std::sqrt(sq);
        if (gnorm > 1.0) {
            for (auto& g : grads) g *= 1.0 / gnorm;
        }
        double lr = config.learning_rate * std::min(1.0, static_cast<double>(step) / warmup);
        if (step > warmup) {
            const double progress = static_cast<double>(step - warmup) / std::max(1, config.steps - warmup);
            const double f = config.final_lr_fraction;
            lr = config.learning_rate * (f + (1 - f) * 0.5 * (1 + std::cos(std::numbers::pi * progress)));
        }
        adam.step(backbone.params(), grads, lr);
        if (!ema.empty()) {
            // Short runs would otherwise average in the random init.
            const double d = std::min(config.ema_decay, (1.0 + step) / (10.0 + step));
            auto& params = backbone.params();
            for (std::size_t i = 0; i < ema.size(); ++i) {
                double* e = ema[i].data();
                const double* w = params[i].value.data();
                for (std::size_t k = 0; k < ema[i].size(); ++k) e[k] = d * e[k] + (1 - d) * w[k];
            }
        }

        if (logger && config.log_every > 0 && (step % config.log_every == 0 || step == config.steps)) logger(step, loss);
    }
    if (!ema.empty() && config.steps > 0) {
        auto& params = backbone.params();
        for (std::size_t i = 0; i < ema.size(); ++i) params[i].value = std::move(ema[i]);
    }
    if (!heldout.empty()) result.heldout_final = training_loss(backbone, heldout, schedule, heldout_seed);
    return result;
}

void save_checkpoint(const Backbone& backbone, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    std::vector<double> flat;
    for (const auto& p : backbone.params()) {
        manifest.push_back({{"name", p.name}, {"shape", p.value.shape()}});
        flat.insert(flat.end(), p.value.values().begin(), p.value.values().end());
    }
    const std::size_t n = flat.size();
    write_container(Tensor({n}, std::move(flat)), dir / "weights.mcgt", {{"kind", "backbone-weights"}});
    save_json({{"config", backbone.config().to_json()}, {"parameters", manifest}}, dir / "backbone.json");
}

Backbone load_checkpoint(const std::filesystem::path& dir) {
    const nlohmann::json j = load_json(dir / "backbone.json");
    reject_unknown_keys(j, {"config", "parameters"}, "checkpoint manifest");
    Backbone bb(BackboneConfig::from_json(j.at("config")));
    const Tensor flat = read_container(dir / "weights.mcgt");
    const auto& manifest = j.at("parameters");
    auto& params = bb.params();
    if (!manifest.is_array() || manifest.size() != params.size() || flat.size() != bb.parameter_count()) {
        throw FormatError("checkpoint " + dir.string() + " does not match its architecture");
    }
    std::size_t off = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (manifest[i].at("name").get<std::string>() != params[i].name ||
            manifest[i].at("shape").get<Shape>() != params[i].value.shape()) {
            throw FormatError("checkpoint parameter " + std::to_string(i) + " does not match '" + params[i].name + "'");
        }
        std::copy_n(flat.data() + off, params[i].value.size(), params[i].value.data());
        off += params[i].value.size();
    }
    return bb;
}

std::string content_hash(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw Error("cannot open " + file.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return sha1_hex(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

std::string parameter_hash(const Backbone& backbone) {
    std::vector<double> flat;
    for (const auto& p : backbone.params()) flat.insert(flat.end(), p.value.values().begin(), p.value.values().end());
    return sha1_hex(reinterpret_cast<const unsigned char*>(flat.data()), flat.size() * sizeof(double));
}

}  // namespace mcg

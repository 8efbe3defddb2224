#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"
#include "mcg/error.hpp"

using namespace mcg;
using namespace mcg::cli;

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 success, 1 runtime or I/O error, 2 invalid flags/config/inputs, 3 numerical failure.\n"
    "Relative output paths are placed under $MCG_OUTPUT_ROOT (default: working directory).";

/// Command-line values that map onto config keys; applied after the file.
struct Flags {
    std::string config;
    std::vector<std::string> sets;
    std::vector<Override> overrides;

    template <class T>
    void bind(CLI::App* app, const std::string& flag, const std::string& key, std::optional<T>& slot,
              const std::string& help) {
        app->add_option(flag, slot, help + " [" + key + "]");
        keys.emplace_back(key, [&slot, this, key] {
            if (slot) overrides.emplace_back(key, nlohmann::json(*slot));
        });
    }

    void collect() {
        for (const auto& s : sets) overrides.push_back(parse_set(s));
        for (auto& [key, push] : keys) push();
    }

    std::vector<std::pair<std::string, std::function<void()>>> keys;
};

void common(CLI::App* app, Flags& f, std::optional<std::string>& out) {
    app->add_option("-c,--config", f.config, "JSON run config")->check(CLI::ExistingFile);
    app->add_option("--set", f.sets, "Override a config key, e.g. --set guidance.sigma=100");
    f.bind(app, "-o,--out", "output", out, "Run directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motion-consistency guidance toolkit for a toy video diffusion model"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    // Every subcommand gets its own flag set; only the chosen one is read.
    struct Slots {
        Flags flags;
        std::optional<std::string> out, corpus, checkpoint, trajectory, reference, video, mode, temp_mode;
        std::optional<int> steps, train_steps, guided_steps, t_prime;
        std::optional<double> sigma, tau, lambda, cfg;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> label, frames;
        std::vector<std::string> points;
        bool no_guidance = false, unconditional = false;
    };
    std::map<std::string, Slots> slots;
    auto make = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        Slots& s = slots[name];
        common(sub, s.flags, s.out);
        s.flags.bind(sub, "--schedule-steps", "schedule.steps", s.steps, "Diffusion steps T (0: per-mode default)");
        return std::pair<CLI::App*, Slots*>{sub, &s};
    };
    auto model_flags = [](CLI::App* sub, Slots& s) {
        s.flags.bind(sub, "--checkpoint", "data.checkpoint", s.checkpoint, "Checkpoint directory");
        s.flags.bind(sub, "--label", "data.label", s.label, "Class label");
        sub->add_flag("--unconditional", s.unconditional, "Use the null condition");
    };
    auto guidance_flags = [](CLI::App* sub, Slots& s) {
        s.flags.bind(sub, "--mode", "guidance.mode", s.mode, "trajectory | reference");
        s.flags.bind(sub, "--sigma", "guidance.sigma", s.sigma, "Guidance weight");
        s.flags.bind(sub, "--tau", "guidance.tau", s.tau, "Softmax temperature");
        s.flags.bind(sub, "--temperature-mode", "guidance.temperature_mode", s.temp_mode, "divide | multiply");
        s.flags.bind(sub, "-n,--guided-steps", "guidance.guided_steps", s.guided_steps, "Guided steps n (-1: all)");
        s.flags.bind(sub, "--lambda", "guidance.lambda", s.lambda, "Inversion/noise mix for z_T");
        s.flags.bind(sub, "--cfg-scale", "guidance.cfg_scale", s.cfg, "Classifier-free guidance scale");
        s.flags.bind(sub, "--seed", "guidance.seed", s.seed, "Seed of the z_T noise");
        s.flags.bind(sub, "--frames", "data.frames", s.frames, "Output frames");
        sub->add_option("--point", s.points, "Key point frame,y,x (repeatable)");
    };

    std::string synth_what;
    {
        auto [sub, s] = make("synth", "Write synthetic data: corpus, trajectories or box");
        sub->add_option("what", synth_what, "corpus | trajectories | box")->required();
        s->flags.bind(sub, "--trajectory", "data.trajectory", s->trajectory, "Trajectory file or benchmark name");
        s->flags.bind(sub, "--seed", "synth.seed", s->seed, "Corpus seed");
        s->flags.bind(sub, "--frames", "data.frames", s->frames, "Frames (corpus: synth.frames, trajectories: 16, box: 32)");
    }
    {
        auto [sub, s] = make("train", "Train the toy backbone on a corpus");
        s->flags.bind(sub, "--corpus", "data.corpus", s->corpus, "Corpus container from `synth corpus`");
        s->flags.bind(sub, "--steps", "train.steps", s->train_steps, "Optimizer steps");
        s->flags.bind(sub, "--seed", "train.seed", s->seed, "Training seed");
    }
    {
        auto [sub, s] = make("generate", "Guided generation from a trajectory or a reference video");
        model_flags(sub, *s);
        guidance_flags(sub, *s);
        s->flags.bind(sub, "--trajectory", "data.trajectory", s->trajectory, "Trajectory file or benchmark name");
        s->flags.bind(sub, "--reference", "data.reference", s->reference, "Reference video container");
        sub->add_flag("--no-guidance", s->no_guidance, "Plain sampling from the same z_T (n = 0)");
    }
    {
        auto [sub, s] = make("invert", "DDIM-invert a video and report the round-trip error");
        model_flags(sub, *s);
        s->flags.bind(sub, "--video", "data.video", s->video, "Input video container");
    }
    {
        auto [sub, s] = make("extract-pattern", "Export correlation patterns of key points in a video");
        model_flags(sub, *s);
        s->flags.bind(sub, "--video", "data.video", s->video, "Input video container");
        s->flags.bind(sub, "--tau", "guidance.tau", s->tau, "Softmax temperature");
        s->flags.bind(sub, "--temperature-mode", "guidance.temperature_mode", s->temp_mode, "divide | multiply");
        s->flags.bind(sub, "--t-prime", "guidance.t_prime", s->t_prime, "Noise step of the tapped pass");
        sub->add_option("--point", s->points, "Key point frame,y,x (repeatable)");
    }
    std::string results_dir, gt_dir;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    {
        auto [sub, s] = make("evaluate", "Score result videos against ground-truth trajectories");
        sub->add_option("--results", results_dir, "Directory of results (<name>/video.mcgt or <name>.mcgt)")->required();
        sub->add_option("--gt", gt_dir, "Directory of <name>.json trajectory records")->required();
        s->flags.bind(sub, "--checkpoint", "data.checkpoint", s->checkpoint, "Backbone for the feature similarity");
        sub->add_option("-j,--jobs", jobs, "Parallel videos");
    }
    std::size_t bench_seeds = 2;
    {
        auto [sub, s] = make("benchmark", "Guided vs plain generation on the 8 benchmark trajectories");
        model_flags(sub, *s);
        guidance_flags(sub, *s);
        sub->add_option("--seeds", bench_seeds, "Noise seeds per trajectory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        Slots& s = slots.at(chosen->get_name());
        s.flags.collect();
        if (!s.points.empty()) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : s.points) {
                std::vector<double> v;
                std::stringstream ss(p);
                for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
                if (v.size() != 3) throw ValidationError("--point expects frame,y,x, got '" + p + "'");
                pts.push_back(v);
            }
            s.flags.overrides.emplace_back("guidance.points", pts);
        }
        if (s.no_guidance) s.flags.overrides.emplace_back("guidance.guided_steps", 0);
        if (s.unconditional) s.flags.overrides.emplace_back("data.label", nullptr);
        RunConfig config = load_run_config(s.flags.config, s.flags.overrides);

        const std::string& name = chosen->get_name();
        if (name == "synth") cmd_synth(synth_what, config);
        else if (name == "train") cmd_train(config);
        else if (name == "generate") cmd_generate(config);
        else if (name == "invert") cmd_invert(config);
        else if (name == "extract-pattern") cmd_extract_pattern(config);
        else if (name == "evaluate") cmd_evaluate(results_dir, gt_dir, config, jobs);
        else if (name == "benchmark") cmd_benchmark(config, bench_seeds);
        return kExitOk;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        mark_failed(e.what());
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        mark_failed(e.what());
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: malformed number: " << e.what() << "\n";
        mark_failed(e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        mark_failed(e.what());
        return kExitRuntime;
    }
}

#include "run_config.hpp"

#include <cmath>
#include <cstdlib>

#include "mcg/error.hpp"
#include "mcg/records.hpp"

namespace mcg::cli {

using nlohmann::json;

namespace {

json points_json(const std::vector<KeyPoint>& points) {
    json out = json::array();
    for (const auto& p : points) out.push_back({p.frame, p.y, p.x});
    return out;
}

json condition_json(Condition c) { return c ? json(*c) : json(nullptr); }

void overlay(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) throw ValidationError(where.empty() ? "config must be a JSON object" : where + " must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ValidationError("unknown config key '" + path + "'");
        if (base[key].is_object()) {
            overlay(base[key], value, path);
        } else {
            base[key] = value;
        }
    }
}

template <class T>
T get(const json& section, const char* key, const std::string& where) {
    try {
        return section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + where + "." + key + "' has the wrong type");
    }
}

}  // namespace

json RunConfig::to_json() const {
    const auto& g = guidance;
    return {
        {"output", output},
        {"backbone", backbone.to_json()},
        {"schedule", {{"kind", mcg::to_string(schedule_kind)}, {"steps", schedule_steps}}},
        {"data",
         {{"corpus", corpus},
          {"checkpoint", checkpoint},
          {"trajectory", trajectory},
          {"reference", reference},
          {"video", video},
          {"label", condition_json(label)},
          {"frames", dims.frames},
          {"height", dims.height},
          {"width", dims.width}}},
        {"synth",
         {{"count", synth.count},
          {"frames", synth.dims.frames},
          {"height", synth.dims.height},
          {"width", synth.dims.width},
          {"classes", synth.classes},
          {"min_size", synth.min_size},
          {"max_size", synth.max_size},
          {"seed", synth.seed}}},
        {"train",
         {{"steps", train.steps},
          {"batch", train.batch},
          {"learning_rate", train.learning_rate},
          {"cond_dropout", train.cond_dropout},
          {"seed", train.seed},
          {"heldout", train.heldout},
          {"log_every", train.log_every},
          {"ema_decay", train.ema_decay},
          {"final_lr_fraction", train.final_lr_fraction}}},
        {"guidance",
         {{"mode", mode ? mcg::to_string(*mode) : std::string("auto")},
          {"sigma", g.sigma},
          {"tau", g.tau},
          {"temperature_mode", mcg::to_string(g.temperature_mode)},
          {"guided_steps", g.guided_steps},
          {"layers", g.layers},
          {"local", g.local},
          {"points", points_json(g.points)},
          {"cfg_scale", g.cfg_scale},
          {"lambda", g.lambda},
          {"seed", g.seed},
          {"t_prime", g.t_prime},
          {"pattern_seed", g.pattern_seed},
          {"match_conditions", g.match_conditions},
          {"conditional_inversion", g.conditional_inversion}}},
    };
}

std::vector<KeyPoint> parse_points(const json& j) {
    if (!j.is_array()) throw ValidationError("points must be a list of [frame, y, x]");
    std::vector<KeyPoint> out;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 3) throw ValidationError("each point must be [frame, y, x]");
        bool ok = p[0].is_number() && p[1].is_number() && p[2].is_number();
        const double f = ok ? p[0].get<double>() : -1.0, y = ok ? p[1].get<double>() : -1.0,
                     x = ok ? p[2].get<double>() : -1.0;
        ok = ok && f >= 0 && f == std::floor(f) && y >= 0 && x >= 0;
        if (!ok) throw ValidationError("points need a non-negative integer frame and non-negative y, x");
        out.push_back({static_cast<std::size_t>(f), y, x});
    }
    return out;
}

RunConfig RunConfig::from_json(const json& j) {
    json merged = RunConfig{}.to_json();
    overlay(merged, j, "");
    RunConfig c;
    c.output = get<std::string>(merged, "output", "");
    c.backbone = BackboneConfig::from_json(merged["backbone"]);

    const json& s = merged["schedule"];
    c.schedule_kind = schedule_kind_from_string(get<std::string>(s, "kind", "schedule"));
    c.schedule_steps = get<int>(s, "steps", "schedule");

    const json& d = merged["data"];
    c.corpus = get<std::string>(d, "corpus", "data");
    c.checkpoint = get<std::string>(d, "checkpoint", "data");
    c.trajectory = get<std::string>(d, "trajectory", "data");
    c.reference = get<std::string>(d, "reference", "data");
    c.video = get<std::string>(d, "video", "data");
    c.label = d["label"].is_null() ? kNullCondition : Condition(get<std::size_t>(d, "label", "data"));
    c.dims = {get<std::size_t>(d, "frames", "data"), get<std::size_t>(d, "height", "data"),
              get<std::size_t>(d, "width", "data")};

    const json& y = merged["synth"];
    c.synth.count = get<std::size_t>(y, "count", "synth");
    c.synth.dims = {get<std::size_t>(y, "frames", "synth"), get<std::size_t>(y, "height", "synth"),
                    get<std::size_t>(y, "width", "synth")};
    c.synth.classes = get<std::size_t>(y, "classes", "synth");
    c.synth.min_size = get<int>(y, "min_size", "synth");
    c.synth.max_size = get<int>(y, "max_size", "synth");
    c.synth.seed = get<std::uint64_t>(y, "seed", "synth");

    const json& t = merged["train"];
    c.train.steps = get<int>(t, "steps", "train");
    c.train.batch = get<std::size_t>(t, "batch", "train");
    c.train.learning_rate = get<double>(t, "learning_rate", "train");
    c.train.cond_dropout = get<double>(t, "cond_dropout", "train");
    c.train.seed = get<std::uint64_t>(t, "seed", "train");
    c.train.heldout = get<std::size_t>(t, "heldout", "train");
    c.train.log_every = get<int>(t, "log_every", "train");
    c.train.ema_decay = get<double>(t, "ema_decay", "train");
    c.train.final_lr_fraction = get<double>(t, "final_lr_fraction", "train");

    const json& g = merged["guidance"];
    auto& o = c.guidance;
    if (const auto m = get<std::string>(g, "mode", "guidance"); m != "auto") c.mode = guidance_mode_from_string(m);
    o.sigma = get<double>(g, "sigma", "guidance");
    o.tau = get<double>(g, "tau", "guidance");
    o.temperature_mode = temperature_mode_from_string(get<std::string>(g, "temperature_mode", "guidance"));
    o.guided_steps = get<int>(g, "guided_steps", "guidance");
    o.layers = get<std::vector<int>>(g, "layers", "guidance");
    o.local = get<std::size_t>(g, "local", "guidance");
    o.points = parse_points(g["points"]);
    o.cfg_scale = get<double>(g, "cfg_scale", "guidance");
    o.lambda = get<double>(g, "lambda", "guidance");
    o.seed = get<std::uint64_t>(g, "seed", "guidance");
    o.t_prime = get<int>(g, "t_prime", "guidance");
    o.pattern_seed = get<std::uint64_t>(g, "pattern_seed", "guidance");
    o.match_conditions = get<bool>(g, "match_conditions", "guidance");
    o.conditional_inversion = get<bool>(g, "conditional_inversion", "guidance");

    // Everything that does not depend on the command is checked here.
    c.backbone.validate();
    if (c.schedule_steps < 0 || c.schedule_steps > 1000) throw ValidationError("schedule.steps must lie in 0..1000");
    if (c.label && *c.label >= c.backbone.num_classes) {
        throw ValidationError("data.label must be below backbone.num_classes or null");
    }
    if (c.dims.frames != 0) validate_dims(c.dims);
    if (c.dims.height == 0 || c.dims.width == 0) throw ValidationError("data.height and data.width must be positive");
    validate_dims(c.synth.dims);
    if (c.synth.classes < 2 || c.synth.classes > 4) throw ValidationError("synth.classes must lie in 2..4");
    if (c.synth.classes > c.backbone.num_classes) throw ValidationError("synth.classes exceeds backbone.num_classes");
    if (c.synth.min_size < 1 || c.synth.max_size < c.synth.min_size) throw ValidationError("synth sizes are inconsistent");
    if (c.train.steps < 0) throw ValidationError("train.steps must be >= 0");
    if (c.train.batch == 0) throw ValidationError("train.batch must be positive");
    if (!(c.train.learning_rate > 0)) throw ValidationError("train.learning_rate must be positive");
    if (!(c.train.cond_dropout >= 0 && c.train.cond_dropout <= 1)) {
        throw ValidationError("train.cond_dropout must lie in [0, 1]");
    }
    if (c.train.log_every <= 0) throw ValidationError("train.log_every must be positive");
    if (!(c.train.ema_decay >= 0 && c.train.ema_decay < 1)) throw ValidationError("train.ema_decay must lie in [0, 1)");
    if (!(c.train.final_lr_fraction > 0 && c.train.final_lr_fraction <= 1)) {
        throw ValidationError("train.final_lr_fraction must lie in (0, 1]");
    }
    for (int l : o.layers) {
        if (l < 1) throw ValidationError("guidance.layers entries are 1-based tap layer ids");
    }
    o.validate(c.steps_for(c.mode.value_or(GuidanceMode::kTrajectory)));
    return c;
}

GuidanceMode RunConfig::resolve_mode() {
    if (!trajectory.empty() && !reference.empty()) {
        throw ValidationError("conflicting inputs: give either a trajectory or a reference video, not both");
    }
    std::optional<GuidanceMode> inferred;
    if (!trajectory.empty()) inferred = GuidanceMode::kTrajectory;
    if (!reference.empty()) inferred = GuidanceMode::kReference;
    if (mode && inferred && *mode != *inferred) {
        throw ValidationError("conflicting mode: " + mcg::to_string(*mode) + " mode was requested but a " +
                              (*inferred == GuidanceMode::kReference ? "reference video" : "trajectory") + " was given");
    }
    if (!mode && !inferred) throw ValidationError("generate needs a trajectory or a reference video");
    mode = mode ? *mode : *inferred;
    guidance.mode = *mode;
    guidance.validate(steps_for(*mode));
    return *mode;
}

int RunConfig::steps_for(GuidanceMode mode) const {
    if (schedule_steps > 0) return schedule_steps;
    return mode == GuidanceMode::kReference ? 30 : 50;
}

std::size_t RunConfig::frames_for(GuidanceMode mode) const {
    if (dims.frames > 0) return dims.frames;
    return mode == GuidanceMode::kReference ? 32 : 16;
}

Override parse_set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    return {key, value};
}

RunConfig load_run_config(const std::filesystem::path& file, const std::vector<Override>& overrides) {
    json j = json::object();
    if (!file.empty()) {
        if (!std::filesystem::exists(file)) throw ValidationError("config file not found: " + file.string());
        j = load_json(file);
        if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
    }
    for (const auto& [key, value] : overrides) {
        json* node = &j;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ValidationError("malformed config key '" + key + "'");
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            json& next = (*node)[part];
            if (next.is_null()) next = json::object();
            if (!next.is_object()) throw ValidationError("config key '" + key + "' descends into a non-object");
            node = &next;
            start = dot + 1;
        }
    }
    return RunConfig::from_json(j);
}

std::filesystem::path output_root() {
    if (const char* env = std::getenv("MCG_OUTPUT_ROOT"); env != nullptr && *env != '\0') return env;
    return std::filesystem::current_path();
}

std::filesystem::path resolve_output(const std::string& output, const std::string& fallback) {
    const std::filesystem::path p = output.empty() ? std::filesystem::path(fallback) : std::filesystem::path(output);
    return p.is_absolute() ? p : output_root() / p;
}

}  // namespace mcg::cli

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mcg/backbone.hpp"
#include "mcg/diffusion.hpp"
#include "mcg/guidance.hpp"
#include "mcg/video.hpp"

namespace mcg::cli {

/// Everything a command needs. Loaded as defaults, then the config file,
/// then command-line overrides; validated before any compute.
struct RunConfig {
    std::string output;  // run directory; relative paths go under $MCG_OUTPUT_ROOT

    BackboneConfig backbone;
    ScheduleKind schedule_kind = ScheduleKind::kLinear;
    int schedule_steps = 0;  // 0: 50 in trajectory mode, 30 in reference mode

    std::string corpus;      // train input, written by `mcg synth corpus`
    std::string checkpoint;  // checkpoint directory
    std::string trajectory;  // trajectory record (.json) or benchmark name
    std::string reference;   // reference video container
    std::string video;       // invert / extract-pattern input
    Condition label = 0;  // null: unconditional
    VideoDims dims{0, 16, 16};  // frames 0: 16 in trajectory mode, 32 in reference mode

    CorpusConfig synth;
    TrainConfig train;
    GuidanceConfig guidance;  // guidance.mode is only meaningful once `mode` is resolved
    std::optional<GuidanceMode> mode;  // null: inferred from the inputs

    [[nodiscard]] nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    [[nodiscard]] int steps_for(GuidanceMode mode) const;
    [[nodiscard]] std::size_t frames_for(GuidanceMode mode) const;

    /// Fixes the guidance mode from the inputs (trajectory or reference),
    /// rejecting conflicts, and validates guidance against the resolved T.
    GuidanceMode resolve_mode();
};

/// `a.b.c` → value. Values parse as JSON, falling back to a plain string.
using Override = std::pair<std::string, nlohmann::json>;
Override parse_set(const std::string& assignment);

/// Defaults, then `file` (if non-empty), then overrides in order. Unknown
/// keys anywhere are a ValidationError.
RunConfig load_run_config(const std::filesystem::path& file, const std::vector<Override>& overrides);

std::vector<KeyPoint> parse_points(const nlohmann::json& j);

/// Output root from MCG_OUTPUT_ROOT, else the working directory.
std::filesystem::path output_root();
std::filesystem::path resolve_output(const std::string& output, const std::string& fallback);

}  // namespace mcg::cli

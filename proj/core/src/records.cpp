#include "mcg/records.hpp"

#include <algorithm>
#include <fstream>

#include "mcg/error.hpp"

namespace mcg {
namespace {

nlohmann::json rgb_json(const Rgb& c) { return nlohmann::json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be [r, g, b]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError("unknown key '" + key + "' in " + where);
        }
    }
}

nlohmann::json to_json(const TrajectorySpec& t) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const NormBox& b : t.boxes) boxes.push_back({b.cx, b.cy, b.w, b.h});
    return {{"boxes", boxes}};
}

nlohmann::json to_json(const MotionSpec& m) {
    return {{"shape", m.shape == ShapeKind::kSquare ? "square" : "circle"},
            {"size", m.size},
            {"color", rgb_json(m.color)},
            {"background", rgb_json(m.background)},
            {"trajectory", to_json(m.trajectory)}};
}

TrajectorySpec trajectory_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"boxes"}, "trajectory record");
    TrajectorySpec t;
    try {
        for (const auto& b : j.at("boxes")) {
            if (!b.is_array() || b.size() != 4) throw ValidationError("trajectory box must be [cx, cy, w, h]");
            t.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("trajectory record: ") + e.what());
    }
    t.validate();
    return t;
}

MotionSpec motion_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"shape", "size", "color", "background", "trajectory"}, "motion record");
    MotionSpec m;
    try {
        const std::string shape = j.at("shape").get<std::string>();
        if (shape == "square") {
            m.shape = ShapeKind::kSquare;
        } else if (shape == "circle") {
            m.shape = ShapeKind::kCircle;
        } else {
            throw ValidationError("motion record: shape must be 'square' or 'circle'");
        }
        m.size = j.at("size").get<int>();
        m.color = rgb_from(j.at("color"), "color");
        if (j.contains("background")) m.background = rgb_from(j.at("background"), "background");
        m.trajectory = trajectory_from_json(j.at("trajectory"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("motion record: ") + e.what());
    }
    return m;
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

}  // namespace mcg

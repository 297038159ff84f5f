#include "slam/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace slam {

using nlohmann::json;

namespace {

double finite_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw WorldError(std::string("world: missing numeric field '") + key + "'");
    }
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw WorldError(std::string("world: non-finite field '") + key + "'");
    }
    return v;
}

}  // namespace

WorldModel parse_world(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw WorldError(std::string("world: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw WorldError("world: top level must be an object");
    }
    if (!doc.contains("format") || doc.at("format") != kWorldFormatVersion) {
        throw WorldError("world: unsupported or missing format version (expected 1)");
    }
    WorldModel w;
    w.name = doc.value("name", std::string{});
    if (!doc.contains("bounds") || !doc.contains("spawn") || !doc.contains("segments")) {
        throw WorldError("world: 'bounds', 'spawn' and 'segments' are required");
    }
    const auto& b = doc.at("bounds");
    w.bounds = {finite_number(b, "xmin"), finite_number(b, "ymin"), finite_number(b, "xmax"),
                finite_number(b, "ymax")};
    const auto& s = doc.at("spawn");
    w.spawn = Pose2{finite_number(s, "x"), finite_number(s, "y"), finite_number(s, "theta")};
    if (!doc.at("segments").is_array()) {
        throw WorldError("world: 'segments' must be an array");
    }
    for (const auto& seg : doc.at("segments")) {
        w.segments.push_back(
            {finite_number(seg, "x1"), finite_number(seg, "y1"), finite_number(seg, "x2"), finite_number(seg, "y2")});
    }
    validate_world(w);
    return w;
}

WorldModel load_world(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw WorldError("world: cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_world(ss.str());
    } catch (const WorldError& e) {
        throw WorldError(path.string() + ": " + e.what());
    }
}

std::string serialize_world(const WorldModel& world) {
    json doc;
    doc["format"] = kWorldFormatVersion;
    doc["name"] = world.name;
    doc["bounds"] = {{"xmin", world.bounds.xmin},
                     {"ymin", world.bounds.ymin},
                     {"xmax", world.bounds.xmax},
                     {"ymax", world.bounds.ymax}};
    doc["spawn"] = {{"x", world.spawn.x}, {"y", world.spawn.y}, {"theta", world.spawn.theta}};
    doc["segments"] = json::array();
    for (const auto& s : world.segments) {
        doc["segments"].push_back({{"x1", s.x1}, {"y1", s.y1}, {"x2", s.x2}, {"y2", s.y2}});
    }
    return doc.dump(2);
}

void validate_world(const WorldModel& world) {
    const auto& b = world.bounds;
    if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin)) {
        throw WorldError("world: empty bounds");
    }
    for (const auto& s : world.segments) {
        if (!b.contains(s.x1, s.y1) || !b.contains(s.x2, s.y2)) {
            throw WorldError("world: segment outside bounds");
        }
    }
    if (!b.contains(world.spawn.x, world.spawn.y)) {
        throw WorldError("world: spawn outside bounds");
    }
    if (clearance(world, world.spawn.x, world.spawn.y) <= kRobotRadius) {
        throw WorldError("world: spawn pose is inside a wall");
    }
}

std::filesystem::path resolve_world_path(const std::string& name_or_path) {
    std::filesystem::path p(name_or_path);
    if (std::filesystem::exists(p)) {
        return p;
    }
    std::filesystem::path bundled = std::filesystem::path(SLAM_DATA_DIR) / "worlds" / (name_or_path + ".json");
    if (std::filesystem::exists(bundled)) {
        return bundled;
    }
    return p;
}

double point_segment_distance(double px, double py, const Segment& s) {
    const double dx = s.x2 - s.x1;
    const double dy = s.y2 - s.y1;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((px - s.x1) * dx + (py - s.y1) * dy) / len2, 0.0, 1.0);
    }
    return std::hypot(px - (s.x1 + t * dx), py - (s.y1 + t * dy));
}

double clearance(const WorldModel& world, double px, double py) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : world.segments) {
        best = std::min(best, point_segment_distance(px, py, s));
    }
    return best;
}

std::optional<double> cast_ray(const WorldModel& world, double ox, double oy, double angle, double max_range) {
    const double rx = std::cos(angle);
    const double ry = std::sin(angle);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : world.segments) {
        const double sx = s.x2 - s.x1;
        const double sy = s.y2 - s.y1;
        const double denom = rx * sy - ry * sx;
        if (std::abs(denom) < 1e-15) {
            continue;  // parallel
        }
        const double qx = s.x1 - ox;
        const double qy = s.y1 - oy;
        const double t = (qx * sy - qy * sx) / denom;
        const double u = (qx * ry - qy * rx) / denom;
        if (t > 0.0 && u >= 0.0 && u <= 1.0 && t < best) {
            best = t;
        }
    }
    if (best <= max_range) {
        return best;
    }
    return std::nullopt;
}

}  // namespace slam

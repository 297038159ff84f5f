#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slam/geometry.hpp"

namespace slam {

struct Segment {
    double x1{0}, y1{0}, x2{0}, y2{0};
};

struct Bounds {
    double xmin{0}, ymin{0}, xmax{0}, ymax{0};

    bool contains(double x, double y) const { return x >= xmin && x <= xmax && y >= ymin && y <= ymax; }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

inline constexpr double kRobotRadius = 0.2;
inline constexpr int kWorldFormatVersion = 1;

/// Static 2D wall map the simulator drives in.
struct WorldModel {
    std::string name;
    Bounds bounds;
    Pose2 spawn;
    std::vector<Segment> segments;
};

class WorldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the versioned world JSON document. Throws WorldError on malformed
/// input or violated invariants (segments out of bounds, spawn inside a wall).
WorldModel parse_world(const std::string& json_text);
WorldModel load_world(const std::filesystem::path& path);
std::string serialize_world(const WorldModel& world);

/// Throws WorldError when the invariants do not hold.
void validate_world(const WorldModel& world);

/// Resolves a bare world name ("cafe") to the bundled file; paths pass through.
std::filesystem::path resolve_world_path(const std::string& name_or_path);

double point_segment_distance(double px, double py, const Segment& s);

/// Smallest distance from (px, py) to any wall; +inf for an empty world.
double clearance(const WorldModel& world, double px, double py);

/// Distance along the ray from (ox, oy) in direction angle to the nearest
/// segment, or nullopt when nothing is hit within max_range.
std::optional<double> cast_ray(const WorldModel& world, double ox, double oy, double angle, double max_range);

}  // namespace slam

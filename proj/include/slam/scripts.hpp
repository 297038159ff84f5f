#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slam/geometry.hpp"
#include "slam/sim.hpp"

namespace slam {

/// Named waypoint route. Routes are written for one bundled world and start at
/// that world's spawn pose; an empty world name fits any world.
struct Script {
    std::string name;
    std::string world;
    std::vector<Point2> waypoints;
};

/// square_loop, double_loop_kitchen, cafe_tour, stationary (no motion).
std::optional<Script> find_script(const std::string& name);
std::vector<std::string> script_names();

/// Pure-pursuit path follower over a polyline. Progress along the path is
/// monotone, so routes that revisit the same corridor are followed in order.
class PurePursuit {
public:
    PurePursuit(const Pose2& start, std::vector<Point2> waypoints, double lookahead, double cruise_speed,
                const VelocityLimits& limits);

    /// Command for the current pose; (0, 0) once finished.
    Twist command(const Pose2& pose);
    bool finished() const { return finished_; }

private:
    Point2 lookahead_point(std::size_t seg, double t) const;

    std::vector<Point2> path_;
    double lookahead_;
    double cruise_;
    VelocityLimits limits_;
    std::size_t segment_{0};
    bool finished_{false};
};

}  // namespace slam

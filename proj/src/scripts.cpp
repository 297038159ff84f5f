#include "slam/scripts.hpp"

#include <algorithm>
#include <cmath>

namespace slam {

namespace {

std::vector<Script> build_scripts() {
    using P = Point2;
    const std::vector<P> kitchen_lap = {{4.0, 2.2}, {4.0, 5.8}, {1.2, 5.8}, {1.2, 2.2}};
    const std::vector<P> to_dining = {{4.0, 2.2}, {4.0, 3.7}, {6.3, 3.7}};
    const std::vector<P> dining_lap = {{6.3, 1.8}, {10.2, 1.8}, {10.2, 5.0}, {6.3, 5.0}, {6.3, 3.7}};
    const std::vector<P> to_kitchen = {{4.0, 3.7}, {4.0, 5.8}, {1.2, 5.8}, {1.2, 2.2}};

    std::vector<Script> scripts;

    Script square{"square_loop", "kitchen_dining", {}};
    for (int lap = 0; lap < 2; ++lap) {
        square.waypoints.insert(square.waypoints.end(), kitchen_lap.begin(), kitchen_lap.end());
    }
    scripts.push_back(square);

    Script dbl{"double_loop_kitchen", "kitchen_dining", {}};
    auto append = [&](const std::vector<P>& pts) { dbl.waypoints.insert(dbl.waypoints.end(), pts.begin(), pts.end()); };
    append(kitchen_lap);
    append(to_dining);
    append(dining_lap);
    append(to_kitchen);
    append(to_dining);
    append(dining_lap);
    scripts.push_back(dbl);

    scripts.push_back({"cafe_tour",
                       "cafe",
                       {{12.0, 1.5}, {12.0, 5.5}, {8.3, 4.8}, {8.3, 8.0}, {1.5, 8.2}, {1.5, 1.5}, {12.0, 1.5}}});
    scripts.push_back({"stationary", "", {}});
    return scripts;
}

const std::vector<Script>& all_scripts() {
    static const std::vector<Script> scripts = build_scripts();
    return scripts;
}

}  // namespace

std::optional<Script> find_script(const std::string& name) {
    for (const auto& s : all_scripts()) {
        if (s.name == name) {
            return s;
        }
    }
    return std::nullopt;
}

std::vector<std::string> script_names() {
    std::vector<std::string> names;
    for (const auto& s : all_scripts()) {
        names.push_back(s.name);
    }
    return names;
}

PurePursuit::PurePursuit(const Pose2& start, std::vector<Point2> waypoints, double lookahead, double cruise_speed,
                         const VelocityLimits& limits)
    : lookahead_(lookahead), cruise_(cruise_speed), limits_(limits) {
    path_.push_back({start.x, start.y});
    for (const auto& w : waypoints) {
        path_.push_back(w);
    }
    finished_ = path_.size() < 2;
}

Point2 PurePursuit::lookahead_point(std::size_t seg, double t) const {
    double remaining = lookahead_;
    Point2 from{path_[seg].x + t * (path_[seg + 1].x - path_[seg].x),
                path_[seg].y + t * (path_[seg + 1].y - path_[seg].y)};
    for (std::size_t s = seg; s + 1 < path_.size(); ++s) {
        const Point2 to = path_[s + 1];
        const double len = std::hypot(to.x - from.x, to.y - from.y);
        if (len >= remaining && len > 0.0) {
            const double f = remaining / len;
            return {from.x + f * (to.x - from.x), from.y + f * (to.y - from.y)};
        }
        remaining -= len;
        from = to;
    }
    return path_.back();
}

Twist PurePursuit::command(const Pose2& pose) {
    if (finished_) {
        return {};
    }
    // Project onto the current segment; move on once past its end.
    double t = 0.0;
    while (true) {
        const Point2 a = path_[segment_];
        const Point2 b = path_[segment_ + 1];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        t = len2 > 0.0 ? ((pose.x - a.x) * dx + (pose.y - a.y) * dy) / len2 : 1.0;
        const double to_end = std::hypot(b.x - pose.x, b.y - pose.y);
        if ((t >= 1.0 || to_end < 0.5 * lookahead_) && segment_ + 2 < path_.size()) {
            ++segment_;
            continue;
        }
        break;
    }
    t = std::clamp(t, 0.0, 1.0);
    const Point2 goal = path_.back();
    if (segment_ + 2 == path_.size() && std::hypot(goal.x - pose.x, goal.y - pose.y) < 0.1) {
        finished_ = true;
        return {};
    }

    const Point2 target = lookahead_point(segment_, t);
    const double alpha = wrap_angle(std::atan2(target.y - pose.y, target.x - pose.x) - pose.theta);
    const double dist = std::hypot(target.x - pose.x, target.y - pose.y);
    Twist cmd;
    if (std::abs(alpha) > std::numbers::pi / 3.0) {
        cmd.v = 0.0;
        cmd.w = std::copysign(std::min(1.0, limits_.w_max), alpha);
    } else {
        cmd.v = cruise_;
        if (dist < lookahead_) {
            cmd.v = std::max(0.1, cruise_ * dist / lookahead_);  // slow down on the final approach
        }
        cmd.w = 2.0 * cmd.v * std::sin(alpha) / std::max(dist, 1e-6);
    }
    return limits_.clamp(cmd);
}

}  // namespace slam

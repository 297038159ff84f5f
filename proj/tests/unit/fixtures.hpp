#pragma once

#include <vector>

#include "slam/motion.hpp"
#include "slam/scripts.hpp"
#include "slam/sim.hpp"
#include "slam/world.hpp"

namespace fixture {

/// A simulated drive: truth, odometry, deltas and scans. scans[0] is taken at
/// the spawn before any motion; deltas[k] leads to truth[k + 1].
struct Drive {
    slam::WorldModel world;
    std::vector<slam::Pose2> truth;
    std::vector<slam::Pose2> odom;
    std::vector<slam::OdometryDelta> deltas;
    std::vector<slam::LaserScan> scans;
};

inline Drive drive(const std::string& world_name, const std::string& script, std::uint64_t seed,
                   std::size_t max_steps, const slam::MotionNoise& odom_noise = {}, double scan_sigma = 0.02) {
    using namespace slam;
    Drive d;
    d.world = load_world(resolve_world_path(world_name));
    const auto route = find_script(script);
    PurePursuit pilot(d.world.spawn, route->waypoints, 0.5, 0.5, VelocityLimits{});
    auto state = SimState::initial(d.world.spawn, seed);
    const ScanParams params{};
    d.truth.push_back(state.true_pose);
    d.odom.push_back(state.odom_pose);
    d.scans.push_back(raycast(d.world, state.true_pose, params, scan_sigma, state.sensor_rng));
    for (std::size_t i = 0; i < max_steps; ++i) {
        const Twist cmd = pilot.command(state.true_pose);
        if (pilot.finished()) {
            break;
        }
        const Pose2 before = state.odom_pose;
        state = step(state, d.world, cmd, 0.1, odom_noise);
        d.deltas.push_back(decompose(before, state.odom_pose));
        d.truth.push_back(state.true_pose);
        d.odom.push_back(state.odom_pose);
        d.scans.push_back(raycast(d.world, state.true_pose, params, scan_sigma, state.sensor_rng));
    }
    return d;
}

}  // namespace fixture

#pragma once

#include <cstdint>
#include <vector>

#include "slam/geometry.hpp"
#include "slam/motion.hpp"
#include "slam/rng.hpp"
#include "slam/world.hpp"

namespace slam {

/// Fixed angular fan of range readings. A beam at exactly range_max is a
/// no-return.
struct LaserScan {
    double angle_min{0.0};
    double angle_increment{0.0};
    double range_max{8.0};
    std::vector<double> ranges;

    std::size_t n_beams() const { return ranges.size(); }
    bool is_return(std::size_t i) const { return ranges[i] < range_max; }
    double bearing(std::size_t i) const { return angle_min + static_cast<double>(i) * angle_increment; }
    std::size_t return_count() const;

    friend bool operator==(const LaserScan&, const LaserScan&) = default;
};

struct ScanParams {
    std::size_t n_beams{360};
    double angle_min{-std::numbers::pi};
    double angle_increment{2.0 * std::numbers::pi / 360.0};
    double range_max{8.0};
    double sigma{0.02};

    /// Full 360 degree fan with n beams over [-pi, pi).
    static ScanParams full_circle(std::size_t n, double range_max, double sigma);
};

struct VelocityLimits {
    double v_max{1.0};
    double w_max{2.0};

    Twist clamp(const Twist& cmd) const;
};

/// Ground-truth and dead-reckoned state of the simulated robot.
struct SimState {
    Pose2 true_pose;
    Pose2 odom_pose;
    double time{0.0};
    Rng motion_rng;
    Rng sensor_rng;
    bool collided{false};  // last step was blocked by a wall

    static SimState initial(const Pose2& spawn, std::uint64_t seed);
};

/// Advances the simulator by dt. True pose follows exact unicycle integration
/// and stops at wall contact; the odometry pose follows the same delta
/// corrupted by the odometry noise model.
SimState step(const SimState& state, const WorldModel& world, const Twist& cmd, double dt,
              const MotionNoise& odom_noise);

/// Raycasts the world from pose. Noise is added to returned beams only.
LaserScan raycast(const WorldModel& world, const Pose2& pose, const ScanParams& params, double noise_sigma,
                  Rng& rng);

}  // namespace slam

#include "slam/sim.hpp"

#include <algorithm>
#include <cassert>

namespace slam {

std::size_t LaserScan::return_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        n += is_return(i) ? 1 : 0;
    }
    return n;
}

ScanParams ScanParams::full_circle(std::size_t n, double range_max, double sigma) {
    ScanParams p;
    p.n_beams = n;
    p.angle_min = -std::numbers::pi;
    p.angle_increment = 2.0 * std::numbers::pi / static_cast<double>(n);
    p.range_max = range_max;
    p.sigma = sigma;
    return p;
}

Twist VelocityLimits::clamp(const Twist& cmd) const {
    return {std::clamp(cmd.v, -v_max, v_max), std::clamp(cmd.w, -w_max, w_max)};
}

SimState SimState::initial(const Pose2& spawn, std::uint64_t seed) {
    SimState s;
    s.true_pose = spawn;
    s.odom_pose = spawn;
    s.motion_rng = make_rng(seed, RngStream::motion);
    s.sensor_rng = make_rng(seed, RngStream::sensor);
    return s;
}

namespace {

// Pose reached after travelling fraction s of the commanded motion.
Pose2 along_motion(const Pose2& p, const Twist& cmd, double dt, double s) {
    const double t = s * dt;
    if (std::abs(cmd.w) < 1e-12) {
        return {p.x + cmd.v * t * std::cos(p.theta), p.y + cmd.v * t * std::sin(p.theta), p.theta};
    }
    const double r = cmd.v / cmd.w;
    const double th = p.theta + cmd.w * t;
    return {p.x + r * (std::sin(th) - std::sin(p.theta)), p.y - r * (std::cos(th) - std::cos(p.theta)), th};
}

bool free_at(const WorldModel& world, const Pose2& p) {
    return clearance(world, p.x, p.y) >= kRobotRadius;
}

}  // namespace

SimState step(const SimState& state, const WorldModel& world, const Twist& cmd, double dt,
              const MotionNoise& odom_noise) {
    assert(dt > 0.0 && dt <= 0.5);
    SimState next = state;
    next.time = state.time + dt;
    next.collided = false;

    const Pose2& start = state.true_pose;
    Pose2 target = along_motion(start, cmd, dt, 1.0);

    if (cmd.v != 0.0) {
        constexpr int kSubsteps = 32;
        double good = 0.0;
        for (int i = 1; i <= kSubsteps; ++i) {
            const double s = static_cast<double>(i) / kSubsteps;
            if (free_at(world, along_motion(start, cmd, dt, s))) {
                good = s;
                continue;
            }
            double bad = s;
            for (int k = 0; k < 40; ++k) {
                const double mid = 0.5 * (good + bad);
                if (free_at(world, along_motion(start, cmd, dt, mid))) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            const Pose2 contact = along_motion(start, cmd, dt, good);
            target = Pose2{contact.x, contact.y, start.theta + cmd.w * dt};
            next.collided = true;
            break;
        }
    }
    next.true_pose = target;

    const OdometryDelta truth = decompose(start, target);
    next.odom_pose = apply_delta(state.odom_pose, perturb_delta(truth, odom_noise, next.motion_rng));
    return next;
}

LaserScan raycast(const WorldModel& world, const Pose2& pose, const ScanParams& params, double noise_sigma,
                  Rng& rng) {
    LaserScan scan;
    scan.angle_min = params.angle_min;
    scan.angle_increment = params.angle_increment;
    scan.range_max = params.range_max;
    scan.ranges.resize(params.n_beams);
    for (std::size_t i = 0; i < params.n_beams; ++i) {
        const double angle = pose.theta + scan.bearing(i);
        const auto hit = cast_ray(world, pose.x, pose.y, angle, params.range_max);
        if (!hit) {
            scan.ranges[i] = params.range_max;
            continue;
        }
        const double r = *hit + rng.gaussian(noise_sigma);
        scan.ranges[i] = std::clamp(r, 1e-3, params.range_max);
    }
    return scan;
}

}  // namespace slam

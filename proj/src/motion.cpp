#include "slam/motion.hpp"

#include <cmath>

namespace slam {

OdometryDelta decompose(const Pose2& from, const Pose2& to) {
    const Pose2 rel = between(from, to);
    OdometryDelta d;
    d.trans = std::hypot(rel.x, rel.y);
    if (d.trans < 1e-12) {
        d.trans = 0.0;
        d.rot1 = 0.0;
    } else if (rel.x >= 0.0) {
        d.rot1 = std::atan2(rel.y, rel.x);
    } else {
        d.rot1 = std::atan2(-rel.y, -rel.x);
        d.trans = -d.trans;
    }
    d.rot2 = wrap_angle(rel.theta - d.rot1);
    return d;
}

Pose2 apply_delta(const Pose2& pose, const OdometryDelta& delta) {
    const double heading = pose.theta + delta.rot1;
    return {pose.x + delta.trans * std::cos(heading), pose.y + delta.trans * std::sin(heading),
            heading + delta.rot2};
}

OdometryDelta perturb_delta(const OdometryDelta& d, const MotionNoise& n, Rng& rng) {
    const double r1 = d.rot1 * d.rot1;
    const double r2 = d.rot2 * d.rot2;
    const double tt = d.trans * d.trans;
    OdometryDelta out;
    out.rot1 = wrap_angle(d.rot1 + rng.gaussian(std::sqrt(n.alpha1 * r1 + n.alpha2 * tt)));
    out.trans = d.trans + rng.gaussian(std::sqrt(n.alpha3 * tt + n.alpha4 * (r1 + r2)));
    out.rot2 = wrap_angle(d.rot2 + rng.gaussian(std::sqrt(n.alpha1 * r2 + n.alpha2 * tt)));
    return out;
}

Pose2 sample_motion(const Pose2& pose, const OdometryDelta& delta, const MotionNoise& noise, Rng& rng) {
    return apply_delta(pose, perturb_delta(delta, noise, rng));
}

}  // namespace slam

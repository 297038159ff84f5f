#pragma once

#include "slam/geometry.hpp"
#include "slam/rng.hpp"

namespace slam {

/// Odometry reading decomposed as rotate / translate / rotate.
struct OdometryDelta {
    double rot1{0.0};
    double trans{0.0};
    double rot2{0.0};

    friend bool operator==(const OdometryDelta&, const OdometryDelta&) = default;
};

/// Noise coefficients of the odometry motion model.
struct MotionNoise {
    double alpha1{0.05};  // rotation from rotation
    double alpha2{0.01};  // rotation from translation
    double alpha3{0.05};  // translation from translation
    double alpha4{0.01};  // translation from rotation

    static MotionNoise zero() { return {0.0, 0.0, 0.0, 0.0}; }
};

/// Decomposes the relative motion between two poses. Backward motion yields a
/// negative trans instead of a half-turn in rot1.
OdometryDelta decompose(const Pose2& from, const Pose2& to);

/// Applies a decomposed delta to a pose.
Pose2 apply_delta(const Pose2& pose, const OdometryDelta& delta);

/// Odometry motion model sample: perturbs rot1, trans and rot2 with zero-mean
/// Gaussians of variance
///   a1*rot1^2 + a2*trans^2,  a3*trans^2 + a4*(rot1^2 + rot2^2),  a1*rot2^2 + a2*trans^2
/// and applies the result to the pose.
Pose2 sample_motion(const Pose2& pose, const OdometryDelta& delta, const MotionNoise& noise, Rng& rng);

/// The perturbation step alone, shared by the simulator's odometry corruption.
OdometryDelta perturb_delta(const OdometryDelta& delta, const MotionNoise& noise, Rng& rng);

}  // namespace slam

#pragma once

#include <cmath>
#include <numbers>

namespace slam {

/// Wraps an angle into (-pi, pi]. pi itself is kept, -pi maps to pi.
double wrap_angle(double theta);

/// SE(2) pose. theta is kept normalized by every operation in this header.
struct Pose2 {
    double x{0.0};
    double y{0.0};
    double theta{0.0};

    Pose2() = default;
    Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

    friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Velocity command for a differential-drive base.
struct Twist {
    double v{0.0};  // m/s, forward
    double w{0.0};  // rad/s

    friend bool operator==(const Twist&, const Twist&) = default;
};

/// a ⊕ b: b expressed in a's frame, mapped into the world frame.
Pose2 compose(const Pose2& a, const Pose2& b);

Pose2 inverse(const Pose2& p);

/// a⁻¹ ⊕ b, i.e. b seen from a.
Pose2 between(const Pose2& a, const Pose2& b);

/// Applies a pose to a point given in its local frame.
struct Point2 {
    double x{0.0};
    double y{0.0};

    friend bool operator==(const Point2&, const Point2&) = default;
};
Point2 transform_point(const Pose2& p, const Point2& local);

double distance(const Pose2& a, const Pose2& b);

/// Max of the per-component absolute differences, with the angle difference wrapped.
double max_abs_diff(const Pose2& a, const Pose2& b);

}  // namespace slam

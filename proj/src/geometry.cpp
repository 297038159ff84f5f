#include "slam/geometry.hpp"

#include <algorithm>
#include <cassert>

namespace slam {

double wrap_angle(double theta) {
    assert(std::isfinite(theta));
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (theta > -pi && theta <= pi) {
        return theta;
    }
    double r = std::fmod(theta + pi, two_pi);
    if (r <= 0.0) {
        r += two_pi;
    }
    return r - pi;
}

Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta};
}

Pose2 inverse(const Pose2& p) {
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    return {-c * p.x - s * p.y, s * p.x - c * p.y, -p.theta};
}

Pose2 between(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    return {c * dx + s * dy, -s * dx + c * dy, b.theta - a.theta};
}

Point2 transform_point(const Pose2& p, const Point2& local) {
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    return {p.x + c * local.x - s * local.y, p.y + s * local.x + c * local.y};
}

double distance(const Pose2& a, const Pose2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double max_abs_diff(const Pose2& a, const Pose2& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y),
                     std::abs(wrap_angle(a.theta - b.theta))});
}

}  // namespace slam

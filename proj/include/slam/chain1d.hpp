#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace slam {

/// Scalar GraphSLAM problem: a chain of 1D positions linked by noisy motions,
/// plus noisy range measurements from positions to scalar landmarks.
struct Chain1D {
    struct Motion {
        double u{0.0};
        double sigma{1.0};
    };
    struct Measurement {
        std::size_t t{0};  // position index
        int landmark{0};
        double z{0.0};
        double sigma{1.0};
    };

    double prior_mean{0.0};
    double prior_info{1.0};
    std::vector<Motion> motions;            // motion t links x_{t-1} -> x_t
    std::vector<Measurement> measurements;
    /// Use the measurement prediction z = x + m instead of z = m - x.
    bool additive_measurement{false};

    std::size_t state_count() const { return motions.size() + 1; }
    /// Predicted measurement for position x and landmark m.
    double predict(double x, double m) const { return additive_measurement ? x + m : m - x; }
};

struct Chain1DSolution {
    std::vector<double> states;
    std::map<int, double> landmarks;
    double j_min{0.0};
};

class UnobservableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Negative log-likelihood (up to constants):
///   prior_info*(x0 - prior_mean)^2 + sum((x_t - x_{t-1} - u_t)/sigma_u)^2 + sum((z - zhat)/sigma_m)^2
double chain_objective(const Chain1D& chain, std::span<const double> states, const std::map<int, double>& landmarks);

/// Exact minimizer of chain_objective via the normal equations. Throws
/// UnobservableError when the normal matrix is singular.
Chain1DSolution solve_chain_1d(const Chain1D& chain);

}  // namespace slam

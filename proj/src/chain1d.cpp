#include "slam/chain1d.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace slam {

double chain_objective(const Chain1D& chain, std::span<const double> x, const std::map<int, double>& m) {
    double j = chain.prior_info * (x[0] - chain.prior_mean) * (x[0] - chain.prior_mean);
    for (std::size_t t = 1; t < chain.state_count(); ++t) {
        const auto& mo = chain.motions[t - 1];
        const double r = (x[t] - (x[t - 1] + mo.u)) / mo.sigma;
        j += r * r;
    }
    for (const auto& meas : chain.measurements) {
        const double r = (meas.z - chain.predict(x[meas.t], m.at(meas.landmark))) / meas.sigma;
        j += r * r;
    }
    return j;
}

Chain1DSolution solve_chain_1d(const Chain1D& chain) {
    const std::size_t n_states = chain.state_count();
    std::map<int, std::size_t> lm_index;
    for (const auto& meas : chain.measurements) {
        if (meas.t >= n_states) {
            throw std::out_of_range("solve_chain_1d: measurement index beyond chain length");
        }
        if (!(meas.sigma > 0.0)) {
            throw std::invalid_argument("solve_chain_1d: measurement sigma must be positive");
        }
        lm_index.emplace(meas.landmark, 0);
    }
    std::size_t next = n_states;
    for (auto& [id, idx] : lm_index) {
        idx = next++;
    }
    const auto n = static_cast<Eigen::Index>(next);

    // Each constraint is r = a.x - c with weight 1/sigma^2.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    auto add_pair = [&](Eigen::Index i, double ai, Eigen::Index k, double ak, double c, double weight) {
        h(i, i) += weight * ai * ai;
        h(k, k) += weight * ak * ak;
        h(i, k) += weight * ai * ak;
        h(k, i) += weight * ai * ak;
        g(i) += weight * ai * c;
        g(k) += weight * ak * c;
    };

    h(0, 0) += chain.prior_info;
    g(0) += chain.prior_info * chain.prior_mean;
    for (std::size_t t = 1; t < n_states; ++t) {
        const auto& mo = chain.motions[t - 1];
        if (!(mo.sigma > 0.0)) {
            throw std::invalid_argument("solve_chain_1d: motion sigma must be positive");
        }
        // x_t - x_{t-1} = u_t
        add_pair(static_cast<Eigen::Index>(t), 1.0, static_cast<Eigen::Index>(t - 1), -1.0, mo.u,
                 1.0 / (mo.sigma * mo.sigma));
    }
    const double dx = chain.additive_measurement ? 1.0 : -1.0;
    for (const auto& meas : chain.measurements) {
        add_pair(static_cast<Eigen::Index>(meas.t), dx, static_cast<Eigen::Index>(lm_index.at(meas.landmark)), 1.0,
                 meas.z, 1.0 / (meas.sigma * meas.sigma));
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * scale) {
        throw UnobservableError(
            "solve_chain_1d: normal matrix is singular; the global offset (gauge freedom) of the chain is not "
            "fixed. Give the prior a positive information value.");
    }
    const Eigen::VectorXd sol = ldlt.solve(g);

    Chain1DSolution out;
    out.states.assign(sol.data(), sol.data() + n_states);
    for (const auto& [id, idx] : lm_index) {
        out.landmarks[id] = sol(static_cast<Eigen::Index>(idx));
    }
    out.j_min = chain_objective(chain, out.states, out.landmarks);
    return out;
}

}  // namespace slam

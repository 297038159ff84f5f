#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "slam/chain1d.hpp"
#include "slam/graph_io.hpp"
#include "slam/posegraph.hpp"

using namespace slam;
using std::numbers::pi;

namespace {

Chain1D random_chain(std::mt19937_64& g, std::size_t steps, int landmarks) {
    std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.2, 2.0), z(-5.0, 5.0);
    std::uniform_int_distribution<int> lm(0, landmarks - 1);
    Chain1D c;
    c.prior_mean = u(g);
    c.prior_info = s(g);
    for (std::size_t t = 0; t < steps; ++t) {
        c.motions.push_back({u(g), s(g)});
    }
    std::uniform_int_distribution<std::size_t> tt(0, steps);
    for (int k = 0; k < 2 * landmarks; ++k) {
        c.measurements.push_back({tt(g), lm(g), z(g), s(g)});
    }
    return c;
}

// Weighted least squares by QR on the stacked design matrix, no normal equations.
std::vector<double> qr_solution(const Chain1D& c, std::map<int, double>& landmarks) {
    std::map<int, int> col;
    for (const auto& m : c.measurements) col.emplace(m.landmark, 0);
    int next = static_cast<int>(c.state_count());
    for (auto& [id, k] : col) k = next++;
    const int rows = 1 + static_cast<int>(c.motions.size() + c.measurements.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, next);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    int r = 0;
    const double sp = std::sqrt(c.prior_info);
    a(r, 0) = sp;
    b(r++) = sp * c.prior_mean;
    for (std::size_t t = 1; t < c.state_count(); ++t) {
        const auto& mo = c.motions[t - 1];
        a(r, t) = 1.0 / mo.sigma;
        a(r, t - 1) = -1.0 / mo.sigma;
        b(r++) = mo.u / mo.sigma;
    }
    for (const auto& m : c.measurements) {
        a(r, static_cast<int>(m.t)) = (c.additive_measurement ? 1.0 : -1.0) / m.sigma;
        a(r, col[m.landmark]) = 1.0 / m.sigma;
        b(r++) = m.z / m.sigma;
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    for (const auto& [id, k] : col) landmarks[id] = x(k);
    return {x.data(), x.data() + c.state_count()};
}

// between(between(from, to), z) via homogeneous matrices.
Vector3 residual_oracle(const Pose2& from, const Pose2& to, const Pose2& z) {
    const Eigen::Matrix3d rel = oracle::to_matrix(from).inverse() * oracle::to_matrix(to);
    const auto r = oracle::from_matrix(rel.inverse() * oracle::to_matrix(z));
    return {r[0], r[1], r[2]};
}

Matrix3 random_information(std::mt19937_64& g) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix3 a;
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = d(g);
    Matrix3 m = a * a.transpose() + Matrix3::Identity() * 0.5;
    return 0.5 * (m + m.transpose());
}

// Noise-free square of side 4 with n poses per side, plus noisy odometry.
struct Square {
    std::vector<Pose2> truth;
    PoseGraph graph;
};

Square noisy_square(int per_side, double noise, std::uint64_t seed) {
    Square s;
    Pose2 p{0, 0, 0};
    const double step = 4.0 / per_side;
    for (int side = 0; side < 4; ++side) {
        for (int k = 0; k < per_side; ++k) {
            s.truth.push_back(p);
            p = compose(p, {step, 0.0, k + 1 == per_side ? pi / 2 : 0.0});
        }
    }
    std::mt19937_64 g(seed);
    std::normal_distribution<double> n(0.0, noise);
    std::vector<Pose2> deltas;
    for (std::size_t i = 1; i < s.truth.size(); ++i) {
        const Pose2 d = between(s.truth[i - 1], s.truth[i]);
        deltas.push_back({d.x + n(g), d.y + n(g), d.theta + n(g)});
    }
    const LoopConstraint close{0, static_cast<int>(s.truth.size()) - 1, between(s.truth.front(), s.truth.back()), 1.0};
    s.graph = build_graph_front_end(deltas, std::span(&close, 1));
    return s;
}

double position_rmse(const PoseGraph& g, const std::vector<Pose2>& truth) {
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = distance(g.nodes()[i].estimate, truth[i]);
        sum += d * d;
    }
    return std::sqrt(sum / truth.size());
}

}  // namespace

TEST_CASE("consistent 1D chain is solved exactly") {
    Chain1D c;
    c.prior_mean = 0.0;
    c.prior_info = 1.0;
    c.motions = {{1.0, 1.0}, {2.0, 1.0}};
    c.measurements = {{0, 7, 3.0, 1.0}, {1, 7, 2.0, 1.0}, {2, 7, 0.0, 1.0}};
    const auto sol = solve_chain_1d(c);
    REQUIRE(sol.states.size() == 3);
    CHECK(sol.states[0] == doctest::Approx(0.0).scale(1));
    CHECK(sol.states[1] == doctest::Approx(1.0));
    CHECK(sol.states[2] == doctest::Approx(3.0));
    CHECK(sol.landmarks.at(7) == doctest::Approx(3.0));
    CHECK(sol.j_min == doctest::Approx(0.0).scale(1));
}

TEST_CASE("two-state chain against the closed form") {
    // x0 prior 0 (info 1), x1 - x0 = 1 (sigma 1), landmark seen from x1 at z=1 and x0 at z=3.
    // Residuals: x0, x1-x0-1, 1-(m-x1), 3-(m-x0); normal equations written out by hand.
    Chain1D c;
    c.motions = {{1.0, 1.0}};
    c.measurements = {{1, 0, 1.0, 1.0}, {0, 0, 3.0, 1.0}};
    Eigen::Matrix3d h;
    h << 3, -1, -1, -1, 2, -1, -1, -1, 2;
    const Eigen::Vector3d g(-1 - 3, 1 - 1, 1 + 3);
    const Eigen::Vector3d x = h.inverse() * g;
    const auto sol = solve_chain_1d(c);
    CHECK(sol.states[0] == doctest::Approx(x(0)));
    CHECK(sol.states[1] == doctest::Approx(x(1)));
    CHECK(sol.landmarks.at(0) == doctest::Approx(x(2)));
    CHECK(sol.j_min > 0.0);
}

TEST_CASE("1D chains match an independent least-squares oracle") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto c = random_chain(g, 3 + trial % 17, 1 + trial % 5);
        c.additive_measurement = trial % 2 == 1;
        std::map<int, double> lm_ref;
        const auto ref = qr_solution(c, lm_ref);
        const auto sol = solve_chain_1d(c);
        for (std::size_t t = 0; t < ref.size(); ++t) {
            REQUIRE(sol.states[t] == doctest::Approx(ref[t]).epsilon(1e-9).scale(1));
        }
        for (const auto& [id, v] : lm_ref) {
            REQUIRE(sol.landmarks.at(id) == doctest::Approx(v).epsilon(1e-9).scale(1));
        }
        CHECK(sol.j_min == doctest::Approx(chain_objective(c, ref, lm_ref)).epsilon(1e-9).scale(1));
    }
}

TEST_CASE("1D solution is a minimum: zero gradient and no better neighbour") {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_chain(g, 6, 3);
        const auto sol = solve_chain_1d(c);
        auto x = sol.states;
        auto m = sol.landmarks;
        const double h = 1e-4;  // exact for a quadratic up to rounding
        double norm2 = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            auto xp = x, xm = x;
            xp[t] += h;
            xm[t] -= h;
            const double grad = (chain_objective(c, xp, m) - chain_objective(c, xm, m)) / (2 * h);
            norm2 += grad * grad;
        }
        for (auto& [id, v] : m) {
            const double keep = v;
            v = keep + h;
            const double jp = chain_objective(c, x, m);
            v = keep - h;
            const double jm = chain_objective(c, x, m);
            v = keep;
            norm2 += std::pow((jp - jm) / (2 * h), 2);
        }
        CHECK(std::sqrt(norm2) < 1e-7);
        // coarse grid search around the optimum on every coordinate
        for (std::size_t t = 0; t < x.size(); ++t) {
            for (double d : {-0.5, -0.1, -0.01, 0.01, 0.1, 0.5}) {
                auto xp = x;
                xp[t] += d;
                CHECK(chain_objective(c, xp, m) > sol.j_min);
            }
        }
    }
}

TEST_CASE("scaling every sigma leaves the argmin unchanged") {
    std::mt19937_64 g(13);
    const auto c = random_chain(g, 8, 3);
    auto scaled = c;
    const double k = 3.0;
    scaled.prior_info /= k * k;
    for (auto& mo : scaled.motions) mo.sigma *= k;
    for (auto& me : scaled.measurements) me.sigma *= k;
    const auto a = solve_chain_1d(c);
    const auto b = solve_chain_1d(scaled);
    for (std::size_t t = 0; t < a.states.size(); ++t) {
        CHECK(b.states[t] == doctest::Approx(a.states[t]).epsilon(1e-9).scale(1));
    }
    CHECK(b.j_min == doctest::Approx(a.j_min / (k * k)).epsilon(1e-9).scale(1));
}

TEST_CASE("a chain without a prior is unobservable") {
    Chain1D c;
    c.prior_info = 0.0;
    c.motions = {{1.0, 1.0}};
    c.measurements = {{0, 0, 2.0, 1.0}};
    CHECK_THROWS_AS(solve_chain_1d(c), UnobservableError);
    try {
        solve_chain_1d(c);
    } catch (const UnobservableError& e) {
        CHECK(std::string(e.what()).find("gauge") != std::string::npos);
    }
}

TEST_CASE("embedded chain optimizes to the scalar solution") {
    std::mt19937_64 g(14);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_chain(g, 5 + trial, 1 + trial % 4);
        const auto sol = solve_chain_1d(c);
        auto graph = embed_chain(c);
        const auto stats = optimize(graph);
        for (std::size_t t = 0; t < sol.states.size(); ++t) {
            REQUIRE(graph.nodes()[t].estimate.x == doctest::Approx(sol.states[t]).epsilon(1e-9).scale(1));
            REQUIRE(std::abs(graph.nodes()[t].estimate.y) < 1e-9);
            REQUIRE(std::abs(graph.nodes()[t].estimate.theta) < 1e-9);
        }
        std::size_t k = sol.states.size();
        for (const auto& [id, v] : sol.landmarks) {
            REQUIRE(graph.nodes()[k++].estimate.x == doctest::Approx(v).epsilon(1e-9).scale(1));
        }
        CHECK(stats.j_final == doctest::Approx(sol.j_min).epsilon(1e-9).scale(1));
    }
}

TEST_CASE("objective examples") {
    PoseGraph graph;
    graph.add_node({});
    graph.add_node({2, 0, 0});
    graph.add_edge({EdgeKind::odometry, 0, 1, {1, 0, 0}});
    graph.set_anchor({0, {}});
    CHECK(objective(graph) == doctest::Approx(1.0));  // residual (1, 0, 0) under identity information

    const auto single = build_graph_front_end({}, {});
    CHECK(single.nodes().size() == 1);
    CHECK(single.edges().empty());
    CHECK(objective(single) == 0.0);
    PoseGraph moved = single;
    moved.nodes()[0].estimate = {0.1, 0, 0};
    CHECK(objective(moved) == doctest::Approx(0.01 * moved.anchor().information(0, 0)));
}

TEST_CASE("residual examples") {
    const GraphEdge exact{EdgeKind::odometry, 0, 1, {1, 0, 0}};
    CHECK(residual(exact, {0, 0, 0}, {1, 0, 0}).norm() < 1e-15);
    const GraphEdge short_edge{EdgeKind::odometry, 0, 1, {0.9, 0, 0}};
    const Vector3 r = residual(short_edge, {0, 0, 0}, {1, 0, 0});
    CHECK(r.x() == doctest::Approx(-0.1));
    CHECK(std::abs(r.y()) < 1e-15);
    const GraphEdge turned{EdgeKind::loop, 0, 1, {0, 0, pi / 2}};
    CHECK(residual(turned, {2, 3, pi / 2}, {2, 3, pi / 2}).z() == doctest::Approx(pi / 2));
    // wrapping across the seam
    const GraphEdge seam{EdgeKind::loop, 0, 1, {0, 0, 0}};
    CHECK(residual(seam, {0, 0, pi - 0.01}, {0, 0, -pi + 0.01}).z() == doctest::Approx(-0.02));
}

TEST_CASE("residuals match the matrix oracle on random edges") {
    std::mt19937_64 g(15);
    for (int i = 0; i < 500; ++i) {
        const Pose2 a = oracle::random_pose(g), b = oracle::random_pose(g), z = oracle::random_pose(g, 3.0);
        const Vector3 r = residual({EdgeKind::odometry, 0, 1, z}, a, b);
        const Vector3 ref = residual_oracle(a, b, z);
        REQUIRE((r.head<2>() - ref.head<2>()).norm() < 1e-9);
        REQUIRE(std::abs(oracle::angle_diff(r.z(), ref.z())) < 1e-9);
        REQUIRE(r.z() > -pi - 1e-12);
        REQUIRE(r.z() <= pi + 1e-12);
    }
}

TEST_CASE("analytic Jacobians match central differences") {
    std::mt19937_64 g(16);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const Pose2 a = oracle::random_pose(g), b = oracle::random_pose(g), z = oracle::random_pose(g, 3.0);
        const GraphEdge e{EdgeKind::loop, 0, 1, z};
        const auto jac = residual_jacobians(e, a, b);
        auto numeric = [&](bool wrt_from, int k) {
            Pose2 p = wrt_from ? a : b, m = p;
            double* pp[3] = {&p.x, &p.y, &p.theta};
            double* mm[3] = {&m.x, &m.y, &m.theta};
            *pp[k] += h;
            *mm[k] -= h;
            const Vector3 rp = wrt_from ? residual(e, p, b) : residual(e, a, p);
            const Vector3 rm = wrt_from ? residual(e, m, b) : residual(e, a, m);
            Vector3 d = rp - rm;
            d.z() = oracle::angle_diff(rp.z(), rm.z());
            return Vector3(d / (2 * h));
        };
        for (int k = 0; k < 3; ++k) {
            REQUIRE((numeric(true, k) - jac.d_from.col(k)).cwiseAbs().maxCoeff() < 1e-6);
            REQUIRE((numeric(false, k) - jac.d_to.col(k)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("objective matches a brute-force sum") {
    std::mt19937_64 g(17);
    PoseGraph graph;
    for (int i = 0; i < 12; ++i) graph.add_node(oracle::random_pose(g, 5.0));
    std::uniform_int_distribution<int> node(0, 11);
    double expected = 0.0;
    for (int i = 0; i < 30; ++i) {
        int a = node(g), b = node(g);
        if (a == b) b = (b + 1) % 12;
        const GraphEdge e{i % 2 ? EdgeKind::loop : EdgeKind::odometry, a, b, oracle::random_pose(g, 2.0),
                          random_information(g)};
        graph.add_edge(e);
        const Vector3 r = residual_oracle(graph.nodes()[a].estimate, graph.nodes()[b].estimate, e.measurement);
        expected += r.transpose() * e.information * r;
    }
    const Anchor anchor{3, {1, 2, 0.3}, Matrix3::Identity() * 10.0};
    graph.set_anchor(anchor);
    const Pose2& n3 = graph.nodes()[3].estimate;
    const Vector3 ra(n3.x - 1, n3.y - 2, oracle::angle_diff(n3.theta, 0.3));
    expected += 10.0 * ra.squaredNorm();
    CHECK(objective(graph) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective is invariant to a rigid motion of the whole graph") {
    std::mt19937_64 g(18);
    PoseGraph graph;
    for (int i = 0; i < 8; ++i) graph.add_node(oracle::random_pose(g, 5.0));
    for (int i = 1; i < 8; ++i) {
        graph.add_edge({EdgeKind::odometry, i - 1, i, oracle::random_pose(g, 1.0), random_information(g)});
    }
    graph.set_anchor({0, graph.nodes()[0].estimate, Matrix3::Identity()});
    const double before = objective(graph) - 0.0;
    const Pose2 moved_anchor = graph.nodes()[0].estimate;
    const Pose2 t{3.0, -2.0, 1.1};
    PoseGraph moved = graph;
    for (auto& n : moved.nodes()) n.estimate = compose(t, n.estimate);
    moved.set_anchor({0, compose(t, moved_anchor), Matrix3::Identity()});
    CHECK(objective(moved) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("rigid motion only changes the anchor term") {
    std::mt19937_64 g(22);
    PoseGraph graph;
    for (int i = 0; i < 10; ++i) graph.add_node(oracle::random_pose(g, 5.0));
    for (int i = 1; i < 10; ++i) {
        graph.add_edge({EdgeKind::odometry, i - 1, i, oracle::random_pose(g, 1.0), random_information(g)});
    }
    graph.add_edge({EdgeKind::loop, 0, 9, oracle::random_pose(g, 1.0), random_information(g)});
    graph.set_anchor({0, {}, Matrix3::Identity() * 1e-12});
    const double before = objective(graph);
    PoseGraph moved = graph;
    for (auto& n : moved.nodes()) n.estimate = compose({4.0, -1.0, 2.0}, n.estimate);
    CHECK(std::abs(objective(moved) - before) < 1e-6 * before);
}

TEST_CASE("optimizing a consistent graph changes nothing") {
    PoseGraph graph;
    std::vector<Pose2> poses{{0, 0, 0}, {1, 0, 0.2}, {1.5, 1, 1.0}, {0.5, 2, 2.5}};
    for (const auto& p : poses) graph.add_node(p);
    for (int i = 1; i < 4; ++i) graph.add_edge({EdgeKind::odometry, i - 1, i, between(poses[i - 1], poses[i])});
    graph.add_edge({EdgeKind::loop, 0, 3, between(poses[0], poses[3])});
    graph.set_anchor({0, poses[0]});
    const auto stats = optimize(graph);
    CHECK(stats.j_initial < 1e-20);
    CHECK(stats.j_final <= stats.j_initial);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK(max_abs_diff(graph.nodes()[i].estimate, poses[i]) < 1e-12);
    }
}

TEST_CASE("square loop with noisy odometry") {
    const auto sq = noisy_square(5, 0.02, 19);
    REQUIRE(sq.graph.nodes().size() == 20);
    REQUIRE(sq.graph.edges().size() == 20);
    PoseGraph graph = sq.graph;
    const double err_before = position_rmse(graph, sq.truth);
    const auto stats = optimize(graph);
    const double err_after = position_rmse(graph, sq.truth);
    MESSAGE("rmse " << err_before << " -> " << err_after << " in " << stats.iterations << " iterations");
    CHECK(stats.j_final < stats.j_initial);
    CHECK(err_after < err_before);
    for (std::size_t i = 1; i < stats.j_history.size(); ++i) {
        CHECK(stats.j_history[i] <= stats.j_history[i - 1]);
    }
    CHECK(stats.j_history.front() == stats.j_initial);
    CHECK(stats.j_history.back() == stats.j_final);
    CHECK(max_abs_diff(graph.nodes()[0].estimate, {0, 0, 0}) < 1e-4);
}

TEST_CASE("square loop optimum matches a dense Gauss-Newton oracle") {
    // Oracle: dense normal equations with finite-difference Jacobians, full steps,
    // iterated to convergence. Shares only the residual definition.
    const auto sq = noisy_square(5, 0.05, 23);
    PoseGraph graph = sq.graph;
    OptimizeOptions tight;
    tight.tol = 1e-14;
    tight.max_iter = 100;
    optimize(graph, tight);

    const PoseGraph& g0 = sq.graph;
    const int n = static_cast<int>(g0.nodes().size());
    Eigen::VectorXd x(3 * n);
    for (int i = 0; i < n; ++i) {
        const auto& p = g0.nodes()[i].estimate;
        x.segment<3>(3 * i) << p.x, p.y, p.theta;
    }
    auto pose = [&](const Eigen::VectorXd& v, int i) { return Pose2{v(3 * i), v(3 * i + 1), v(3 * i + 2)}; };
    for (int iter = 0; iter < 30; ++iter) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * n);
        const auto& a = g0.anchor();
        const Pose2 pa = pose(x, a.node_id);
        const Vector3 ra(pa.x - a.prior.x, pa.y - a.prior.y, oracle::angle_diff(pa.theta, a.prior.theta));
        h.block<3, 3>(3 * a.node_id, 3 * a.node_id) += a.information;
        b.segment<3>(3 * a.node_id) += a.information * ra;
        for (const auto& e : g0.edges()) {
            const Vector3 r = residual_oracle(pose(x, e.from), pose(x, e.to), e.measurement);
            Eigen::Matrix<double, 3, 6> j;
            for (int k = 0; k < 6; ++k) {
                const int idx = 3 * (k < 3 ? e.from : e.to) + k % 3;
                Eigen::VectorXd xp = x, xm = x;
                xp(idx) += 1e-7;
                xm(idx) -= 1e-7;
                const Vector3 rp = residual_oracle(pose(xp, e.from), pose(xp, e.to), e.measurement);
                const Vector3 rm = residual_oracle(pose(xm, e.from), pose(xm, e.to), e.measurement);
                Vector3 d = rp - rm;
                d.z() = oracle::angle_diff(rp.z(), rm.z());
                j.col(k) = d / 2e-7;
            }
            Eigen::MatrixXd jf = Eigen::MatrixXd::Zero(3, 3 * n);
            jf.block<3, 3>(0, 3 * e.from) = j.leftCols<3>();
            jf.block<3, 3>(0, 3 * e.to) = j.rightCols<3>();
            h += jf.transpose() * e.information * jf;
            b += jf.transpose() * e.information * r;
        }
        x += h.ldlt().solve(-b);
    }
    for (int i = 0; i < n; ++i) {
        const Pose2 ref = pose(x, i);
        CHECK(max_abs_diff(graph.nodes()[i].estimate, ref) < 1e-6);
    }
}

TEST_CASE("gradient descent also decreases the objective monotonically") {
    const auto sq = noisy_square(5, 0.02, 20);
    PoseGraph graph = sq.graph;
    OptimizeOptions opt;
    opt.method = OptimizerMethod::gradient_descent;
    opt.gd_initial_step = 1e-3;
    opt.max_iter = 200;
    const auto stats = optimize(graph, opt);
    CHECK(stats.j_final < stats.j_initial);
    for (std::size_t i = 1; i < stats.j_history.size(); ++i) {
        CHECK(stats.j_history[i] <= stats.j_history[i - 1]);
    }
}

TEST_CASE("graph validation") {
    PoseGraph graph;
    graph.add_node({});
    graph.add_node({1, 0, 0});
    CHECK_THROWS_AS(graph.add_edge({EdgeKind::odometry, 0, 0, {}}), GraphError);
    CHECK_THROWS_AS(graph.add_edge({EdgeKind::odometry, 0, 5, {}}), GraphError);
    Matrix3 bad = Matrix3::Identity();
    bad(0, 1) = 0.5;
    CHECK_THROWS_AS(graph.add_edge({EdgeKind::odometry, 0, 1, {}, bad}), GraphError);
    CHECK_THROWS_AS(graph.add_edge({EdgeKind::odometry, 0, 1, {}, -Matrix3::Identity()}), GraphError);
    CHECK_FALSE(is_valid_information(Matrix3::Zero()));
    CHECK(is_valid_information(Vector3(1, 2, 3).asDiagonal()));
    graph.set_anchor({4, {}});
    CHECK_THROWS_AS(graph.validate(), GraphError);
}

TEST_CASE("a node with no constraints makes optimization fail loudly") {
    PoseGraph graph;
    graph.add_node({});
    graph.add_node({1, 0, 0});
    graph.add_node({5, 5, 0});
    graph.add_edge({EdgeKind::odometry, 0, 1, {1, 0, 0}});
    graph.set_anchor({0, {}});
    CHECK_THROWS_AS(optimize(graph), GraphError);
}

TEST_CASE("front end builds one node per pose and one edge per constraint") {
    const std::vector<Pose2> deltas(9, Pose2{0.5, 0.0, 0.1});
    std::vector<std::string> diag;
    const std::vector<LoopConstraint> loops{{0, 9, {0, 0, 0}, 1.0}, {2, 42, {}, 1.0}, {3, 3, {}, 1.0}};
    const auto graph = build_graph_front_end(deltas, loops, {}, &diag);
    CHECK(graph.nodes().size() == 10);
    CHECK(graph.edges().size() == 10);
    CHECK(graph.loop_edge_count() == 1);
    CHECK(diag.size() == 2);
    CHECK(diag[0].find("42") != std::string::npos);
    Pose2 p{};
    for (std::size_t i = 1; i < graph.nodes().size(); ++i) {
        p = compose(p, deltas[i - 1]);
        CHECK(max_abs_diff(graph.nodes()[i].estimate, p) < 1e-12);
    }
    CHECK(graph.anchor().node_id == 0);
}

TEST_CASE("graph text round trip is exact") {
    auto graph = noisy_square(4, 0.05, 21).graph;
    optimize(graph);
    std::stringstream ss;
    write_graph(ss, graph);
    const auto back = read_graph(ss);
    REQUIRE(back.nodes().size() == graph.nodes().size());
    REQUIRE(back.edges().size() == graph.edges().size());
    for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
        CHECK(back.nodes()[i].estimate == graph.nodes()[i].estimate);
    }
    for (std::size_t i = 0; i < graph.edges().size(); ++i) {
        CHECK(back.edges()[i].kind == graph.edges()[i].kind);
        CHECK(back.edges()[i].from == graph.edges()[i].from);
        CHECK(back.edges()[i].measurement == graph.edges()[i].measurement);
        CHECK(back.edges()[i].information == graph.edges()[i].information);
    }
    CHECK(back.anchor().information == graph.anchor().information);
    CHECK(objective(back) == objective(graph));
}

TEST_CASE("SE2 records are accepted") {
    std::istringstream in(
        "VERTEX_SE2 0 0 0 0\n"
        "VERTEX_SE2 1 1 0 0\n"
        "VERTEX_SE2 2 1 1 1.57\n"
        "EDGE_SE2 0 1 1 0 0 1 0 0 1 0 1\n"
        "EDGE_SE2 1 2 0 1 1.57 1 0 0 1 0 1\n"
        "EDGE_SE2 0 2 1 1 1.57 1 0 0 1 0 1\n");
    const auto g = read_graph(in);
    CHECK(g.nodes().size() == 3);
    CHECK(g.loop_edge_count() == 1);
    CHECK(g.anchor().node_id == 0);
    CHECK(g.anchor().prior == g.nodes()[0].estimate);
}

TEST_CASE("malformed graph text is rejected") {
    std::istringstream bad_kind("VERTEX 0 0 0 0\nVERTEX 1 0 0 0\nEDGE wormhole 0 1 0 0 0 1 0 0 1 0 1\n");
    CHECK_THROWS(read_graph(bad_kind));
    std::istringstream short_line("VERTEX 0 0 0\n");
    CHECK_THROWS(read_graph(short_line));
}

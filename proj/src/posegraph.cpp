#include "slam/posegraph.hpp"

#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace slam {

const char* to_string(EdgeKind kind) {
    return kind == EdgeKind::odometry ? "odometry" : "loop";
}

EdgeKind edge_kind_from_string(const std::string& s) {
    if (s == "odometry") {
        return EdgeKind::odometry;
    }
    if (s == "loop") {
        return EdgeKind::loop;
    }
    throw GraphError("unknown edge kind '" + s + "'");
}

bool is_valid_information(const Matrix3& m) {
    if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        return false;
    }
    Eigen::LLT<Matrix3> llt(m);
    return llt.info() == Eigen::Success;
}

int PoseGraph::add_node(const Pose2& estimate) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({id, estimate});
    return id;
}

void PoseGraph::add_edge(const GraphEdge& edge) {
    const int n = static_cast<int>(nodes_.size());
    if (edge.from == edge.to) {
        throw GraphError("edge " + std::to_string(edge.from) + "->" + std::to_string(edge.to) + " is a self-loop");
    }
    if (edge.from < 0 || edge.to < 0 || edge.from >= n || edge.to >= n) {
        throw GraphError("edge " + std::to_string(edge.from) + "->" + std::to_string(edge.to) +
                         " references an unknown node");
    }
    if (!is_valid_information(edge.information)) {
        throw GraphError("edge information must be symmetric positive definite");
    }
    edges_.push_back(edge);
}

void PoseGraph::set_anchor(const Anchor& anchor) {
    anchor_ = anchor;
}

std::size_t PoseGraph::loop_edge_count() const {
    std::size_t n = 0;
    for (const auto& e : edges_) {
        n += e.kind == EdgeKind::loop ? 1 : 0;
    }
    return n;
}

void PoseGraph::validate() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != static_cast<int>(i)) {
            throw GraphError("node ids must be dense from 0");
        }
    }
    const int n = static_cast<int>(nodes_.size());
    for (const auto& e : edges_) {
        if (e.from == e.to || e.from < 0 || e.to < 0 || e.from >= n || e.to >= n) {
            throw GraphError("edge references an unknown node or is a self-loop");
        }
        if (!is_valid_information(e.information)) {
            throw GraphError("edge information must be symmetric positive definite");
        }
    }
    if (n > 0 && (anchor_.node_id < 0 || anchor_.node_id >= n)) {
        throw GraphError("anchor references an unknown node");
    }
}

Vector3 residual(const GraphEdge& edge, const Pose2& from, const Pose2& to) {
    const Pose2 r = between(between(from, to), edge.measurement);
    return {r.x, r.y, r.theta};
}

ResidualJacobians residual_jacobians(const GraphEdge& edge, const Pose2& a, const Pose2& b) {
    // r_t = R(-phi) z_t - R(-theta_b) (t_b - t_a),  r_theta = z_theta - theta_b + theta_a,
    // with phi = theta_b - theta_a. dR(alpha)/dalpha = R(alpha) S, S = [0 -1; 1 0].
    const double phi = b.theta - a.theta;
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double cb = std::cos(b.theta), sb = std::sin(b.theta);
    Eigen::Matrix2d rp_t;  // R(-phi)
    rp_t << cp, sp, -sp, cp;
    Eigen::Matrix2d rb_t;  // R(-theta_b)
    rb_t << cb, sb, -sb, cb;
    Eigen::Matrix2d skew;
    skew << 0.0, -1.0, 1.0, 0.0;
    const Eigen::Vector2d z(edge.measurement.x, edge.measurement.y);
    const Eigen::Vector2d dt(b.x - a.x, b.y - a.y);

    const Eigen::Vector2d d_phi = -rp_t * skew * z;   // d/dphi of R(-phi) z
    const Eigen::Vector2d d_thb = rb_t * skew * dt;    // d/dtheta_b of -R(-theta_b) dt

    ResidualJacobians j;
    j.d_from.setZero();
    j.d_to.setZero();
    j.d_from.block<2, 2>(0, 0) = rb_t;
    j.d_from.block<2, 1>(0, 2) = -d_phi;
    j.d_from(2, 2) = 1.0;
    j.d_to.block<2, 2>(0, 0) = -rb_t;
    j.d_to.block<2, 1>(0, 2) = d_phi + d_thb;
    j.d_to(2, 2) = -1.0;
    return j;
}

Vector3 anchor_residual(const Anchor& anchor, const Pose2& node) {
    return {node.x - anchor.prior.x, node.y - anchor.prior.y, wrap_angle(node.theta - anchor.prior.theta)};
}

double objective(const PoseGraph& graph) {
    const auto& nodes = graph.nodes();
    if (nodes.empty()) {
        return 0.0;
    }
    const auto& anchor = graph.anchor();
    const Vector3 ra = anchor_residual(anchor, nodes[anchor.node_id].estimate);
    double j = ra.dot(anchor.information * ra);
    for (const auto& e : graph.edges()) {
        const Vector3 r = residual(e, nodes[e.from].estimate, nodes[e.to].estimate);
        j += r.dot(e.information * r);
    }
    return j;
}

namespace {

struct Linearization {
    Eigen::SparseMatrix<double> h;
    Eigen::VectorXd b;
};

Linearization linearize(const PoseGraph& graph) {
    const auto& nodes = graph.nodes();
    const auto n = static_cast<Eigen::Index>(3 * nodes.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges().size() * 36 + 9);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

    auto add_block = [&](int r, int c, const Matrix3& m) {
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < 3; ++k) {
                triplets.emplace_back(3 * r + i, 3 * c + k, m(i, k));
            }
        }
    };

    const auto& anchor = graph.anchor();
    const Vector3 ra = anchor_residual(anchor, nodes[anchor.node_id].estimate);
    add_block(anchor.node_id, anchor.node_id, anchor.information);
    b.segment<3>(3 * anchor.node_id) += anchor.information * ra;

    for (const auto& e : graph.edges()) {
        const Pose2& a = nodes[e.from].estimate;
        const Pose2& c = nodes[e.to].estimate;
        const Vector3 r = residual(e, a, c);
        const auto jac = residual_jacobians(e, a, c);
        const Matrix3 ja_t_info = jac.d_from.transpose() * e.information;
        const Matrix3 jb_t_info = jac.d_to.transpose() * e.information;
        add_block(e.from, e.from, ja_t_info * jac.d_from);
        add_block(e.from, e.to, ja_t_info * jac.d_to);
        add_block(e.to, e.from, jb_t_info * jac.d_from);
        add_block(e.to, e.to, jb_t_info * jac.d_to);
        b.segment<3>(3 * e.from) += ja_t_info * r;
        b.segment<3>(3 * e.to) += jb_t_info * r;
    }

    Linearization lin;
    lin.h.resize(n, n);
    lin.h.setFromTriplets(triplets.begin(), triplets.end());
    lin.b = std::move(b);
    return lin;
}

std::vector<PoseNode> apply_increment(const std::vector<PoseNode>& nodes, const Eigen::VectorXd& delta, double scale) {
    std::vector<PoseNode> out = nodes;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(3 * i);
        const Pose2& p = nodes[i].estimate;
        out[i].estimate = Pose2{p.x + scale * delta(k), p.y + scale * delta(k + 1), p.theta + scale * delta(k + 2)};
    }
    return out;
}

Eigen::VectorXd solve_normal_equations(const Linearization& lin) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> solver;
    solver.compute(lin.h);
    if (solver.info() != Eigen::Success) {
        throw GraphError("optimize: normal matrix factorization failed (unobservable graph)");
    }
    const Eigen::VectorXd d = solver.vectorD();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    if (d.minCoeff() <= 1e-13 * scale) {
        throw GraphError("optimize: normal matrix is singular; some nodes are not constrained (unobservable graph)");
    }
    Eigen::VectorXd delta = solver.solve(-lin.b);
    if (!delta.allFinite()) {
        throw GraphError("optimize: non-finite increment (unobservable graph)");
    }
    return delta;
}

}  // namespace

OptimizeStats optimize(PoseGraph& graph, const OptimizeOptions& options) {
    graph.validate();
    OptimizeStats stats;
    stats.j_initial = objective(graph);
    stats.j_final = stats.j_initial;
    stats.j_history.push_back(stats.j_initial);
    if (graph.nodes().empty()) {
        return stats;
    }

    double step = options.gd_initial_step;
    double j_current = stats.j_initial;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        const Linearization lin = linearize(graph);
        Eigen::VectorXd delta;
        if (options.method == OptimizerMethod::gauss_newton) {
            delta = solve_normal_equations(lin);
            step = 1.0;
        } else {
            delta = -lin.b;  // steepest descent direction of J/2
        }

        bool accepted = false;
        double j_new = j_current;
        std::vector<PoseNode> candidate;
        double scale = step;
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            candidate = apply_increment(graph.nodes(), delta, scale);
            PoseGraph trial = graph;
            trial.nodes() = candidate;
            j_new = objective(trial);
            if (j_new <= j_current) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            break;
        }
        graph.nodes() = std::move(candidate);
        ++stats.iterations;
        stats.j_history.push_back(j_new);
        const double change = j_current - j_new;
        j_current = j_new;
        if (options.method == OptimizerMethod::gradient_descent) {
            step = scale * 2.0;  // let the step grow back after successful moves
        }
        if (std::abs(change) < options.tol) {
            break;
        }
    }
    stats.j_final = j_current;
    return stats;
}

PoseGraph build_graph_front_end(std::span<const Pose2> odometry_deltas, std::span<const LoopConstraint> loops,
                                const FrontEndConfig& config, std::vector<std::string>* diagnostics) {
    PoseGraph graph;
    Pose2 pose = config.origin;
    graph.add_node(pose);
    for (const auto& d : odometry_deltas) {
        pose = compose(pose, d);
        const int id = graph.add_node(pose);
        graph.add_edge({EdgeKind::odometry, id - 1, id, d, config.odometry_information});
    }
    const int n = static_cast<int>(graph.nodes().size());
    for (const auto& lc : loops) {
        if (lc.from_id < 0 || lc.to_id < 0 || lc.from_id >= n || lc.to_id >= n || lc.from_id == lc.to_id) {
            if (diagnostics) {
                diagnostics->push_back("rejected loop constraint " + std::to_string(lc.from_id) + "->" +
                                       std::to_string(lc.to_id) + ": unknown node");
            }
            continue;
        }
        graph.add_edge({EdgeKind::loop, lc.from_id, lc.to_id, lc.relative, config.loop_information});
    }
    graph.set_anchor({0, config.origin, config.anchor_information});
    return graph;
}

PoseGraph embed_chain(const Chain1D& chain) {
    // A motion or measurement only constrains x; y and theta get unit
    // information so every 3x3 block stays positive definite.
    PoseGraph graph;
    const std::size_t n_states = chain.state_count();
    for (std::size_t t = 0; t < n_states; ++t) {
        graph.add_node({0.0, 0.0, 0.0});
    }
    std::map<int, int> landmark_node;
    for (const auto& m : chain.measurements) {
        landmark_node.emplace(m.landmark, 0);
    }
    for (auto& [id, node] : landmark_node) {
        node = graph.add_node({0.0, 0.0, 0.0});
    }
    for (std::size_t t = 1; t < n_states; ++t) {
        const auto& mo = chain.motions[t - 1];
        GraphEdge e{EdgeKind::odometry, static_cast<int>(t - 1), static_cast<int>(t), {mo.u, 0.0, 0.0},
                    Vector3(1.0 / (mo.sigma * mo.sigma), 1.0, 1.0).asDiagonal()};
        graph.add_edge(e);
    }
    for (const auto& m : chain.measurements) {
        // z = m - x  <=>  landmark node sits at +z from position node.
        GraphEdge e{EdgeKind::loop, static_cast<int>(m.t), landmark_node.at(m.landmark), {m.z, 0.0, 0.0},
                    Vector3(1.0 / (m.sigma * m.sigma), 1.0, 1.0).asDiagonal()};
        graph.add_edge(e);
    }
    graph.set_anchor({0, {chain.prior_mean, 0.0, 0.0}, Vector3(chain.prior_info, 1.0, 1.0).asDiagonal()});
    return graph;
}

}  // namespace slam

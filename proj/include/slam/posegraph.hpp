#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slam/chain1d.hpp"
#include "slam/geometry.hpp"

namespace slam {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

enum class EdgeKind { odometry, loop };

const char* to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(const std::string& s);

struct PoseNode {
    int id{0};
    Pose2 estimate;
};

/// Relative-pose constraint. The information matrix plays the role of the
/// inverse motion covariance for odometry edges and the inverse measurement
/// covariance for loop edges.
struct GraphEdge {
    EdgeKind kind{EdgeKind::odometry};
    int from{0};
    int to{0};
    Pose2 measurement;
    Matrix3 information{Matrix3::Identity()};
};

/// Prior on one node; fixes the gauge.
struct Anchor {
    int node_id{0};
    Pose2 prior;
    Matrix3 information{Matrix3::Identity() * 1e6};
};

/// Accepted loop closure between two graph nodes (from < to).
struct LoopConstraint {
    int from_id{0};
    int to_id{0};
    Pose2 relative;  // pose of to_id in the frame of from_id
    double score{0.0};
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PoseGraph {
public:
    /// Appends a node with the next dense id.
    int add_node(const Pose2& estimate);
    /// Validates and appends an edge; throws GraphError on a bad edge.
    void add_edge(const GraphEdge& edge);
    void set_anchor(const Anchor& anchor);

    const std::vector<PoseNode>& nodes() const { return nodes_; }
    std::vector<PoseNode>& nodes() { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const Anchor& anchor() const { return anchor_; }
    std::size_t loop_edge_count() const;

    /// Throws GraphError when ids are not dense, an edge is invalid or the
    /// anchor references a missing node.
    void validate() const;

private:
    std::vector<PoseNode> nodes_;
    std::vector<GraphEdge> edges_;
    Anchor anchor_;
};

/// True when m is symmetric (1e-12) and positive definite.
bool is_valid_information(const Matrix3& m);

/// Residual of a relative constraint: between(between(from, to), measurement)
/// as (dx, dy, dtheta) with dtheta wrapped.
Vector3 residual(const GraphEdge& edge, const Pose2& from, const Pose2& to);

struct ResidualJacobians {
    Matrix3 d_from;
    Matrix3 d_to;
};

/// Analytic derivatives of residual() with respect to (x, y, theta) of both
/// endpoints.
ResidualJacobians residual_jacobians(const GraphEdge& edge, const Pose2& from, const Pose2& to);

/// (x - prior.x, y - prior.y, wrap(theta - prior.theta)).
Vector3 anchor_residual(const Anchor& anchor, const Pose2& node);

/// Anchor term plus the information-weighted squared residual of every edge.
double objective(const PoseGraph& graph);

enum class OptimizerMethod { gauss_newton, gradient_descent };

struct OptimizeOptions {
    OptimizerMethod method{OptimizerMethod::gauss_newton};
    double tol{1e-9};
    int max_iter{50};
    int max_halvings{10};
    double gd_initial_step{1.0};  // gradient descent only
};

struct OptimizeStats {
    int iterations{0};
    double j_initial{0.0};
    double j_final{0.0};
    std::vector<double> j_history;  // objective after every accepted iteration, starting with j_initial
};

/// Minimizes objective() in place. A step that would increase the objective
/// is halved up to max_halvings times before the solver gives up, so
/// j_final <= j_initial always holds. Throws GraphError when the normal
/// matrix is singular.
OptimizeStats optimize(PoseGraph& graph, const OptimizeOptions& options = {});

struct FrontEndConfig {
    Matrix3 odometry_information{Vector3(50.0, 50.0, 100.0).asDiagonal()};
    Matrix3 loop_information{Vector3(100.0, 100.0, 200.0).asDiagonal()};
    Matrix3 anchor_information{Matrix3::Identity() * 1e6};
    Pose2 origin;
};

/// One node per time step initialized by dead reckoning, one odometry edge
/// per delta, one loop edge per valid loop constraint, anchored at node 0.
/// Constraints naming unknown nodes are skipped and described in diagnostics.
PoseGraph build_graph_front_end(std::span<const Pose2> odometry_deltas, std::span<const LoopConstraint> loops,
                                const FrontEndConfig& config = {}, std::vector<std::string>* diagnostics = nullptr);

/// Embeds a scalar chain in SE(2) along the x axis: positions and landmarks
/// become pose nodes with theta = 0, motions and measurements become edges.
/// Node ids: positions first, then landmarks in ascending landmark id.
PoseGraph embed_chain(const Chain1D& chain);

}  // namespace slam

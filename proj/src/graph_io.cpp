#include "slam/graph_io.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace slam {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_upper(std::ostream& out, const Matrix3& m) {
    out << ' ' << num(m(0, 0)) << ' ' << num(m(0, 1)) << ' ' << num(m(0, 2)) << ' ' << num(m(1, 1)) << ' '
        << num(m(1, 2)) << ' ' << num(m(2, 2));
}

Matrix3 read_upper(std::istringstream& in) {
    double i11, i12, i13, i22, i23, i33;
    if (!(in >> i11 >> i12 >> i13 >> i22 >> i23 >> i33)) {
        throw GraphError("missing information entries");
    }
    Matrix3 m;
    m << i11, i12, i13, i12, i22, i23, i13, i23, i33;
    return m;
}

}  // namespace

void write_graph(std::ostream& out, const PoseGraph& graph) {
    for (const auto& n : graph.nodes()) {
        out << "VERTEX " << n.id << ' ' << num(n.estimate.x) << ' ' << num(n.estimate.y) << ' '
            << num(n.estimate.theta) << '\n';
    }
    for (const auto& e : graph.edges()) {
        out << "EDGE " << to_string(e.kind) << ' ' << e.from << ' ' << e.to << ' ' << num(e.measurement.x) << ' '
            << num(e.measurement.y) << ' ' << num(e.measurement.theta);
        write_upper(out, e.information);
        out << '\n';
    }
    if (!graph.nodes().empty()) {
        const auto& a = graph.anchor();
        out << "ANCHOR " << a.node_id << ' ' << num(a.prior.x) << ' ' << num(a.prior.y) << ' ' << num(a.prior.theta);
        write_upper(out, a.information);
        out << '\n';
    }
}

PoseGraph read_graph(std::istream& in) {
    std::map<int, Pose2> vertices;
    std::vector<GraphEdge> edges;
    std::optional<Anchor> anchor;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        try {
            if (tag == "VERTEX" || tag == "VERTEX_SE2") {
                int id;
                double x, y, th;
                if (!(ls >> id >> x >> y >> th)) {
                    throw GraphError("malformed vertex");
                }
                if (!vertices.emplace(id, Pose2{x, y, th}).second) {
                    throw GraphError("duplicate vertex id " + std::to_string(id));
                }
            } else if (tag == "EDGE" || tag == "EDGE_SE2") {
                GraphEdge e;
                std::string kind;
                if (tag == "EDGE" && !(ls >> kind)) {
                    throw GraphError("missing edge kind");
                }
                double dx, dy, dth;
                if (!(ls >> e.from >> e.to >> dx >> dy >> dth)) {
                    throw GraphError("malformed edge");
                }
                e.kind = tag == "EDGE" ? edge_kind_from_string(kind)
                                       : (e.to == e.from + 1 ? EdgeKind::odometry : EdgeKind::loop);
                e.measurement = Pose2{dx, dy, dth};
                e.information = read_upper(ls);
                edges.push_back(e);
            } else if (tag == "ANCHOR") {
                Anchor a;
                double x, y, th;
                if (!(ls >> a.node_id >> x >> y >> th)) {
                    throw GraphError("malformed anchor");
                }
                a.prior = Pose2{x, y, th};
                a.information = read_upper(ls);
                anchor = a;
            } else {
                throw GraphError("unknown record '" + tag + "'");
            }
        } catch (const GraphError& e) {
            throw GraphError("graph line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    PoseGraph graph;
    int expected = 0;
    for (const auto& [id, pose] : vertices) {
        if (id != expected++) {
            throw GraphError("graph: vertex ids must be dense from 0");
        }
        graph.add_node(pose);
    }
    for (const auto& e : edges) {
        graph.add_edge(e);
    }
    if (anchor) {
        graph.set_anchor(*anchor);
    } else if (!vertices.empty()) {
        graph.set_anchor({0, vertices.begin()->second, Matrix3::Identity() * 1e6});
    }
    graph.validate();
    return graph;
}

void save_graph(const std::filesystem::path& path, const PoseGraph& graph) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_graph(out, graph);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

PoseGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_graph(in);
}

}  // namespace slam

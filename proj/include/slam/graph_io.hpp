#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "slam/posegraph.hpp"

namespace slam {

/// Line-oriented pose-graph text format:
///
///   VERTEX id x y theta
///   EDGE kind from to dx dy dtheta i11 i12 i13 i22 i23 i33
///   ANCHOR id x y theta i11 i12 i13 i22 i23 i33
///
/// kind is "odometry" or "loop". Reading also accepts VERTEX_SE2 / EDGE_SE2
/// records; their edges are odometry when to == from + 1, loop otherwise.
/// Without an ANCHOR record node 0 is anchored at its initial estimate.
/// Numbers are written with 17 significant digits, so write/read is exact.
void write_graph(std::ostream& out, const PoseGraph& graph);
PoseGraph read_graph(std::istream& in);

void save_graph(const std::filesystem::path& path, const PoseGraph& graph);
PoseGraph load_graph(const std::filesystem::path& path);

}  // namespace slam

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "slam/gridmap.hpp"
#include "slam/metrics.hpp"
#include "slam/posegraph.hpp"
#include "slam/session.hpp"

namespace slam {

inline constexpr int kSessionFormatVersion = 1;

/// Everything persisted for a session directory:
///   session.json  {format, config, metrics}
///   log.jsonl     one LogRecord per line
///   map.pgm/.yaml occupancy grid export (absent for localization runs)
///   graph.txt     pose graph (graphslam only)
struct SessionArtifacts {
    nlohmann::json config;
    Metrics metrics;
    std::vector<LogRecord> log;
    std::optional<OccupancyGrid> map;  // on load: reconstructed from map.pgm
    std::optional<PoseGraph> graph;
};

/// write_log=false leaves an existing log.jsonl (streamed during the run) alone.
void save_session(const std::filesystem::path& dir, const SessionArtifacts& artifacts, bool write_log = true);

/// Throws SessionError naming the missing file, the offending log line, or a
/// format version mismatch.
SessionArtifacts load_session(const std::filesystem::path& dir);

/// Verifies dir can be created and written to; throws SessionError otherwise.
void ensure_writable_dir(const std::filesystem::path& dir);

}  // namespace slam

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "slam/config.hpp"
#include "slam/engine.hpp"
#include "slam/metrics.hpp"
#include "slam/scripts.hpp"
#include "slam/sim.hpp"
#include "slam/world.hpp"

namespace slam {

/// One step of a session log.
struct LogRecord {
    std::size_t step{0};
    double t{0.0};
    Twist cmd;
    OdometryDelta odom_delta;
    Pose2 odom_pose;
    LaserScan scan;
    Pose2 est_pose;
    Pose2 gt_pose;
    nlohmann::json events = nlohmann::json::array();

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

nlohmann::json record_to_json(const LogRecord& r);
LogRecord record_from_json(const nlohmann::json& j);

class SessionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulator plus SLAM engine advanced one command at a time. Used by scripted
/// runs and by the teleop bridge alike.
class MappingSession {
public:
    MappingSession(SessionConfig config, WorldModel world, std::optional<OccupancyGrid> prior_map = std::nullopt);

    /// Steps the simulator with cmd (clamped to the limits), scans, feeds the
    /// engine and appends a log record.
    const LogRecord& tick(const Twist& cmd);

    /// Each record is written as one JSON line and flushed.
    void set_log_sink(std::ostream* sink) { sink_ = sink; }

    const SessionConfig& config() const { return config_; }
    const WorldModel& world() const { return world_; }
    const SimState& sim() const { return sim_; }
    const SlamEngine& engine() const { return *engine_; }
    const LaserScan& last_scan() const { return last_scan_; }
    const std::vector<LogRecord>& log() const { return log_; }
    const std::vector<LoopClosureEvent>& closures() const { return closures_; }
    const std::vector<OptimizeStats>& optimizations() const { return optimizations_; }
    std::size_t step_count() const { return log_.size(); }

    /// Ground truth and dead-reckoned poses for steps 0..n.
    const std::vector<Pose2>& truth() const { return truth_; }
    const std::vector<Pose2>& odometry() const { return odometry_; }

    Metrics metrics(double wall_time = 0.0) const;

private:
    SessionConfig config_;
    WorldModel world_;
    SimState sim_;
    std::unique_ptr<SlamEngine> engine_;
    LaserScan last_scan_;
    std::vector<LogRecord> log_;
    std::vector<LoopClosureEvent> closures_;
    std::vector<OptimizeStats> optimizations_;
    std::vector<Pose2> truth_;
    std::vector<Pose2> odometry_;
    std::ostream* sink_{nullptr};
};

struct RunResult {
    std::vector<LogRecord> log;
    OccupancyGrid map;
    std::optional<PoseGraph> graph;
    Metrics metrics;
    std::vector<LoopClosureEvent> closures;
    std::vector<OptimizeStats> optimizations;
    std::vector<Pose2> truth;
    std::vector<Pose2> estimate;
    std::vector<Pose2> odometry;
};

/// Runs a scripted session to completion. With write_outputs the session
/// directory (config.out) is created and filled; configuration problems are
/// reported before the simulation starts.
RunResult run_mapping(const SessionConfig& config, bool write_outputs = true);

}  // namespace slam

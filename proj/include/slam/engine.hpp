#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "slam/config.hpp"
#include "slam/fastslam.hpp"
#include "slam/gridmap.hpp"
#include "slam/loopclosure.hpp"
#include "slam/posegraph.hpp"
#include "slam/sim.hpp"

namespace slam {

/// One simulator step as seen by a SLAM engine.
struct StepInput {
    std::size_t step{0};  // 1-based; step 0 is the initial scan
    OdometryDelta delta;
    Pose2 odom_pose;
    Pose2 true_pose;  // used only by the known-pose engine
    const LaserScan* scan{nullptr};
};

struct LoopClosureEvent {
    LoopConstraint constraint;
    std::size_t from_step{0};
    std::size_t to_step{0};
};

struct OptimizationEvent {
    OptimizeStats stats;
};

struct StepEvents {
    bool resampled{false};
    bool degenerate{false};
    bool lost{false};
    std::vector<LoopClosureEvent> loop_closures;
    std::vector<OptimizationEvent> optimizations;
};

struct ParticleView {
    Pose2 pose;
    double weight{0.0};
};

class SlamEngine {
public:
    virtual ~SlamEngine() = default;

    /// Integrates the scan taken at the start pose before any motion.
    virtual void start(const Pose2& start, const LaserScan& scan) = 0;
    virtual StepEvents process(const StepInput& input) = 0;

    virtual Pose2 estimate() const = 0;
    /// Current map estimate.
    virtual const OccupancyGrid& map() const = 0;
    /// Best trajectory estimate for steps 0..n, after all corrections so far.
    virtual std::vector<Pose2> trajectory() const = 0;
    virtual std::vector<ParticleView> particles() const { return {}; }
    virtual const PoseGraph* graph() const { return nullptr; }
    virtual std::size_t loop_closure_count() const { return 0; }
};

/// Builds the engine for config.mode. prior_map is required for localization.
std::unique_ptr<SlamEngine> make_engine(const SessionConfig& config, const WorldModel& world,
                                        const std::optional<OccupancyGrid>& prior_map = std::nullopt);

/// Grid sized for the world with the configured resolution and margin.
OccupancyGrid blank_grid(const SessionConfig& config, const WorldModel& world);

/// Pose graph over keyframes with appearance-based loop closure; the map is
/// rebuilt from all scans at corrected poses after each optimization.
class GraphSlamEngine : public SlamEngine {
public:
    GraphSlamEngine(const SessionConfig& config, OccupancyGrid blank);

    void start(const Pose2& start, const LaserScan& scan) override;
    StepEvents process(const StepInput& input) override;
    Pose2 estimate() const override;
    const OccupancyGrid& map() const override { return map_; }
    std::vector<Pose2> trajectory() const override;
    const PoseGraph* graph() const override { return &graph_; }
    std::size_t loop_closure_count() const override { return closures_; }

private:
    struct StepRecord {
        int keyframe;         // node index the step hangs off
        Pose2 from_keyframe;  // odometry relative to that keyframe
        LaserScan scan;
    };
    void add_keyframe(std::size_t step, const Pose2& odom, StepEvents& events);
    Pose2 pose_of(const StepRecord& r) const;
    void rebuild_map();

    SessionConfig config_;
    OccupancyGrid blank_;
    OccupancyGrid map_;
    PoseGraph graph_;
    LoopMemory memory_;
    std::vector<StepRecord> steps_;
    std::vector<Pose2> keyframe_odom_;
    std::vector<std::size_t> keyframe_step_;
    std::size_t closures_{0};
};

}  // namespace slam

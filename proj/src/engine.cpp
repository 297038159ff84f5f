#include "slam/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace slam {

OccupancyGrid blank_grid(const SessionConfig& config, const WorldModel& world) {
    return OccupancyGrid::for_bounds(world.bounds, config.grid_resolution, config.grid_margin);
}

namespace {

class FastSlamEngine : public SlamEngine {
public:
    FastSlamEngine(const SessionConfig& config, OccupancyGrid blank) : config_(config), blank_(std::move(blank)) {}

    void start(const Pose2& start, const LaserScan& scan) override {
        filter_.emplace(config_.fastslam, blank_, start, config_.seed);
        filter_->initialize_map(scan);
    }

    StepEvents process(const StepInput& in) override {
        const auto report = filter_->step(in.delta, *in.scan);
        StepEvents ev;
        ev.resampled = report.resampled;
        ev.degenerate = report.degenerate;
        return ev;
    }

    Pose2 estimate() const override { return filter_->best().pose; }
    const OccupancyGrid& map() const override { return filter_->best().map; }
    std::vector<Pose2> trajectory() const override { return filter_->best().trajectory; }

    std::vector<ParticleView> particles() const override {
        std::vector<ParticleView> out;
        for (const auto& p : filter_->particles().particles) {
            out.push_back({p.pose, p.weight});
        }
        return out;
    }

private:
    SessionConfig config_;
    OccupancyGrid blank_;
    std::optional<FastSlam> filter_;
};

class LocalizationEngine : public SlamEngine {
public:
    LocalizationEngine(const SessionConfig& config, OccupancyGrid map) : config_(config), map_(std::move(map)) {}

    void start(const Pose2& start, const LaserScan&) override {
        mcl_ = std::make_unique<MonteCarloLocalizer>(config_.localization, map_, start, config_.seed);
        trajectory_ = {mcl_->estimate()};
    }

    StepEvents process(const StepInput& in) override {
        const auto est = mcl_->step(in.delta, *in.scan);
        trajectory_.push_back(est.pose);
        StepEvents ev;
        ev.lost = est.lost;
        return ev;
    }

    Pose2 estimate() const override { return trajectory_.back(); }
    const OccupancyGrid& map() const override { return map_; }
    std::vector<Pose2> trajectory() const override { return trajectory_; }

    std::vector<ParticleView> particles() const override {
        std::vector<ParticleView> out;
        const auto poses = mcl_->poses();
        const auto weights = mcl_->weights();
        for (std::size_t i = 0; i < poses.size(); ++i) {
            out.push_back({poses[i], weights[i]});
        }
        return out;
    }

private:
    SessionConfig config_;
    OccupancyGrid map_;
    std::unique_ptr<MonteCarloLocalizer> mcl_;
    std::vector<Pose2> trajectory_;
};

class KnownPoseEngine : public SlamEngine {
public:
    KnownPoseEngine(const SessionConfig& config, OccupancyGrid blank) : config_(config), map_(std::move(blank)) {}

    void start(const Pose2& start, const LaserScan& scan) override {
        trajectory_ = {start};
        update_occupancy(map_, start, scan, config_.sensor);
    }

    StepEvents process(const StepInput& in) override {
        trajectory_.push_back(in.true_pose);
        update_occupancy(map_, in.true_pose, *in.scan, config_.sensor);
        return {};
    }

    Pose2 estimate() const override { return trajectory_.back(); }
    const OccupancyGrid& map() const override { return map_; }
    std::vector<Pose2> trajectory() const override { return trajectory_; }

private:
    SessionConfig config_;
    OccupancyGrid map_;
    std::vector<Pose2> trajectory_;
};

}  // namespace

// ---------------------------------------------------------------------------
// GraphSLAM

GraphSlamEngine::GraphSlamEngine(const SessionConfig& config, OccupancyGrid blank)
    : config_(config), blank_(blank), map_(std::move(blank)), memory_(config.graphslam.detect) {}

void GraphSlamEngine::start(const Pose2& start, const LaserScan& scan) {
    graph_ = PoseGraph{};
    graph_.add_node(start);
    graph_.set_anchor({0, start, config_.graphslam.front_end.anchor_information});
    keyframe_odom_ = {start};
    keyframe_step_ = {0};
    steps_ = {{0, Pose2{}, scan}};
    memory_ = LoopMemory(config_.graphslam.detect);
    memory_.insert(0, describe(scan), scan, 0);
    map_ = blank_;
    update_occupancy(map_, start, scan, config_.sensor);
}

Pose2 GraphSlamEngine::pose_of(const StepRecord& r) const {
    return compose(graph_.nodes()[r.keyframe].estimate, r.from_keyframe);
}

Pose2 GraphSlamEngine::estimate() const {
    return pose_of(steps_.back());
}

std::vector<Pose2> GraphSlamEngine::trajectory() const {
    std::vector<Pose2> out;
    out.reserve(steps_.size());
    for (const auto& r : steps_) {
        out.push_back(pose_of(r));
    }
    return out;
}

void GraphSlamEngine::rebuild_map() {
    map_ = blank_;
    for (const auto& r : steps_) {
        const Pose2 p = pose_of(r);
        if (map_.world_to_cell(p.x, p.y)) {
            update_occupancy(map_, p, r.scan, config_.sensor);
        }
    }
}

void GraphSlamEngine::add_keyframe(std::size_t step, const Pose2& odom, StepEvents& events) {
    const int prev = static_cast<int>(graph_.nodes().size()) - 1;
    const Pose2 rel = between(keyframe_odom_.back(), odom);
    const int id = graph_.add_node(compose(graph_.nodes()[prev].estimate, rel));
    graph_.add_edge({EdgeKind::odometry, prev, id, rel, config_.graphslam.front_end.odometry_information});
    keyframe_odom_.push_back(odom);
    keyframe_step_.push_back(step);
    steps_.back().keyframe = id;
    steps_.back().from_keyframe = Pose2{};

    const LaserScan& scan = steps_.back().scan;
    const ScanDescriptor desc = describe(scan);
    const auto candidates = memory_.detect(desc, id, step);
    bool optimized = false;
    for (const auto& cand : candidates) {
        const MemoryEntry* entry = memory_.find(cand.node_id);
        if (entry == nullptr) {
            continue;
        }
        const Pose2& cand_pose = graph_.nodes()[cand.node_id].estimate;
        const Pose2& cur_pose = graph_.nodes()[id].estimate;
        if (distance(cand_pose, cur_pose) > config_.graphslam.max_candidate_distance) {
            continue;
        }
        const auto result = verify(entry->scan, scan, between(cand_pose, cur_pose), config_.graphslam.verify);
        if (!result.accepted ||
            std::hypot(result.relative.x, result.relative.y) > config_.graphslam.revisit_radius) {
            continue;
        }
        LoopConstraint lc{cand.node_id, id, result.relative, result.score};
        graph_.add_edge({EdgeKind::loop, lc.from_id, lc.to_id, lc.relative, config_.graphslam.front_end.loop_information});
        ++closures_;
        events.loop_closures.push_back({lc, keyframe_step_[lc.from_id], keyframe_step_[lc.to_id]});
        events.optimizations.push_back({optimize(graph_, config_.graphslam.optimizer)});
        optimized = true;
    }
    memory_.insert(id, desc, scan, step);
    if (optimized) {
        rebuild_map();
    }
}

StepEvents GraphSlamEngine::process(const StepInput& in) {
    StepEvents events;
    const int kf = static_cast<int>(graph_.nodes().size()) - 1;
    steps_.push_back({kf, between(keyframe_odom_.back(), in.odom_pose), *in.scan});
    if (in.step % config_.graphslam.keyframe_every == 0) {
        add_keyframe(in.step, in.odom_pose, events);
    }
    if (events.optimizations.empty()) {
        const Pose2 p = estimate();
        if (map_.world_to_cell(p.x, p.y)) {
            update_occupancy(map_, p, steps_.back().scan, config_.sensor);
        }
    }
    return events;
}

std::unique_ptr<SlamEngine> make_engine(const SessionConfig& config, const WorldModel& world,
                                        const std::optional<OccupancyGrid>& prior_map) {
    switch (config.mode) {
        case Mode::fastslam: return std::make_unique<FastSlamEngine>(config, blank_grid(config, world));
        case Mode::graphslam: return std::make_unique<GraphSlamEngine>(config, blank_grid(config, world));
        case Mode::known_poses: return std::make_unique<KnownPoseEngine>(config, blank_grid(config, world));
        case Mode::localization:
            if (!prior_map) {
                throw std::invalid_argument("localization mode needs a prior map");
            }
            return std::make_unique<LocalizationEngine>(config, *prior_map);
    }
    throw std::invalid_argument("unknown mode");
}

}  // namespace slam

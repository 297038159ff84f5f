#include "slam/session.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "slam/map_export.hpp"
#include "slam/session_io.hpp"

namespace slam {

using nlohmann::json;

namespace {

json pose_json(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

Pose2 pose_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json closure_json(const LoopClosureEvent& e) {
    return {{"type", "loop_closure"},
            {"from", e.constraint.from_id},
            {"to", e.constraint.to_id},
            {"from_step", e.from_step},
            {"to_step", e.to_step},
            {"relative", pose_json(e.constraint.relative)},
            {"score", e.constraint.score}};
}

json optimization_json(const OptimizeStats& s) {
    return {{"type", "optimization"},
            {"iterations", s.iterations},
            {"j_initial", s.j_initial},
            {"j_final", s.j_final}};
}

}  // namespace

json record_to_json(const LogRecord& r) {
    return {{"step", r.step},
            {"t", r.t},
            {"cmd", {{"v", r.cmd.v}, {"w", r.cmd.w}}},
            {"odom_delta", json::array({r.odom_delta.rot1, r.odom_delta.trans, r.odom_delta.rot2})},
            {"odom_pose", pose_json(r.odom_pose)},
            {"scan",
             {{"angle_min", r.scan.angle_min},
              {"angle_increment", r.scan.angle_increment},
              {"range_max", r.scan.range_max},
              {"ranges", r.scan.ranges}}},
            {"est_pose", pose_json(r.est_pose)},
            {"gt_pose", pose_json(r.gt_pose)},
            {"events", r.events}};
}

LogRecord record_from_json(const json& j) {
    LogRecord r;
    r.step = j.at("step").get<std::size_t>();
    r.t = j.at("t").get<double>();
    r.cmd = {j.at("cmd").at("v").get<double>(), j.at("cmd").at("w").get<double>()};
    const auto& d = j.at("odom_delta");
    r.odom_delta = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
    r.odom_pose = pose_from(j.at("odom_pose"));
    const auto& s = j.at("scan");
    r.scan.angle_min = s.at("angle_min").get<double>();
    r.scan.angle_increment = s.at("angle_increment").get<double>();
    r.scan.range_max = s.at("range_max").get<double>();
    r.scan.ranges = s.at("ranges").get<std::vector<double>>();
    r.est_pose = pose_from(j.at("est_pose"));
    r.gt_pose = pose_from(j.at("gt_pose"));
    r.events = j.at("events");
    if (!r.events.is_array()) {
        throw json::type_error::create(302, "events must be an array", &j);
    }
    return r;
}

MappingSession::MappingSession(SessionConfig config, WorldModel world, std::optional<OccupancyGrid> prior_map)
    : config_(std::move(config)), world_(std::move(world)), sim_(SimState::initial(world_.spawn, config_.seed)) {
    engine_ = make_engine(config_, world_, prior_map);
    last_scan_ = raycast(world_, sim_.true_pose, config_.scan, config_.scan.sigma, sim_.sensor_rng);
    engine_->start(sim_.odom_pose, last_scan_);
    truth_.push_back(sim_.true_pose);
    odometry_.push_back(sim_.odom_pose);
}

const LogRecord& MappingSession::tick(const Twist& raw_cmd) {
    const Twist cmd = config_.limits.clamp(raw_cmd);
    const Pose2 odom_before = sim_.odom_pose;
    sim_ = step(sim_, world_, cmd, config_.dt, config_.motion_noise);
    last_scan_ = raycast(world_, sim_.true_pose, config_.scan, config_.scan.sigma, sim_.sensor_rng);

    StepInput in;
    in.step = log_.size() + 1;
    in.delta = decompose(odom_before, sim_.odom_pose);
    in.odom_pose = sim_.odom_pose;
    in.true_pose = sim_.true_pose;
    in.scan = &last_scan_;
    const StepEvents ev = engine_->process(in);

    truth_.push_back(sim_.true_pose);
    odometry_.push_back(sim_.odom_pose);

    LogRecord r;
    r.step = in.step;
    r.t = static_cast<double>(in.step) * config_.dt;
    r.cmd = cmd;
    r.odom_delta = in.delta;
    r.odom_pose = sim_.odom_pose;
    r.scan = last_scan_;
    r.est_pose = engine_->estimate();
    r.gt_pose = sim_.true_pose;
    if (ev.resampled) {
        r.events.push_back({{"type", "resample"}});
    }
    if (ev.degenerate) {
        r.events.push_back({{"type", "degenerate"}});
    }
    if (ev.lost) {
        r.events.push_back({{"type", "lost"}});
    }
    if (sim_.collided) {
        r.events.push_back({{"type", "collision"}});
    }
    for (const auto& c : ev.loop_closures) {
        closures_.push_back(c);
        r.events.push_back(closure_json(c));
    }
    for (const auto& o : ev.optimizations) {
        optimizations_.push_back(o.stats);
        r.events.push_back(optimization_json(o.stats));
    }
    log_.push_back(std::move(r));
    if (sink_ != nullptr) {
        *sink_ << record_to_json(log_.back()).dump() << '\n';
        sink_->flush();
    }
    return log_.back();
}

Metrics MappingSession::metrics(double wall_time) const {
    Metrics m;
    const auto est = engine_->trajectory();
    m.ate_rmse = ate_rmse(est, truth_);
    m.dead_reckoning_rmse = ate_rmse(odometry_, truth_);
    m.loop_closure_count = closures_.size();
    std::size_t good = 0;
    for (const auto& c : closures_) {
        if (distance(truth_.at(c.from_step), truth_.at(c.to_step)) <= 1.0) {
            ++good;
        }
    }
    m.closure_precision = closures_.empty() ? 1.0 : static_cast<double>(good) / static_cast<double>(closures_.size());
    m.cell_agreement = cell_agreement(engine_->map(), world_).fraction();
    m.steps = log_.size();
    m.wall_time = wall_time;
    return m;
}

RunResult run_mapping(const SessionConfig& config, bool write_outputs) {
    validate_config(config);
    if (config.script.empty()) {
        throw ConfigError("scripted run needs a script name");
    }
    const auto script = find_script(config.script);
    if (!script) {
        throw ConfigError("unknown script '" + config.script + "'");
    }
    WorldModel world;
    try {
        world = load_world(resolve_world_path(config.world));
    } catch (const WorldError& e) {
        throw ConfigError(e.what());
    }
    if (!script->world.empty() && script->world != world.name) {
        throw ConfigError("script '" + script->name + "' is written for world '" + script->world + "', not '" +
                          world.name + "'");
    }
    std::optional<OccupancyGrid> prior;
    if (config.mode == Mode::localization) {
        if (config.map_dir.empty()) {
            throw ConfigError("localization needs map_dir");
        }
        const auto yaml = config.map_dir / "map.yaml";
        if (!std::filesystem::exists(yaml)) {
            throw ConfigError("missing map file " + yaml.string());
        }
        prior = load_map(yaml, config.sensor);
    }
    std::ofstream log_file;
    if (write_outputs) {
        ensure_writable_dir(config.out);
        log_file.open(config.out / "log.jsonl", std::ios::binary | std::ios::trunc);
        if (!log_file) {
            throw SessionError("cannot write " + (config.out / "log.jsonl").string());
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    MappingSession session(config, world, prior);
    if (write_outputs) {
        session.set_log_sink(&log_file);
    }
    PurePursuit pilot(world.spawn, script->waypoints, config.lookahead, config.cruise_speed, config.limits);
    for (std::size_t i = 0; i < config.max_steps; ++i) {
        const Twist cmd = pilot.command(session.sim().true_pose);
        if (pilot.finished()) {
            break;
        }
        session.tick(cmd);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunResult result;
    result.log = session.log();
    result.map = session.engine().map();
    if (const auto* g = session.engine().graph()) {
        result.graph = *g;
    }
    result.metrics = session.metrics(wall);
    result.closures = session.closures();
    result.optimizations = session.optimizations();
    result.truth = session.truth();
    result.estimate = session.engine().trajectory();
    result.odometry = session.odometry();

    if (write_outputs) {
        log_file.close();
        SessionArtifacts art;
        art.config = config_to_json(config);
        art.metrics = result.metrics;
        if (config.mode != Mode::localization) {
            art.map = result.map;
        }
        art.graph = result.graph;
        save_session(config.out, art, /*write_log=*/false);
    }
    return result;
}

}  // namespace slam

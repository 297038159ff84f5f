#include "slam/bridge/control.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "slam/session_io.hpp"

namespace slam::bridge {

using nlohmann::json;

void ControlPolicy::join(ClientId id) {
    clients_.push_back(id);
    if (!controller_) {
        controller_ = id;
        last_time_.reset();
    }
}

void ControlPolicy::leave(ClientId id) {
    std::erase(clients_, id);
    if (controller_ == id) {
        controller_.reset();
        last_time_.reset();
        if (!clients_.empty()) {
            controller_ = clients_.front();
        }
    }
}

bool ControlPolicy::command(ClientId id, const Twist& cmd, double now) {
    if (controller_ != id) {
        return false;
    }
    last_ = cmd;
    last_time_ = now;
    return true;
}

Twist ControlPolicy::applied(double now) const {
    if (!last_time_ || now - *last_time_ > kDeadManTimeout) {
        return {};
    }
    return last_;
}

std::string notice(const std::string& text) { return json{{"type", "notice"}, {"text", text}}.dump(); }

BridgeCore::BridgeCore(SessionConfig config, WorldModel world, std::optional<OccupancyGrid> prior_map, Options options)
    : config_(config),
      options_(std::move(options)),
      session_(std::move(config), std::move(world), std::move(prior_map)),
      streamer_(options_.grid_max_side, options_.keyframe_every) {
    on_warning = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
    last_frame_ = streamer_.next(session_.engine().map()).keyframe;
}

std::vector<Outbound> BridgeCore::join(ClientId id) {
    control_.join(id);
    needs_keyframe_[id] = true;
    return {{id, notice(control_.is_controller(id) ? "controller" : "observer")}};
}

std::vector<Outbound> BridgeCore::leave(ClientId id) {
    const bool was_controller = control_.is_controller(id);
    control_.leave(id);
    needs_keyframe_.erase(id);
    if (was_controller && control_.controller()) {
        return {{*control_.controller(), notice("controller")}};
    }
    return {};
}

std::vector<Outbound> BridgeCore::handle(ClientId id, const std::string& text, double now) {
    json msg;
    try {
        msg = json::parse(text);
    } catch (const json::exception&) {
        throw ProtocolError("message is not valid JSON");
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
        throw ProtocolError("message needs a string 'type'");
    }
    const auto type = msg["type"].get<std::string>();
    if (type == "cmd_vel") {
        Twist cmd;
        for (const char* key : {"v", "w"}) {
            if (!msg.contains(key) || !msg[key].is_number() || !std::isfinite(msg[key].get<double>())) {
                throw ProtocolError(std::string("cmd_vel field '") + key + "' must be a finite number");
            }
        }
        cmd.v = msg["v"].get<double>();
        cmd.w = msg["w"].get<double>();
        if (!control_.command(id, cmd, now)) {
            return {{id, notice("observer")}};
        }
        return {};
    }
    if (type == "request_keyframe") {
        needs_keyframe_[id] = true;
        return {};
    }
    if (type == "save") {
        const auto dir = save();
        return {{id, json{{"type", "saved"}, {"dir", dir.string()}}.dump()}};
    }
    if (on_warning) {
        on_warning("ignoring message of unknown type '" + type + "'");
    }
    return {};
}

Snapshot BridgeCore::base_snapshot() const {
    Snapshot s;
    const auto& log = session_.log();
    s.t = log.empty() ? 0.0 : log.back().t;
    s.est_pose = session_.engine().estimate();
    s.gt_pose = session_.sim().true_pose;
    const auto& scan = session_.last_scan();
    s.scan = {scan.angle_min, scan.angle_increment, scan.ranges};
    auto particles = session_.engine().particles();
    std::stable_sort(particles.begin(), particles.end(),
                     [](const ParticleView& a, const ParticleView& b) { return a.weight > b.weight; });
    for (std::size_t i = 0; i < std::min(particles.size(), kMaxParticles); ++i) {
        const auto& p = particles[i];
        s.particles.push_back({p.pose.x, p.pose.y, p.pose.theta, p.weight});
    }
    if (const auto* g = session_.engine().graph()) {
        for (const auto& n : g->nodes()) {
            s.nodes.push_back({n.id, n.estimate.x, n.estimate.y, n.estimate.theta});
        }
        for (const auto& e : g->edges()) {
            s.edges.push_back({e.from, e.to, to_string(e.kind)});
        }
    }
    s.loop_closures = session_.engine().loop_closure_count();
    s.mode = to_string(config_.mode);
    return s;
}

Snapshot BridgeCore::current_snapshot() const {
    Snapshot s = base_snapshot();
    s.keyframe = last_frame_;
    return s;
}

std::vector<Outbound> BridgeCore::tick(double now) {
    session_.tick(control_.applied(now));
    auto frame = streamer_.next(session_.engine().map());
    last_frame_ = frame.keyframe;

    Snapshot s = base_snapshot();
    std::string delta_text;
    std::string key_text;
    std::vector<Outbound> out;
    for (auto& [id, needs] : needs_keyframe_) {
        if (needs || frame.periodic_keyframe) {
            if (key_text.empty()) {
                Snapshot k = s;
                k.keyframe = frame.keyframe;
                key_text = snapshot_to_json(k).dump();
            }
            out.push_back({id, key_text});
            needs = false;
        } else {
            if (delta_text.empty()) {
                Snapshot d = s;
                d.delta = frame.delta;
                delta_text = snapshot_to_json(d).dump();
            }
            out.push_back({id, delta_text});
        }
    }
    return out;
}

std::filesystem::path BridgeCore::save() {
    const auto dir = options_.save_root / ("session_" + std::to_string(++saves_));
    SessionArtifacts a;
    SessionConfig c = config_;
    c.out = dir;
    a.config = config_to_json(c);
    a.metrics = session_.metrics();
    a.log = session_.log();
    if (config_.mode != Mode::localization) {
        a.map = session_.engine().map();
    }
    if (const auto* g = session_.engine().graph()) {
        a.graph = *g;
    }
    save_session(dir, a);
    return dir;
}

}  // namespace slam::bridge

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slam/bridge/protocol.hpp"
#include "slam/session.hpp"

namespace slam::bridge {

using ClientId = std::uint64_t;

inline constexpr double kDeadManTimeout = 0.5;

/// First-come drive control with a dead-man timeout. Times are seconds on any
/// monotonic clock.
class ControlPolicy {
public:
    /// The first client to join holds control; when the controller leaves,
    /// control passes to the longest-connected remaining client.
    void join(ClientId id);
    void leave(ClientId id);

    std::optional<ClientId> controller() const { return controller_; }
    bool is_controller(ClientId id) const { return controller_ == id; }

    /// Returns false (command dropped) for observers.
    bool command(ClientId id, const Twist& cmd, double now);

    /// Latest controller command, or zero once it is older than the timeout.
    Twist applied(double now) const;

private:
    std::vector<ClientId> clients_;  // join order
    std::optional<ClientId> controller_;
    Twist last_{};
    std::optional<double> last_time_;
};

/// Outbound text frame for one client.
struct Outbound {
    ClientId client{0};
    std::string text;
};

/// Network-free bridge: owns the session, applies client messages and
/// produces serialized snapshots per tick.
class BridgeCore {
public:
    struct Options {
        std::filesystem::path save_root{"sessions"};
        int grid_max_side{256};
        std::size_t keyframe_every{50};
    };

    BridgeCore(SessionConfig config, WorldModel world, std::optional<OccupancyGrid> prior_map, Options options);

    /// Registers a client and returns its greeting (a control notice).
    std::vector<Outbound> join(ClientId id);
    /// Returns a notice for the client that inherits control, if any.
    std::vector<Outbound> leave(ClientId id);

    /// Handles one inbound text frame. Throws ProtocolError on violations;
    /// unknown message types are reported through the warning sink and ignored.
    std::vector<Outbound> handle(ClientId id, const std::string& text, double now);

    /// Advances the simulation by one step with the applied command and
    /// returns one snapshot per connected client.
    std::vector<Outbound> tick(double now);

    /// Snapshot of the current state, with a full keyframe.
    Snapshot current_snapshot() const;

    const MappingSession& session() const { return session_; }
    const ControlPolicy& control() const { return control_; }
    /// Server-side streamed raster after the latest tick.
    const GridKeyframe& streamed_grid() const { return last_frame_; }

    std::function<void(const std::string&)> on_warning;

private:
    Snapshot base_snapshot() const;
    std::filesystem::path save();

    SessionConfig config_;
    Options options_;
    MappingSession session_;
    ControlPolicy control_;
    GridStreamer streamer_;
    GridKeyframe last_frame_;
    std::map<ClientId, bool> needs_keyframe_;
    std::size_t saves_{0};
};

std::string notice(const std::string& text);

}  // namespace slam::bridge

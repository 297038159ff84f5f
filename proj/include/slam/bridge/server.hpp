#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "slam/bridge/control.hpp"

namespace slam::bridge {

struct ServerOptions {
    std::string address{"127.0.0.1"};
    unsigned short port{8080};  // 0 picks a free port
    std::filesystem::path ui_dir;  // served at / when it holds index.html
    double tick_hz{10.0};
    bool handle_signals{false};  // stop on SIGINT / SIGTERM
};

/// WebSocket endpoint /ws, GET /health, static UI at /. All session state is
/// touched from the single thread that calls run().
class BridgeServer {
public:
    BridgeServer(BridgeCore& core, ServerOptions options);
    ~BridgeServer();

    /// Port actually bound (valid after construction).
    unsigned short port() const;

    /// Serves until stop() is called.
    void run();
    /// Safe to call from any thread.
    void stop();

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

}  // namespace slam::bridge

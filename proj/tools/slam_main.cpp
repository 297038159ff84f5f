#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "slam/bridge/server.hpp"
#include "slam/config.hpp"
#include "slam/map_export.hpp"
#include "slam/session.hpp"
#include "slam/session_io.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
    std::string config;
    std::string world;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string script;
    std::string map_dir;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Session config (JSON)");
    cmd->add_option("--world", o.world, "World name or path");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--script", o.script, "Scripted route name");
}

slam::SessionConfig build_config(const Overrides& o) {
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream f(o.config);
        if (!f) {
            throw slam::ConfigError("cannot read config " + o.config);
        }
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw slam::ConfigError(o.config + ": " + e.what());
        }
        if (!j.is_object()) {
            throw slam::ConfigError(o.config + ": top level must be an object");
        }
    }
    if (!o.world.empty()) j["world"] = o.world;
    if (!o.mode.empty()) j["mode"] = o.mode;
    if (o.seed) j["seed"] = *o.seed;
    if (!o.out.empty()) j["out"] = o.out;
    if (!o.script.empty()) j["script"] = o.script;
    if (!o.map_dir.empty()) j["map_dir"] = o.map_dir;
    auto config = slam::config_from_json(j);
    slam::validate_config(config);
    return config;
}

int run_map(const Overrides& o) {
    const auto config = build_config(o);
    const auto result = slam::run_mapping(config);
    std::cout << slam::metrics_to_json(result.metrics).dump(2) << '\n';
    return kOk;
}

int run_eval(const std::string& dir) {
    const auto a = slam::load_session(dir);
    std::cout << slam::metrics_to_json(a.metrics).dump(2) << '\n';
    return kOk;
}

int run_export(const std::string& dir, const std::string& format, const std::string& out) {
    if (format != "pgm") {
        std::cerr << "error: unsupported format '" << format << "' (only pgm)\n";
        return kConfigError;
    }
    const auto a = slam::load_session(dir);
    if (!a.map) {
        std::cerr << "error: session " << dir << " has no map\n";
        return kRuntimeError;
    }
    const std::filesystem::path target = out.empty() ? std::filesystem::path(dir) : std::filesystem::path(out);
    std::filesystem::create_directories(target);
    slam::export_map(*a.map, target);
    std::cout << (target / "map.pgm").string() << '\n';
    return kOk;
}

int run_serve(Overrides o, unsigned short port, const std::string& address, const std::string& ui,
              const std::string& save_dir) {
    if (!o.seed && o.config.empty()) {
        o.seed = 0;
    }
    auto config = build_config(o);
    config.script.clear();
    slam::WorldModel world;
    try {
        world = slam::load_world(slam::resolve_world_path(config.world));
    } catch (const slam::WorldError& e) {
        throw slam::ConfigError(e.what());
    }
    std::optional<slam::OccupancyGrid> prior;
    if (config.mode == slam::Mode::localization) {
        if (config.map_dir.empty()) {
            throw slam::ConfigError("localization needs --map");
        }
        prior = slam::load_map(config.map_dir / "map.yaml", config.sensor);
    }
    slam::bridge::BridgeCore::Options core_options;
    core_options.save_root = save_dir;
    slam::bridge::BridgeCore core(config, world, prior, core_options);
    slam::bridge::ServerOptions options;
    options.address = address;
    options.port = port;
    options.ui_dir = ui;
    options.handle_signals = true;
    slam::bridge::BridgeServer server(core, options);
    std::cerr << "serving " << world.name << " (" << slam::to_string(config.mode) << ") on ws://" << address << ':'
              << server.port() << "/ws\n";
    server.run();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D SLAM workbench"};
    app.require_subcommand(1);

    Overrides map_o;
    auto* map_cmd = app.add_subcommand("map", "Run a scripted mapping session");
    add_common(map_cmd, map_o);
    map_cmd->add_option("--mode", map_o.mode, "fastslam | graphslam | known_poses");

    Overrides loc_o;
    auto* loc_cmd = app.add_subcommand("localize", "Localize against a saved map");
    add_common(loc_cmd, loc_o);
    loc_cmd->add_option("--map", loc_o.map_dir, "Session directory holding map.yaml")->required();

    std::string eval_dir;
    auto* eval_cmd = app.add_subcommand("eval", "Print a session's metrics as JSON");
    eval_cmd->add_option("--session", eval_dir, "Session directory")->required();

    std::string export_dir;
    std::string export_format = "pgm";
    std::string export_out;
    auto* export_cmd = app.add_subcommand("export", "Export a session's map");
    export_cmd->add_option("--session", export_dir, "Session directory")->required();
    export_cmd->add_option("--format", export_format, "Output format (pgm)");
    export_cmd->add_option("--out", export_out, "Target directory (default: the session)");

    Overrides serve_o;
    unsigned short port = 8080;
    std::string address = "127.0.0.1";
    std::string ui_dir;
    std::string save_dir = "sessions";
    auto* serve_cmd = app.add_subcommand("serve", "Start the teleop bridge");
    add_common(serve_cmd, serve_o);
    serve_cmd->add_option("--mode", serve_o.mode, "fastslam | graphslam | localization | known_poses");
    serve_cmd->add_option("--map", serve_o.map_dir, "Map directory for localization");
    serve_cmd->add_option("--port", port, "Listen port");
    serve_cmd->add_option("--address", address, "Listen address");
    serve_cmd->add_option("--ui", ui_dir, "Built UI bundle to serve at /");
    serve_cmd->add_option("--save-dir", save_dir, "Where 'save' requests write sessions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*map_cmd) {
            if (map_o.mode == "localization") {
                throw slam::ConfigError("use 'slam localize' for localization");
            }
            return run_map(map_o);
        }
        if (*loc_cmd) {
            loc_o.mode = "localization";
            return run_map(loc_o);
        }
        if (*eval_cmd) {
            return run_eval(eval_dir);
        }
        if (*export_cmd) {
            return run_export(export_dir, export_format, export_out);
        }
        if (*serve_cmd) {
            return run_serve(serve_o, port, address, ui_dir, save_dir);
        }
    } catch (const slam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

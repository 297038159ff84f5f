#include "slam/session_io.hpp"

#include <fstream>
#include <sstream>

#include "slam/graph_io.hpp"
#include "slam/map_export.hpp"

namespace slam {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_writable_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw SessionError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
    const auto probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) {
            throw SessionError("output directory not writable: " + dir.string());
        }
    }
    fs::remove(probe, ec);
}

void save_session(const fs::path& dir, const SessionArtifacts& a, bool write_log) {
    ensure_writable_dir(dir);
    {
        const json doc = {{"format", kSessionFormatVersion}, {"config", a.config}, {"metrics", metrics_to_json(a.metrics)}};
        std::ofstream f(dir / "session.json", std::ios::binary | std::ios::trunc);
        f << doc.dump(2) << '\n';
        if (!f) {
            throw SessionError("cannot write " + (dir / "session.json").string());
        }
    }
    if (write_log) {
        std::ofstream f(dir / "log.jsonl", std::ios::binary | std::ios::trunc);
        for (const auto& r : a.log) {
            f << record_to_json(r).dump() << '\n';
        }
        if (!f) {
            throw SessionError("cannot write " + (dir / "log.jsonl").string());
        }
    }
    if (a.map) {
        export_map(*a.map, dir);
    }
    if (a.graph) {
        save_graph(dir / "graph.txt", *a.graph);
    }
}

SessionArtifacts load_session(const fs::path& dir) {
    const auto session_path = dir / "session.json";
    if (!fs::exists(session_path)) {
        throw SessionError("missing session.json in " + dir.string());
    }
    SessionArtifacts a;
    json doc;
    try {
        std::ifstream f(session_path, std::ios::binary);
        doc = json::parse(f);
    } catch (const json::exception& e) {
        throw SessionError("malformed session.json: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_number_integer()) {
        throw SessionError("session.json has no format version");
    }
    if (doc["format"].get<int>() != kSessionFormatVersion) {
        throw SessionError("session format version " + std::to_string(doc["format"].get<int>()) +
                           " not supported (expected " + std::to_string(kSessionFormatVersion) + ")");
    }
    try {
        a.config = doc.at("config");
        a.metrics = metrics_from_json(doc.at("metrics"));
    } catch (const json::exception& e) {
        throw SessionError("malformed session.json: " + std::string(e.what()));
    }

    const auto log_path = dir / "log.jsonl";
    if (!fs::exists(log_path)) {
        throw SessionError("missing log.jsonl in " + dir.string());
    }
    std::ifstream log(log_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(log, line)) {
        ++line_no;
        if (log.eof() && !line.empty()) {
            throw SessionError("log.jsonl line " + std::to_string(line_no) + ": truncated record (no newline)");
        }
        try {
            a.log.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SessionError("log.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    if (fs::exists(dir / "map.yaml")) {
        a.map = load_map(dir / "map.yaml");
    }
    if (fs::exists(dir / "graph.txt")) {
        a.graph = load_graph(dir / "graph.txt");
    }
    return a;
}

}  // namespace slam

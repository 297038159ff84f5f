#include "slam/bridge/protocol.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include <algorithm>
#include <cmath>

namespace slam::bridge {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) {
        throw ProtocolError("base64 length not a multiple of 4");
    }
    std::size_t body = text.size();
    while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') {
        --body;
    }
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    const auto [written, read] = b64::decode(out.data(), text.data(), body);
    if (read != body) {
        throw ProtocolError("invalid base64");
    }
    out.resize(written);
    return out;
}

namespace {

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ProtocolError(std::string("field '") + key + "' must be a number");
    }
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw ProtocolError(std::string("field '") + key + "' must be finite");
    }
    return v;
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ProtocolError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

Pose2 pose_from(const json& j) {
    Pose2 p;
    p.x = number(j, "x");
    p.y = number(j, "y");
    p.theta = number(j, "theta");  // no wrap: round trip must be exact
    return p;
}

template <typename T>
T get(const json& j, const char* what) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(std::string("field '") + what + "' has the wrong type");
    }
}

}  // namespace

json snapshot_to_json(const Snapshot& s) {
    json grid;
    if (s.keyframe) {
        const auto& k = *s.keyframe;
        grid = {{"full",
                 {{"width", k.width},
                  {"height", k.height},
                  {"resolution", k.resolution},
                  {"origin", pose_json(k.origin)},
                  {"data", base64_encode(k.data)}}}};
    } else {
        json d = json::array();
        for (const auto& [idx, byte] : s.delta) {
            d.push_back({idx, byte});
        }
        grid = {{"delta", std::move(d)}};
    }
    json particles = json::array();
    for (const auto& p : s.particles) {
        particles.push_back({p[0], p[1], p[2], p[3]});
    }
    json nodes = json::array();
    for (const auto& n : s.nodes) {
        nodes.push_back({n.id, n.x, n.y, n.theta});
    }
    json edges = json::array();
    for (const auto& e : s.edges) {
        edges.push_back({e.from, e.to, e.kind});
    }
    return {{"type", "snapshot"},
            {"t", s.t},
            {"est_pose", pose_json(s.est_pose)},
            {"gt_pose", pose_json(s.gt_pose)},
            {"scan",
             {{"angle_min", s.scan.angle_min}, {"angle_increment", s.scan.angle_increment}, {"ranges", s.scan.ranges}}},
            {"particles", std::move(particles)},
            {"grid", std::move(grid)},
            {"graph", {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}}},
            {"loop_closures", s.loop_closures},
            {"mode", s.mode}};
}

Snapshot snapshot_from_json(const json& j) {
    if (get<std::string>(field(j, "type"), "type") != "snapshot") {
        throw ProtocolError("not a snapshot");
    }
    Snapshot s;
    s.t = number(j, "t");
    s.est_pose = pose_from(field(j, "est_pose"));
    s.gt_pose = pose_from(field(j, "gt_pose"));
    const auto& scan = field(j, "scan");
    s.scan.angle_min = number(scan, "angle_min");
    s.scan.angle_increment = number(scan, "angle_increment");
    s.scan.ranges = get<std::vector<double>>(field(scan, "ranges"), "ranges");
    for (const auto& p : field(j, "particles")) {
        const auto a = get<std::vector<double>>(p, "particles");
        if (a.size() != 4) {
            throw ProtocolError("particle entries have 4 numbers");
        }
        s.particles.push_back({a[0], a[1], a[2], a[3]});
    }
    const auto& grid = field(j, "grid");
    if (grid.contains("full")) {
        const auto& f = grid.at("full");
        GridKeyframe k;
        k.width = get<int>(field(f, "width"), "width");
        k.height = get<int>(field(f, "height"), "height");
        k.resolution = number(f, "resolution");
        k.origin = pose_from(field(f, "origin"));
        k.data = base64_decode(get<std::string>(field(f, "data"), "data"));
        if (k.width < 0 || k.height < 0 ||
            k.data.size() != static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height)) {
            throw ProtocolError("keyframe size mismatch");
        }
        s.keyframe = std::move(k);
    } else {
        for (const auto& d : field(grid, "delta")) {
            if (!d.is_array() || d.size() != 2) {
                throw ProtocolError("delta entries are [index, byte]");
            }
            s.delta.emplace_back(get<std::uint32_t>(d[0], "delta"), get<std::uint8_t>(d[1], "delta"));
        }
    }
    const auto& graph = field(j, "graph");
    for (const auto& n : field(graph, "nodes")) {
        const auto a = get<std::vector<double>>(n, "nodes");
        if (a.size() != 4) {
            throw ProtocolError("node entries have 4 numbers");
        }
        s.nodes.push_back({static_cast<int>(a[0]), a[1], a[2], a[3]});
    }
    for (const auto& e : field(graph, "edges")) {
        if (!e.is_array() || e.size() != 3) {
            throw ProtocolError("edge entries are [from, to, kind]");
        }
        s.edges.push_back({get<int>(e[0], "edges"), get<int>(e[1], "edges"), get<std::string>(e[2], "edges")});
    }
    s.loop_closures = get<std::size_t>(field(j, "loop_closures"), "loop_closures");
    s.mode = get<std::string>(field(j, "mode"), "mode");
    return s;
}

std::uint8_t probability_byte(double p) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

GridKeyframe downsample(const OccupancyGrid& grid, int max_side) {
    const int side = std::max(grid.width(), grid.height());
    const int f = std::max(1, (side + max_side - 1) / max_side);
    GridKeyframe k;
    k.width = (grid.width() + f - 1) / f;
    k.height = (grid.height() + f - 1) / f;
    k.resolution = grid.resolution() * f;
    k.origin = grid.origin();
    k.data.assign(static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height), 0);
    for (int r = 0; r < k.height; ++r) {
        for (int c = 0; c < k.width; ++c) {
            std::size_t best = grid.index(c * f, r * f);
            for (int rr = r * f; rr < std::min(grid.height(), (r + 1) * f); ++rr) {
                for (int cc = c * f; cc < std::min(grid.width(), (c + 1) * f); ++cc) {
                    const auto idx = grid.index(cc, rr);
                    if (std::abs(grid.raw(idx)) > std::abs(grid.raw(best))) {
                        best = idx;
                    }
                }
            }
            k.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(k.width) + static_cast<std::size_t>(c)] =
                probability_byte(grid.probability(best));
        }
    }
    return k;
}

GridDelta diff(const std::vector<std::uint8_t>& before, const std::vector<std::uint8_t>& after) {
    GridDelta d;
    for (std::size_t i = 0; i < after.size(); ++i) {
        if (i >= before.size() || before[i] != after[i]) {
            d.emplace_back(static_cast<std::uint32_t>(i), after[i]);
        }
    }
    return d;
}

GridStreamer::Frame GridStreamer::next(const OccupancyGrid& grid) {
    Frame f;
    f.keyframe = downsample(grid, max_side_);
    f.delta = diff(last_, f.keyframe.data);
    f.periodic_keyframe = count_ % keyframe_every_ == 0;
    last_ = f.keyframe.data;
    ++count_;
    return f;
}

void GridReconstructor::apply(const Snapshot& s) {
    if (s.keyframe) {
        raster_ = *s.keyframe;
        ready_ = true;
        return;
    }
    if (!ready_) {
        return;
    }
    for (const auto& [idx, byte] : s.delta) {
        if (idx < raster_.data.size()) {
            raster_.data[idx] = byte;
        }
    }
}

}  // namespace slam::bridge

#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <filesystem>
#include <thread>
#include <unistd.h>

#include "slam/bridge/control.hpp"
#include "slam/bridge/protocol.hpp"
#include "slam/bridge/server.hpp"
#include "slam/scripts.hpp"
#include "slam/session_io.hpp"

using namespace slam;
using namespace slam::bridge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

SessionConfig teleop_config(Mode mode = Mode::graphslam) {
    SessionConfig c;
    c.mode = mode;
    c.seed = 42;
    c.script.clear();
    c.world = "kitchen_dining";
    c.fastslam.particles = 150;
    return c;
}

BridgeCore make_core(Mode mode = Mode::graphslam, BridgeCore::Options opt = {}) {
    BridgeCore core(teleop_config(mode), load_world(resolve_world_path("kitchen_dining")), std::nullopt, opt);
    core.on_warning = nullptr;
    return core;
}

std::string cmd_vel(double v, double w) { return json{{"type", "cmd_vel"}, {"v", v}, {"w", w}}.dump(); }

Snapshot parse(const Outbound& o) { return snapshot_from_json(json::parse(o.text)); }

Snapshot sample_snapshot() {
    Snapshot s;
    s.t = 1.5;
    s.est_pose = {1, 2, 3.0};
    s.gt_pose = {1.1, 2.1, -3.1};
    s.scan = {-3.14, 0.01, {1.0, 2.5, 8.0}};
    s.particles = {{1, 2, 0.5, 0.7}, {1.1, 2.2, 0.4, 0.3}};
    s.nodes = {{0, 0, 0, 0}, {1, 1, 0, 0.1}};
    s.edges = {{0, 1, "odometry"}};
    s.loop_closures = 0;
    s.mode = "graphslam";
    return s;
}

}  // namespace

TEST_CASE("base64") {
    CHECK(base64_encode({}).empty());
    CHECK(base64_encode({'M', 'a', 'n'}) == "TWFu");
    CHECK(base64_encode({'M', 'a'}) == "TWE=");
    CHECK(base64_encode({0xff}) == "/w==");
    std::vector<std::uint8_t> all(256);
    for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
    CHECK(base64_decode(base64_encode(all)) == all);
    CHECK_THROWS_AS(base64_decode("abc"), ProtocolError);
    CHECK_THROWS_AS(base64_decode("ab!="), ProtocolError);
    CHECK_THROWS_AS(base64_decode("a==="), ProtocolError);
    CHECK_THROWS_AS(base64_decode("ab=c"), ProtocolError);
    CHECK(base64_decode("TWE=") == std::vector<std::uint8_t>{'M', 'a'});
}

TEST_CASE("snapshot JSON round trip") {
    SUBCASE("delta") {
        Snapshot s = sample_snapshot();
        s.delta = {{3, 0}, {17, 255}};
        const auto j = snapshot_to_json(s);
        CHECK(j.at("type") == "snapshot");
        CHECK(j.at("grid").contains("delta"));
        CHECK(snapshot_from_json(json::parse(j.dump())) == s);
    }
    SUBCASE("keyframe") {
        Snapshot s = sample_snapshot();
        s.keyframe = GridKeyframe{3, 2, 0.1, {-1, -2, 0}, {0, 128, 255, 1, 2, 3}};
        const auto j = snapshot_to_json(s);
        CHECK(j.at("grid").at("full").at("data") == base64_encode(s.keyframe->data));
        CHECK(snapshot_from_json(json::parse(j.dump())) == s);
    }
    SUBCASE("violations") {
        auto j = snapshot_to_json(sample_snapshot());
        j.erase("est_pose");
        CHECK_THROWS_AS(snapshot_from_json(j), ProtocolError);
        j = snapshot_to_json(sample_snapshot());
        j["type"] = "other";
        CHECK_THROWS_AS(snapshot_from_json(j), ProtocolError);
        Snapshot s = sample_snapshot();
        s.keyframe = GridKeyframe{3, 2, 0.1, {}, {1, 2, 3}};  // size mismatch
        CHECK_THROWS_AS(snapshot_from_json(snapshot_to_json(s)), ProtocolError);
    }
}

TEST_CASE("probability bytes and downsampling") {
    CHECK(probability_byte(0.0) == 0);
    CHECK(probability_byte(0.5) == 128);
    CHECK(probability_byte(1.0) == 255);

    OccupancyGrid g(0.05, {1, 2}, 4, 4);
    g.set_logodds(g.index(0, 0), -1.0);
    g.set_logodds(g.index(1, 0), 3.0);
    g.set_logodds(g.index(1, 1), -3.5);  // most certain in the lower-left block
    g.set_logodds(g.index(2, 2), 2.0);
    g.set_logodds(g.index(3, 3), -2.0);  // tie with (2, 2): first in scan order wins
    const auto k = downsample(g, 2);
    REQUIRE(k.width == 2);
    REQUIRE(k.height == 2);
    CHECK(k.resolution == doctest::Approx(0.1));
    CHECK(k.origin == g.origin());
    CHECK(k.data[0] == probability_byte(cell_probability(-3.5)));
    CHECK(k.data[1] == 128);
    CHECK(k.data[2] == 128);
    CHECK(k.data[3] == probability_byte(cell_probability(2.0)));

    const auto big = downsample(OccupancyGrid(0.05, {0, 0}, 600, 400), 256);
    CHECK(big.width == 200);
    CHECK(big.height == 134);
    const auto small = downsample(OccupancyGrid(0.05, {0, 0}, 100, 50), 256);
    CHECK(small.width == 100);
    CHECK(small.resolution == 0.05);
}

TEST_CASE("grid streaming") {
    GridStreamer streamer(256, 5);
    OccupancyGrid g(0.05, {0, 0}, 10, 10);
    const auto first = streamer.next(g);
    CHECK(first.periodic_keyframe);
    CHECK(first.delta.size() == 100);  // everything is new to an empty baseline
    const auto same = streamer.next(g);
    CHECK(same.delta.empty());
    CHECK_FALSE(same.periodic_keyframe);
    g.set_logodds(g.index(2, 3), 1.0);
    const auto changed = streamer.next(g);
    REQUIRE(changed.delta.size() == 1);
    CHECK(changed.delta[0].first == g.index(2, 3));
    streamer.next(g);
    streamer.next(g);
    CHECK(streamer.next(g).periodic_keyframe);
    CHECK(diff({1, 2, 3}, {1, 5, 3}) == GridDelta{{1, 5}});
}

TEST_CASE("control policy") {
    ControlPolicy p;
    CHECK_FALSE(p.controller().has_value());
    p.join(1);
    p.join(2);
    p.join(3);
    CHECK(p.is_controller(1));
    CHECK_FALSE(p.command(2, {1.0, 0.0}, 0.0));
    CHECK(p.command(1, {0.4, 0.2}, 1.0));
    CHECK(p.applied(1.0).v == 0.4);
    CHECK(p.applied(1.49).w == 0.2);
    CHECK(p.applied(1.51).v == 0.0);
    CHECK(p.applied(1.51).w == 0.0);
    p.leave(1);
    CHECK(p.is_controller(2));
    p.leave(3);
    CHECK(p.is_controller(2));
    p.leave(2);
    CHECK_FALSE(p.controller().has_value());
    CHECK(p.applied(100.0).v == 0.0);
}

TEST_CASE("bridge core messaging") {
    auto core = make_core();
    std::vector<std::string> warnings;
    core.on_warning = [&](const std::string& w) { warnings.push_back(w); };

    const auto hello1 = core.join(1);
    REQUIRE(hello1.size() == 1);
    CHECK(json::parse(hello1[0].text) == json{{"type", "notice"}, {"text", "controller"}});
    const auto hello2 = core.join(2);
    CHECK(json::parse(hello2[0].text).at("text") == "observer");

    SUBCASE("observers are told they cannot drive") {
        const auto r = core.handle(2, cmd_vel(0.5, 0.0), 0.0);
        REQUIRE(r.size() == 1);
        CHECK(r[0].client == 2);
        CHECK(json::parse(r[0].text).at("text") == "observer");
        CHECK(core.handle(1, cmd_vel(0.5, 0.0), 0.0).empty());
    }
    SUBCASE("control passes on when the controller leaves") {
        const auto r = core.leave(1);
        REQUIRE(r.size() == 1);
        CHECK(r[0].client == 2);
        CHECK(json::parse(r[0].text).at("text") == "controller");
        CHECK(core.leave(2).empty());
    }
    SUBCASE("unknown types are ignored with a warning") {
        CHECK(core.handle(1, R"({"type":"dance"})", 0.0).empty());
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("dance") != std::string::npos);
    }
    SUBCASE("protocol violations throw") {
        CHECK_THROWS_AS(core.handle(1, "not json", 0.0), ProtocolError);
        CHECK_THROWS_AS(core.handle(1, R"({"v":1})", 0.0), ProtocolError);
        CHECK_THROWS_AS(core.handle(1, R"({"type":"cmd_vel","v":"fast","w":0})", 0.0), ProtocolError);
        CHECK_THROWS_AS(core.handle(1, R"({"type":"cmd_vel","v":1})", 0.0), ProtocolError);
        CHECK_THROWS_AS(core.handle(1, R"([1,2])", 0.0), ProtocolError);
    }
    SUBCASE("joiners get a keyframe, then deltas") {
        auto out = core.tick(0.0);
        REQUIRE(out.size() == 2);
        for (const auto& o : out) CHECK(parse(o).keyframe.has_value());
        out = core.tick(0.1);
        for (const auto& o : out) {
            const auto s = parse(o);
            CHECK_FALSE(s.keyframe.has_value());
            CHECK(s.delta.size() < core.streamed_grid().data.size());
            CHECK(s.mode == "graphslam");
        }
        core.handle(2, R"({"type":"request_keyframe"})", 0.1);
        out = core.tick(0.2);
        for (const auto& o : out) CHECK(parse(o).keyframe.has_value() == (o.client == 2));
    }
    SUBCASE("dead-man stop") {
        core.handle(1, cmd_vel(0.5, 0.0), 0.0);
        core.tick(0.1);
        const Pose2 moved = core.session().sim().true_pose;
        CHECK(moved.x > core.session().truth().front().x);
        core.tick(0.7);  // last command is now stale
        CHECK(core.session().log().back().cmd.v == 0.0);
        CHECK(core.session().sim().true_pose == moved);
    }
}

TEST_CASE("client reconstruction matches the served grid") {
    BridgeCore::Options opt;
    opt.keyframe_every = 7;
    auto core = make_core(Mode::graphslam, opt);
    core.join(1);
    core.join(2);
    GridReconstructor one, two;
    const auto route = find_script("square_loop");
    PurePursuit pilot(core.session().sim().true_pose, route->waypoints, 0.5, 0.5, {});
    double now = 0.0;
    for (int i = 0; i < 200; ++i) {
        core.handle(1, cmd_vel(pilot.command(core.session().sim().true_pose).v,
                               pilot.command(core.session().sim().true_pose).w),
                    now);
        if (i == 60) core.handle(2, R"({"type":"request_keyframe"})", now);
        for (const auto& o : core.tick(now)) {
            (o.client == 1 ? one : two).apply(parse(o));
        }
        REQUIRE(one.ready());
        REQUIRE(one.raster() == core.streamed_grid());
        REQUIRE(two.raster() == core.streamed_grid());
        now += 0.1;
    }
    CHECK(core.session().step_count() == 200);
}

TEST_CASE("loop closures show up in the stream") {
    auto core = make_core();
    core.join(1);
    const auto route = find_script("double_loop_kitchen");
    PurePursuit pilot(core.session().sim().true_pose, route->waypoints, 0.5, 0.5, {});
    double now = 0.0;
    std::size_t previous = 0, increments = 0;
    std::size_t previous_loop_edges = 0;
    for (int i = 0; i < 3000 && increments < 3; ++i) {
        const Twist c = pilot.command(core.session().sim().true_pose);
        core.handle(1, cmd_vel(c.v, c.w), now);
        const auto out = core.tick(now);
        REQUIRE(out.size() == 1);
        const auto s = parse(out[0]);
        const std::size_t closed_now = core.session().closures().size();
        CHECK(s.loop_closures == closed_now);
        const auto loop_edges =
            static_cast<std::size_t>(std::count_if(s.edges.begin(), s.edges.end(), [](const EdgeView& e) {
                return e.kind == "loop";
            }));
        CHECK(loop_edges == s.loop_closures);
        if (s.loop_closures > previous) {
            ++increments;
            CHECK(s.loop_closures - previous == loop_edges - previous_loop_edges);
            const auto& newest = core.session().closures().back().constraint;
            const bool listed = std::any_of(s.edges.begin(), s.edges.end(), [&](const EdgeView& e) {
                return e.kind == "loop" && e.from == newest.from_id && e.to == newest.to_id;
            });
            CHECK(listed);
        }
        previous = s.loop_closures;
        previous_loop_edges = loop_edges;
        CHECK(s.nodes.size() == core.session().engine().graph()->nodes().size());
        now += 0.1;
    }
    CHECK(increments >= 1);
}

TEST_CASE("particles are capped and heaviest first") {
    auto core = make_core(Mode::fastslam);
    core.join(1);
    core.handle(1, cmd_vel(0.3, 0.2), 0.0);
    Snapshot s;
    for (int i = 0; i < 5; ++i) s = parse(core.tick(0.1 * i).front());
    CHECK(s.particles.size() == kMaxParticles);
    for (std::size_t i = 1; i < s.particles.size(); ++i) CHECK(s.particles[i - 1][3] >= s.particles[i][3]);
    CHECK(s.nodes.empty());
}

TEST_CASE("saving from the bridge writes a loadable session") {
    const fs::path root = fs::temp_directory_path() / ("slam_bridge_" + std::to_string(::getpid()));
    fs::remove_all(root);
    BridgeCore::Options opt;
    opt.save_root = root;
    auto core = make_core(Mode::graphslam, opt);
    core.join(1);
    core.handle(1, cmd_vel(0.3, 0.0), 0.0);
    for (int i = 0; i < 5; ++i) core.tick(0.05 * i);
    const auto reply = core.handle(1, R"({"type":"save"})", 0.3);
    REQUIRE(reply.size() == 1);
    const auto msg = json::parse(reply[0].text);
    CHECK(msg.at("type") == "saved");
    const auto loaded = load_session(msg.at("dir").get<std::string>());
    CHECK(loaded.log == core.session().log());
    CHECK(loaded.map.has_value());
    CHECK(loaded.graph.has_value());
    fs::remove_all(root);
}

TEST_CASE("WebSocket server end to end") {
    namespace asio = boost::asio;
    namespace beast = boost::beast;
    namespace http = beast::http;
    namespace websocket = beast::websocket;
    using tcp = asio::ip::tcp;

    auto core = make_core();
    ServerOptions so;
    so.port = 0;
    so.tick_hz = 20.0;
    BridgeServer server(core, so);
    const auto port = server.port();
    REQUIRE(port != 0);
    std::thread runner([&] { server.run(); });
    struct Join {
        BridgeServer& s;
        std::thread& t;
        ~Join() {
            s.stop();
            t.join();
        }
    } join_guard{server, runner};

    asio::io_context ioc;
    tcp::resolver resolver(ioc);
    const auto endpoints = resolver.resolve("127.0.0.1", std::to_string(port));

    SUBCASE("health and 404") {
        for (const auto& [target, status] :
             std::vector<std::pair<std::string, http::status>>{{"/health", http::status::ok},
                                                               {"/nope", http::status::not_found}}) {
            beast::tcp_stream stream(ioc);
            stream.connect(endpoints);
            http::request<http::empty_body> req{http::verb::get, target, 11};
            req.set(http::field::host, "127.0.0.1");
            http::write(stream, req);
            beast::flat_buffer buf;
            http::response<http::string_body> res;
            http::read(stream, buf, res);
            CHECK(res.result() == status);
            if (status == http::status::ok) CHECK(res.body() == "ok");
        }
    }
    SUBCASE("join, stream and protocol violation") {
        websocket::stream<tcp::socket> ws(ioc);
        asio::connect(ws.next_layer(), endpoints);
        ws.handshake("127.0.0.1", "/ws");
        beast::flat_buffer buf;
        ws.read(buf);
        CHECK(json::parse(beast::buffers_to_string(buf.data())).at("text") == "controller");
        buf.clear();
        ws.read(buf);
        const auto first = snapshot_from_json(json::parse(beast::buffers_to_string(buf.data())));
        CHECK(first.keyframe.has_value());
        buf.clear();
        ws.read(buf);
        CHECK_FALSE(snapshot_from_json(json::parse(beast::buffers_to_string(buf.data()))).keyframe.has_value());

        ws.write(asio::buffer(std::string("{broken")));
        beast::error_code ec;
        for (int i = 0; i < 100 && !ec; ++i) {
            buf.clear();
            ws.read(buf, ec);
        }
        CHECK(ec == websocket::error::closed);
        CHECK(ws.reason().code == websocket::close_code::policy_error);
        CHECK(std::string(ws.reason().reason.c_str()).find("JSON") != std::string::npos);
    }
}

#include "slam/config.hpp"

#include <fstream>

namespace slam {

using nlohmann::json;

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::fastslam: return "fastslam";
        case Mode::graphslam: return "graphslam";
        case Mode::localization: return "localization";
        case Mode::known_poses: return "known_poses";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::fastslam, Mode::graphslam, Mode::localization, Mode::known_poses}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown mode '" + s + "'");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& value) {
    if (j.contains(key)) {
        try {
            value = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config field '") + key + "': " + e.what());
        }
    }
}

Matrix3 read_diag(const json& j, const char* key, const Matrix3& fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 3) {
        throw ConfigError(std::string("config field '") + key + "' must be a 3-element diagonal");
    }
    return Vector3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()).asDiagonal();
}

json diag(const Matrix3& m) {
    return json::array({m(0, 0), m(1, 1), m(2, 2)});
}

void read_noise(const json& j, MotionNoise& n) {
    if (!j.contains("alphas")) {
        return;
    }
    const auto& a = j.at("alphas");
    if (!a.is_array() || a.size() != 4) {
        throw ConfigError("config field 'alphas' must have 4 entries");
    }
    n = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()};
}

void read_likelihood(const json& j, LikelihoodParams& p) {
    read(j, "sigma_hit", p.sigma_hit);
    read(j, "z_hit", p.z_hit);
    read(j, "z_rand", p.z_rand);
    read(j, "beam_skip", p.beam_skip);
    read(j, "max_distance", p.max_distance);
}

json likelihood_json(const LikelihoodParams& p) {
    return {{"sigma_hit", p.sigma_hit},
            {"z_hit", p.z_hit},
            {"z_rand", p.z_rand},
            {"beam_skip", p.beam_skip},
            {"max_distance", p.max_distance}};
}

}  // namespace

SessionConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    SessionConfig c;
    if (!j.contains("seed")) {
        throw ConfigError("config: 'seed' is mandatory");
    }
    read(j, "seed", c.seed);
    read(j, "world", c.world);
    if (j.contains("mode")) {
        c.mode = mode_from_string(j.at("mode").get<std::string>());
    }
    read(j, "script", c.script);
    if (j.contains("out")) {
        c.out = j.at("out").get<std::string>();
    }
    if (j.contains("map_dir")) {
        c.map_dir = j.at("map_dir").get<std::string>();
    }
    read(j, "dt", c.dt);
    read(j, "max_steps", c.max_steps);
    read(j, "v_max", c.limits.v_max);
    read(j, "w_max", c.limits.w_max);
    read(j, "cruise_speed", c.cruise_speed);
    read(j, "lookahead", c.lookahead);

    if (j.contains("scan")) {
        const auto& s = j.at("scan");
        std::size_t n = c.scan.n_beams;
        double range_max = c.scan.range_max;
        double sigma = c.scan.sigma;
        read(s, "n_beams", n);
        read(s, "range_max", range_max);
        read(s, "sigma", sigma);
        c.scan = ScanParams::full_circle(n, range_max, sigma);
    }
    if (j.contains("motion_noise")) {
        read_noise(j.at("motion_noise"), c.motion_noise);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        read(g, "resolution", c.grid_resolution);
        read(g, "margin", c.grid_margin);
        read(g, "l_occ", c.sensor.l_occ);
        read(g, "l_free", c.sensor.l_free);
        read(g, "l_min", c.sensor.l_min);
        read(g, "l_max", c.sensor.l_max);
    }
    if (j.contains("fastslam")) {
        const auto& f = j.at("fastslam");
        read(f, "particles", c.fastslam.particles);
        read_likelihood(f, c.fastslam.likelihood);
        read(f, "resample_every_step", c.fastslam.resample_every_step);
        read(f, "weight_after_map_update", c.fastslam.weight_after_map_update);
        read(f, "threads", c.fastslam.threads);
    }
    if (j.contains("graphslam")) {
        const auto& g = j.at("graphslam");
        auto& fe = c.graphslam.front_end;
        fe.odometry_information = read_diag(g, "odometry_information", fe.odometry_information);
        fe.loop_information = read_diag(g, "loop_information", fe.loop_information);
        read(g, "keyframe_every", c.graphslam.keyframe_every);
        read(g, "max_iter", c.graphslam.optimizer.max_iter);
        read(g, "tol", c.graphslam.optimizer.tol);
        if (g.contains("method")) {
            const auto m = g.at("method").get<std::string>();
            if (m == "gauss_newton") {
                c.graphslam.optimizer.method = OptimizerMethod::gauss_newton;
            } else if (m == "gradient_descent") {
                c.graphslam.optimizer.method = OptimizerMethod::gradient_descent;
            } else {
                throw ConfigError("unknown optimizer method '" + m + "'");
            }
        }
        read(g, "max_candidate_distance", c.graphslam.max_candidate_distance);
        read(g, "revisit_radius", c.graphslam.revisit_radius);
    }
    if (j.contains("loop")) {
        const auto& l = j.at("loop");
        auto& d = c.graphslam.detect;
        read(l, "gate_recent", d.gate_recent);
        read(l, "sim_threshold", d.sim_threshold);
        read(l, "max_candidates", d.max_candidates);
        read(l, "wm_capacity", d.wm_capacity);
        read(l, "verify_threshold", c.graphslam.verify.verify_threshold);
    }
    if (j.contains("localization")) {
        const auto& l = j.at("localization");
        read(l, "particles", c.localization.particles);
        read_likelihood(l, c.localization.likelihood);
        read(l, "init_sigma_xy", c.localization.init_sigma_xy);
        read(l, "init_sigma_theta", c.localization.init_sigma_theta);
        read(l, "threads", c.localization.threads);
    }
    c.fastslam.noise = c.motion_noise;
    c.fastslam.sensor = c.sensor;
    c.localization.noise = c.motion_noise;
    validate_config(c);
    return c;
}

SessionConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

json config_to_json(const SessionConfig& c) {
    const auto& n = c.motion_noise;
    const auto& g = c.graphslam;
    return {
        {"seed", c.seed},
        {"world", c.world},
        {"mode", to_string(c.mode)},
        {"script", c.script},
        {"out", c.out.string()},
        {"map_dir", c.map_dir.string()},
        {"dt", c.dt},
        {"max_steps", c.max_steps},
        {"v_max", c.limits.v_max},
        {"w_max", c.limits.w_max},
        {"cruise_speed", c.cruise_speed},
        {"lookahead", c.lookahead},
        {"scan", {{"n_beams", c.scan.n_beams}, {"range_max", c.scan.range_max}, {"sigma", c.scan.sigma}}},
        {"motion_noise", {{"alphas", {n.alpha1, n.alpha2, n.alpha3, n.alpha4}}}},
        {"grid",
         {{"resolution", c.grid_resolution},
          {"margin", c.grid_margin},
          {"l_occ", c.sensor.l_occ},
          {"l_free", c.sensor.l_free},
          {"l_min", c.sensor.l_min},
          {"l_max", c.sensor.l_max}}},
        {"fastslam",
         [&] {
             json f = likelihood_json(c.fastslam.likelihood);
             f["particles"] = c.fastslam.particles;
             f["resample_every_step"] = c.fastslam.resample_every_step;
             f["weight_after_map_update"] = c.fastslam.weight_after_map_update;
             f["threads"] = c.fastslam.threads;
             return f;
         }()},
        {"graphslam",
         {{"odometry_information", diag(g.front_end.odometry_information)},
          {"loop_information", diag(g.front_end.loop_information)},
          {"keyframe_every", g.keyframe_every},
          {"max_iter", g.optimizer.max_iter},
          {"tol", g.optimizer.tol},
          {"method", g.optimizer.method == OptimizerMethod::gauss_newton ? "gauss_newton" : "gradient_descent"},
          {"max_candidate_distance", g.max_candidate_distance},
          {"revisit_radius", g.revisit_radius}}},
        {"loop",
         {{"gate_recent", g.detect.gate_recent},
          {"sim_threshold", g.detect.sim_threshold},
          {"max_candidates", g.detect.max_candidates},
          {"wm_capacity", g.detect.wm_capacity},
          {"verify_threshold", g.verify.verify_threshold}}},
        {"localization",
         [&] {
             json l = likelihood_json(c.localization.likelihood);
             l["particles"] = c.localization.particles;
             l["init_sigma_xy"] = c.localization.init_sigma_xy;
             l["init_sigma_theta"] = c.localization.init_sigma_theta;
             l["threads"] = c.localization.threads;
             return l;
         }()},
    };
}

void validate_config(const SessionConfig& c) {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("config: ") + what);
        }
    };
    require(c.dt > 0.0 && c.dt <= 0.5, "dt must be in (0, 0.5]");
    require(c.limits.v_max > 0.0 && c.limits.w_max > 0.0, "velocity limits must be positive");
    require(c.scan.n_beams >= 1, "scan.n_beams must be at least 1");
    require(c.scan.range_max > 0.0 && c.scan.sigma >= 0.0, "invalid scan geometry");
    const auto& n = c.motion_noise;
    require(n.alpha1 >= 0.0 && n.alpha2 >= 0.0 && n.alpha3 >= 0.0 && n.alpha4 >= 0.0, "alphas must be >= 0");
    require(c.grid_resolution > 0.0 && c.grid_margin >= 0.0, "invalid grid geometry");
    require(c.sensor.l_min < 0.0 && c.sensor.l_max > 0.0, "log-odds clamp must straddle 0");
    require(c.fastslam.particles >= 1, "fastslam.particles must be >= 1");
    require(c.localization.particles >= 1, "localization.particles must be >= 1");
    require(c.graphslam.keyframe_every >= 1, "graphslam.keyframe_every must be >= 1");
    require(c.graphslam.detect.max_candidates >= 1 && c.graphslam.detect.wm_capacity >= 1, "invalid loop memory");
    require(c.mode != Mode::localization || !c.map_dir.empty(), "localization mode needs map_dir");
}

}  // namespace slam

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "slam/fastslam.hpp"
#include "slam/gridmap.hpp"
#include "slam/loopclosure.hpp"
#include "slam/posegraph.hpp"
#include "slam/sim.hpp"

namespace slam {

enum class Mode { fastslam, graphslam, localization, known_poses };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct GraphSlamConfig {
    FrontEndConfig front_end{};
    OptimizeOptions optimizer{};
    std::size_t keyframe_every{10};
    DetectParams detect{};
    VerifyParams verify{};
    /// Candidates whose current estimate is farther than this from the query
    /// are not verified.
    double max_candidate_distance{1.5};
    /// Verified closures whose relative translation exceeds this are dropped:
    /// a loop closure is a revisit of the same place.
    double revisit_radius{1.0};
};

struct SessionConfig {
    std::string world{"kitchen_dining"};
    Mode mode{Mode::graphslam};
    std::uint64_t seed{0};
    std::string script{"square_loop"};  // empty: commands come from outside (teleop)
    std::filesystem::path out{"out"};
    std::filesystem::path map_dir;  // localization only

    double dt{0.1};
    std::size_t max_steps{6000};
    VelocityLimits limits{};
    double cruise_speed{0.5};
    double lookahead{0.5};

    ScanParams scan{};
    MotionNoise motion_noise{};  // simulator odometry corruption and filter motion model
    double grid_resolution{0.05};
    double grid_margin{1.0};
    SensorModel sensor{};

    FastSlamConfig fastslam{};
    GraphSlamConfig graphslam{};
    LocalizationConfig localization{};
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds a config from JSON. Absent blocks take defaults; "seed" is
/// mandatory. Throws ConfigError on type errors or invalid values.
SessionConfig config_from_json(const nlohmann::json& j);
SessionConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const SessionConfig& config);

/// Throws ConfigError when a value is out of range.
void validate_config(const SessionConfig& config);

}  // namespace slam

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slam/geometry.hpp"
#include "slam/gridmap.hpp"

namespace slam::bridge {

/// Malformed client message; the sender is disconnected with what() as the
/// close reason.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Full streamed raster. data holds one probability byte per cell, row-major
/// from the bottom row, 128 meaning unknown.
struct GridKeyframe {
    int width{0};
    int height{0};
    double resolution{0.0};
    Pose2 origin;
    std::vector<std::uint8_t> data;

    friend bool operator==(const GridKeyframe&, const GridKeyframe&) = default;
};

/// [cell index, probability byte] for every cell changed since the previous
/// broadcast.
using GridDelta = std::vector<std::pair<std::uint32_t, std::uint8_t>>;

struct ScanView {
    double angle_min{0.0};
    double angle_increment{0.0};
    std::vector<double> ranges;

    friend bool operator==(const ScanView&, const ScanView&) = default;
};

struct NodeView {
    int id{0};
    double x{0.0}, y{0.0}, theta{0.0};

    friend bool operator==(const NodeView&, const NodeView&) = default;
};

struct EdgeView {
    int from{0};
    int to{0};
    std::string kind;

    friend bool operator==(const EdgeView&, const EdgeView&) = default;
};

struct Snapshot {
    double t{0.0};
    Pose2 est_pose;
    Pose2 gt_pose;
    ScanView scan;
    std::vector<std::array<double, 4>> particles;  // x, y, theta, w; heaviest first
    std::optional<GridKeyframe> keyframe;          // exactly one of keyframe / delta
    GridDelta delta;
    std::vector<NodeView> nodes;
    std::vector<EdgeView> edges;
    std::size_t loop_closures{0};
    std::string mode;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

inline constexpr std::size_t kMaxParticles = 100;

nlohmann::json snapshot_to_json(const Snapshot& s);
/// Throws ProtocolError on missing or mistyped fields.
Snapshot snapshot_from_json(const nlohmann::json& j);

std::uint8_t probability_byte(double p);

/// Downsamples a grid so neither side exceeds max_side. Each block takes the
/// byte of its most certain cell (largest |log-odds|, first wins).
GridKeyframe downsample(const OccupancyGrid& grid, int max_side = 256);

GridDelta diff(const std::vector<std::uint8_t>& before, const std::vector<std::uint8_t>& after);

/// Server side: turns successive grids into keyframe/delta frames.
class GridStreamer {
public:
    explicit GridStreamer(int max_side = 256, std::size_t keyframe_every = 50)
        : max_side_(max_side), keyframe_every_(keyframe_every) {}

    struct Frame {
        GridKeyframe keyframe;  // current raster, for joiners or periodic refresh
        GridDelta delta;        // change since the previous frame
        bool periodic_keyframe{false};
    };

    Frame next(const OccupancyGrid& grid);
    std::size_t frames() const { return count_; }

private:
    int max_side_;
    std::size_t keyframe_every_;
    std::size_t count_{0};
    std::vector<std::uint8_t> last_;
};

/// Client side reconstruction from keyframes and deltas.
class GridReconstructor {
public:
    void apply(const Snapshot& s);
    bool ready() const { return ready_; }
    const GridKeyframe& raster() const { return raster_; }

private:
    GridKeyframe raster_;
    bool ready_{false};
};

}  // namespace slam::bridge

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slam/geometry.hpp"
#include "slam/sim.hpp"
#include "slam/world.hpp"

namespace slam {

/// Inverse sensor model constants, in log-odds.
struct SensorModel {
    double l_occ{0.9};
    double l_free{-0.7};
    double l_min{-4.0};
    double l_max{4.0};
};

/// Map-server style classification thresholds on occupancy probability.
inline constexpr double kOccupiedThresh = 0.65;
inline constexpr double kFreeThresh = 0.196;

enum class CellClass : std::uint8_t { free, unknown, occupied };

struct CellIndex {
    int col{0};
    int row{0};

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// 1 - 1/(1 + exp(l)).
double cell_probability(double logodds);

CellClass classify_probability(double p);

/// Log-odds occupancy grid. Cell (0, 0) has its lower-left corner at origin;
/// columns grow along +x, rows along +y.
///
/// Log-odds are stored as fixed-point integers (kQuantum per unit) so that
/// evidence accumulation is exactly order-independent.
class OccupancyGrid {
public:
    using Raw = std::int32_t;
    static constexpr double kQuantum = 1e-3;

    OccupancyGrid() = default;
    OccupancyGrid(double resolution, Point2 origin, int width, int height);

    /// Grid covering bounds plus margin on every side.
    static OccupancyGrid for_bounds(const Bounds& bounds, double resolution = 0.05, double margin = 1.0);

    double resolution() const { return resolution_; }
    Pose2 origin() const { return {origin_.x, origin_.y, 0.0}; }
    Point2 origin_point() const { return origin_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }

    /// floor((p - origin) / resolution) per axis; nullopt outside the grid.
    std::optional<CellIndex> world_to_cell(double x, double y) const;
    /// Unchecked version; may return indices outside the grid.
    CellIndex world_to_cell_unchecked(double x, double y) const;
    Point2 cell_center(CellIndex c) const;
    bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < width_ && row < height_; }
    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }
    CellIndex cell_of(std::size_t idx) const {
        return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
                static_cast<int>(idx / static_cast<std::size_t>(width_))};
    }

    double logodds(std::size_t idx) const { return static_cast<double>(cells_[idx]) * kQuantum; }
    double logodds(int col, int row) const { return logodds(index(col, row)); }
    double probability(std::size_t idx) const { return cell_probability(logodds(idx)); }
    CellClass classify(std::size_t idx) const;
    bool is_occupied(std::size_t idx) const { return cells_[idx] >= occupied_raw_min(); }
    bool is_observed(std::size_t idx) const { return cells_[idx] != 0; }

    std::span<const Raw> raw() const { return cells_; }
    Raw raw(std::size_t idx) const { return cells_[idx]; }

    /// Sets a cell's log-odds directly (rounded to the quantum, then clamped to
    /// [l_min, l_max] of the supplied model).
    void set_logodds(std::size_t idx, double l, const SensorModel& model = {});

    /// Adds raw evidence with clamping. Returns true when the cell's occupied
    /// status changed.
    bool add(std::size_t idx, Raw delta, Raw lo, Raw hi);

    static Raw to_raw(double logodds);
    static Raw occupied_raw_min();

    friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

private:
    double resolution_{0.05};
    Point2 origin_{};
    int width_{0};
    int height_{0};
    std::vector<Raw> cells_;
};

/// Cells whose occupied status changed during an update.
struct GridUpdate {
    std::vector<std::size_t> occupancy_flips;
};

/// Mapping with a known pose: cells strictly between the robot cell and the
/// beam endpoint cell get l_free; the endpoint cell gets l_occ unless the beam
/// is a no-return. Rays leaving the grid are truncated at the boundary.
GridUpdate update_occupancy(OccupancyGrid& grid, const Pose2& pose, const LaserScan& scan,
                            const SensorModel& model = {});

/// Calls visit(col, row) for every cell strictly between from and to on the
/// integer line, stopping early when visit returns false.
template <typename Visit>
void trace_line(CellIndex from, CellIndex to, Visit&& visit) {
    if (from == to) {
        return;
    }
    int x = from.col;
    int y = from.row;
    const int dx = std::abs(to.col - x);
    const int dy = -std::abs(to.row - y);
    const int sx = x < to.col ? 1 : -1;
    const int sy = y < to.row ? 1 : -1;
    int err = dx + dy;
    while (true) {
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
        if (x == to.col && y == to.row) {
            return;
        }
        if (!visit(x, y)) {
            return;
        }
    }
}

}  // namespace slam

#include "slam/gridmap.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace slam {

double cell_probability(double logodds) {
    return 1.0 - 1.0 / (1.0 + std::exp(logodds));
}

CellClass classify_probability(double p) {
    if (p > kOccupiedThresh) {
        return CellClass::occupied;
    }
    if (p < kFreeThresh) {
        return CellClass::free;
    }
    return CellClass::unknown;
}

OccupancyGrid::OccupancyGrid(double resolution, Point2 origin, int width, int height)
    : resolution_(resolution), origin_(origin), width_(width), height_(height) {
    if (!(resolution > 0.0) || width < 0 || height < 0) {
        throw std::invalid_argument("OccupancyGrid: invalid geometry");
    }
    cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

OccupancyGrid OccupancyGrid::for_bounds(const Bounds& bounds, double resolution, double margin) {
    const int w = static_cast<int>(std::ceil((bounds.width() + 2.0 * margin) / resolution - 1e-9));
    const int h = static_cast<int>(std::ceil((bounds.height() + 2.0 * margin) / resolution - 1e-9));
    return OccupancyGrid(resolution, {bounds.xmin - margin, bounds.ymin - margin}, w, h);
}

CellIndex OccupancyGrid::world_to_cell_unchecked(double x, double y) const {
    return {static_cast<int>(std::floor((x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((y - origin_.y) / resolution_))};
}

std::optional<CellIndex> OccupancyGrid::world_to_cell(double x, double y) const {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        return std::nullopt;
    }
    const double fx = std::floor((x - origin_.x) / resolution_);
    const double fy = std::floor((y - origin_.y) / resolution_);
    if (fx < 0.0 || fy < 0.0 || fx >= width_ || fy >= height_) {
        return std::nullopt;
    }
    return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

Point2 OccupancyGrid::cell_center(CellIndex c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
}

CellClass OccupancyGrid::classify(std::size_t idx) const {
    return classify_probability(probability(idx));
}

OccupancyGrid::Raw OccupancyGrid::to_raw(double logodds) {
    return static_cast<Raw>(std::llround(logodds / kQuantum));
}

OccupancyGrid::Raw OccupancyGrid::occupied_raw_min() {
    // Smallest raw value classified occupied; probability is monotone in raw.
    static const Raw threshold = [] {
        Raw r = to_raw(std::log(kOccupiedThresh / (1.0 - kOccupiedThresh))) - 2;
        while (cell_probability(static_cast<double>(r) * kQuantum) <= kOccupiedThresh) {
            ++r;
        }
        return r;
    }();
    return threshold;
}

void OccupancyGrid::set_logodds(std::size_t idx, double l, const SensorModel& model) {
    cells_[idx] = std::clamp(to_raw(l), to_raw(model.l_min), to_raw(model.l_max));
}

bool OccupancyGrid::add(std::size_t idx, Raw delta, Raw lo, Raw hi) {
    const Raw before = cells_[idx];
    const Raw after = std::clamp(before + delta, lo, hi);
    cells_[idx] = after;
    const Raw occ = occupied_raw_min();
    return (before >= occ) != (after >= occ);
}

GridUpdate update_occupancy(OccupancyGrid& grid, const Pose2& pose, const LaserScan& scan,
                            const SensorModel& model) {
    GridUpdate result;
    const auto robot = grid.world_to_cell(pose.x, pose.y);
    if (!robot) {
        throw std::out_of_range("update_occupancy: pose outside grid");
    }
    const auto l_free = OccupancyGrid::to_raw(model.l_free);
    const auto l_occ = OccupancyGrid::to_raw(model.l_occ);
    const auto lo = OccupancyGrid::to_raw(model.l_min);
    const auto hi = OccupancyGrid::to_raw(model.l_max);

    for (std::size_t i = 0; i < scan.n_beams(); ++i) {
        const double angle = pose.theta + scan.bearing(i);
        const double r = scan.ranges[i];
        const CellIndex end =
            grid.world_to_cell_unchecked(pose.x + r * std::cos(angle), pose.y + r * std::sin(angle));
        trace_line(*robot, end, [&](int col, int row) {
            if (!grid.in_bounds(col, row)) {
                return false;
            }
            const std::size_t idx = grid.index(col, row);
            if (grid.add(idx, l_free, lo, hi)) {
                result.occupancy_flips.push_back(idx);
            }
            return true;
        });
        if (scan.is_return(i) && grid.in_bounds(end.col, end.row)) {
            const std::size_t idx = grid.index(end.col, end.row);
            if (grid.add(idx, l_occ, lo, hi)) {
                result.occupancy_flips.push_back(idx);
            }
        }
    }
    return result;
}

}  // namespace slam

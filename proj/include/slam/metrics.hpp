#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "slam/gridmap.hpp"
#include "slam/world.hpp"

namespace slam {

struct Metrics {
    double ate_rmse{0.0};
    double dead_reckoning_rmse{0.0};
    std::size_t loop_closure_count{0};
    /// Fraction of loop closures joining poses within 1 m of each other in
    /// ground truth; 1 when there are none.
    double closure_precision{1.0};
    double cell_agreement{0.0};
    std::size_t steps{0};
    double wall_time{0.0};
};

nlohmann::json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);

/// RMS translational error after mapping the estimate's first pose onto the
/// truth's first pose. Throws std::invalid_argument on length mismatch or
/// empty input.
double ate_rmse(std::span<const Pose2> estimated, std::span<const Pose2> truth);

/// Ground-truth classes on the grid's geometry: a cell is occupied when a wall
/// segment touches its closed square [x0,x1] x [y0,y1], free otherwise. A wall
/// on a cell boundary marks both neighbours, since it is visible from both sides.
std::vector<CellClass> rasterize_world(const WorldModel& world, const OccupancyGrid& geometry);

struct AgreementStats {
    std::size_t compared{0};
    std::size_t agreeing{0};
    double fraction() const { return compared == 0 ? 0.0 : static_cast<double>(agreeing) / compared; }
};

/// Class agreement with the rasterized world over observed cells. A cell is
/// observed once the map commits to a class (free or occupied).
AgreementStats cell_agreement(const OccupancyGrid& map, const WorldModel& world);

}  // namespace slam

#include "slam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slam {

nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"ate_rmse", m.ate_rmse},
            {"dead_reckoning_rmse", m.dead_reckoning_rmse},
            {"loop_closure_count", m.loop_closure_count},
            {"closure_precision", m.closure_precision},
            {"cell_agreement", m.cell_agreement},
            {"steps", m.steps},
            {"wall_time", m.wall_time}};
}

Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.ate_rmse = j.at("ate_rmse").get<double>();
    m.dead_reckoning_rmse = j.at("dead_reckoning_rmse").get<double>();
    m.loop_closure_count = j.at("loop_closure_count").get<std::size_t>();
    m.closure_precision = j.at("closure_precision").get<double>();
    m.cell_agreement = j.at("cell_agreement").get<double>();
    m.steps = j.at("steps").get<std::size_t>();
    m.wall_time = j.at("wall_time").get<double>();
    return m;
}

double ate_rmse(std::span<const Pose2> estimated, std::span<const Pose2> truth) {
    if (estimated.size() != truth.size()) {
        throw std::invalid_argument("ate_rmse: trajectories differ in length");
    }
    if (estimated.empty()) {
        throw std::invalid_argument("ate_rmse: empty trajectory");
    }
    const Pose2 align = compose(truth[0], inverse(estimated[0]));
    double sum = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i) {
        const Pose2 e = compose(align, estimated[i]);
        const double dx = e.x - truth[i].x;
        const double dy = e.y - truth[i].y;
        sum += dx * dx + dy * dy;
    }
    return std::sqrt(sum / static_cast<double>(estimated.size()));
}

namespace {

// Liang-Barsky test of a segment against the closed cell [x0,x1] x [y0,y1].
// A wall lying on a cell boundary touches the cells on both sides.
bool segment_enters_cell(const Segment& s, double x0, double y0, double x1, double y1) {
    double lo = 0.0, hi = 1.0;
    const double dx = s.x2 - s.x1, dy = s.y2 - s.y1;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {s.x1 - x0, x1 - s.x1, s.y1 - y0, y1 - s.y1};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) {
                return false;
            }
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) {
            lo = std::max(lo, t);
        } else {
            hi = std::min(hi, t);
        }
    }
    return lo <= hi;
}

}  // namespace

std::vector<CellClass> rasterize_world(const WorldModel& world, const OccupancyGrid& g) {
    std::vector<CellClass> out(g.size(), CellClass::free);
    const double res = g.resolution();
    const Point2 o = g.origin_point();
    // cell units, so boundaries are exact integers
    for (const auto& w : world.segments) {
        const Segment s{(w.x1 - o.x) / res, (w.y1 - o.y) / res, (w.x2 - o.x) / res, (w.y2 - o.y) / res};
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min(s.x1, s.x2))) - 1);
        const int c1 = std::min(g.width() - 1, static_cast<int>(std::floor(std::max(s.x1, s.x2))) + 1);
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min(s.y1, s.y2))) - 1);
        const int r1 = std::min(g.height() - 1, static_cast<int>(std::floor(std::max(s.y1, s.y2))) + 1);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                if (segment_enters_cell(s, c, r, c + 1.0, r + 1.0)) {
                    out[g.index(c, r)] = CellClass::occupied;
                }
            }
        }
    }
    return out;
}

AgreementStats cell_agreement(const OccupancyGrid& map, const WorldModel& world) {
    const auto truth = rasterize_world(world, map);
    AgreementStats stats;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const CellClass c = map.classify(i);
        if (c == CellClass::unknown) {
            continue;
        }
        ++stats.compared;
        stats.agreeing += c == truth[i] ? 1 : 0;
    }
    return stats;
}

}  // namespace slam

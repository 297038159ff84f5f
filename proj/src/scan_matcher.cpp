#include <algorithm>
#include <cmath>
#include <limits>

#include "slam/gridmap.hpp"
#include "slam/loopclosure.hpp"

namespace slam {

std::vector<Point2> scan_points(const LaserScan& scan) {
    std::vector<Point2> pts;
    pts.reserve(scan.n_beams());
    for (std::size_t i = 0; i < scan.n_beams(); ++i) {
        if (scan.is_return(i)) {
            const double b = scan.bearing(i);
            pts.push_back({scan.ranges[i] * std::cos(b), scan.ranges[i] * std::sin(b)});
        }
    }
    return pts;
}

namespace {

/// Reference rasterization of scan a: cells on the endpoint polyline hold 1,
/// neighbours decay with a Gaussian of the cell distance.
class ScoreGrid {
public:
    ScoreGrid(const std::vector<Point2>& pts, const LaserScan& scan, const VerifyParams& p) : res_(p.resolution_xy) {
        double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
        double xmax = -xmin, ymax = -xmin;
        for (const auto& q : pts) {
            xmin = std::min(xmin, q.x);
            ymin = std::min(ymin, q.y);
            xmax = std::max(xmax, q.x);
            ymax = std::max(ymax, q.y);
        }
        const double pad = 4.0 * p.smoothing_sigma + res_;
        ox_ = xmin - pad;
        oy_ = ymin - pad;
        w_ = static_cast<int>(std::ceil((xmax - xmin + 2 * pad) / res_)) + 1;
        h_ = static_cast<int>(std::ceil((ymax - ymin + 2 * pad) / res_)) + 1;
        std::vector<std::uint8_t> hit(static_cast<std::size_t>(w_) * h_, 0);
        auto mark = [&](int c, int r) {
            if (c >= 0 && r >= 0 && c < w_ && r < h_) {
                hit[static_cast<std::size_t>(r) * w_ + c] = 1;
            }
        };
        // Join consecutive endpoints that are close, so a wall sampled sparsely
        // by a still reads as a continuous surface.
        CellIndex prev{};
        Point2 prev_pt{};
        bool have_prev = false;
        for (std::size_t i = 0; i < scan.n_beams(); ++i) {
            if (!scan.is_return(i)) {
                have_prev = false;
                continue;
            }
            const double b = scan.bearing(i);
            const Point2 q{scan.ranges[i] * std::cos(b), scan.ranges[i] * std::sin(b)};
            const CellIndex c = cell(q.x, q.y);
            mark(c.col, c.row);
            if (have_prev && std::hypot(q.x - prev_pt.x, q.y - prev_pt.y) <= p.link_gap) {
                trace_line(prev, c, [&](int col, int row) {
                    mark(col, row);
                    return true;
                });
            }
            prev = c;
            prev_pt = q;
            have_prev = true;
        }

        const int radius = static_cast<int>(std::ceil(3.0 * p.smoothing_sigma / res_));
        values_.assign(hit.size(), 0.0f);
        const double inv = 1.0 / (2.0 * p.smoothing_sigma * p.smoothing_sigma);
        for (int r = 0; r < h_; ++r) {
            for (int c = 0; c < w_; ++c) {
                if (!hit[static_cast<std::size_t>(r) * w_ + c]) {
                    continue;
                }
                for (int dr = -radius; dr <= radius; ++dr) {
                    for (int dc = -radius; dc <= radius; ++dc) {
                        const int cc = c + dc, rr = r + dr;
                        if (cc < 0 || rr < 0 || cc >= w_ || rr >= h_) {
                            continue;
                        }
                        const double d2 = (dc * dc + dr * dr) * res_ * res_;
                        const auto v = static_cast<float>(std::exp(-d2 * inv));
                        float& slot = values_[static_cast<std::size_t>(rr) * w_ + cc];
                        slot = std::max(slot, v);
                    }
                }
            }
        }
    }

    CellIndex cell(double x, double y) const {
        return {static_cast<int>(std::floor((x - ox_) / res_)), static_cast<int>(std::floor((y - oy_) / res_))};
    }
    float value(int c, int r) const {
        if (c < 0 || r < 0 || c >= w_ || r >= h_) {
            return 0.0f;
        }
        return values_[static_cast<std::size_t>(r) * w_ + c];
    }

private:
    double res_;
    double ox_{0}, oy_{0};
    int w_{0}, h_{0};
    std::vector<float> values_;
};

}  // namespace

VerifyResult verify(const LaserScan& a, const LaserScan& b, const Pose2& init, const VerifyParams& params) {
    VerifyResult result;
    const auto pa = scan_points(a);
    const auto pb = scan_points(b);
    if (pa.size() < params.min_returns || pb.size() < params.min_returns) {
        result.reason = "degenerate scan: fewer than " + std::to_string(params.min_returns) + " returns";
        return result;
    }

    const ScoreGrid grid(pa, a, params);
    const int n_xy = static_cast<int>(std::lround(params.search_xy / params.resolution_xy));
    const int n_th = static_cast<int>(std::lround(params.search_theta / params.resolution_theta));
    const int span = 2 * n_xy + 1;

    double best_score = -1.0;
    int best_i = 0, best_j = 0, best_k = 0;
    std::vector<CellIndex> cells(pb.size());
    std::vector<double> sums(static_cast<std::size_t>(span) * span);
    // Search order: rotation offsets 0, -1, +1, -2, ... so ties prefer the
    // transform closest to init.
    for (int kk = 0; kk <= 2 * n_th; ++kk) {
        const int k = (kk % 2 == 0) ? kk / 2 : -(kk + 1) / 2;
        const double th = init.theta + k * params.resolution_theta;
        const double c = std::cos(th), s = std::sin(th);
        for (std::size_t m = 0; m < pb.size(); ++m) {
            cells[m] = grid.cell(init.x + c * pb[m].x - s * pb[m].y, init.y + s * pb[m].x + c * pb[m].y);
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (int j = -n_xy; j <= n_xy; ++j) {
            for (int i = -n_xy; i <= n_xy; ++i) {
                double sum = 0.0;
                for (const auto& cell : cells) {
                    sum += grid.value(cell.col + i, cell.row + j);
                }
                sums[static_cast<std::size_t>(j + n_xy) * span + (i + n_xy)] = sum;
            }
        }
        for (int j = -n_xy; j <= n_xy; ++j) {
            for (int i = -n_xy; i <= n_xy; ++i) {
                const double score = sums[static_cast<std::size_t>(j + n_xy) * span + (i + n_xy)];
                const auto closer = [&] {
                    return std::abs(i) + std::abs(j) < std::abs(best_i) + std::abs(best_j);
                };
                if (score > best_score || (score == best_score && best_k == k && closer())) {
                    best_score = score;
                    best_i = i;
                    best_j = j;
                    best_k = k;
                }
            }
        }
    }

    result.score = std::clamp(best_score / static_cast<double>(pb.size()), 0.0, 1.0);
    result.relative = Pose2{init.x + best_i * params.resolution_xy, init.y + best_j * params.resolution_xy,
                            init.theta + best_k * params.resolution_theta};
    if (result.score < params.verify_threshold) {
        result.reason = "score below threshold";
        return result;
    }
    result.accepted = true;
    return result;
}

}  // namespace slam

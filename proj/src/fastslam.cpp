#include "slam/fastslam.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace slam {

namespace {

constexpr float kFar = std::numeric_limits<float>::infinity();

// Normalizes prior * exp(log_lik) in place. Returns false (and resets to
// uniform) when no particle carries finite positive mass.
bool normalize(std::vector<double>& weights, const std::vector<double>& log_lik) {
    const std::size_t n = weights.size();
    std::vector<double> logw(n);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        logw[i] = (weights[i] > 0.0 ? std::log(weights[i]) : -std::numeric_limits<double>::infinity()) + log_lik[i];
        if (std::isfinite(logw[i])) {
            best = std::max(best, logw[i]);
        }
    }
    double sum = 0.0;
    if (std::isfinite(best)) {
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - best) : 0.0;
            sum += weights[i];
        }
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
        return false;
    }
    for (auto& w : weights) {
        w /= sum;
    }
    return true;
}

double floor_term(const LikelihoodParams& p, double range_max) {
    return p.z_rand / range_max;
}

}  // namespace

// ---------------------------------------------------------------------------
// Likelihood field

LikelihoodField::LikelihoodField(const OccupancyGrid& grid, double max_distance) : max_distance_(max_distance) {
    build_offsets(grid.resolution());
    dist_.assign(grid.size(), kFar);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        if (grid.is_occupied(idx)) {
            stamp(grid, grid.cell_of(idx));
        }
    }
}

void LikelihoodField::build_offsets(double resolution) {
    radius_ = static_cast<int>(std::ceil(max_distance_ / resolution));
    offsets_.clear();
    for (int dr = -radius_; dr <= radius_; ++dr) {
        for (int dc = -radius_; dc <= radius_; ++dc) {
            const double d = std::hypot(dc, dr) * resolution;
            if (d <= max_distance_) {
                offsets_.push_back({dc, dr, static_cast<float>(d)});
            }
        }
    }
}

void LikelihoodField::stamp(const OccupancyGrid& grid, CellIndex c) {
    for (const auto& o : offsets_) {
        const int col = c.col + o.dc;
        const int row = c.row + o.dr;
        if (!grid.in_bounds(col, row)) {
            continue;
        }
        float& slot = dist_[grid.index(col, row)];
        slot = std::min(slot, o.d);
    }
}

void LikelihoodField::apply_flips(const OccupancyGrid& grid, std::span<const std::size_t> flips) {
    if (flips.empty()) {
        return;
    }
    if (dist_.size() != grid.size()) {
        *this = LikelihoodField(grid, max_distance_);
        return;
    }
    int cmin = grid.width(), cmax = -1, rmin = grid.height(), rmax = -1;
    for (const std::size_t idx : flips) {
        const CellIndex c = grid.cell_of(idx);
        if (grid.is_occupied(idx)) {
            stamp(grid, c);
        } else {
            cmin = std::min(cmin, c.col);
            cmax = std::max(cmax, c.col);
            rmin = std::min(rmin, c.row);
            rmax = std::max(rmax, c.row);
        }
    }
    if (cmax < 0) {
        return;
    }
    // Cells that lost an occupied neighbour: reset the affected box, then
    // re-stamp every occupied cell that can reach into it.
    const int r = radius_;
    for (int row = std::max(0, rmin - r); row <= std::min(grid.height() - 1, rmax + r); ++row) {
        for (int col = std::max(0, cmin - r); col <= std::min(grid.width() - 1, cmax + r); ++col) {
            dist_[grid.index(col, row)] = kFar;
        }
    }
    for (int row = std::max(0, rmin - 2 * r); row <= std::min(grid.height() - 1, rmax + 2 * r); ++row) {
        for (int col = std::max(0, cmin - 2 * r); col <= std::min(grid.width() - 1, cmax + 2 * r); ++col) {
            if (grid.is_occupied(grid.index(col, row))) {
                stamp(grid, {col, row});
            }
        }
    }
}

std::size_t used_beam_count(const LaserScan& scan, std::size_t beam_skip) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < scan.n_beams(); i += std::max<std::size_t>(beam_skip, 1)) {
        n += scan.is_return(i) ? 1 : 0;
    }
    return n;
}

double measurement_log_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                                  const LikelihoodField& field, const LikelihoodParams& params) {
    const double floor = floor_term(params, scan.range_max);
    const double norm = params.z_hit / (params.sigma_hit * std::sqrt(2.0 * std::numbers::pi));
    const double inv_two_var = 1.0 / (2.0 * params.sigma_hit * params.sigma_hit);
    const std::size_t skip = std::max<std::size_t>(params.beam_skip, 1);
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    double total = 0.0;
    for (std::size_t i = 0; i < scan.n_beams(); i += skip) {
        if (!scan.is_return(i)) {
            continue;
        }
        const double r = scan.ranges[i];
        const double b = scan.bearing(i);
        const double lx = r * std::cos(b);
        const double ly = r * std::sin(b);
        const auto cell = map.world_to_cell(pose.x + c * lx - s * ly, pose.y + s * lx + c * ly);
        double p = floor;
        if (cell) {
            const std::size_t idx = map.index(cell->col, cell->row);
            const double d = field.distance(idx);
            if (map.is_observed(idx) && std::isfinite(d)) {
                p += norm * std::exp(-d * d * inv_two_var);
            }
        }
        total += std::log(p);
    }
    return total;
}

double measurement_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                              const LikelihoodField& field, const LikelihoodParams& params) {
    return std::exp(measurement_log_likelihood(scan, pose, map, field, params));
}

double measurement_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                              const LikelihoodParams& params) {
    return measurement_likelihood(scan, pose, map, LikelihoodField(map, params.max_distance), params);
}

// ---------------------------------------------------------------------------
// Particle set utilities

std::vector<double> ParticleSet::weights() const {
    std::vector<double> w;
    w.reserve(particles.size());
    for (const auto& p : particles) {
        w.push_back(p.weight);
    }
    return w;
}

const Particle& ParticleSet::best() const {
    assert(!particles.empty());
    // First maximum wins so ties resolve deterministically.
    std::size_t best = 0;
    for (std::size_t i = 1; i < particles.size(); ++i) {
        if (particles[i].weight > particles[best].weight) {
            best = i;
        }
    }
    return particles[best];
}

double effective_sample_size(std::span<const double> weights) {
    double sq = 0.0;
    for (const double w : weights) {
        sq += w * w;
    }
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<std::size_t> low_variance_indices(std::span<const double> weights, Rng& rng) {
    const std::size_t m = weights.size();
    std::vector<std::size_t> out;
    out.reserve(m);
    if (m == 0) {
        return out;
    }
    const double step = 1.0 / static_cast<double>(m);
    const double r = rng.uniform() * step;
    double c = weights[0];
    std::size_t i = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double u = r + static_cast<double>(k) * step;
        while (u > c && i + 1 < m) {
            ++i;
            c += weights[i];
        }
        out.push_back(i);
    }
    return out;
}

ParticleSet low_variance_resample(const ParticleSet& set, Rng& rng) {
    const auto w = set.weights();
    const auto idx = low_variance_indices(w, rng);
    ParticleSet out;
    out.step_count = set.step_count;
    out.particles.reserve(idx.size());
    const double uniform = 1.0 / static_cast<double>(idx.size());
    for (const std::size_t i : idx) {
        out.particles.push_back(set.particles[i]);
        out.particles.back().weight = uniform;
    }
    return out;
}

// ---------------------------------------------------------------------------
// FastSLAM

FastSlam::FastSlam(const FastSlamConfig& config, const OccupancyGrid& blank_map, const Pose2& start,
                   std::uint64_t seed)
    : config_(config), resample_rng_(make_rng(seed, RngStream::resampling)) {
    assert(config.particles >= 1);
    Particle proto;
    proto.pose = start;
    proto.weight = 1.0 / static_cast<double>(config.particles);
    proto.map = blank_map;
    proto.field = LikelihoodField(blank_map, config.likelihood.max_distance);
    proto.trajectory = {start};
    set_.particles.assign(config.particles, proto);
    particle_rngs_.reserve(config.particles);
    for (std::size_t i = 0; i < config.particles; ++i) {
        particle_rngs_.push_back(make_rng(seed, RngStream::particles, i));
    }
}

void FastSlam::initialize_map(const LaserScan& scan) {
    for (auto& p : set_.particles) {
        const auto update = update_occupancy(p.map, p.pose, scan, config_.sensor);
        p.field.apply_flips(p.map, update.occupancy_flips);
    }
}

void FastSlam::update_particle(std::size_t i, const OdometryDelta& delta, const LaserScan& scan,
                               std::vector<double>& log_lik) {
    Particle& p = set_.particles[i];
    p.pose = sample_motion(p.pose, delta, config_.noise, particle_rngs_[i]);
    p.trajectory.push_back(p.pose);
    const auto map_update = [&] {
        const auto update = update_occupancy(p.map, p.pose, scan, config_.sensor);
        p.field.apply_flips(p.map, update.occupancy_flips);
    };
    if (config_.weight_after_map_update) {
        map_update();
        log_lik[i] = measurement_log_likelihood(scan, p.pose, p.map, p.field, config_.likelihood);
    } else {
        log_lik[i] = measurement_log_likelihood(scan, p.pose, p.map, p.field, config_.likelihood);
        map_update();
    }
}

StepReport FastSlam::step(const OdometryDelta& delta, const LaserScan& scan) {
    const std::size_t m = set_.size();
    std::vector<double> log_lik(m, 0.0);
    detail::parallel_for(m, config_.threads, [&](std::size_t i) { update_particle(i, delta, scan, log_lik); });
    ++set_.step_count;

    StepReport report;
    std::vector<double> w = set_.weights();
    if (!normalize(w, log_lik)) {
        report.degenerate = true;
        ++degenerate_steps_;
    }
    for (std::size_t i = 0; i < m; ++i) {
        set_.particles[i].weight = w[i];
    }
    report.n_eff = effective_sample_size(w);
    if (m > 1 && (config_.resample_every_step || report.n_eff < 0.5 * static_cast<double>(m))) {
        set_ = low_variance_resample(set_, resample_rng_);
        report.resampled = true;
        ++resample_count_;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Localization

MonteCarloLocalizer::MonteCarloLocalizer(const LocalizationConfig& config, const OccupancyGrid& map,
                                         const Pose2& start, std::uint64_t seed)
    : config_(config),
      map_(map),
      field_(map, config.likelihood.max_distance),
      resample_rng_(make_rng(seed, RngStream::resampling)) {
    assert(config.particles >= 1);
    Rng init = make_rng(seed, RngStream::motion);
    poses_.reserve(config.particles);
    for (std::size_t i = 0; i < config.particles; ++i) {
        poses_.push_back({start.x + init.gaussian(config.init_sigma_xy), start.y + init.gaussian(config.init_sigma_xy),
                          start.theta + init.gaussian(config.init_sigma_theta)});
        rngs_.push_back(make_rng(seed, RngStream::particles, i));
    }
    weights_.assign(config.particles, 1.0 / static_cast<double>(config.particles));
}

Pose2 MonteCarloLocalizer::estimate() const {
    double x = 0.0, y = 0.0, sn = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < poses_.size(); ++i) {
        x += weights_[i] * poses_[i].x;
        y += weights_[i] * poses_[i].y;
        sn += weights_[i] * std::sin(poses_[i].theta);
        cs += weights_[i] * std::cos(poses_[i].theta);
    }
    return {x, y, std::atan2(sn, cs)};
}

LocalizationEstimate MonteCarloLocalizer::step(const OdometryDelta& delta, const LaserScan& scan) {
    const std::size_t m = poses_.size();
    std::vector<double> log_lik(m, 0.0);
    detail::parallel_for(m, config_.threads, [&](std::size_t i) {
        poses_[i] = sample_motion(poses_[i], delta, config_.noise, rngs_[i]);
        log_lik[i] = measurement_log_likelihood(scan, poses_[i], map_, field_, config_.likelihood);
    });

    const bool ok = normalize(weights_, log_lik);
    const double n_eff = effective_sample_size(weights_);

    // Degenerate: no beam of the best particle finds the map, or the weight
    // mass collapsed onto a single particle.
    const std::size_t used = used_beam_count(scan, config_.likelihood.beam_skip);
    const double floor_ll = static_cast<double>(used) * std::log(floor_term(config_.likelihood, scan.range_max));
    const double best_ll = *std::max_element(log_lik.begin(), log_lik.end());
    const bool at_floor = used == 0 || best_ll <= floor_ll + 1e-9 * std::abs(floor_ll);
    const bool collapsed = m > 1 && n_eff < 1.0 + 1e-6;
    if (!ok || at_floor || collapsed) {
        ++floor_streak_;
    } else {
        floor_streak_ = 0;
    }
    lost_ = floor_streak_ >= config_.lost_after;

    LocalizationEstimate out{estimate(), n_eff, lost_};

    if (m > 1 && n_eff < 0.5 * static_cast<double>(m)) {
        const auto idx = low_variance_indices(weights_, resample_rng_);
        std::vector<Pose2> next;
        next.reserve(m);
        for (const auto i : idx) {
            next.push_back(poses_[i]);
        }
        poses_ = std::move(next);
        std::fill(weights_.begin(), weights_.end(), 1.0 / static_cast<double>(m));
    }
    return out;
}

std::vector<LocalizationEstimate> localize(const OccupancyGrid& map,
                                           std::span<const std::pair<OdometryDelta, LaserScan>> stream,
                                           const Pose2& start, const LocalizationConfig& config, std::uint64_t seed) {
    std::vector<LocalizationEstimate> out;
    if (stream.empty()) {
        return out;
    }
    MonteCarloLocalizer mcl(config, map, start, seed);
    out.reserve(stream.size());
    for (const auto& [delta, scan] : stream) {
        out.push_back(mcl.step(delta, scan));
    }
    return out;
}

}  // namespace slam

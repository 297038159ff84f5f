#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slam/gridmap.hpp"
#include "slam/motion.hpp"
#include "slam/rng.hpp"
#include "slam/sim.hpp"

namespace slam {

struct LikelihoodParams {
    double sigma_hit{0.2};
    double z_hit{0.9};
    double z_rand{0.1};
    std::size_t beam_skip{5};  // use every k-th beam
    double max_distance{1.0};  // distance field cap, meters
};

/// Distance from every cell to the nearest occupied cell, capped at
/// max_distance (beyond the cap the distance reads as +inf). Maintained
/// incrementally from the occupancy flips reported by update_occupancy.
class LikelihoodField {
public:
    LikelihoodField() = default;
    LikelihoodField(const OccupancyGrid& grid, double max_distance);

    void apply_flips(const OccupancyGrid& grid, std::span<const std::size_t> flips);

    double distance(std::size_t idx) const { return dist_[idx]; }
    double max_distance() const { return max_distance_; }

    friend bool operator==(const LikelihoodField&, const LikelihoodField&) = default;

private:
    struct Offset {
        int dc;
        int dr;
        float d;

        friend bool operator==(const Offset&, const Offset&) = default;
    };
    void stamp(const OccupancyGrid& grid, CellIndex c);
    void build_offsets(double resolution);

    double max_distance_{1.0};
    int radius_{0};
    std::vector<Offset> offsets_;
    std::vector<float> dist_;
};

/// Log of the likelihood-field measurement model. Every beam_skip-th returned
/// beam contributes log(z_hit * N(d; 0, sigma_hit^2) + z_rand / range_max),
/// where d is the endpoint's distance to the nearest occupied cell. Endpoints
/// outside the grid or in unobserved cells contribute the floor term only.
double measurement_log_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                                  const LikelihoodField& field, const LikelihoodParams& params);

double measurement_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                              const LikelihoodField& field, const LikelihoodParams& params);

/// Convenience overload that builds the distance field on the fly.
double measurement_likelihood(const LaserScan& scan, const Pose2& pose, const OccupancyGrid& map,
                              const LikelihoodParams& params);

/// Number of beams measurement_likelihood evaluates.
std::size_t used_beam_count(const LaserScan& scan, std::size_t beam_skip);

struct Particle {
    Pose2 pose;
    double weight{1.0};
    OccupancyGrid map;
    LikelihoodField field;
    std::vector<Pose2> trajectory;
};

struct ParticleSet {
    std::vector<Particle> particles;
    std::size_t step_count{0};

    std::size_t size() const { return particles.size(); }
    std::vector<double> weights() const;
    const Particle& best() const;
};

/// 1 / sum(w^2).
double effective_sample_size(std::span<const double> weights);

/// Systematic resampling: one uniform draw in [0, 1/M) and a comb of spacing
/// 1/M. Output weights are uniform.
ParticleSet low_variance_resample(const ParticleSet& set, Rng& rng);

/// Indices selected by the comb; exposed for statistics tests.
std::vector<std::size_t> low_variance_indices(std::span<const double> weights, Rng& rng);

struct FastSlamConfig {
    std::size_t particles{50};
    MotionNoise noise{};
    LikelihoodParams likelihood{};
    SensorModel sensor{};
    bool resample_every_step{false};
    bool weight_after_map_update{false};
    std::size_t threads{1};
};

struct StepReport {
    double n_eff{0.0};
    bool resampled{false};
    bool degenerate{false};
};

/// Grid-based FastSLAM. Each particle carries its own trajectory and map; one
/// step samples motion, weights against the particle's map, updates the map,
/// normalizes and resamples when the effective sample size drops below M/2.
class FastSlam {
public:
    FastSlam(const FastSlamConfig& config, const OccupancyGrid& blank_map, const Pose2& start, std::uint64_t seed);

    StepReport step(const OdometryDelta& delta, const LaserScan& scan);

    /// Integrates the first scan at the start pose without motion or weighting.
    void initialize_map(const LaserScan& scan);

    const ParticleSet& particles() const { return set_; }
    const Particle& best() const { return set_.best(); }
    const FastSlamConfig& config() const { return config_; }
    std::size_t degenerate_steps() const { return degenerate_steps_; }
    std::size_t resample_count() const { return resample_count_; }

private:
    void update_particle(std::size_t i, const OdometryDelta& delta, const LaserScan& scan,
                         std::vector<double>& log_lik);

    FastSlamConfig config_;
    ParticleSet set_;
    std::vector<Rng> particle_rngs_;
    Rng resample_rng_;
    std::size_t degenerate_steps_{0};
    std::size_t resample_count_{0};
};

struct LocalizationConfig {
    std::size_t particles{200};
    MotionNoise noise{};
    LikelihoodParams likelihood{};
    double init_sigma_xy{0.1};
    double init_sigma_theta{0.05};
    std::size_t lost_after{10};  // consecutive degenerate steps before flagging lost
    std::size_t threads{1};
};

struct LocalizationEstimate {
    Pose2 pose;
    double n_eff{0.0};
    bool lost{false};
};

/// Monte Carlo localization against a fixed map. The map is never modified.
class MonteCarloLocalizer {
public:
    MonteCarloLocalizer(const LocalizationConfig& config, const OccupancyGrid& map, const Pose2& start,
                        std::uint64_t seed);

    LocalizationEstimate step(const OdometryDelta& delta, const LaserScan& scan);

    /// Weighted mean position and circular mean heading.
    Pose2 estimate() const;
    std::span<const Pose2> poses() const { return poses_; }
    std::span<const double> weights() const { return weights_; }
    bool lost() const { return lost_; }

private:
    LocalizationConfig config_;
    const OccupancyGrid& map_;
    LikelihoodField field_;
    std::vector<Pose2> poses_;
    std::vector<double> weights_;
    std::vector<Rng> rngs_;
    Rng resample_rng_;
    std::size_t floor_streak_{0};
    bool lost_{false};
};

/// Runs the localizer over a recorded stream, one estimate per input.
std::vector<LocalizationEstimate> localize(const OccupancyGrid& map,
                                           std::span<const std::pair<OdometryDelta, LaserScan>> stream,
                                           const Pose2& start, const LocalizationConfig& config, std::uint64_t seed);

}  // namespace slam

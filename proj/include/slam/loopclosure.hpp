#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "slam/geometry.hpp"
#include "slam/posegraph.hpp"
#include "slam/sim.hpp"

namespace slam {

inline constexpr std::size_t kDescriptorBins = 64;

/// Appearance signature of a scan. The first half of the bins is a
/// Gaussian-kernel histogram of returned ranges over (0, range_max]; the second
/// half a histogram of widths r(theta) + r(theta + pi) over (0, 2 range_max].
/// The bins sum to 1, split evenly between the halves when widths exist.
/// Invariant to in-place rotation.
struct ScanDescriptor {
    std::array<double, kDescriptorBins> bins{};
    double mean_range{0.0};
    bool empty{true};  // no beam returned

    friend bool operator==(const ScanDescriptor&, const ScanDescriptor&) = default;
};

ScanDescriptor describe(const LaserScan& scan);

/// Cosine similarity of the bin vectors; 0 when either descriptor is empty.
double cosine_similarity(const ScanDescriptor& a, const ScanDescriptor& b);

struct DetectParams {
    std::size_t gate_recent{30};
    double sim_threshold{0.92};
    std::size_t max_candidates{3};
    std::size_t wm_capacity{200};
    int promote_radius{2};  // node-id neighbourhood promoted on a hit
};

struct MemoryEntry {
    int node_id{0};
    ScanDescriptor descriptor;
    LaserScan scan;
    std::size_t last_access{0};
};

struct Candidate {
    int node_id{0};
    double similarity{0.0};
};

/// Working memory with a bounded number of entries searched per query, and a
/// long-term store for entries demoted on overflow (least recently accessed
/// first). Long-term entries return to working memory when a neighbouring node
/// is retrieved.
class LoopMemory {
public:
    explicit LoopMemory(const DetectParams& params = {});

    void insert(int node_id, const ScanDescriptor& descriptor, const LaserScan& scan, std::size_t step);

    /// Candidates above the similarity threshold, best first, at most
    /// max_candidates. Nodes within gate_recent of current_node are skipped.
    std::vector<Candidate> detect(const ScanDescriptor& query, int current_node, std::size_t step);

    const MemoryEntry* find(int node_id) const;
    bool in_working_memory(int node_id) const { return working_.contains(node_id); }
    std::size_t working_size() const { return working_.size(); }
    std::size_t long_term_size() const { return long_term_.size(); }
    /// Similarity evaluations performed by the last detect() call.
    std::size_t last_comparisons() const { return last_comparisons_; }
    const DetectParams& params() const { return params_; }

private:
    void enforce_capacity(const std::vector<int>& pinned);
    void promote_neighbours(int node_id, std::size_t step, std::vector<int>& promoted);

    DetectParams params_;
    std::map<int, MemoryEntry> working_;
    std::map<int, MemoryEntry> long_term_;
    std::size_t last_comparisons_{0};
};

struct VerifyParams {
    double search_xy{0.5};
    double search_theta{30.0 * std::numbers::pi / 180.0};
    double resolution_xy{0.05};
    double resolution_theta{std::numbers::pi / 180.0};
    double verify_threshold{0.6};
    double smoothing_sigma{0.075};  // blur applied to the reference rasterization
    double link_gap{0.25};          // consecutive endpoints closer than this are joined
    std::size_t min_returns{10};
};

struct VerifyResult {
    bool accepted{false};
    Pose2 relative;  // pose of scan b in the frame of scan a
    double score{0.0};
    std::string reason;
};

/// Correlative scan matching of b against a around init over a bounded
/// (x, y, theta) window. Score is the mean smoothed-occupancy value of b's
/// endpoints in a's rasterization, in [0, 1].
VerifyResult verify(const LaserScan& a, const LaserScan& b, const Pose2& init, const VerifyParams& params = {});

/// Endpoints of the returned beams in the sensor frame.
std::vector<Point2> scan_points(const LaserScan& scan);

}  // namespace slam

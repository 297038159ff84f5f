#include "slam/loopclosure.hpp"

#include <algorithm>
#include <cmath>

namespace slam {

namespace {

constexpr std::size_t kHalf = kDescriptorBins / 2;
constexpr double kKernelSigma = 0.25;

// Gaussian-kernel histogram of values over (0, hi] into bins [offset, offset + kHalf),
// L1-normalized. Returns false when there are no values.
bool soft_histogram(const std::vector<double>& values, double hi, std::size_t offset,
                    std::array<double, kDescriptorBins>& bins) {
    if (values.empty()) {
        return false;
    }
    const double width = hi / static_cast<double>(kHalf);
    double total = 0.0;
    for (const double v : values) {
        for (std::size_t k = 0; k < kHalf; ++k) {
            const double z = (v - (static_cast<double>(k) + 0.5) * width) / kKernelSigma;
            const double w = std::exp(-0.5 * z * z);
            bins[offset + k] += w;
            total += w;
        }
    }
    for (std::size_t k = 0; k < kHalf; ++k) {
        bins[offset + k] /= total;
    }
    return true;
}

}  // namespace

ScanDescriptor describe(const LaserScan& scan) {
    ScanDescriptor d;
    std::vector<double> ranges;
    for (std::size_t i = 0; i < scan.n_beams(); ++i) {
        if (scan.is_return(i)) {
            ranges.push_back(scan.ranges[i]);
        }
    }
    if (ranges.empty()) {
        return d;
    }
    // Widths along each bearing line, r(theta) + r(theta + pi); only for fans
    // covering the full circle with an even beam count.
    std::vector<double> widths;
    const std::size_t n = scan.n_beams();
    const double span = scan.angle_increment * static_cast<double>(n);
    if (n % 2 == 0 && std::abs(span - 2.0 * std::numbers::pi) < 1e-6) {
        for (std::size_t i = 0; i < n / 2; ++i) {
            if (scan.is_return(i) && scan.is_return(i + n / 2)) {
                widths.push_back(scan.ranges[i] + scan.ranges[i + n / 2]);
            }
        }
    }
    soft_histogram(ranges, scan.range_max, 0, d.bins);
    if (soft_histogram(widths, 2.0 * scan.range_max, kHalf, d.bins)) {
        for (auto& b : d.bins) {
            b *= 0.5;
        }
    }
    double sum = 0.0;
    for (const double r : ranges) {
        sum += r;
    }
    d.mean_range = sum / static_cast<double>(ranges.size());
    d.empty = false;
    return d;
}

double cosine_similarity(const ScanDescriptor& a, const ScanDescriptor& b) {
    if (a.empty || b.empty) {
        return 0.0;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < kDescriptorBins; ++i) {
        dot += a.bins[i] * b.bins[i];
        na += a.bins[i] * a.bins[i];
        nb += b.bins[i] * b.bins[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

LoopMemory::LoopMemory(const DetectParams& params) : params_(params) {}

void LoopMemory::insert(int node_id, const ScanDescriptor& descriptor, const LaserScan& scan, std::size_t step) {
    long_term_.erase(node_id);
    working_[node_id] = MemoryEntry{node_id, descriptor, scan, step};
    enforce_capacity({node_id});
}

void LoopMemory::enforce_capacity(const std::vector<int>& pinned) {
    while (working_.size() > params_.wm_capacity) {
        auto victim = working_.end();
        for (auto it = working_.begin(); it != working_.end(); ++it) {
            if (std::find(pinned.begin(), pinned.end(), it->first) != pinned.end()) {
                continue;
            }
            if (victim == working_.end() || it->second.last_access < victim->second.last_access) {
                victim = it;
            }
        }
        if (victim == working_.end()) {
            return;
        }
        long_term_.insert(working_.extract(victim));
    }
}

void LoopMemory::promote_neighbours(int node_id, std::size_t step, std::vector<int>& promoted) {
    for (int id = node_id - params_.promote_radius; id <= node_id + params_.promote_radius; ++id) {
        auto it = long_term_.find(id);
        if (it == long_term_.end()) {
            continue;
        }
        it->second.last_access = step;
        promoted.push_back(id);
        working_.insert(long_term_.extract(it));
    }
}

std::vector<Candidate> LoopMemory::detect(const ScanDescriptor& query, int current_node, std::size_t step) {
    last_comparisons_ = 0;
    std::vector<Candidate> scored;
    const long newest_allowed = static_cast<long>(current_node) - static_cast<long>(params_.gate_recent) - 1;
    for (const auto& [id, entry] : working_) {
        if (id >= current_node || static_cast<long>(id) > newest_allowed) {
            continue;
        }
        ++last_comparisons_;
        const double s = cosine_similarity(query, entry.descriptor);
        if (s >= params_.sim_threshold) {
            scored.push_back({id, s});
        }
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Candidate& a, const Candidate& b) { return a.similarity > b.similarity; });
    if (scored.size() > params_.max_candidates) {
        scored.resize(params_.max_candidates);
    }
    std::vector<int> pinned;
    for (const auto& c : scored) {
        working_.at(c.node_id).last_access = step;
        pinned.push_back(c.node_id);
    }
    for (const auto& c : scored) {
        promote_neighbours(c.node_id, step, pinned);
    }
    enforce_capacity(pinned);
    return scored;
}

const MemoryEntry* LoopMemory::find(int node_id) const {
    if (auto it = working_.find(node_id); it != working_.end()) {
        return &it->second;
    }
    if (auto it = long_term_.find(node_id); it != long_term_.end()) {
        return &it->second;
    }
    return nullptr;
}

}  // namespace slam

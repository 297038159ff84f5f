#pragma once

#include <cmath>
#include <cstdint>

namespace slam {

/// PCG32 (XSH-RR variant). One generator per subsystem keeps subsystems
/// independently reproducible for a given seed.
class Rng {
public:
    using result_type = std::uint32_t;

    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
        reseed(seed, stream);
    }

    void reseed(std::uint64_t seed, std::uint64_t stream) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next();
        state_ += seed;
        next();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return UINT32_MAX; }
    result_type operator()() { return next(); }

    result_type next() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        const std::uint64_t hi = next() >> 5;  // 27 bits
        const std::uint64_t lo = next() >> 6;  // 26 bits
        return static_cast<double>((hi << 26) | lo) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the polar method; no cached second variate, so the
    /// stream position depends only on the number of calls.
    double gaussian() {
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        return u * std::sqrt(-2.0 * std::log(s) / s);
    }

    double gaussian(double sigma) { return sigma > 0.0 ? sigma * gaussian() : 0.0; }

    std::uint64_t state() const { return state_; }
    std::uint64_t increment() const { return inc_; }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint64_t state_{0};
    std::uint64_t inc_{0};
};

/// Stream identifiers; one per subsystem.
enum class RngStream : std::uint64_t {
    motion = 1,
    sensor = 2,
    resampling = 3,
    particles = 1000,  // particle i uses particles + i
};

inline Rng make_rng(std::uint64_t seed, RngStream stream, std::uint64_t offset = 0) {
    return Rng(seed, static_cast<std::uint64_t>(stream) + offset);
}

}  // namespace slam

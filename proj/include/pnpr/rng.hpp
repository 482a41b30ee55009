#pragma once

#include <cstdint>
#include <random>

namespace pnpr {

/// Seedable generator whose output is identical across platforms and
/// standard libraries: the MT19937-64 engine is fully specified, and the
/// uniform/normal transforms are written out here rather than taken from
/// <random>'s implementation-defined distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stream seed from a master seed and a counter
/// (SplitMix64 finaliser), so per-task streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept;

} // namespace pnpr

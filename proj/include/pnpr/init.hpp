#pragma once

#include "pnpr/classic.hpp"
#include "pnpr/measurement.hpp"

#include <cstdint>
#include <vector>

namespace pnpr {

/// Multi-start HIO initialization: run HIO briefly from many random images,
/// keep the lowest-residual candidate, refine it with a long HIO run.
struct InitConfig {
    std::size_t n_starts = 50;
    std::size_t warm_iters = 50;
    std::size_t refine_iters = 1000;
    double beta = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
};

struct InitResult {
    Image image;
    /// || |A v_s| - y || of every candidate after its warm-up, by start index.
    std::vector<double> residuals;
    std::size_t best_start = 0;
};

/// Start s draws i.i.d. uniform [0, 255] pixels (zero outside the support mask)
/// from the stream derive_seed(cfg.seed, s), so results do not depend on
/// `threads`. Ties in the residual go to the lowest start index.
InitResult multistart_init(const MeasurementOperator& op, const Magnitudes& y, const InitConfig& cfg,
                           const SpaceConstraints& constraints, unsigned threads = 1);

/// The random draw start s of multistart_init begins from.
Image random_start(std::size_t n, const SpaceConstraints& constraints, std::uint64_t seed);

} // namespace pnpr

#pragma once

#include "pnpr/grid.hpp"
#include "pnpr/measurement.hpp"

namespace pnpr {

/// Transform applied to an estimate before scoring. Fourier magnitudes cannot
/// distinguish an image from its circular shifts or its point reflection.
struct Registration {
    bool flipped = false;
    std::size_t dy = 0;
    std::size_t dx = 0;

    friend bool operator==(const Registration&, const Registration&) = default;
};

/// out(r, c) = src(N-1-r, M-1-c) when flipped, then circularly shifted so
/// out(r, c) = flipped((r - dy) mod N, (c - dx) mod M).
RealGrid apply_registration(const RealGrid& estimate, const Registration& reg);

/// Registration of `estimate` that minimises the MSE to `truth`, searching
/// the cross-correlation peak for the plain and point-reflected estimate.
Registration register_to(const RealGrid& estimate, const RealGrid& truth);

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double residual = 0.0;
    Registration registration;
};

inline constexpr double peak_value = 255.0;

/// 10 log10(255^2 / MSE); +infinity for identical images.
double psnr(const RealGrid& estimate, const RealGrid& truth, bool register_first = false);

/// Mean SSIM over all fully contained 11x11 Gaussian windows (std 1.5),
/// K1 = 0.01, K2 = 0.03, L = 255. Images must be at least 11x11.
double ssim(const RealGrid& estimate, const RealGrid& truth, bool register_first = false);

/// || |A x| - y ||_2
double residual(const MeasurementOperator& op, const Image& estimate, const Magnitudes& y);

/// PSNR/SSIM of Re(estimate) against truth under one shared registration,
/// plus the measurement residual.
MetricReport evaluate(const MeasurementOperator& op, const Image& estimate, const RealGrid& truth,
                      const Magnitudes& y, bool register_first);

} // namespace pnpr

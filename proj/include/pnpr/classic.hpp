#pragma once

#include "pnpr/grid.hpp"
#include "pnpr/measurement.hpp"

#include <optional>

namespace pnpr {

/// Space-domain constraint set S.
struct SpaceConstraints {
    bool real_valued = true;
    bool non_negative = true;
    /// Pixels allowed to be nonzero; same dimensions as the image.
    std::optional<Grid<unsigned char>> support_mask;

    static SpaceConstraints none() { return {false, false, std::nullopt}; }
    static SpaceConstraints real() { return {true, false, std::nullopt}; }
    static SpaceConstraints real_non_negative() { return {true, true, std::nullopt}; }

    /// Throws std::invalid_argument when non_negative is set without
    /// real_valued, or when the mask does not match `image`.
    void validate(const Image& image) const;
};

/// P_S: support zeroing, then real-part extraction, then clamping negatives.
Image project_space(const Image& v, const SpaceConstraints& c);

/// A^dagger(y * Az/|Az|); the phase factor is 1 where |Az| = 0.
Image apply_phase(const MeasurementOperator& op, const Magnitudes& y, const Image& z);

/// Error reduction: x <- P_S(apply_phase(y, x)), `iters` times from z0.
Image er_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, std::size_t iters,
             const SpaceConstraints& c);

struct HioConfig {
    double beta = 0.9;
    std::size_t iterations = 1;

    void validate() const;
};

/// One hybrid input-output step. u = apply_phase(y, v_prev) (real part when
/// real_valued); pixels that are negative (non_negative) or outside the
/// support get v_prev - beta * u, all others take u.
Image hio_iterate(const MeasurementOperator& op, const Magnitudes& y, const Image& v_prev,
                  const SpaceConstraints& c, double beta);

/// `iterations` HIO steps from z0. The last iterate is returned as is,
/// without a final projection onto S.
Image hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const HioConfig& cfg,
              const SpaceConstraints& c);

} // namespace pnpr

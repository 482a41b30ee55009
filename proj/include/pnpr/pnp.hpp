#pragma once

#include "pnpr/classic.hpp"
#include "pnpr/denoisers.hpp"
#include "pnpr/grid.hpp"
#include "pnpr/measurement.hpp"
#include "pnpr/schedule.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace pnpr {

struct PnPConfig {
    /// The number of outer iterations T is schedule.size().
    Schedule schedule = Schedule::geometric(40.0, 5.0, 200);
    /// Inner HIO iterations per outer step (plug-and-play HIO only).
    std::size_t inner_iterations = 5;
    double beta = 0.9;
    DenoiserSpec denoiser;
    SpaceConstraints constraints = SpaceConstraints::real_non_negative();

    std::size_t outer_iterations() const noexcept { return schedule.size(); }
    void validate() const;
};

/// Per-outer-iteration diagnostics.
struct TraceEntry {
    /// ||z_{k+1} - z_k|| / ||z_k||; the unnormalised difference when z_k = 0.
    double norm_diff = 0.0;
    /// || |A z_{k+1}| - y ||
    double residual = 0.0;
    /// PSNR of z_{k+1} against ground truth; NaN when no truth was supplied.
    double psnr_db = 0.0;
};

struct RunRecord {
    std::vector<TraceEntry> trace;
    double update_seconds = 0.0;
    double denoise_seconds = 0.0;
    double total_seconds = 0.0;
};

struct PnPResult {
    /// z_T, the output of the last denoising step.
    Image estimate;
    RunRecord record;
};

/// Ground truth for optional PSNR tracing (simulation runs only).
struct TraceTruth {
    const RealGrid* image = nullptr;
    bool register_first = true;
};

/// Raised when the denoiser fails mid-run; carries the trace so far.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, RunRecord partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const RunRecord& partial() const noexcept { return partial_; }

private:
    RunRecord partial_;
};

/// y~ = eta * y + (1 - eta) * |A z|.
Magnitudes measurement_update(const MeasurementOperator& op, const Magnitudes& y, const Image& z, double eta);

/// P_S(A^dagger(y~ * Az/|Az|)), an error-reduction step toward y~.
Image image_update(const MeasurementOperator& op, const Magnitudes& y_tilde, const Image& z,
                   const SpaceConstraints& c);

/// || -2 Re{A^dagger(y * Ax/|Ax|) - x} + 2 mu (x - z) || with mu = (1 - eta) / eta.
/// This is the first-order optimality residual of the data subproblem
/// min_x || y - |Ax| ||^2 + mu || x - z ||^2 for real x and a Fourier operator.
/// It is a verification oracle and is not used by the solvers.
double stationarity_residual(const MeasurementOperator& op, const Image& x_star, const Image& z, double eta,
                             const Magnitudes& y);

/// Plug-and-play phase retrieval: per outer step a measurement update, one
/// error-reduction image update, then z_{k+1} = D(x_{k+1}, sigma_k).
PnPResult pnp_pr_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                     Denoiser& denoiser, TraceTruth truth = {});
PnPResult pnp_pr_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                     TraceTruth truth = {});

/// Plug-and-play HIO: the single error-reduction update is replaced by
/// inner_iterations HIO steps toward y~ started from z_k.
PnPResult pnp_hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                      Denoiser& denoiser, TraceTruth truth = {});
PnPResult pnp_hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                      TraceTruth truth = {});

} // namespace pnpr

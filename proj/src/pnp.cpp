#include "pnpr/pnp.hpp"

#include "pnpr/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pnpr {

void PnPConfig::validate() const
{
    if (schedule.size() < 1)
        throw std::invalid_argument("pnp: at least one outer iteration required");
    if (inner_iterations < 1)
        throw std::invalid_argument("pnp: at least one inner iteration required");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("pnp: beta must lie in (0, 1]");
    denoiser.validate();
    if (constraints.non_negative && !constraints.real_valued)
        throw std::invalid_argument("pnp: non_negative requires real_valued");
}

Magnitudes measurement_update(const MeasurementOperator& op, const Magnitudes& y, const Image& z, double eta)
{
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("measurement_update: eta must lie in [0, 1]");
    if (!op.matches_output(y))
        throw std::invalid_argument("measurement_update: magnitudes do not match operator output");
    const RealGrid predicted = abs(op.forward(z));
    Magnitudes out(y.planes(), y.rows(), y.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::max(eta * y[i] + (1.0 - eta) * predicted[i], 0.0);
    return out;
}

Image image_update(const MeasurementOperator& op, const Magnitudes& y_tilde, const Image& z, const SpaceConstraints& c)
{
    return project_space(apply_phase(op, y_tilde, z), c);
}

double stationarity_residual(const MeasurementOperator& op, const Image& x_star, const Image& z, double eta,
                             const Magnitudes& y)
{
    if (op.kind() != MeasurementOperator::Kind::fourier)
        throw std::invalid_argument("stationarity_residual: defined for the Fourier operator only");
    if (!is_real_valued(x_star) || !is_real_valued(z))
        throw std::invalid_argument("stationarity_residual: real-valued iterates required");
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("stationarity_residual: eta must lie in (0, 1] (mu undefined at 0)");
    require_same_shape(x_star, z, "stationarity_residual");

    const double mu = (1.0 - eta) / eta;
    const Image back = apply_phase(op, y, x_star);
    double s = 0.0;
    for (std::size_t i = 0; i < x_star.size(); ++i) {
        const double x = x_star[i].real();
        const double g = -2.0 * (back[i].real() - x) + 2.0 * mu * (x - z[i].real());
        s += g * g;
    }
    return std::sqrt(s);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

enum class Inner { error_reduction, hio };

PnPResult run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
              Denoiser& denoiser, TraceTruth truth, Inner inner)
{
    cfg.validate();
    cfg.constraints.validate(z0);
    if (!op.matches_output(y))
        throw std::invalid_argument("pnp: measurement does not match operator output");
    if (z0.planes() != 1 || z0.rows() != op.n() || z0.cols() != op.n())
        throw std::invalid_argument("pnp: initial estimate does not match operator input");

    const auto start = Clock::now();
    PnPResult result;
    RunRecord& rec = result.record;
    rec.trace.reserve(cfg.outer_iterations());
    const HioConfig hio{cfg.beta, cfg.inner_iterations};

    Image z = z0;
    for (std::size_t k = 0; k < cfg.outer_iterations(); ++k) {
        auto t = Clock::now();
        const Magnitudes y_tilde = measurement_update(op, y, z, cfg.schedule.eta(k));
        Image x = inner == Inner::hio ? hio_run(op, y_tilde, z, hio, cfg.constraints)
                                      : image_update(op, y_tilde, z, cfg.constraints);
        rec.update_seconds += seconds_since(t);

        t = Clock::now();
        Image z_next;
        try {
            z_next = denoiser(x, cfg.schedule.denoiser_sigma(k));
        } catch (const std::exception& e) {
            rec.denoise_seconds += seconds_since(t);
            rec.total_seconds = seconds_since(start);
            throw RunAborted("denoiser failed at outer iteration " + std::to_string(k) + ": " + e.what(), rec);
        }
        rec.denoise_seconds += seconds_since(t);

        TraceEntry entry;
        const double z_norm = norm2(z);
        const double diff = distance2(z_next, z);
        entry.norm_diff = z_norm > 0.0 ? diff / z_norm : diff;
        entry.residual = residual(op, z_next, y);
        entry.psnr_db = truth.image ? psnr(real_part(z_next), *truth.image, truth.register_first)
                                    : std::numeric_limits<double>::quiet_NaN();
        rec.trace.push_back(entry);
        z = std::move(z_next);
    }
    result.estimate = std::move(z);
    rec.total_seconds = seconds_since(start);
    return result;
}

} // namespace

PnPResult pnp_pr_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                     Denoiser& denoiser, TraceTruth truth)
{
    return run(op, y, z0, cfg, denoiser, truth, Inner::error_reduction);
}

PnPResult pnp_pr_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                     TraceTruth truth)
{
    auto denoiser = make_denoiser(cfg.denoiser);
    return pnp_pr_run(op, y, z0, cfg, *denoiser, truth);
}

PnPResult pnp_hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                      Denoiser& denoiser, TraceTruth truth)
{
    return run(op, y, z0, cfg, denoiser, truth, Inner::hio);
}

PnPResult pnp_hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const PnPConfig& cfg,
                      TraceTruth truth)
{
    auto denoiser = make_denoiser(cfg.denoiser);
    return pnp_hio_run(op, y, z0, cfg, *denoiser, truth);
}

} // namespace pnpr

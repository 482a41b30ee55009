#pragma once

#include "pnpr/grid.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace pnpr {

struct DenoiserSpec {
    enum class Kind { identity, gaussian, median, total_variation, external };

    Kind kind = Kind::total_variation;

    /// total-variation: lambda_TV = tv_weight * sigma (display units).
    double tv_weight = 1.0;
    /// Bound on the RMS distance to the exact TV minimiser, in pixel units.
    double tv_tolerance = 0.1;
    std::size_t tv_max_iterations = 5000;

    /// gaussian: kernel standard deviation in pixels = gaussian_scale * sigma.
    double gaussian_scale = 0.05;
    /// median: window radius = round(median_scale * sigma).
    double median_scale = 0.05;

    /// external: "host:port"; empty falls back to $PNP_DENOISER_ADDR.
    std::string endpoint;
    double timeout_seconds = 30.0;

    void validate() const;
};

const char* to_string(DenoiserSpec::Kind kind) noexcept;
/// Accepts identity, gaussian-smoothing (or gaussian), median,
/// total-variation (or tv), external.
DenoiserSpec::Kind parse_denoiser_kind(const std::string& name);

class DenoiserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// D(x, sigma). Complex images are denoised as independent real and
/// imaginary parts; sigma = 0 returns the input unchanged for every kind.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    Image operator()(const Image& x, double sigma);

    /// Denoise one real channel at sigma > 0.
    virtual RealGrid denoise_channel(const RealGrid& x, double sigma) = 0;
};

/// In-process kinds are stateless; the external kind owns one connection,
/// opened on first use.
std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec);

/// One-shot dispatch (an external spec opens and closes its own connection).
Image denoise(const DenoiserSpec& spec, const Image& x, double sigma);

// In-process kernels.

/// Isotropic TV with forward differences and zero gradient across the last
/// row/column.
double total_variation(const RealGrid& u);

/// 0.5 ||u - f||^2 + lambda * TV(u).
double tv_objective(const RealGrid& u, const RealGrid& f, double lambda);

struct TvSolution {
    RealGrid image;
    std::size_t iterations = 0;
    double gap = 0.0;
    double objective = 0.0;
};

/// Minimises tv_objective with the accelerated Chambolle-Pock primal-dual
/// scheme (dual ball projection). The objective is 1-strongly convex, so the
/// duality gap bounds 0.5 ||u - u*||^2; iteration stops once that bounds the
/// RMS error by `tolerance` (pixel units).
TvSolution tv_solve(const RealGrid& f, double lambda, double tolerance = 0.1,
                    std::size_t max_iterations = 5000);

/// TV denoising with lambda_TV = c * sigma.
RealGrid tv_denoise(const RealGrid& x, double sigma, double c, double tolerance = 0.1,
                    std::size_t max_iterations = 5000);

/// Separable Gaussian blur with periodic boundaries (mean-preserving).
RealGrid gaussian_smooth(const RealGrid& x, double std_px);

/// (2r+1)^2 median with replicated borders.
RealGrid median_filter(const RealGrid& x, std::size_t radius);

} // namespace pnpr

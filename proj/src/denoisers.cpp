#include "pnpr/denoisers.hpp"

#include "pnpr/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pnpr {

void DenoiserSpec::validate() const
{
    if (!(tv_weight > 0.0))
        throw std::invalid_argument("denoiser: tv_weight must be > 0");
    if (!(tv_tolerance > 0.0))
        throw std::invalid_argument("denoiser: tv_tolerance must be > 0");
    if (tv_max_iterations == 0)
        throw std::invalid_argument("denoiser: tv_max_iterations must be >= 1");
    if (!(gaussian_scale >= 0.0) || !(median_scale >= 0.0))
        throw std::invalid_argument("denoiser: scales must be >= 0");
    if (!(timeout_seconds > 0.0))
        throw std::invalid_argument("denoiser: timeout must be > 0");
}

const char* to_string(DenoiserSpec::Kind kind) noexcept
{
    switch (kind) {
    case DenoiserSpec::Kind::identity: return "identity";
    case DenoiserSpec::Kind::gaussian: return "gaussian-smoothing";
    case DenoiserSpec::Kind::median: return "median";
    case DenoiserSpec::Kind::total_variation: return "total-variation";
    case DenoiserSpec::Kind::external: return "external";
    }
    return "unknown";
}

DenoiserSpec::Kind parse_denoiser_kind(const std::string& name)
{
    if (name == "identity") return DenoiserSpec::Kind::identity;
    if (name == "gaussian-smoothing" || name == "gaussian") return DenoiserSpec::Kind::gaussian;
    if (name == "median") return DenoiserSpec::Kind::median;
    if (name == "total-variation" || name == "tv") return DenoiserSpec::Kind::total_variation;
    if (name == "external") return DenoiserSpec::Kind::external;
    throw std::invalid_argument("unknown denoiser kind '" + name + "'");
}

Image Denoiser::operator()(const Image& x, double sigma)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("denoise: sigma must be finite and >= 0");
    if (sigma == 0.0)
        return x;
    RealGrid re = denoise_channel(real_part(x), sigma);
    if (!re.same_shape(x))
        throw DenoiserError("denoiser changed the image shape");
    if (is_real_valued(x))
        return to_image(re);
    RealGrid im = denoise_channel(imag_part(x), sigma);
    return from_parts(re, im);
}

namespace {

class IdentityDenoiser final : public Denoiser {
public:
    RealGrid denoise_channel(const RealGrid& x, double) override { return x; }
};

class LocalDenoiser final : public Denoiser {
public:
    explicit LocalDenoiser(DenoiserSpec spec) : spec_(std::move(spec)) {}

    RealGrid denoise_channel(const RealGrid& x, double sigma) override
    {
        switch (spec_.kind) {
        case DenoiserSpec::Kind::gaussian:
            return gaussian_smooth(x, spec_.gaussian_scale * sigma);
        case DenoiserSpec::Kind::median:
            return median_filter(x, static_cast<std::size_t>(std::lround(spec_.median_scale * sigma)));
        case DenoiserSpec::Kind::total_variation:
            return tv_denoise(x, sigma, spec_.tv_weight, spec_.tv_tolerance, spec_.tv_max_iterations);
        default:
            return x;
        }
    }

private:
    DenoiserSpec spec_;
};

class RemoteDenoiser final : public Denoiser {
public:
    explicit RemoteDenoiser(const DenoiserSpec& spec)
        : client_(resolve_endpoint(spec.endpoint), spec.timeout_seconds)
    {
    }

    RealGrid denoise_channel(const RealGrid& x, double sigma) override { return client_.denoise(x, sigma); }

private:
    DenoiserClient client_;
};

} // namespace

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case DenoiserSpec::Kind::identity:
        return std::make_unique<IdentityDenoiser>();
    case DenoiserSpec::Kind::external:
        return std::make_unique<RemoteDenoiser>(spec);
    default:
        return std::make_unique<LocalDenoiser>(spec);
    }
}

Image denoise(const DenoiserSpec& spec, const Image& x, double sigma)
{
    return (*make_denoiser(spec))(x, sigma);
}

// ---------------------------------------------------------------------------
// Total variation

namespace {

struct Field2 {
    std::vector<double> x, y;
    explicit Field2(std::size_t n) : x(n, 0.0), y(n, 0.0) {}
};

void gradient(const std::vector<double>& u, std::size_t rows, std::size_t cols, Field2& g)
{
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            g.x[i] = c + 1 < cols ? u[i + 1] - u[i] : 0.0;
            g.y[i] = r + 1 < rows ? u[i + cols] - u[i] : 0.0;
        }
    }
}

// div = -grad^T
void divergence(const Field2& p, std::size_t rows, std::size_t cols, std::vector<double>& d)
{
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            double v = 0.0;
            if (c + 1 < cols) v += p.x[i];
            if (c > 0) v -= p.x[i - 1];
            if (r + 1 < rows) v += p.y[i];
            if (r > 0) v -= p.y[i - cols];
            d[i] = v;
        }
    }
}

double tv_of(const std::vector<double>& u, std::size_t rows, std::size_t cols)
{
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            const double gx = c + 1 < cols ? u[i + 1] - u[i] : 0.0;
            const double gy = r + 1 < rows ? u[i + cols] - u[i] : 0.0;
            s += std::hypot(gx, gy);
        }
    }
    return s;
}

} // namespace

double total_variation(const RealGrid& u)
{
    std::vector<double> v(u.begin(), u.end());
    return tv_of(v, u.rows(), u.cols());
}

double tv_objective(const RealGrid& u, const RealGrid& f, double lambda)
{
    const double d = distance2(u, f);
    return 0.5 * d * d + lambda * total_variation(u);
}

TvSolution tv_solve(const RealGrid& f, double lambda, double tolerance, std::size_t max_iterations)
{
    if (f.planes() != 1)
        throw std::invalid_argument("tv_solve: single-plane image expected");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("tv_solve: lambda must be >= 0");

    const std::size_t rows = f.rows(), cols = f.cols(), n = f.size();
    const std::vector<double> fv(f.begin(), f.end());
    double f_sq = 0.0;
    for (double v : fv)
        f_sq += v * v;

    std::vector<double> u = fv, div_q(n, 0.0);
    Field2 q(n), g(n);

    auto primal = [&](const std::vector<double>& v) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            d += (v[i] - fv[i]) * (v[i] - fv[i]);
        return 0.5 * d + lambda * tv_of(v, rows, cols);
    };
    // D(q) = 0.5 ||f||^2 - 0.5 ||f + div q||^2 for |q| <= lambda.
    auto dual = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += (fv[i] + div_q[i]) * (fv[i] + div_q[i]);
        return 0.5 * f_sq - 0.5 * s;
    };

    TvSolution out;
    if (lambda == 0.0) {
        out.image = f;
        return out;
    }

    // Fast gradient projection on the dual: minimise 0.5 ||f + div q||^2
    // over |q_i| <= lambda; the primal point is u = f + div q. ||div||^2 <= 8.
    Field2 q_prev(n), r(n);
    double t = 1.0;
    std::vector<double> u_dual = fv;
    double p_val = primal(u);
    double gap = p_val - dual();
    std::size_t it = 0;
    const double floor = 1e-12 * (1.0 + f_sq);
    const double target = std::max(0.5 * static_cast<double>(n) * tolerance * tolerance, floor);
    while (gap > target && it < max_iterations) {
        divergence(r, rows, cols, div_q);
        for (std::size_t i = 0; i < n; ++i)
            u[i] = fv[i] + div_q[i];
        gradient(u, rows, cols, g);
        q_prev = q;
        for (std::size_t i = 0; i < n; ++i) {
            const double qx = r.x[i] + g.x[i] / 8.0;
            const double qy = r.y[i] + g.y[i] / 8.0;
            const double scale = std::max(1.0, std::hypot(qx, qy) / lambda);
            q.x[i] = qx / scale;
            q.y[i] = qy / scale;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double w = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < n; ++i) {
            r.x[i] = q.x[i] + w * (q.x[i] - q_prev.x[i]);
            r.y[i] = q.y[i] + w * (q.y[i] - q_prev.y[i]);
        }
        t = t_next;
        ++it;
        if (it % 10 == 0 || it == max_iterations) {
            divergence(q, rows, cols, div_q);
            for (std::size_t i = 0; i < n; ++i)
                u_dual[i] = fv[i] + div_q[i];
            p_val = primal(u_dual);
            gap = p_val - dual();
        }
    }

    out.image = RealGrid(rows, cols);
    std::copy(u_dual.begin(), u_dual.end(), out.image.begin());
    out.iterations = it;
    out.gap = gap;
    out.objective = p_val;
    return out;
}

RealGrid tv_denoise(const RealGrid& x, double sigma, double c, double tolerance, std::size_t max_iterations)
{
    if (!(sigma >= 0.0))
        throw std::invalid_argument("tv_denoise: sigma must be >= 0");
    if (!(c > 0.0))
        throw std::invalid_argument("tv_denoise: weight coefficient must be > 0");
    if (sigma == 0.0)
        return x;
    return tv_solve(x, c * sigma, tolerance, max_iterations).image;
}

// ---------------------------------------------------------------------------
// Gaussian / median

RealGrid gaussian_smooth(const RealGrid& x, double std_px)
{
    if (!(std_px >= 0.0))
        throw std::invalid_argument("gaussian_smooth: std must be >= 0");
    if (std_px < 1e-3)
        return x;
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * std_px));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double w = std::exp(-0.5 * static_cast<double>(k * k) / (std_px * std_px));
        kernel[k + radius] = w;
        total += w;
    }
    for (auto& w : kernel)
        w /= total;

    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
    const auto cols = static_cast<std::ptrdiff_t>(x.cols());
    auto wrap = [](std::ptrdiff_t i, std::ptrdiff_t n) { return ((i % n) + n) % n; };

    RealGrid tmp(x.rows(), x.cols()), out(x.rows(), x.cols());
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                s += kernel[k + radius] * x(r, wrap(c + k, cols));
            tmp(r, c) = s;
        }
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                s += kernel[k + radius] * tmp(wrap(r + k, rows), c);
            out(r, c) = s;
        }
    return out;
}

RealGrid median_filter(const RealGrid& x, std::size_t radius)
{
    if (radius == 0)
        return x;
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
    const auto cols = static_cast<std::ptrdiff_t>(x.cols());
    const auto rad = static_cast<std::ptrdiff_t>(radius);
    RealGrid out(x.rows(), x.cols());
    std::vector<double> window;
    window.reserve((2 * radius + 1) * (2 * radius + 1));
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            window.clear();
            for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr)
                for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc)
                    window.push_back(x(std::clamp<std::ptrdiff_t>(r + dr, 0, rows - 1),
                                       std::clamp<std::ptrdiff_t>(c + dc, 0, cols - 1)));
            auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            out(r, c) = *mid;
        }
    return out;
}

} // namespace pnpr

#include "pnpr/measurement.hpp"

#include "pnpr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pnpr {

MeasurementOperator::MeasurementOperator(Kind kind, std::size_t n, std::size_t m,
                                         std::vector<ComplexGrid> masks)
    : kind_(kind), n_(n), m_(m), masks_(std::move(masks)), fft_(m, m)
{
}

MeasurementOperator MeasurementOperator::fourier(std::size_t n, std::size_t m)
{
    if (n == 0)
        throw std::invalid_argument("fourier operator: N must be positive");
    if (m == 0)
        m = 2 * n;
    if (m < n)
        throw std::invalid_argument("fourier operator: M must be >= N");
    return MeasurementOperator(Kind::fourier, n, m, {});
}

MeasurementOperator MeasurementOperator::cdp(std::vector<ComplexGrid> masks)
{
    if (masks.empty())
        throw std::invalid_argument("cdp operator: at least one mask required");
    const std::size_t n = masks.front().rows();
    for (const auto& mask : masks) {
        if (mask.planes() != 1 || mask.rows() != n || mask.cols() != n)
            throw std::invalid_argument("cdp operator: masks must be N x N and equal-sized");
        for (const auto& v : mask)
            if (std::abs(std::abs(v) - 1.0) > 1e-12)
                throw std::invalid_argument("cdp operator: mask entries must be unimodular");
    }
    return MeasurementOperator(Kind::cdp, n, n, std::move(masks));
}

MeasurementOperator MeasurementOperator::random_cdp(std::size_t n, std::size_t p, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<ComplexGrid> masks;
    masks.reserve(p);
    for (std::size_t l = 0; l < p; ++l) {
        ComplexGrid mask(n, n);
        for (auto& v : mask)
            v = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
        masks.push_back(std::move(mask));
    }
    return cdp(std::move(masks));
}

bool MeasurementOperator::matches_output(const ComplexGrid& b) const noexcept
{
    return b.planes() == planes() && b.rows() == m_ && b.cols() == m_;
}

bool MeasurementOperator::matches_output(const RealGrid& b) const noexcept
{
    return b.planes() == planes() && b.rows() == m_ && b.cols() == m_;
}

void MeasurementOperator::check_input(const Image& x) const
{
    if (x.planes() != 1 || x.rows() != n_ || x.cols() != n_)
        throw std::invalid_argument("measurement operator: input must be " + std::to_string(n_) + "x" +
                                    std::to_string(n_));
}

void MeasurementOperator::check_output(const ComplexGrid& b) const
{
    if (!matches_output(b))
        throw std::invalid_argument("measurement operator: field does not match operator output shape");
}

ComplexGrid MeasurementOperator::forward(const Image& x) const
{
    check_input(x);
    const double scale = 1.0 / static_cast<double>(m_);
    ComplexGrid out = output_grid();
    if (kind_ == Kind::fourier) {
        const ComplexGrid padded = zero_pad(x, m_, m_);
        fft_.forward(padded.values(), out.values());
    } else {
        ComplexGrid coded(n_, n_);
        for (std::size_t l = 0; l < masks_.size(); ++l) {
            for (std::size_t i = 0; i < coded.size(); ++i)
                coded[i] = masks_[l][i] * x[i];
            fft_.forward(coded.values(), out.plane(l));
        }
    }
    for (auto& v : out)
        v *= scale;
    return out;
}

Image MeasurementOperator::adjoint(const ComplexGrid& b) const
{
    check_output(b);
    const double scale = 1.0 / static_cast<double>(m_);
    if (kind_ == Kind::fourier) {
        ComplexGrid full(m_, m_);
        fft_.backward(b.values(), full.values());
        Image out = crop(full, n_, n_);
        for (auto& v : out)
            v *= scale;
        return out;
    }
    Image out(n_, n_);
    ComplexGrid plane(n_, n_);
    for (std::size_t l = 0; l < masks_.size(); ++l) {
        fft_.backward(b.plane(l), plane.values());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += std::conj(masks_[l][i]) * plane[i] * scale;
    }
    return out;
}

Image MeasurementOperator::pseudoinverse(const ComplexGrid& b) const
{
    Image out = adjoint(b);
    if (kind_ == Kind::cdp) {
        const double inv_p = 1.0 / static_cast<double>(masks_.size());
        for (auto& v : out)
            v *= inv_p;
    }
    return out;
}

namespace {

double snr_from(const RealGrid& mag, const RealGrid& w, SnrVariant variant)
{
    const double w_norm = norm2(w);
    if (w_norm == 0.0)
        return std::numeric_limits<double>::infinity();
    if (variant == SnrVariant::printed) {
        const double energy = norm2(mag);
        return 10.0 * std::log10(energy * energy / w_norm);
    }
    double intensity_sq = 0.0;
    for (double v : mag)
        intensity_sq += v * v * v * v;
    return 10.0 * std::log10(intensity_sq / (w_norm * w_norm));
}

RealGrid noise_from(const RealGrid& mag, double alpha, std::uint64_t seed)
{
    RealGrid w(mag.planes(), mag.rows(), mag.cols());
    if (alpha == 0.0)
        return w;
    Rng rng(seed);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double g = rng.normal();
        w[i] = alpha * mag[i] * g;
    }
    return w;
}

void check_alpha(double alpha)
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("simulate_measurement: alpha must be finite and >= 0");
}

} // namespace

double measurement_snr(const MeasurementOperator& op, const Image& x, const RealGrid& w, SnrVariant variant)
{
    if (!op.matches_output(w))
        throw std::invalid_argument("measurement_snr: noise does not match operator output shape");
    if (norm2(w) == 0.0)
        return std::numeric_limits<double>::infinity();
    return snr_from(abs(op.forward(x)), w, variant);
}

RealGrid intensity_noise(const MeasurementOperator& op, const Image& x, double alpha, std::uint64_t seed)
{
    check_alpha(alpha);
    return noise_from(abs(op.forward(x)), alpha, seed);
}

Measurement simulate_measurement(const MeasurementOperator& op, const Image& x, double alpha, std::uint64_t seed)
{
    check_alpha(alpha);
    if (!is_real_valued(x))
        throw std::invalid_argument("simulate_measurement: image must be real-valued");

    const RealGrid mag = abs(op.forward(x));
    const RealGrid w = noise_from(mag, alpha, seed);

    Measurement m;
    m.alpha = alpha;
    m.seed = seed;
    m.values = RealGrid(mag.planes(), mag.rows(), mag.cols());
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (w[i] == 0.0) {
            m.values[i] = mag[i];
            continue;
        }
        const double noisy = mag[i] * mag[i] + w[i];
        m.values[i] = std::sqrt(std::max(noisy, 0.0));
    }
    m.snr_db = snr_from(mag, w, SnrVariant::printed);
    m.snr_db_conventional = snr_from(mag, w, SnrVariant::conventional);
    return m;
}

} // namespace pnpr

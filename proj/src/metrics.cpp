#include "pnpr/metrics.hpp"

#include "pnpr/fft.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnpr {

namespace {

void check_pair(const RealGrid& a, const RealGrid& b, const char* what)
{
    require_same_shape(a, b, what);
    if (a.planes() != 1)
        throw std::invalid_argument(std::string(what) + ": single-plane images expected");
}

double mse(const RealGrid& a, const RealGrid& b)
{
    const double d = distance2(a, b);
    return d * d / static_cast<double>(a.size());
}

RealGrid point_reflect(const RealGrid& g)
{
    RealGrid out(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c)
            out(r, c) = g(g.rows() - 1 - r, g.cols() - 1 - c);
    return out;
}

// Shift s maximising sum_m truth(m) * cand(m - s), first maximum in raster order.
std::array<std::size_t, 2> best_shift(const Fft2d& fft, const ComplexGrid& truth_hat, const RealGrid& cand)
{
    ComplexGrid k = to_image(cand);
    fft.forward(k.values(), k.values());
    for (std::size_t i = 0; i < k.size(); ++i)
        k[i] = truth_hat[i] * std::conj(k[i]);
    fft.backward(k.values(), k.values());
    std::size_t best = 0;
    for (std::size_t i = 1; i < k.size(); ++i)
        if (k[i].real() > k[best].real())
            best = i;
    return {best / cand.cols(), best % cand.cols()};
}

} // namespace

RealGrid apply_registration(const RealGrid& estimate, const Registration& reg)
{
    const RealGrid src = reg.flipped ? point_reflect(estimate) : estimate;
    if (reg.dy == 0 && reg.dx == 0)
        return src;
    const std::size_t rows = src.rows(), cols = src.cols();
    RealGrid out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = src((r + rows - reg.dy % rows) % rows, (c + cols - reg.dx % cols) % cols);
    return out;
}

Registration register_to(const RealGrid& estimate, const RealGrid& truth)
{
    check_pair(estimate, truth, "register_to");
    const Fft2d fft(truth.rows(), truth.cols());
    ComplexGrid truth_hat = to_image(truth);
    fft.forward(truth_hat.values(), truth_hat.values());

    Registration best{};
    double best_mse = mse(estimate, truth);
    for (bool flipped : {false, true}) {
        const RealGrid cand = flipped ? point_reflect(estimate) : estimate;
        const auto [dy, dx] = best_shift(fft, truth_hat, cand);
        const Registration reg{flipped, dy, dx};
        const double m = mse(apply_registration(estimate, reg), truth);
        if (m < best_mse) {
            best_mse = m;
            best = reg;
        }
    }
    return best;
}

double psnr(const RealGrid& estimate, const RealGrid& truth, bool register_first)
{
    check_pair(estimate, truth, "psnr");
    const RealGrid& e = estimate;
    const double m = register_first ? mse(apply_registration(e, register_to(e, truth)), truth) : mse(e, truth);
    if (m == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak_value * peak_value / m);
}

namespace {

constexpr std::size_t ssim_window = 11;
constexpr double ssim_window_std = 1.5;

std::array<double, ssim_window> ssim_kernel()
{
    std::array<double, ssim_window> k{};
    double total = 0.0;
    const double half = (ssim_window - 1) / 2.0;
    for (std::size_t i = 0; i < ssim_window; ++i) {
        const double d = static_cast<double>(i) - half;
        k[i] = std::exp(-d * d / (2.0 * ssim_window_std * ssim_window_std));
        total += k[i];
    }
    for (auto& v : k)
        v /= total;
    return k;
}

// Valid-mode separable Gaussian filter: output is (rows-10) x (cols-10).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t rows, std::size_t cols,
                                 const std::array<double, ssim_window>& k)
{
    const std::size_t out_cols = cols - ssim_window + 1;
    const std::size_t out_rows = rows - ssim_window + 1;
    std::vector<double> tmp(rows * out_cols), out(out_rows * out_cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out_cols; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < ssim_window; ++j)
                s += k[j] * img[r * cols + c + j];
            tmp[r * out_cols + c] = s;
        }
    for (std::size_t r = 0; r < out_rows; ++r)
        for (std::size_t c = 0; c < out_cols; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < ssim_window; ++j)
                s += k[j] * tmp[(r + j) * out_cols + c];
            out[r * out_cols + c] = s;
        }
    return out;
}

double ssim_plain(const RealGrid& a, const RealGrid& b)
{
    const std::size_t rows = a.rows(), cols = a.cols(), n = a.size();
    if (rows < ssim_window || cols < ssim_window)
        throw std::invalid_argument("ssim: images must be at least 11x11");
    const auto k = ssim_kernel();
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end()), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, rows, cols, k);
    const auto my = filter_valid(y, rows, cols, k);
    const auto sxx = filter_valid(xx, rows, cols, k);
    const auto syy = filter_valid(yy, rows, cols, k);
    const auto sxy = filter_valid(xy, rows, cols, k);

    const double c1 = (0.01 * peak_value) * (0.01 * peak_value);
    const double c2 = (0.03 * peak_value) * (0.03 * peak_value);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace

double ssim(const RealGrid& estimate, const RealGrid& truth, bool register_first)
{
    check_pair(estimate, truth, "ssim");
    if (!register_first)
        return ssim_plain(estimate, truth);
    return ssim_plain(apply_registration(estimate, register_to(estimate, truth)), truth);
}

double residual(const MeasurementOperator& op, const Image& estimate, const Magnitudes& y)
{
    if (!op.matches_output(y))
        throw std::invalid_argument("residual: magnitudes do not match operator output");
    return distance2(abs(op.forward(estimate)), y);
}

MetricReport evaluate(const MeasurementOperator& op, const Image& estimate, const RealGrid& truth,
                      const Magnitudes& y, bool register_first)
{
    MetricReport report;
    const RealGrid re = real_part(estimate);
    if (register_first)
        report.registration = register_to(re, truth);
    const RealGrid aligned = apply_registration(re, report.registration);
    report.psnr_db = psnr(aligned, truth, false);
    report.ssim = ssim(aligned, truth, false);
    report.residual = residual(op, estimate, y);
    return report;
}

} // namespace pnpr

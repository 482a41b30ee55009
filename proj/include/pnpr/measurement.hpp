#pragma once

#include "pnpr/fft.hpp"
#include "pnpr/grid.hpp"

#include <cstdint>
#include <vector>

namespace pnpr {

/// Linear measurement map A with unitary normalization.
///
/// fourier: x (N x N) is zero-padded into the top-left of an M x M grid and
///   transformed with the unitary 2D DFT. The columns of A are orthonormal, so
///   the pseudoinverse equals the adjoint (inverse DFT then crop).
/// cdp: P unimodular N x N masks; plane l of Ax is DFT(mask_l * x) / N.
///   (1/P) * adjoint is an exact left inverse.
class MeasurementOperator {
public:
    enum class Kind { fourier, cdp };

    /// Oversampled Fourier operator; m == 0 selects the default M = 2N.
    static MeasurementOperator fourier(std::size_t n, std::size_t m = 0);

    /// Coded diffraction patterns from explicit masks. Every entry must have
    /// unit modulus (checked to 1e-12).
    static MeasurementOperator cdp(std::vector<ComplexGrid> masks);

    /// P masks with i.i.d. uniform phases drawn from `seed`.
    static MeasurementOperator random_cdp(std::size_t n, std::size_t p, std::uint64_t seed);

    Kind kind() const noexcept { return kind_; }
    std::size_t n() const noexcept { return n_; }
    /// Side of each output plane: M for fourier, N for cdp.
    std::size_t m() const noexcept { return m_; }
    std::size_t planes() const noexcept { return masks_.empty() ? 1 : masks_.size(); }
    const std::vector<ComplexGrid>& masks() const noexcept { return masks_; }

    /// A zero grid of the output shape.
    ComplexGrid output_grid() const { return ComplexGrid(planes(), m_, m_); }
    bool matches_output(const ComplexGrid& b) const noexcept;
    bool matches_output(const RealGrid& b) const noexcept;

    ComplexGrid forward(const Image& x) const;
    Image adjoint(const ComplexGrid& b) const;
    Image pseudoinverse(const ComplexGrid& b) const;

private:
    MeasurementOperator(Kind kind, std::size_t n, std::size_t m, std::vector<ComplexGrid> masks);

    void check_input(const Image& x) const;
    void check_output(const ComplexGrid& b) const;

    Kind kind_;
    std::size_t n_;
    std::size_t m_;
    std::vector<ComplexGrid> masks_;
    Fft2d fft_;
};

/// Noisy magnitudes y with the noise metadata that produced them.
struct Measurement {
    Magnitudes values;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    /// 10 log10(||Ax||^2 / ||w||), the formula as printed with the benchmark.
    double snr_db = 0.0;
    /// 10 log10(|| |Ax|^2 ||^2 / ||w||^2).
    double snr_db_conventional = 0.0;
};

enum class SnrVariant { printed, conventional };

/// SNR of intensity-domain noise w against the clean intensities |Ax|^2.
/// Returns +infinity when ||w|| = 0.
double measurement_snr(const MeasurementOperator& op, const Image& x, const RealGrid& w,
                       SnrVariant variant = SnrVariant::printed);

/// y^2 = |Ax|^2 + w, w ~ N(0, alpha^2 diag(|Ax|^2)), i.e. per-bin standard
/// deviation alpha * |Ax|_i. Negative noisy intensities clamp to 0 before the
/// square root. Normal draws are taken in lexicographic bin order.
Measurement simulate_measurement(const MeasurementOperator& op, const Image& x, double alpha,
                                 std::uint64_t seed);

/// The intensity-domain noise realisation simulate_measurement uses for
/// (op, x, alpha, seed).
RealGrid intensity_noise(const MeasurementOperator& op, const Image& x, double alpha,
                         std::uint64_t seed);

} // namespace pnpr

#pragma once

#include "pnpr/grid.hpp"

#include <memory>
#include <span>

namespace pnpr {

/// Unnormalized 2D complex DFT of a fixed size, backed by FFTW.
/// Plans are created once and shared between copies; execution uses the
/// new-array interface so one instance may be used from several threads.
class Fft2d {
public:
    Fft2d(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    /// out[k] = sum_n in[n] exp(-2 pi i k.n / dims). In-place is allowed.
    void forward(std::span<const cplx> in, std::span<cplx> out) const;
    /// Same with +i in the exponent; no 1/(rows*cols) factor.
    void backward(std::span<const cplx> in, std::span<cplx> out) const;

private:
    struct Plans;
    std::size_t rows_;
    std::size_t cols_;
    std::shared_ptr<const Plans> plans_;
};

} // namespace pnpr

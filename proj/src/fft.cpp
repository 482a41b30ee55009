#include "pnpr/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace pnpr {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

struct Fft2d::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    Plans(std::size_t rows, std::size_t cols)
    {
        std::vector<cplx> a(rows * cols), b(rows * cols);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(planner_mutex());
        const int r = static_cast<int>(rows);
        const int c = static_cast<int>(cols);
        forward = fftw_plan_dft_2d(r, c, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD, flags);
        backward = fftw_plan_dft_2d(r, c, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD, flags);
        if (!forward || !backward)
            throw std::runtime_error("FFTW plan creation failed");
    }

    ~Plans()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }

    Plans(const Plans&) = delete;
    Plans& operator=(const Plans&) = delete;
};

Fft2d::Fft2d(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols)
{
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("Fft2d: dimensions must be positive");
    plans_ = std::make_shared<const Plans>(rows, cols);
}

namespace {

void run(fftw_plan plan, std::size_t n, std::span<const cplx> in, std::span<cplx> out)
{
    if (in.size() != n || out.size() != n)
        throw std::invalid_argument("Fft2d: buffer size mismatch");
    // Plans are out-of-place (c2c preserves its input), so aliasing goes via scratch.
    if (in.data() == out.data()) {
        std::vector<cplx> scratch(in.begin(), in.end());
        fftw_execute_dft(plan, as_fftw(scratch.data()), as_fftw(out.data()));
    } else {
        fftw_execute_dft(plan, as_fftw(const_cast<cplx*>(in.data())), as_fftw(out.data()));
    }
}

} // namespace

void Fft2d::forward(std::span<const cplx> in, std::span<cplx> out) const
{
    run(plans_->forward, rows_ * cols_, in, out);
}

void Fft2d::backward(std::span<const cplx> in, std::span<cplx> out) const
{
    run(plans_->backward, rows_ * cols_, in, out);
}

} // namespace pnpr

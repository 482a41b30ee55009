#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpr {

using cplx = std::complex<double>;

/// Dense row-major stack of 2D planes. Planes > 1 only appear for
/// coded-diffraction measurements; images are always a single plane.
template <class T>
class Grid {
public:
    Grid() = default;

    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : Grid(1, rows, cols, fill) {}

    Grid(std::size_t planes, std::size_t rows, std::size_t cols, T fill = T{})
        : planes_(planes), rows_(rows), cols_(cols), data_(planes * rows * cols, fill)
    {
        if (planes == 0 || rows == 0 || cols == 0)
            throw std::invalid_argument("grid dimensions must be positive");
    }

    std::size_t planes() const noexcept { return planes_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t plane_size() const noexcept { return rows_ * cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator()(std::size_t p, std::size_t r, std::size_t c) { return data_[(p * rows_ + r) * cols_ + c]; }
    const T& operator()(std::size_t p, std::size_t r, std::size_t c) const
    {
        return data_[(p * rows_ + r) * cols_ + c];
    }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::span<T> plane(std::size_t p) { return std::span<T>(data_).subspan(p * plane_size(), plane_size()); }
    std::span<const T> plane(std::size_t p) const
    {
        return std::span<const T>(data_).subspan(p * plane_size(), plane_size());
    }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept
    {
        return planes_ == other.planes() && rows_ == other.rows() && cols_ == other.cols();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t planes_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<cplx>;

/// The unknown x and every iterate z_k, v_i. Real-valued images carry exact
/// zeros in the imaginary part.
using Image = ComplexGrid;

/// Non-negative magnitudes |Ax| or measured y.
using Magnitudes = RealGrid;

template <class T, class U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what)
{
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

Image to_image(const RealGrid& real);
RealGrid real_part(const Image& image);
RealGrid imag_part(const Image& image);
Image from_parts(const RealGrid& re, const RealGrid& im);
bool is_real_valued(const Image& image) noexcept;
bool all_finite(const Image& image) noexcept;

double norm2(const Image& image) noexcept;
double norm2(const RealGrid& grid) noexcept;
double distance2(const Image& a, const Image& b);
double distance2(const RealGrid& a, const RealGrid& b);

/// Elementwise modulus.
RealGrid abs(const ComplexGrid& field);

/// Complex inner product <a, b> = sum conj(a_i) b_i.
cplx inner(const ComplexGrid& a, const ComplexGrid& b);

/// Top-left rows x cols window.
template <class T>
Grid<T> crop(const Grid<T>& g, std::size_t rows, std::size_t cols)
{
    if (rows > g.rows() || cols > g.cols())
        throw std::invalid_argument("crop: window larger than grid");
    Grid<T> out(g.planes(), rows, cols);
    for (std::size_t p = 0; p < g.planes(); ++p)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out(p, r, c) = g(p, r, c);
    return out;
}

/// Zero-pads into the top-left corner of a rows x cols grid.
template <class T>
Grid<T> zero_pad(const Grid<T>& g, std::size_t rows, std::size_t cols)
{
    if (rows < g.rows() || cols < g.cols())
        throw std::invalid_argument("zero_pad: target smaller than grid");
    Grid<T> out(g.planes(), rows, cols);
    for (std::size_t p = 0; p < g.planes(); ++p)
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c)
                out(p, r, c) = g(p, r, c);
    return out;
}

} // namespace pnpr

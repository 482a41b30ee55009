#include "pnpr/grid.hpp"

#include <cmath>

namespace pnpr {

Image to_image(const RealGrid& real)
{
    Image out(real.planes(), real.rows(), real.cols());
    for (std::size_t i = 0; i < real.size(); ++i)
        out[i] = cplx(real[i], 0.0);
    return out;
}

RealGrid real_part(const Image& image)
{
    RealGrid out(image.planes(), image.rows(), image.cols());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = image[i].real();
    return out;
}

RealGrid imag_part(const Image& image)
{
    RealGrid out(image.planes(), image.rows(), image.cols());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = image[i].imag();
    return out;
}

Image from_parts(const RealGrid& re, const RealGrid& im)
{
    require_same_shape(re, im, "from_parts");
    Image out(re.planes(), re.rows(), re.cols());
    for (std::size_t i = 0; i < re.size(); ++i)
        out[i] = cplx(re[i], im[i]);
    return out;
}

bool is_real_valued(const Image& image) noexcept
{
    for (const auto& v : image)
        if (v.imag() != 0.0)
            return false;
    return true;
}

bool all_finite(const Image& image) noexcept
{
    for (const auto& v : image)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            return false;
    return true;
}

double norm2(const Image& image) noexcept
{
    double s = 0.0;
    for (const auto& v : image)
        s += std::norm(v);
    return std::sqrt(s);
}

double norm2(const RealGrid& grid) noexcept
{
    double s = 0.0;
    for (double v : grid)
        s += v * v;
    return std::sqrt(s);
}

double distance2(const Image& a, const Image& b)
{
    require_same_shape(a, b, "distance2");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

double distance2(const RealGrid& a, const RealGrid& b)
{
    require_same_shape(a, b, "distance2");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

RealGrid abs(const ComplexGrid& field)
{
    RealGrid out(field.planes(), field.rows(), field.cols());
    for (std::size_t i = 0; i < field.size(); ++i)
        out[i] = std::abs(field[i]);
    return out;
}

cplx inner(const ComplexGrid& a, const ComplexGrid& b)
{
    require_same_shape(a, b, "inner");
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace pnpr

#include "pnpr/classic.hpp"

#include <stdexcept>

namespace pnpr {

void SpaceConstraints::validate(const Image& image) const
{
    if (non_negative && !real_valued)
        throw std::invalid_argument("space constraints: non_negative requires real_valued");
    if (support_mask && (support_mask->planes() != 1 || support_mask->rows() != image.rows() ||
                         support_mask->cols() != image.cols()))
        throw std::invalid_argument("space constraints: support mask does not match image");
}

Image project_space(const Image& v, const SpaceConstraints& c)
{
    c.validate(v);
    Image out = v;
    if (c.support_mask) {
        const auto& mask = *c.support_mask;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!mask[i])
                out[i] = cplx{};
    }
    if (c.real_valued)
        for (auto& p : out)
            p = cplx(p.real(), 0.0);
    if (c.non_negative)
        for (auto& p : out)
            if (p.real() < 0.0)
                p = cplx{};
    return out;
}

Image apply_phase(const MeasurementOperator& op, const Magnitudes& y, const Image& z)
{
    if (!op.matches_output(y))
        throw std::invalid_argument("apply_phase: magnitudes do not match operator output");
    ComplexGrid field = op.forward(z);
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double a = std::abs(field[i]);
        field[i] = a > 0.0 ? y[i] * (field[i] / a) : cplx(y[i], 0.0);
    }
    return op.pseudoinverse(field);
}

Image er_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, std::size_t iters,
             const SpaceConstraints& c)
{
    Image x = z0;
    for (std::size_t k = 0; k < iters; ++k)
        x = project_space(apply_phase(op, y, x), c);
    return x;
}

void HioConfig::validate() const
{
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("hio: beta must lie in (0, 1]");
    if (iterations < 1)
        throw std::invalid_argument("hio: at least one iteration required");
}

Image hio_iterate(const MeasurementOperator& op, const Magnitudes& y, const Image& v_prev,
                  const SpaceConstraints& c, double beta)
{
    c.validate(v_prev);
    Image u = apply_phase(op, y, v_prev);
    if (c.real_valued)
        for (auto& p : u)
            p = cplx(p.real(), 0.0);

    const Grid<unsigned char>* mask = c.support_mask ? &*c.support_mask : nullptr;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const bool violates = (c.non_negative && u[n].real() < 0.0) || (mask && !(*mask)[n]);
        if (violates)
            u[n] = v_prev[n] - beta * u[n];
    }
    return u;
}

Image hio_run(const MeasurementOperator& op, const Magnitudes& y, const Image& z0, const HioConfig& cfg,
              const SpaceConstraints& c)
{
    cfg.validate();
    Image v = z0;
    for (std::size_t i = 0; i < cfg.iterations; ++i)
        v = hio_iterate(op, y, v, c, cfg.beta);
    return v;
}

} // namespace pnpr

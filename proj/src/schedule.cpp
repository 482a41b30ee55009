#include "pnpr/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnpr {

namespace {

void check_levels(const std::optional<std::vector<double>>& levels)
{
    if (!levels)
        return;
    if (levels->empty())
        throw std::invalid_argument("schedule: level bank must not be empty");
    if (!std::is_sorted(levels->begin(), levels->end()))
        throw std::invalid_argument("schedule: level bank must be ascending");
    for (double l : *levels)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("schedule: levels must be finite and >= 0");
}

} // namespace

Schedule Schedule::geometric(double sigma_max, double sigma_min, std::size_t T,
                             std::optional<std::vector<double>> levels)
{
    if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max))
        throw std::invalid_argument("schedule: need sigma_max >= sigma_min > 0");
    if (T < 2)
        throw std::invalid_argument("schedule: T must be >= 2");
    check_levels(levels);

    Schedule s;
    s.sigma_max_ = sigma_max;
    s.sigma_min_ = sigma_min;
    s.levels_ = std::move(levels);
    s.sigma_.resize(T);
    s.eta_.resize(T);
    const double ratio = sigma_min / sigma_max;
    for (std::size_t k = 0; k < T; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(T - 1);
        s.sigma_[k] = sigma_max * std::pow(ratio, t);
    }
    // Pin the endpoints; pow() may be off by an ulp.
    s.sigma_.front() = sigma_max;
    s.sigma_.back() = sigma_min;
    for (std::size_t k = 1; k < T; ++k)
        s.sigma_[k] = std::min(s.sigma_[k], s.sigma_[k - 1]);
    for (std::size_t k = 0; k < T; ++k)
        s.eta_[k] = s.sigma_[k] / sigma_max;
    s.eta_.front() = 1.0;
    return s;
}

Schedule Schedule::explicit_sequences(std::vector<double> sigma, std::vector<double> eta,
                                      std::optional<std::vector<double>> levels)
{
    if (sigma.empty() || sigma.size() != eta.size())
        throw std::invalid_argument("schedule: sigma and eta must be non-empty and equal length");
    check_levels(levels);
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        if (!(sigma[k] >= 0.0) || !std::isfinite(sigma[k]))
            throw std::invalid_argument("schedule: sigma must be finite and >= 0");
        if (!(eta[k] >= 0.0 && eta[k] <= 1.0))
            throw std::invalid_argument("schedule: eta must lie in [0, 1]");
        if (k > 0 && (sigma[k] > sigma[k - 1] || eta[k] > eta[k - 1]))
            throw std::invalid_argument("schedule: sigma and eta must be non-increasing");
    }
    Schedule s;
    s.sigma_max_ = sigma.front();
    s.sigma_min_ = sigma.back();
    s.sigma_ = std::move(sigma);
    s.eta_ = std::move(eta);
    s.levels_ = std::move(levels);
    return s;
}

double Schedule::mu(std::size_t k) const
{
    const double e = eta(k);
    if (e == 0.0)
        return std::numeric_limits<double>::infinity();
    return (1.0 - e) / e;
}

double Schedule::denoiser_sigma(std::size_t k) const
{
    const double s = sigma(k);
    if (!levels_ || s == 0.0)
        return s;
    return snap_to_level(s, *levels_);
}

std::vector<double> odd_noise_levels()
{
    std::vector<double> levels;
    for (int l = 1; l <= 49; l += 2)
        levels.push_back(l);
    return levels;
}

double snap_to_level(double sigma, const std::vector<double>& levels)
{
    if (levels.empty())
        throw std::invalid_argument("snap_to_level: empty level bank");
    double best = levels.front();
    for (double l : levels)
        if (std::abs(l - sigma) < std::abs(best - sigma))
            best = l;
    return best;
}

} // namespace pnpr

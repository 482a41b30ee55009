#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace pnpr {

/// Outer-iteration parameter sequences: denoiser noise level sigma_k and
/// measurement-update weight eta_k = sigma_k / sigma_max.
///
/// eta_k corresponds to a penalty mu_k = (1 - eta_k) / eta_k, and the
/// regularization weight is absorbed into sigma_k.
class Schedule {
public:
    /// Log-spaced sigma from sigma_max down to sigma_min over T >= 2 steps.
    /// `levels`, if given, is an ascending bank of noise levels the denoiser is
    /// locked to; it affects denoiser dispatch only, never eta.
    static Schedule geometric(double sigma_max, double sigma_min, std::size_t T,
                              std::optional<std::vector<double>> levels = std::nullopt);

    /// Explicit sequences (T >= 1). sigma must be non-increasing and
    /// non-negative; eta must be non-increasing within [0, 1].
    static Schedule explicit_sequences(std::vector<double> sigma, std::vector<double> eta,
                                       std::optional<std::vector<double>> levels = std::nullopt);

    std::size_t size() const noexcept { return sigma_.size(); }
    double sigma_max() const noexcept { return sigma_max_; }
    double sigma_min() const noexcept { return sigma_min_; }
    const std::vector<double>& sigma() const noexcept { return sigma_; }
    const std::vector<double>& eta() const noexcept { return eta_; }
    const std::optional<std::vector<double>>& levels() const noexcept { return levels_; }

    double sigma(std::size_t k) const { return sigma_.at(k); }
    double eta(std::size_t k) const { return eta_.at(k); }
    /// (1 - eta_k) / eta_k; +infinity when eta_k = 0.
    double mu(std::size_t k) const;

    /// The noise level handed to the denoiser at step k: sigma_k snapped to
    /// the nearest bank level (ties go to the lower level), or sigma_k itself.
    double denoiser_sigma(std::size_t k) const;

private:
    Schedule() = default;

    double sigma_max_ = 0.0;
    double sigma_min_ = 0.0;
    std::vector<double> sigma_;
    std::vector<double> eta_;
    std::optional<std::vector<double>> levels_;
};

/// {1, 3, 5, ..., 49}: the 25-level bank of a level-locked learned denoiser.
std::vector<double> odd_noise_levels();

/// Nearest entry of an ascending, non-empty `levels`; ties go to the lower.
double snap_to_level(double sigma, const std::vector<double>& levels);

} // namespace pnpr

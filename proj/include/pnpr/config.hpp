#pragma once

#include "pnpr/init.hpp"
#include "pnpr/pnp.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpr {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { hio, er, pnp_pr, pnp_hio };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);

struct MethodConfig {
    Method method = Method::pnp_hio;
    /// Name used in result files; defaults to the method name.
    std::string label;
    /// ER iteration budget (method er only).
    std::size_t er_iterations = 200;
    /// Used by pnp-pr and pnp-hio.
    PnPConfig pnp;

    static MethodConfig defaults(Method m);
};

struct ExperimentConfig {
    /// Image files; a directory in the JSON expands to its *.pgm / *.prf
    /// entries in name order.
    std::vector<std::filesystem::path> images;
    std::size_t image_size = 64;
    std::vector<double> alphas{3.0};
    std::vector<MethodConfig> methods;
    std::size_t mc_runs = 5;
    InitConfig init;
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir = "results";
    /// Register out the Fourier trivial ambiguities before scoring.
    bool register_metrics = true;
    unsigned threads = 1;

    void validate() const;
};

/// Parses the JSON experiment description. Relative paths resolve against
/// `base_dir`. Throws ConfigError with the offending key on bad input.
ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Method block parser, shared with the single-image CLI path.
MethodConfig parse_method_config(const nlohmann::json& j);
Schedule parse_schedule(const nlohmann::json& j);
DenoiserSpec parse_denoiser(const nlohmann::json& j);

} // namespace pnpr

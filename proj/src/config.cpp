#include "pnpr/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>

namespace pnpr {

using nlohmann::json;

const char* to_string(Method m) noexcept
{
    switch (m) {
    case Method::hio: return "hio";
    case Method::er: return "er";
    case Method::pnp_pr: return "pnp-pr";
    case Method::pnp_hio: return "pnp-hio";
    }
    return "unknown";
}

Method parse_method(const std::string& name)
{
    if (name == "hio") return Method::hio;
    if (name == "er") return Method::er;
    if (name == "pnp-pr") return Method::pnp_pr;
    if (name == "pnp-hio") return Method::pnp_hio;
    throw ConfigError("unknown method '" + name + "' (expected hio, er, pnp-pr or pnp-hio)");
}

MethodConfig MethodConfig::defaults(Method m)
{
    MethodConfig c;
    c.method = m;
    c.label = to_string(m);
    return c;
}

void ExperimentConfig::validate() const
{
    if (images.empty())
        throw ConfigError("dataset: no images");
    if (methods.empty())
        throw ConfigError("methods: at least one method required");
    if (alphas.empty())
        throw ConfigError("alphas: at least one noise level required");
    std::set<std::string> labels;
    for (const auto& m : methods)
        if (!labels.insert(m.label).second)
            throw ConfigError("methods: duplicate label '" + m.label + "'");
    for (double a : alphas)
        if (!(a >= 0.0))
            throw ConfigError("alphas: values must be >= 0");
    if (mc_runs < 1)
        throw ConfigError("mc_runs must be >= 1");
    if (image_size < 11)
        throw ConfigError("image_size must be >= 11 (SSIM window)");
    if (threads < 1)
        throw ConfigError("threads must be >= 1");
    try {
        init.validate();
        for (const auto& m : methods)
            m.pnp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!keys.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& where)
{
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

std::vector<std::filesystem::path> expand_dataset(const json& j, const std::filesystem::path& base)
{
    std::vector<std::filesystem::path> entries;
    if (j.is_string())
        entries.emplace_back(j.get<std::string>());
    else if (j.is_array())
        for (const auto& e : j) {
            if (!e.is_string())
                throw ConfigError("dataset: entries must be strings");
            entries.emplace_back(e.get<std::string>());
        }
    else
        throw ConfigError("dataset: expected a path or a list of paths");

    std::vector<std::filesystem::path> images;
    for (auto p : entries) {
        if (p.is_relative())
            p = base / p;
        if (std::filesystem::is_directory(p)) {
            std::vector<std::filesystem::path> found;
            for (const auto& de : std::filesystem::directory_iterator(p)) {
                const auto ext = de.path().extension().string();
                if (de.is_regular_file() && (ext == ".pgm" || ext == ".prf"))
                    found.push_back(de.path());
            }
            std::sort(found.begin(), found.end());
            images.insert(images.end(), found.begin(), found.end());
        } else {
            images.push_back(p);
        }
    }
    return images;
}

} // namespace

Schedule parse_schedule(const json& j)
{
    reject_unknown(j, {"sigma_max", "sigma_min", "T", "levels"}, "schedule");
    const double sigma_max = get_or(j, "sigma_max", 40.0, "schedule");
    const double sigma_min = get_or(j, "sigma_min", 5.0, "schedule");
    const std::size_t T = get_count(j, "T", 200, "schedule");
    std::optional<std::vector<double>> levels;
    if (j.contains("levels")) {
        const auto& l = j.at("levels");
        if (l.is_string() && l.get<std::string>() == "odd-1-49")
            levels = odd_noise_levels();
        else
            levels = get_or<std::vector<double>>(j, "levels", {}, "schedule");
    }
    try {
        return Schedule::geometric(sigma_max, sigma_min, T, levels);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

DenoiserSpec parse_denoiser(const json& j)
{
    reject_unknown(j,
                   {"kind", "tv_weight", "tv_tolerance", "tv_max_iterations", "gaussian_scale", "median_scale",
                    "endpoint", "timeout_s"},
                   "denoiser");
    DenoiserSpec d;
    try {
        d.kind = parse_denoiser_kind(get_or<std::string>(j, "kind", "total-variation", "denoiser"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    d.tv_weight = get_or(j, "tv_weight", d.tv_weight, "denoiser");
    d.tv_tolerance = get_or(j, "tv_tolerance", d.tv_tolerance, "denoiser");
    d.tv_max_iterations = get_count(j, "tv_max_iterations", d.tv_max_iterations, "denoiser");
    d.gaussian_scale = get_or(j, "gaussian_scale", d.gaussian_scale, "denoiser");
    d.median_scale = get_or(j, "median_scale", d.median_scale, "denoiser");
    d.endpoint = get_or<std::string>(j, "endpoint", "", "denoiser");
    d.timeout_seconds = get_or(j, "timeout_s", d.timeout_seconds, "denoiser");
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return d;
}

MethodConfig parse_method_config(const json& j)
{
    if (j.is_string())
        return MethodConfig::defaults(parse_method(j.get<std::string>()));
    reject_unknown(j, {"method", "label", "iterations", "L", "beta", "schedule", "denoiser", "constraints"}, "methods[]");
    if (!j.contains("method"))
        throw ConfigError("methods[]: missing 'method'");
    MethodConfig m = MethodConfig::defaults(parse_method(get_or<std::string>(j, "method", "", "methods[]")));
    m.label = get_or<std::string>(j, "label", m.label, "methods[]");
    if (m.label.empty() || m.label.find_first_of(",\n\"/") != std::string::npos)
        throw ConfigError("methods[]: label must be non-empty without ',', '/', quotes or newlines");
    m.er_iterations = get_count(j, "iterations", m.er_iterations, "methods[]");
    m.pnp.inner_iterations = get_count(j, "L", m.pnp.inner_iterations, "methods[]");
    m.pnp.beta = get_or(j, "beta", m.pnp.beta, "methods[]");
    if (j.contains("schedule"))
        m.pnp.schedule = parse_schedule(j.at("schedule"));
    if (j.contains("denoiser"))
        m.pnp.denoiser = parse_denoiser(j.at("denoiser"));
    if (j.contains("constraints")) {
        const auto& c = j.at("constraints");
        reject_unknown(c, {"real_valued", "non_negative"}, "constraints");
        m.pnp.constraints.real_valued = get_or(c, "real_valued", true, "constraints");
        m.pnp.constraints.non_negative = get_or(c, "non_negative", true, "constraints");
    }
    try {
        m.pnp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return m;
}

ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir)
{
    reject_unknown(j,
                   {"dataset", "image_size", "alphas", "methods", "mc_runs", "init", "master_seed", "output_dir",
                    "register", "threads"},
                   "experiment");
    ExperimentConfig cfg;
    if (!j.contains("dataset"))
        throw ConfigError("experiment: missing 'dataset'");
    cfg.images = expand_dataset(j.at("dataset"), base_dir);
    cfg.image_size = get_count(j, "image_size", cfg.image_size, "experiment");
    cfg.alphas = get_or(j, "alphas", cfg.alphas, "experiment");
    cfg.mc_runs = get_count(j, "mc_runs", cfg.mc_runs, "experiment");
    cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", 0, "experiment");
    cfg.register_metrics = get_or(j, "register", true, "experiment");
    cfg.threads = static_cast<unsigned>(get_count(j, "threads", 1, "experiment"));

    std::filesystem::path out = get_or<std::string>(j, "output_dir", "results", "experiment");
    cfg.output_dir = out.is_relative() ? base_dir / out : out;

    if (j.contains("init")) {
        const auto& ij = j.at("init");
        reject_unknown(ij, {"n_starts", "warm_iters", "refine_iters", "beta"}, "init");
        cfg.init.n_starts = get_count(ij, "n_starts", cfg.init.n_starts, "init");
        cfg.init.warm_iters = get_count(ij, "warm_iters", cfg.init.warm_iters, "init");
        cfg.init.refine_iters = get_count(ij, "refine_iters", cfg.init.refine_iters, "init");
        cfg.init.beta = get_or(ij, "beta", cfg.init.beta, "init");
    }

    if (j.contains("methods")) {
        const auto& mj = j.at("methods");
        if (!mj.is_array())
            throw ConfigError("methods: expected a list");
        for (const auto& m : mj)
            cfg.methods.push_back(parse_method_config(m));
    } else {
        for (Method m : {Method::hio, Method::er, Method::pnp_pr, Method::pnp_hio})
            cfg.methods.push_back(MethodConfig::defaults(m));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_experiment(j, path.parent_path());
}

} // namespace pnpr

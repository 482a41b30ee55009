// pnp-retrieve: command-line front end for the pnpr library.

#include "pnpr/config.hpp"
#include "pnpr/experiment.hpp"
#include "pnpr/image_io.hpp"
#include "pnpr/init.hpp"
#include "pnpr/metrics.hpp"
#include "pnpr/protocol.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int exit_error = 1;
constexpr int exit_config = 2;
constexpr int exit_partial = 3;

struct RunOptions {
    std::string config;
    std::vector<double> alphas;
    std::vector<std::string> methods;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string denoiser_addr;
    std::optional<unsigned> threads;
    bool quiet = false;
};

struct SimulateOptions {
    std::string image;
    std::size_t size = 0;
    double alpha = 3.0;
    std::uint64_t seed = 0;
    std::string output;
};

struct ReconstructOptions {
    std::string input;
    std::string method = "pnp-hio";
    std::string output;
    std::string truth;
    std::string trace;
    std::string config;
    std::string denoiser_addr;
    std::uint64_t seed = 0;
    std::optional<std::size_t> starts;
    std::optional<std::size_t> warm;
    std::optional<std::size_t> refine;
};

nlohmann::json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw pnpr::ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw pnpr::ConfigError(path + ": " + e.what());
    }
}

int cmd_run(const RunOptions& o)
{
    pnpr::ExperimentConfig cfg = pnpr::load_experiment(o.config);
    if (!o.alphas.empty())
        cfg.alphas = o.alphas;
    if (!o.methods.empty()) {
        std::vector<pnpr::MethodConfig> picked;
        for (const auto& name : o.methods) {
            auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                                   [&](const pnpr::MethodConfig& m) { return m.label == name; });
            picked.push_back(it != cfg.methods.end() ? *it : pnpr::MethodConfig::defaults(pnpr::parse_method(name)));
        }
        cfg.methods = std::move(picked);
    }
    if (o.seed)
        cfg.master_seed = *o.seed;
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.threads)
        cfg.threads = *o.threads;
    if (!o.denoiser_addr.empty())
        for (auto& m : cfg.methods)
            m.pnp.denoiser.endpoint = o.denoiser_addr;
    cfg.validate();

    const auto result = pnpr::run_experiment(cfg, true, o.quiet ? nullptr : &std::cerr);
    std::cout << pnpr::summary_csv(result.summary);
    std::cerr << "results written to " << cfg.output_dir.string() << '\n';
    return result.partial_failure() ? exit_partial : 0;
}

int cmd_simulate(const SimulateOptions& o)
{
    pnpr::RealGrid img = pnpr::read_image(o.image);
    if (img.planes() != 1)
        throw pnpr::ConfigError("simulate: single-channel image expected");
    const std::size_t n = o.size ? o.size : std::min(img.rows(), img.cols());
    if (!o.size && img.rows() != img.cols())
        std::cerr << "note: non-square image, using the centred " << n << "x" << n << " window\n";
    img = pnpr::center_crop(img, n);

    const auto op = pnpr::MeasurementOperator::fourier(n);
    const auto meas = pnpr::simulate_measurement(op, pnpr::to_image(img), o.alpha, o.seed);
    pnpr::write_prf(meas.values, o.output);
    std::cout << "n=" << n << " m=" << op.m() << " alpha=" << pnpr::format_number(o.alpha) << " seed=" << o.seed
              << '\n'
              << "snr_db=" << pnpr::format_number(meas.snr_db)
              << " snr_db_conventional=" << pnpr::format_number(meas.snr_db_conventional) << '\n';
    return 0;
}

int cmd_reconstruct(const ReconstructOptions& o)
{
    const pnpr::Magnitudes y = pnpr::read_prf(o.input);
    if (y.planes() != 1 || y.rows() != y.cols() || y.rows() % 2 != 0)
        throw pnpr::ConfigError("reconstruct: expected a single square M x M magnitude grid with even M");
    const std::size_t n = y.rows() / 2;
    const auto op = pnpr::MeasurementOperator::fourier(n);

    pnpr::MethodConfig method;
    pnpr::InitConfig init;
    if (!o.config.empty()) {
        auto j = load_json(o.config);
        if (j.contains("init")) {
            const auto ij = j.at("init");
            j.erase("init");
            init.n_starts = ij.value("n_starts", init.n_starts);
            init.warm_iters = ij.value("warm_iters", init.warm_iters);
            init.refine_iters = ij.value("refine_iters", init.refine_iters);
            init.beta = ij.value("beta", init.beta);
        }
        if (!j.contains("method"))
            j["method"] = o.method;
        method = pnpr::parse_method_config(j);
    } else {
        method = pnpr::MethodConfig::defaults(pnpr::parse_method(o.method));
    }
    if (o.starts)
        init.n_starts = *o.starts;
    if (o.warm)
        init.warm_iters = *o.warm;
    if (o.refine)
        init.refine_iters = *o.refine;
    init.seed = o.seed;
    if (!o.denoiser_addr.empty())
        method.pnp.denoiser.endpoint = o.denoiser_addr;
    try {
        init.validate();
    } catch (const std::invalid_argument& e) {
        throw pnpr::ConfigError(e.what());
    }

    std::optional<pnpr::RealGrid> truth;
    if (!o.truth.empty()) {
        truth = pnpr::read_image(o.truth);
        if (truth->rows() != n || truth->cols() != n)
            *truth = pnpr::center_crop(*truth, n);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto start = pnpr::multistart_init(op, y, init, pnpr::SpaceConstraints::real_non_negative());
    const double init_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    pnpr::TraceTruth tt;
    if (truth)
        tt.image = &*truth;
    const auto res = pnpr::run_method(method, op, y, start.image, init_s, tt);
    pnpr::write_pgm(pnpr::real_part(res.estimate), o.output);
    if (!o.trace.empty()) {
        if (!res.record)
            std::cerr << "note: method " << method.label << " produces no trace\n";
        else
            std::ofstream(o.trace, std::ios::binary) << pnpr::trace_csv(res.record->trace);
    }

    std::cout << "method=" << method.label << " n=" << n << " init_s=" << pnpr::format_number(init_s)
              << " solve_s=" << pnpr::format_number(res.solve_seconds)
              << " residual=" << pnpr::format_number(pnpr::residual(op, res.estimate, y));
    if (res.record)
        std::cout << " denoise_s=" << pnpr::format_number(res.record->denoise_seconds);
    std::cout << '\n';
    if (truth) {
        const auto rep = pnpr::evaluate(op, res.estimate, *truth, y, true);
        std::cout << "psnr_db=" << pnpr::format_number(rep.psnr_db) << " ssim=" << pnpr::format_number(rep.ssim)
                  << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Phase retrieval with plug-and-play denoisers"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run a Monte-Carlo experiment from a JSON config");
    run_cmd->add_option("config", run.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--alpha", run.alphas, "Noise level(s), replacing the configured list");
    run_cmd->add_option("--method", run.methods, "Method label(s) to run: hio, er, pnp-pr, pnp-hio");
    run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--denoiser-addr", run.denoiser_addr, "host:port of an external denoiser");
    run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_flag("-q,--quiet", run.quiet, "No progress output");

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate noisy Fourier magnitudes of an image");
    sim_cmd->add_option("--image", sim.image, "Input image (PGM or PRF1)")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--size", sim.size, "Centre-crop to size x size first");
    sim_cmd->add_option("--alpha", sim.alpha, "Noise level")->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--seed", sim.seed, "Noise seed");
    sim_cmd->add_option("--output", sim.output, "Output magnitudes (PRF1)")->required();

    ReconstructOptions rec;
    auto* rec_cmd = app.add_subcommand("reconstruct", "Recover an image from PRF1 magnitudes");
    rec_cmd->add_option("--input", rec.input, "Magnitudes (PRF1, M x M)")->required()->check(CLI::ExistingFile);
    rec_cmd->add_option("--method", rec.method, "hio, er, pnp-pr or pnp-hio");
    rec_cmd->add_option("--output", rec.output, "Output image (PGM)")->required();
    rec_cmd->add_option("--truth", rec.truth, "Ground truth for metrics")->check(CLI::ExistingFile);
    rec_cmd->add_option("--trace", rec.trace, "Per-iteration trace CSV");
    rec_cmd->add_option("--config", rec.config, "Method block (JSON), optionally with an init block")
        ->check(CLI::ExistingFile);
    rec_cmd->add_option("--denoiser-addr", rec.denoiser_addr, "host:port of an external denoiser");
    rec_cmd->add_option("--seed", rec.seed, "Initialization seed");
    rec_cmd->add_option("--starts", rec.starts, "Random starts");
    rec_cmd->add_option("--warm-iters", rec.warm, "HIO iterations per start");
    rec_cmd->add_option("--refine-iters", rec.refine, "HIO refinement iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*sim_cmd)
            return cmd_simulate(sim);
        return cmd_reconstruct(rec);
    } catch (const pnpr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
}

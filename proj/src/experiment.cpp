#include "pnpr/experiment.hpp"

#include "pnpr/image_io.hpp"
#include "pnpr/init.hpp"
#include "pnpr/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace pnpr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

struct LoadedImage {
    std::string name;
    RealGrid truth;
};

struct Cell {
    std::size_t index = 0;
    const LoadedImage* image = nullptr;
    double alpha = 0.0;
    std::size_t mc = 0;
};

struct CellOutput {
    std::vector<ResultRow> rows;
    std::vector<RunTrace> traces;
    std::vector<std::string> warnings;
};

std::string run_id(const std::string& image, const std::string& method, double alpha, std::size_t mc)
{
    return image + "__" + method + "__a" + format_number(alpha) + "__mc" + std::to_string(mc);
}

CellOutput run_cell(const ExperimentConfig& cfg, const MeasurementOperator& op, const Cell& cell)
{
    CellOutput out;
    const std::uint64_t seed = cell_seed(cfg.master_seed, cell.index);
    const RealGrid& truth = cell.image->truth;
    const Measurement meas = simulate_measurement(op, to_image(truth), cell.alpha, noise_seed(seed));

    InitConfig icfg = cfg.init;
    icfg.seed = init_seed(seed);
    const auto t0 = Clock::now();
    const InitResult init = multistart_init(op, meas.values, icfg, SpaceConstraints::real_non_negative());
    const double init_seconds = seconds_since(t0);

    for (const auto& m : cfg.methods) {
        ResultRow row;
        row.image = cell.image->name;
        row.method = m.label;
        row.alpha = cell.alpha;
        row.mc = cell.mc;
        row.seed = seed;
        const std::string id = run_id(row.image, row.method, row.alpha, row.mc);
        try {
            const MethodOutcome res =
                run_method(m, op, meas.values, init.image, init_seconds, TraceTruth{&truth, cfg.register_metrics});
            const MetricReport rep = evaluate(op, res.estimate, truth, meas.values, cfg.register_metrics);
            row.psnr_db = rep.psnr_db;
            row.ssim = rep.ssim;
            row.residual = rep.residual;
            row.runtime_s = res.solve_seconds;
            if (res.record)
                out.traces.push_back({id, res.record->trace});
        } catch (const RunAborted& e) {
            row.error = e.what();
            out.traces.push_back({id, e.partial().trace});
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        if (row.error) {
            row.psnr_db = row.ssim = row.residual = row.runtime_s = nan_v;
            out.warnings.push_back(id + ": " + *row.error);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? nan_v : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean)
{
    if (v.size() < 2)
        return v.empty() ? nan_v : 0.0;
    double s = 0.0;
    for (double x : v)
        s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

bool ExperimentResult::partial_failure() const noexcept
{
    if (!warnings.empty())
        return true;
    for (const auto& r : rows)
        if (r.error)
            return true;
    return false;
}

MethodOutcome run_method(const MethodConfig& method, const MeasurementOperator& op, const Magnitudes& y,
                         const Image& init, double init_seconds, TraceTruth truth)
{
    MethodOutcome out;
    const auto t0 = Clock::now();
    switch (method.method) {
    case Method::hio:
        out.estimate = init;
        out.solve_seconds = init_seconds;
        return out;
    case Method::er:
        out.estimate = er_run(op, y, init, method.er_iterations, method.pnp.constraints);
        break;
    case Method::pnp_pr: {
        PnPResult r = pnp_pr_run(op, y, init, method.pnp, truth);
        out.estimate = std::move(r.estimate);
        out.record = std::move(r.record);
        break;
    }
    case Method::pnp_hio: {
        PnPResult r = pnp_hio_run(op, y, init, method.pnp, truth);
        out.estimate = std::move(r.estimate);
        out.record = std::move(r.record);
        break;
    }
    }
    out.solve_seconds = seconds_since(t0);
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write, std::ostream* log)
{
    cfg.validate();
    ExperimentResult result;

    std::vector<std::optional<LoadedImage>> images(cfg.images.size());
    for (std::size_t i = 0; i < cfg.images.size(); ++i) {
        const auto& path = cfg.images[i];
        try {
            images[i] = LoadedImage{path.stem().string(), center_crop(read_image(path), cfg.image_size)};
        } catch (const ImageIoError& e) {
            result.warnings.push_back(std::string("skipping image: ") + e.what());
            if (log)
                *log << "warning: skipping image: " << e.what() << '\n';
        }
    }

    // Cell indices count over the configured images so a skipped file does
    // not shift the seeds of the others.
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < cfg.images.size(); ++i) {
        const LoadedImage* img = images[i] ? &*images[i] : nullptr;
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
            for (std::size_t r = 0; r < cfg.mc_runs; ++r) {
                const std::size_t idx = (i * cfg.alphas.size() + a) * cfg.mc_runs + r;
                if (img)
                    cells.push_back({idx, img, cfg.alphas[a], r});
            }
    }

    const auto op = MeasurementOperator::fourier(cfg.image_size);
    std::vector<CellOutput> outputs(cells.size());
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            const Cell& c = cells[k];
            try {
                outputs[k] = run_cell(cfg, op, c);
            } catch (const std::exception& e) {
                outputs[k].warnings.push_back(c.image->name + " alpha=" + format_number(c.alpha) +
                                              " mc=" + std::to_string(c.mc) + ": " + e.what());
            }
            if (log) {
                std::lock_guard lock(log_mutex);
                *log << "[" << ++done << "/" << cells.size() << "] " << c.image->name
                     << " alpha=" << format_number(c.alpha) << " mc=" << c.mc << '\n';
            }
        }
    };

    const unsigned n_threads = std::min<std::size_t>(cfg.threads, std::max<std::size_t>(cells.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
    }

    for (auto& o : outputs) {
        for (auto& r : o.rows)
            result.rows.push_back(std::move(r));
        for (auto& t : o.traces)
            result.traces.push_back(std::move(t));
        for (auto& w : o.warnings) {
            if (log)
                *log << "warning: " << w << '\n';
            result.warnings.push_back(std::move(w));
        }
    }
    result.summary = summarize(result.rows);
    if (write)
        write_results(result, cfg.output_dir);
    return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows)
{
    struct Acc {
        SummaryRow row;
        std::vector<double> psnr, ssim, runtime;
    };
    std::vector<Acc> groups;
    std::map<std::pair<std::string, double>, std::size_t> where;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.method, r.alpha);
        auto it = where.find(key);
        if (it == where.end()) {
            it = where.emplace(key, groups.size()).first;
            groups.push_back({});
            groups.back().row.method = r.method;
            groups.back().row.alpha = r.alpha;
        }
        Acc& g = groups[it->second];
        if (r.error) {
            ++g.row.failures;
            continue;
        }
        ++g.row.count;
        g.psnr.push_back(r.psnr_db);
        g.ssim.push_back(r.ssim);
        g.runtime.push_back(r.runtime_s);
    }

    std::vector<SummaryRow> out;
    for (auto& g : groups) {
        g.row.psnr_mean = mean_of(g.psnr);
        g.row.psnr_std = sample_std(g.psnr, g.row.psnr_mean);
        g.row.ssim_mean = mean_of(g.ssim);
        g.row.ssim_std = sample_std(g.ssim, g.row.ssim_mean);
        g.row.runtime_mean = mean_of(g.runtime);
        out.push_back(g.row);
    }
    return out;
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string rows_csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream s;
    s << "image,method,alpha,mc,psnr_db,ssim,residual,runtime_s,seed\n";
    for (const auto& r : rows)
        s << r.image << ',' << r.method << ',' << format_number(r.alpha) << ',' << r.mc << ','
          << format_number(r.psnr_db) << ',' << format_number(r.ssim) << ',' << format_number(r.residual) << ','
          << format_number(r.runtime_s) << ',' << r.seed << '\n';
    return s.str();
}

std::string trace_csv(const std::vector<TraceEntry>& trace)
{
    std::ostringstream s;
    s << "iter,norm_diff,residual,psnr_db\n";
    for (std::size_t k = 0; k < trace.size(); ++k)
        s << k << ',' << format_number(trace[k].norm_diff) << ',' << format_number(trace[k].residual) << ','
          << format_number(trace[k].psnr_db) << '\n';
    return s.str();
}

std::string summary_csv(const std::vector<SummaryRow>& summary)
{
    std::ostringstream s;
    s << "method,alpha,n,failures,psnr_mean,psnr_std,ssim_mean,ssim_std,runtime_mean_s\n";
    for (const auto& r : summary)
        s << r.method << ',' << format_number(r.alpha) << ',' << r.count << ',' << r.failures << ','
          << format_number(r.psnr_mean) << ',' << format_number(r.psnr_std) << ',' << format_number(r.ssim_mean)
          << ',' << format_number(r.ssim_std) << ',' << format_number(r.runtime_mean) << '\n';
    return s.str();
}

void write_results(const ExperimentResult& result, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "traces");
    write_text(dir / "rows.csv", rows_csv(result.rows));
    write_text(dir / "summary.csv", summary_csv(result.summary));
    for (const auto& t : result.traces)
        write_text(dir / "traces" / (t.run_id + ".csv"), trace_csv(t.trace));
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t cell_index) noexcept
{
    return derive_seed(master, cell_index);
}

std::uint64_t noise_seed(std::uint64_t cell) noexcept { return derive_seed(cell, 0); }

std::uint64_t init_seed(std::uint64_t cell) noexcept { return derive_seed(cell, 1); }

} // namespace pnpr

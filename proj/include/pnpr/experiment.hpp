#pragma once

#include "pnpr/config.hpp"
#include "pnpr/metrics.hpp"
#include "pnpr/pnp.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pnpr {

/// One row of rows.csv: a (image, method, alpha, mc) cell.
struct ResultRow {
    std::string image;
    std::string method;
    double alpha = 0.0;
    std::size_t mc = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double residual = 0.0;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    /// Set when the method threw; metric columns are then NaN.
    std::optional<std::string> error;
};

struct RunTrace {
    std::string run_id;
    std::vector<TraceEntry> trace;
};

struct SummaryRow {
    std::string method;
    double alpha = 0.0;
    std::size_t count = 0;
    std::size_t failures = 0;
    double psnr_mean = 0.0;
    double psnr_std = 0.0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
    double runtime_mean = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<RunTrace> traces;
    std::vector<SummaryRow> summary;
    std::vector<std::string> warnings;

    bool partial_failure() const noexcept;
};

/// Output of running one method from a shared initialization.
struct MethodOutcome {
    Image estimate;
    std::optional<RunRecord> record;
    double solve_seconds = 0.0;
};

/// Dispatches a configured method. hio returns `init` unchanged (the
/// initialization is the HIO baseline), er runs er_iterations ER steps, and
/// the plug-and-play methods run their drivers.
MethodOutcome run_method(const MethodConfig& method, const MeasurementOperator& op, const Magnitudes& y,
                         const Image& init, double init_seconds, TraceTruth truth = {});

/// The full Monte-Carlo protocol. Each (image, alpha, mc) cell simulates a
/// measurement, computes one multi-start initialization and runs every
/// method from it. Rows come out ordered by cell (image, alpha, mc) and then
/// by method order. With `write` the files are written to cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true, std::ostream* log = nullptr);

/// Mean and sample standard deviation per (method, alpha), failures excluded.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// 6 significant digits, '.' decimal point; inf / -inf / nan spelled out.
std::string format_number(double v);

std::string rows_csv(const std::vector<ResultRow>& rows);
std::string trace_csv(const std::vector<TraceEntry>& trace);
std::string summary_csv(const std::vector<SummaryRow>& summary);

/// rows.csv, summary.csv and traces/<run-id>.csv under `dir`.
void write_results(const ExperimentResult& result, const std::filesystem::path& dir);

/// Derived per-cell seeds.
std::uint64_t cell_seed(std::uint64_t master, std::size_t cell_index) noexcept;
std::uint64_t noise_seed(std::uint64_t cell) noexcept;
std::uint64_t init_seed(std::uint64_t cell) noexcept;

} // namespace pnpr

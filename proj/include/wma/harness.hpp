#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wma/controller.hpp"
#include "wma/oracle.hpp"
#include "wma/system.hpp"

namespace wma {

inline constexpr int kSchemaVersion = 1;

/// Parsed experiment: the system model plus run settings.
struct ExperimentConfig {
    SystemModel model;
    std::size_t days = 1;
    std::uint64_t seed = 1;
    std::vector<double> etas{1.0};
    WmaConfig wma;                        // eta is overwritten per run
    std::optional<double> gamma_config;   // configured gamma; computed when absent
    bool oracle = false;
    OracleOptions oracle_options;
    std::filesystem::path output_dir = "out";
    /// Markov settings kept so the --market override can rebuild the process.
    std::optional<std::vector<std::vector<double>>> transition;
    std::optional<std::vector<double>> initial;
    double persistence = 0.5;
    /// Upper bound on renewable output; only checked by validate_config.
    std::optional<double> x_max;
};

/// Parses a config document. Relative file references resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Rebuilds the market as a Markov chain. Uses the configured transition when
/// present, otherwise P = rho I + (1 - rho) 1 pi' around the current weights.
void switch_market_mode(ExperimentConfig& config, MarketMode mode);

struct ValidationReport {
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
    double gamma_computed = 1.0;
    std::optional<double> gamma_configured;
    double gamma_used = 1.0;
    double delta_max = 0.0;
    double sum_l_av = 0.0;
    std::vector<double> etas;
    std::vector<double> bounds;  // queue bound per eta

    bool ok() const { return failures.empty(); }
    nlohmann::json to_json() const;
};

ValidationReport validate_config(const ExperimentConfig& config);

/// One MarketState per file (header hour,dayahead,realtime; exactly T rows),
/// IID with uniform weights; caps are the column maxima.
MarketProcess ingest_price_traces(const std::vector<std::filesystem::path>& files, std::size_t T);

/// Per-hour equal-weight empirical distributions from a day,hour,power_100mw file.
std::vector<EmpiricalDistribution> ingest_wind_trace(const std::filesystem::path& file, std::size_t T);

/// hour,value,weight rows with 17 significant digits, so reading back is exact.
void write_distribution_csv(const std::filesystem::path& file, const std::vector<EmpiricalDistribution>& per_slot);
std::vector<EmpiricalDistribution> read_distribution_csv(const std::filesystem::path& file, std::size_t T);

/// 12 significant digits.
std::string format_number(double v);

struct SweepRow {
    double eta = 0.0;
    double avg_welfare = 0.0;
    double welfare_se = 0.0;
    double avg_total_queue = 0.0;
    double max_total_queue = 0.0;
    double queue_bound = 0.0;
    std::size_t bound_violations = 0;
    std::size_t drift_violations = 0;
    double min_drift_slack = 0.0;
    std::vector<double> avg_load;     // realized load per slot, per user
    std::vector<double> final_queue;
    std::optional<double> oracle_welfare;
    double wall_seconds = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    ValidationReport validation;
    std::optional<LpReport> oracle;
};

struct RunOptions {
    bool write_files = true;
    /// Worker threads for the per-eta runs (0: hardware concurrency).
    std::size_t threads = 0;
};

/// K-day WMA run per eta (common seed), optional oracle, and the output files
/// run_<eta>.csv, summary.json and sweep.csv under out_dir. Throws
/// InvariantViolation when a run breaks the queue bound or drift inequality.
SweepResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           const RunOptions& options = {});

/// LP oracle report (value, mix, duals, slacks, certificate), plus PoSP when
/// the relaxed program fits.
nlohmann::json oracle_report(const ExperimentConfig& config);

}  // namespace wma

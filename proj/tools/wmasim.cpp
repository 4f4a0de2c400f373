// Command-line front end: simulate, sweep, oracle, validate, ingest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wma/errors.hpp"
#include "wma/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kInvariant = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<double> eta;
    std::optional<std::size_t> days;
    std::string pricing;
    std::string market;
};

void add_common(CLI::App* cmd, Overrides& o, bool run_flags) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory (default: config output_dir)");
    if (!run_flags) return;
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--eta", o.eta, "comma-separated eta values")->delimiter(',');
    cmd->add_option("--days", o.days, "horizon in days")->check(CLI::PositiveNumber);
    cmd->add_option("--pricing", o.pricing, "same or per-user")->check(CLI::IsMember({"same", "per-user"}));
    cmd->add_option("--market", o.market, "iid or markov")->check(CLI::IsMember({"iid", "markov"}));
}

wma::ExperimentConfig load(const Overrides& o) {
    auto cfg = wma::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.eta.empty()) cfg.etas = o.eta;
    if (o.days) cfg.days = *o.days;
    if (o.pricing == "same") cfg.wma.pricing = wma::PricingMode::SamePrice;
    if (o.pricing == "per-user") cfg.wma.pricing = wma::PricingMode::PerUser;
    if (o.market == "iid") wma::switch_market_mode(cfg, wma::MarketMode::Iid);
    if (o.market == "markov") wma::switch_market_mode(cfg, wma::MarketMode::Markov);
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

void print_rows(const wma::SweepResult& r) {
    for (const auto& row : r.rows) {
        std::printf("eta=%s welfare=%s se=%s avg_queue=%s max_queue=%s bound=%s", wma::format_number(row.eta).c_str(),
                    wma::format_number(row.avg_welfare).c_str(), wma::format_number(row.welfare_se).c_str(),
                    wma::format_number(row.avg_total_queue).c_str(), wma::format_number(row.max_total_queue).c_str(),
                    wma::format_number(row.queue_bound).c_str());
        if (row.oracle_welfare) std::printf(" oracle=%s", wma::format_number(*row.oracle_welfare).c_str());
        std::printf("\n");
    }
}

int run(CLI::App& app, int argc, char** argv) {
    Overrides sim, sweep, orc, val;
    auto* c_sim = app.add_subcommand("simulate", "run WMA for one eta (the first given)");
    add_common(c_sim, sim, true);
    auto* c_sweep = app.add_subcommand("sweep", "run WMA for every eta in the list");
    add_common(c_sweep, sweep, true);
    auto* c_orc = app.add_subcommand("oracle", "solve the stationary pricing LP and the per-user relaxation");
    add_common(c_orc, orc, false);
    orc.market.clear();
    c_orc->add_option("--market", orc.market, "iid or markov")->check(CLI::IsMember({"iid", "markov"}));
    auto* c_val = app.add_subcommand("validate", "check a config and report gamma and the queue bounds");
    add_common(c_val, val, true);

    std::vector<std::string> prices;
    std::string wind, ingest_out;
    std::size_t ingest_T = 24;
    auto* c_ing = app.add_subcommand("ingest", "convert price and wind traces into config fragments");
    c_ing->add_option("--prices", prices, "price trace CSV files (hour,dayahead,realtime)")->check(CLI::ExistingFile);
    c_ing->add_option("--wind", wind, "wind trace CSV (day,hour,power_100mw)")->check(CLI::ExistingFile);
    c_ing->add_option("--T", ingest_T, "slots per day")->check(CLI::PositiveNumber);
    c_ing->add_option("--out", ingest_out, "output directory")->required();
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    if (c_sim->parsed() || c_sweep->parsed()) {
        Overrides& o = c_sim->parsed() ? sim : sweep;
        auto cfg = load(o);
        if (c_sim->parsed()) cfg.etas.resize(1);
        const auto result = wma::run_experiment(cfg, cfg.output_dir);
        print_rows(result);
        for (const auto& w : result.validation.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        return kOk;
    }
    if (c_orc->parsed()) {
        auto cfg = load(orc);
        const auto report = wma::oracle_report(cfg);
        fs::create_directories(cfg.output_dir);
        std::ofstream(cfg.output_dir / "oracle.json") << report.dump(2) << '\n';
        std::cout << report.dump(2) << '\n';
        return kOk;
    }
    if (c_val->parsed()) {
        const auto cfg = load(val);
        const auto report = wma::validate_config(cfg);
        std::cout << report.to_json().dump(2) << '\n';
        return report.ok() ? kOk : kInvalid;
    }
    if (c_ing->parsed()) {
        if (prices.empty() && wind.empty()) {
            std::fprintf(stderr, "ingest: give --prices and/or --wind\n");
            return kInvalid;
        }
        fs::create_directories(ingest_out);
        if (!prices.empty()) {
            std::vector<fs::path> files(prices.begin(), prices.end());
            const auto market = wma::ingest_price_traces(files, ingest_T);
            nlohmann::json states = nlohmann::json::array();
            for (const auto& s : market.states()) states.push_back({{"beta", s.beta}, {"alpha_bar", s.alpha_bar}});
            nlohmann::json j = {{"mode", "iid"},
                                {"states", states},
                                {"probabilities", market.probabilities()},
                                {"beta_max", market.beta_max()},
                                {"alpha_max", market.alpha_max()}};
            std::ofstream(fs::path(ingest_out) / "market.json") << j.dump(2) << '\n';
            std::printf("market: %zu states, beta_max=%s alpha_max=%s\n", market.size(),
                        wma::format_number(market.beta_max()).c_str(), wma::format_number(market.alpha_max()).c_str());
        }
        if (!wind.empty()) {
            const auto dists = wma::ingest_wind_trace(wind, ingest_T);
            wma::write_distribution_csv(fs::path(ingest_out) / "renewable.csv", dists);
            std::printf("renewable: %zu hourly distributions\n", dists.size());
        }
        return kOk;
    }
    return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WMA demand-response simulator"};
    try {
        return run(app, argc, argv);
    } catch (const wma::InvariantViolation& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return kInvariant;
    } catch (const wma::ModelViolation& e) {
        std::fprintf(stderr, "model violation: %s\n", e.what());
        return kInvariant;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    }
}

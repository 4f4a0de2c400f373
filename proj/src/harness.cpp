#include "wma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "wma/errors.hpp"

namespace wma {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

// JSON numbers go through the same 12-digit rounding as the CSV output.
json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(format_number(v));
}

json num_list(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

std::string eta_label(double eta) { return format_number(eta); }

// ---------------------------------------------------------------- CSV reading

struct CsvFile {
    fs::path path;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

CsvFile read_csv(const fs::path& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw IngestError(path.string() + ": cannot open file");
    CsvFile f{path, {}};
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto fields = split_fields(line);
        if (!seen_header) {
            if (fields != header) {
                std::string want;
                for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
                throw IngestError(path.string() + ":" + std::to_string(lineno) + ": expected header '" + want + "'");
            }
            seen_header = true;
            continue;
        }
        if (fields.size() != header.size())
            throw IngestError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        f.rows.emplace_back(lineno, std::move(fields));
    }
    if (!seen_header) throw IngestError(path.string() + ": empty file");
    return f;
}

double parse_real(const CsvFile& f, std::size_t line, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
        throw IngestError(f.path.string() + ":" + std::to_string(line) + ": not a finite number: '" + s + "'");
    return v;
}

long long parse_int(const CsvFile& f, std::size_t line, const std::string& s) {
    const double v = parse_real(f, line, s);
    if (v != std::floor(v) || std::fabs(v) > 1e15)
        throw IngestError(f.path.string() + ":" + std::to_string(line) + ": not an integer: '" + s + "'");
    return static_cast<long long>(v);
}

std::string at_line(const CsvFile& f, std::size_t line) { return f.path.string() + ":" + std::to_string(line) + ": "; }

// ---------------------------------------------------------------- JSON parsing

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

double real(const json& j, const std::string& where) {
    if (!j.is_number()) bad(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(where, "must be finite");
    return v;
}

std::vector<double> real_list(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<double> per_slot_values(const json& j, std::size_t T, const std::string& where) {
    if (j.is_number()) return std::vector<double>(T, real(j, where));
    auto v = real_list(j, where);
    if (v.size() != T) bad(where, "expected " + std::to_string(T) + " entries");
    return v;
}

bool is_pair_list(const json& j) { return j.is_array() && (j.empty() || (j[0].is_array() && !j[0].empty() && j[0][0].is_number())); }

EmpiricalDistribution atoms(const json& j, const std::string& where) {
    if (!is_pair_list(j) || j.empty()) bad(where, "expected a non-empty list of [value, weight] pairs");
    std::vector<Atom> a;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        if (!p.is_array() || p.size() != 2) bad(where, "atom " + std::to_string(i) + " must be [value, weight]");
        a.push_back({real(p[0], where), real(p[1], where)});
    }
    try {
        return EmpiricalDistribution::from_atoms(std::move(a));
    } catch (const std::exception& e) {
        bad(where, e.what());
    }
}

std::vector<EmpiricalDistribution> per_slot_atoms(const json& j, std::size_t T, const std::string& where) {
    if (is_pair_list(j)) return std::vector<EmpiricalDistribution>(T, atoms(j, where));
    if (!j.is_array() || j.size() != T) bad(where, "expected one atom list, or one per slot");
    std::vector<EmpiricalDistribution> out;
    for (std::size_t t = 0; t < T; ++t) out.push_back(atoms(j[t], where + "[" + std::to_string(t) + "]"));
    return out;
}

PiecewiseLinear breakpoints(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a list of [load, value] breakpoints");
    std::vector<Breakpoint> pts;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) bad(where, "breakpoints must be [load, value]");
        pts.push_back({real(p[0], where), real(p[1], where)});
    }
    try {
        return PiecewiseLinear::make(std::move(pts));
    } catch (const std::exception& e) {
        bad(where, e.what());
    }
}

// Accepts one breakpoint list, a list per slot, or {"default": ..., "overrides": [{"slots": [a, b], "breakpoints": ...}]}.
UtilityFunction utility(const json& j, std::size_t T, const std::string& where) {
    if (j.is_object()) {
        if (!j.contains("default")) bad(where, "missing 'default'");
        std::vector<PiecewiseLinear> f(T, breakpoints(j["default"], where + ".default"));
        for (const auto& o : j.value("overrides", json::array())) {
            const auto range = real_list(o.at("slots"), where + ".overrides.slots");
            if (range.size() != 2 || range[0] < 0 || range[1] < range[0] || range[1] >= static_cast<double>(T))
                bad(where, "override slots must be [first, last] within the day");
            const auto g = breakpoints(o.at("breakpoints"), where + ".overrides.breakpoints");
            for (auto t = static_cast<std::size_t>(range[0]); t <= static_cast<std::size_t>(range[1]); ++t) f[t] = g;
        }
        return UtilityFunction(std::move(f));
    }
    if (j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
        if (j.size() != T) bad(where, "expected one breakpoint list per slot");
        std::vector<PiecewiseLinear> f;
        for (std::size_t t = 0; t < T; ++t) f.push_back(breakpoints(j[t], where + "[" + std::to_string(t) + "]"));
        return UtilityFunction(std::move(f));
    }
    return UtilityFunction::uniform(breakpoints(j, where), T);
}

MarketState market_state(const json& j, std::size_t T, const std::string& where) {
    MarketState s;
    if (j.is_object()) {
        s.beta = real_list(j.at("beta"), where + ".beta");
        s.alpha_bar = real_list(j.at("alpha_bar"), where + ".alpha_bar");
    } else if (j.is_array() && j.size() == 2) {
        s.beta = real_list(j[0], where + "[0]");
        s.alpha_bar = real_list(j[1], where + "[1]");
    } else {
        bad(where, "a state is {beta, alpha_bar} or a 2 x T array");
    }
    if (s.beta.size() != T || s.alpha_bar.size() != T) bad(where, "state prices must have T entries");
    return s;
}

fs::path resolve(const fs::path& base, const json& j, const std::string& where) {
    if (!j.is_string()) bad(where, "expected a file path");
    fs::path p = j.get<std::string>();
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) bad(where, "file not found: " + p.string());
    return p;
}

MarketProcess build_market(const std::vector<MarketState>& states, MarketMode mode, const std::vector<double>& probs,
                           const std::optional<std::vector<std::vector<double>>>& transition,
                           const std::optional<std::vector<double>>& initial, double persistence,
                           std::optional<double> beta_max, std::optional<double> alpha_max) {
    if (mode == MarketMode::Iid) return MarketProcess::iid(states, probs, beta_max, alpha_max);
    std::vector<std::vector<double>> P;
    if (transition) {
        P = *transition;
    } else {
        const std::size_t M = states.size();
        P.assign(M, std::vector<double>(M));
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) P[i][j] = (1.0 - persistence) * probs[j] + (i == j ? persistence : 0.0);
    }
    return MarketProcess::markov(states, std::move(P), initial, beta_max, alpha_max);
}

}  // namespace

// ---------------------------------------------------------------- ingestion

MarketProcess ingest_price_traces(const std::vector<fs::path>& files, std::size_t T) {
    if (files.empty()) throw IngestError("no price trace files given");
    std::vector<MarketState> states;
    for (const auto& path : files) {
        const CsvFile f = read_csv(path, {"hour", "dayahead", "realtime"});
        if (f.rows.size() != T)
            throw IngestError(path.string() + ": expected " + std::to_string(T) + " data rows, found " +
                              std::to_string(f.rows.size()));
        MarketState s{std::vector<double>(T), std::vector<double>(T)};
        std::vector<bool> seen(T, false);
        for (const auto& [line, row] : f.rows) {
            const long long h = parse_int(f, line, row[0]);
            if (h < 0 || h >= static_cast<long long>(T)) throw IngestError(at_line(f, line) + "hour out of range");
            if (seen[h]) throw IngestError(at_line(f, line) + "duplicate hour " + std::to_string(h));
            seen[h] = true;
            const double b = parse_real(f, line, row[1]);
            const double a = parse_real(f, line, row[2]);
            if (b < 0.0 || a < 0.0) throw IngestError(at_line(f, line) + "negative price");
            s.beta[h] = b;
            s.alpha_bar[h] = a;
        }
        states.push_back(std::move(s));
    }
    std::vector<double> probs(states.size(), 1.0 / static_cast<double>(states.size()));
    try {
        return MarketProcess::iid(std::move(states), std::move(probs));
    } catch (const std::exception& e) {
        throw IngestError(std::string("price traces: ") + e.what());
    }
}

std::vector<EmpiricalDistribution> ingest_wind_trace(const fs::path& file, std::size_t T) {
    const CsvFile f = read_csv(file, {"day", "hour", "power_100mw"});
    std::map<long long, std::vector<std::optional<double>>> days;
    for (const auto& [line, row] : f.rows) {
        const long long d = parse_int(f, line, row[0]);
        const long long h = parse_int(f, line, row[1]);
        const double v = parse_real(f, line, row[2]);
        if (h < 0 || h >= static_cast<long long>(T)) throw IngestError(at_line(f, line) + "hour out of range");
        if (v < 0.0) throw IngestError(at_line(f, line) + "negative power");
        auto& slot = days.try_emplace(d, T).first->second[h];
        if (slot) throw IngestError(at_line(f, line) + "duplicate (day, hour) pair");
        slot = v;
    }
    if (days.empty()) throw IngestError(file.string() + ": no data rows");
    std::vector<std::vector<double>> samples(T);
    for (const auto& [d, hours] : days)
        for (std::size_t h = 0; h < T; ++h) {
            if (!hours[h])
                throw IngestError(file.string() + ": missing day " + std::to_string(d) + " hour " + std::to_string(h));
            samples[h].push_back(*hours[h]);
        }
    std::vector<EmpiricalDistribution> out;
    for (const auto& s : samples) out.push_back(EmpiricalDistribution::from_samples(s));
    return out;
}

void write_distribution_csv(const fs::path& file, const std::vector<EmpiricalDistribution>& per_slot) {
    std::ofstream out(file);
    if (!out) throw IngestError(file.string() + ": cannot write");
    out << "hour,value,weight\n";
    char buf[96];
    for (std::size_t t = 0; t < per_slot.size(); ++t)
        for (const Atom& a : per_slot[t].atoms()) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, a.value, a.weight);
            out << buf;
        }
}

std::vector<EmpiricalDistribution> read_distribution_csv(const fs::path& file, std::size_t T) {
    const CsvFile f = read_csv(file, {"hour", "value", "weight"});
    std::vector<std::vector<Atom>> per(T);
    for (const auto& [line, row] : f.rows) {
        const long long h = parse_int(f, line, row[0]);
        if (h < 0 || h >= static_cast<long long>(T)) throw IngestError(at_line(f, line) + "hour out of range");
        per[h].push_back({parse_real(f, line, row[1]), parse_real(f, line, row[2])});
    }
    std::vector<EmpiricalDistribution> out;
    for (std::size_t t = 0; t < T; ++t) {
        if (per[t].empty()) throw IngestError(file.string() + ": no atoms for hour " + std::to_string(t));
        try {
            out.push_back(EmpiricalDistribution::from_atoms(std::move(per[t])));
        } catch (const std::exception& e) {
            throw IngestError(file.string() + ": hour " + std::to_string(t) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) bad("config", "top level must be an object");
    if (!doc.contains("schema_version")) bad("config", "missing schema_version");
    if (doc["schema_version"] != kSchemaVersion)
        bad("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");

    ExperimentConfig cfg;
    SystemModel& m = cfg.model;
    const double T_raw = real(doc.at("T"), "T");
    if (T_raw < 1 || T_raw != std::floor(T_raw)) bad("T", "must be a positive integer");
    m.T = static_cast<std::size_t>(T_raw);
    const std::size_t T = m.T;

    if (doc.contains("days")) {
        const double d = real(doc["days"], "days");
        if (d < 1 || d != std::floor(d)) bad("days", "must be a positive integer");
        cfg.days = static_cast<std::size_t>(d);
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) bad("seed", "must be a non-negative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();

    // users
    if (!doc.contains("users") || !doc["users"].is_array() || doc["users"].empty()) bad("users", "need at least one user");
    for (std::size_t n = 0; n < doc["users"].size(); ++n) {
        const auto& u = doc["users"][n];
        const std::string where = "users[" + std::to_string(n) + "]";
        UserProfile p;
        p.name = u.value("name", "user" + std::to_string(n));
        p.utility = utility(u.at("utility"), T, where + ".utility");
        p.l_min = per_slot_values(u.at("l_min"), T, where + ".l_min");
        p.l_max = real(u.at("l_max"), where + ".l_max");
        p.l_av = real(u.at("l_av"), where + ".l_av");
        p.w_max = u.contains("w_max") ? real(u["w_max"], where + ".w_max") : 0.0;
        if (u.contains("noise")) p.noise = per_slot_atoms(u["noise"], T, where + ".noise");
        else p.noise.assign(T, EmpiricalDistribution::degenerate(0.0));
        m.users.push_back(std::move(p));
    }

    // renewable
    if (!doc.contains("renewable")) bad("renewable", "missing");
    {
        const auto& r = doc["renewable"];
        if (r.contains("wind_trace")) m.renewable = ingest_wind_trace(resolve(base_dir, r["wind_trace"], "renewable.wind_trace"), T);
        else if (r.contains("distribution_csv"))
            m.renewable = read_distribution_csv(resolve(base_dir, r["distribution_csv"], "renewable.distribution_csv"), T);
        else if (r.contains("atoms")) m.renewable = per_slot_atoms(r["atoms"], T, "renewable.atoms");
        else bad("renewable", "give wind_trace, distribution_csv or atoms");
        if (r.contains("scale")) {
            const double k = real(r["scale"], "renewable.scale");
            if (k < 0.0) bad("renewable.scale", "must be non-negative");
            for (auto& d : m.renewable) d = shift_scale(LocationScaleDistribution{d, 0.0, k});
        }
        if (r.contains("x_max")) cfg.x_max = real(r["x_max"], "renewable.x_max");
    }

    // market
    if (!doc.contains("market")) bad("market", "missing");
    const auto& mk = doc["market"];
    std::vector<MarketState> states;
    if (mk.contains("traces")) {
        std::vector<fs::path> files;
        for (const auto& f : mk["traces"]) files.push_back(resolve(base_dir, f, "market.traces"));
        states = ingest_price_traces(files, T).states();
    } else if (mk.contains("states")) {
        for (std::size_t i = 0; i < mk["states"].size(); ++i)
            states.push_back(market_state(mk["states"][i], T, "market.states[" + std::to_string(i) + "]"));
    } else {
        bad("market", "give states or traces");
    }
    if (states.empty()) bad("market", "no states");
    std::vector<double> probs(states.size(), 1.0 / static_cast<double>(states.size()));
    if (mk.contains("probabilities")) probs = real_list(mk["probabilities"], "market.probabilities");
    if (mk.contains("transition")) {
        std::vector<std::vector<double>> P;
        for (const auto& row : mk["transition"]) P.push_back(real_list(row, "market.transition"));
        cfg.transition = std::move(P);
    }
    if (mk.contains("initial")) cfg.initial = real_list(mk["initial"], "market.initial");
    if (mk.contains("persistence")) {
        cfg.persistence = real(mk["persistence"], "market.persistence");
        if (cfg.persistence < 0.0 || cfg.persistence >= 1.0) bad("market.persistence", "must be in [0, 1)");
    }
    const std::string mode = mk.value("mode", "iid");
    if (mode != "iid" && mode != "markov") bad("market.mode", "must be iid or markov");
    std::optional<double> beta_max, alpha_max;
    if (mk.contains("beta_max")) beta_max = real(mk["beta_max"], "market.beta_max");
    if (mk.contains("alpha_max")) alpha_max = real(mk["alpha_max"], "market.alpha_max");
    if (mk.contains("realtime_noise")) cfg.wma.realtime_noise = real(mk["realtime_noise"], "market.realtime_noise");
    try {
        m.market = build_market(states, mode == "iid" ? MarketMode::Iid : MarketMode::Markov, probs, cfg.transition,
                                cfg.initial, cfg.persistence, beta_max, alpha_max);
    } catch (const ConfigError& e) {
        bad("market", e.what());
    } catch (const DomainError& e) {
        bad("market", e.what());
    }

    // wma
    const json w = doc.value("wma", json::object());
    if (w.contains("eta")) {
        cfg.etas = w["eta"].is_array() ? real_list(w["eta"], "wma.eta") : std::vector<double>{real(w["eta"], "wma.eta")};
        if (cfg.etas.empty()) bad("wma.eta", "empty list");
    }
    if (w.contains("price_grid")) {
        m.price_grid = real_list(w["price_grid"], "wma.price_grid");
    } else {
        const double lo = w.contains("price_min") ? real(w["price_min"], "wma.price_min") : 0.0;
        const double hi = w.contains("price_max") ? real(w["price_max"], "wma.price_max") : 20.0;
        const double pts = w.contains("grid_points") ? real(w["grid_points"], "wma.grid_points") : 101.0;
        if (pts < 1 || pts != std::floor(pts)) bad("wma.grid_points", "must be a positive integer");
        m.price_grid = uniform_price_grid(lo, hi, static_cast<std::size_t>(pts));
    }
    if (w.contains("gamma")) cfg.gamma_config = real(w["gamma"], "wma.gamma");
    const std::string pricing = w.value("pricing", "same");
    if (pricing == "same") cfg.wma.pricing = PricingMode::SamePrice;
    else if (pricing == "per-user") cfg.wma.pricing = PricingMode::PerUser;
    else bad("wma.pricing", "must be same or per-user");
    cfg.wma.observe_market_before_pricing = w.value("observe_market_before_pricing", true);
    if (w.contains("load_resolution")) {
        m.planning.resolution = real(w["load_resolution"], "wma.load_resolution");
        if (!(m.planning.resolution > 0.0)) bad("wma.load_resolution", "must be positive");
    }
    if (w.contains("max_atoms")) m.convolution.max_atoms = static_cast<std::size_t>(real(w["max_atoms"], "wma.max_atoms"));

    const json o = doc.value("oracle", json::object());
    cfg.oracle = o.value("enabled", false);
    if (o.contains("max_variables"))
        cfg.oracle_options.max_variables = static_cast<std::size_t>(real(o["max_variables"], "oracle.max_variables"));
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return parse_config(doc, path.parent_path());
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void switch_market_mode(ExperimentConfig& config, MarketMode mode) {
    const MarketProcess& cur = config.model.market;
    if (cur.mode() == mode) return;
    const auto weights = cur.long_run_weights();
    config.model.market = build_market(cur.states(), mode, weights, config.transition, config.initial,
                                       config.persistence, cur.beta_max(), cur.alpha_max());
}

// ---------------------------------------------------------------- validation

json ValidationReport::to_json() const {
    json j;
    j["ok"] = ok();
    j["failures"] = failures;
    j["warnings"] = warnings;
    j["gamma_computed"] = num(gamma_computed);
    j["gamma_configured"] = gamma_configured ? num(*gamma_configured) : json(nullptr);
    j["gamma_used"] = num(gamma_used);
    j["delta_max"] = num(delta_max);
    j["sum_l_av"] = num(sum_l_av);
    json b = json::array();
    for (std::size_t i = 0; i < etas.size(); ++i) b.push_back({{"eta", num(etas[i])}, {"queue_bound", num(bounds[i])}});
    j["bounds"] = b;
    return j;
}

ValidationReport validate_config(const ExperimentConfig& config) {
    ValidationReport r;
    const SystemModel& m = config.model;
    r.failures = m.violations();
    if (config.days < 1) r.failures.push_back("days must be at least 1");
    for (double eta : config.etas)
        if (!(eta > 0.0)) r.failures.push_back("eta must be positive");
    if (config.wma.realtime_noise < 0.0 || config.wma.realtime_noise > 1.0)
        r.failures.push_back("market.realtime_noise must be in [0, 1]");
    if (config.x_max)
        for (std::size_t t = 0; t < m.renewable.size(); ++t)
            if (!m.renewable[t].atoms().empty() && m.renewable[t].atoms().back().value > *config.x_max)
                r.failures.push_back("renewable output in slot " + std::to_string(t) + " exceeds x_max " +
                                     format_number(*config.x_max));
    r.delta_max = m.market.size() ? m.market.delta_max() : 0.0;
    r.sum_l_av = m.sum_l_av();
    r.gamma_configured = config.gamma_config;
    if (!r.failures.empty()) return r;

    r.gamma_computed = heterogeneity_gamma(m.users, m.price_grid, m.planning);
    if (config.gamma_config) {
        if (*config.gamma_config < 1.0) r.failures.push_back("configured gamma must be at least 1");
        else if (*config.gamma_config < r.gamma_computed * (1.0 - 1e-12))
            r.failures.push_back("configured gamma " + format_number(*config.gamma_config) +
                                 " is below the computed value " + format_number(r.gamma_computed));
        else if (*config.gamma_config > r.gamma_computed * (1.0 + 1e-12))
            r.warnings.push_back("configured gamma exceeds the computed value; the queue bound is looser than needed");
    }
    r.gamma_used = config.gamma_config.value_or(r.gamma_computed);
    if (!std::isfinite(r.gamma_used)) r.warnings.push_back("gamma is unbounded on this grid; the queue bound is vacuous");

    // At the cheapest grid price every user must be able to reach the QoU target
    // over a day, or no pricing rule keeps the deficit queues bounded.
    const double p0 = *std::min_element(m.price_grid.begin(), m.price_grid.end());
    for (const auto& u : m.users) {
        double day = 0.0;
        for (std::size_t t = 0; t < m.T; ++t) day += plan_consumption(u, p0, t, m.planning);
        if (day < static_cast<double>(m.T) * u.l_av)
            r.failures.push_back("user '" + u.name + "': QoU target unreachable even at the lowest grid price (planned " +
                                 format_number(day / static_cast<double>(m.T)) + " per slot)");
    }
    for (double eta : config.etas) {
        r.etas.push_back(eta);
        r.bounds.push_back(queue_bound(r.delta_max, m.users.size(), r.gamma_used, eta, m.T, r.sum_l_av));
    }
    return r;
}

// ---------------------------------------------------------------- experiments

namespace {

void write_run_header(std::ostream& out, std::size_t N) {
    out << "day,slot,market_state,beta,alpha_bar,alpha,renewable,planned_total,base_power,deficit,cost,welfare";
    for (std::size_t n = 0; n < N; ++n)
        out << ",price_" << n << ",planned_" << n << ",realized_" << n << ",utility_" << n << ",queue_" << n;
    out << '\n';
}

void write_day(std::ostream& out, const DayRecord& rec) {
    for (const auto& s : rec.slots) {
        out << rec.day << ',' << s.slot << ',' << rec.market_state << ',' << format_number(s.beta) << ','
            << format_number(s.alpha_bar) << ',' << format_number(s.alpha) << ',' << format_number(s.renewable) << ','
            << format_number(s.planned_total) << ',' << format_number(s.base_power) << ',' << format_number(s.deficit)
            << ',' << format_number(s.cost) << ',' << format_number(s.welfare);
        for (std::size_t n = 0; n < s.price.size(); ++n)
            out << ',' << format_number(s.price[n]) << ',' << format_number(s.planned[n]) << ','
                << format_number(s.realized[n]) << ',' << format_number(s.utility[n]) << ','
                << format_number(s.queue_after[n]);
        out << '\n';
    }
}

json lp_json(const LpReport& rep, const ValueTables& tables) {
    json j;
    j["status"] = lp::to_string(rep.status);
    j["variables"] = rep.variables;
    j["iterations"] = rep.iterations;
    if (rep.status == lp::Status::Infeasible) {
        j["farkas_value"] = num(rep.certificate.farkas_value);
        j["farkas_violation"] = num(rep.certificate.farkas_violation);
        return j;
    }
    if (rep.status != lp::Status::Optimal) return j;
    j["value"] = num(rep.value);
    j["certified"] = rep.certified();
    j["certificate"] = {{"primal_infeasibility", num(rep.certificate.primal_infeasibility)},
                        {"dual_infeasibility", num(rep.certificate.dual_infeasibility)},
                        {"duality_gap", num(rep.certificate.duality_gap)}};
    json q = json::array();
    const auto& users = tables.model().users;
    for (std::size_t n = 0; n < rep.qou_duals.size(); ++n)
        q.push_back({{"user", users[n].name},
                     {"target", num(static_cast<double>(tables.slots()) * users[n].l_av)},
                     {"slack", num(rep.qou_slack[n])},
                     {"dual", num(rep.qou_duals[n])}});
    j["qou"] = q;
    return j;
}

json single_price_mix(const LpReport& rep, const ValueTables& tables) {
    json mix = json::array();
    for (std::size_t m = 0; m < rep.mix.size(); ++m)
        for (std::size_t t = 0; t < rep.mix[m].size(); ++t) {
            json support = json::array();
            for (std::size_t g = 0; g < rep.mix[m][t].size(); ++g)
                if (rep.mix[m][t][g] > 1e-12) support.push_back({{"price", num(tables.price(g))}, {"probability", num(rep.mix[m][t][g])}});
            mix.push_back({{"state", m}, {"slot", t}, {"support", support}});
        }
    return mix;
}

}  // namespace

SweepResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, const RunOptions& options) {
    SweepResult result;
    result.validation = validate_config(config);
    if (!result.validation.ok()) {
        std::string msg = "invalid configuration:";
        for (const auto& f : result.validation.failures) msg += "\n  " + f;
        throw ConfigError(msg);
    }
    const SystemModel& m = config.model;
    const ValueTables tables(m);
    if (options.write_files) fs::create_directories(out_dir);

    if (config.oracle) result.oracle = optimal_stationary_welfare(tables, m.market.long_run_weights(), config.oracle_options);

    const std::size_t R = config.etas.size();
    result.rows.resize(R);
    std::vector<std::exception_ptr> errors(R);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < R; i = next++) {
            try {
                const auto t0 = std::chrono::steady_clock::now();
                WmaConfig c = config.wma;
                c.eta = config.etas[i];
                c.gamma = result.validation.gamma_used;
                c.abort_on_violation = true;
                std::ofstream out;
                DayObserver observer;
                if (options.write_files) {
                    out.open(out_dir / ("run_" + eta_label(c.eta) + ".csv"));
                    if (!out) throw IngestError("cannot write run file in " + out_dir.string());
                    write_run_header(out, m.users.size());
                    observer = [&out](const DayRecord& rec) { write_day(out, rec); };
                }
                const RunStats st = run_simulation(tables, c, config.days, config.seed, observer);
                SweepRow& row = result.rows[i];
                row.eta = c.eta;
                row.avg_welfare = st.average_welfare();
                row.welfare_se = st.days >= 2 ? st.welfare_standard_error(std::min<std::size_t>(50, st.days)) : 0.0;
                row.avg_total_queue = st.average_total_queue(m.T);
                row.max_total_queue = st.max_total_queue;
                row.queue_bound = st.queue_bound;
                row.bound_violations = st.queue_bound_violations;
                row.drift_violations = st.drift_violations;
                row.min_drift_slack = st.min_drift_slack;
                row.final_queue = st.final_queue;
                for (double s : st.realized_load_sum)
                    row.avg_load.push_back(s / static_cast<double>(st.days * m.T));
                if (result.oracle && result.oracle->status == lp::Status::Optimal) row.oracle_welfare = result.oracle->value;
                row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, R);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Re-check the bound on what is about to be reported.
    for (const auto& row : result.rows)
        if (row.max_total_queue > row.queue_bound + 1e-9 * std::max(1.0, row.queue_bound))
            throw InvariantViolation("eta " + format_number(row.eta) + ": max total queue " +
                                     format_number(row.max_total_queue) + " exceeds bound " +
                                     format_number(row.queue_bound));

    if (!options.write_files) return result;

    {
        std::ofstream sweep(out_dir / "sweep.csv");
        sweep << "eta,avg_welfare,welfare_se,avg_total_queue,max_total_queue,queue_bound,oracle_welfare\n";
        for (const auto& r : result.rows)
            sweep << format_number(r.eta) << ',' << format_number(r.avg_welfare) << ',' << format_number(r.welfare_se)
                  << ',' << format_number(r.avg_total_queue) << ',' << format_number(r.max_total_queue) << ','
                  << format_number(r.queue_bound) << ',' << (r.oracle_welfare ? format_number(*r.oracle_welfare) : "")
                  << '\n';
    }
    json s;
    s["schema_version"] = kSchemaVersion;
    s["seed"] = config.seed;
    s["days"] = config.days;
    s["T"] = m.T;
    s["users"] = m.users.size();
    s["market_states"] = m.market.size();
    s["market_mode"] = m.market.mode() == MarketMode::Iid ? "iid" : "markov";
    s["pricing"] = config.wma.pricing == PricingMode::SamePrice ? "same" : "per-user";
    s["grid_points"] = m.price_grid.size();
    s["validation"] = result.validation.to_json();
    json runs = json::array();
    for (const auto& r : result.rows) {
        runs.push_back({{"eta", num(r.eta)},
                        {"file", "run_" + eta_label(r.eta) + ".csv"},
                        {"avg_welfare", num(r.avg_welfare)},
                        {"avg_welfare_per_slot", num(r.avg_welfare / static_cast<double>(m.T))},
                        {"welfare_se", num(r.welfare_se)},
                        {"avg_total_queue", num(r.avg_total_queue)},
                        {"max_total_queue", num(r.max_total_queue)},
                        {"queue_bound", num(r.queue_bound)},
                        {"bound_violations", r.bound_violations},
                        {"drift_violations", r.drift_violations},
                        {"min_drift_slack", num(r.min_drift_slack)},
                        {"avg_load", num_list(r.avg_load)},
                        {"final_queue", num_list(r.final_queue)},
                        {"oracle_welfare", r.oracle_welfare ? num(*r.oracle_welfare) : json(nullptr)},
                        {"wall_seconds", num(r.wall_seconds)}});
    }
    s["runs"] = runs;
    if (result.oracle) s["oracle"] = lp_json(*result.oracle, tables);
    std::ofstream(out_dir / "summary.json") << s.dump(2) << '\n';
    return result;
}

json oracle_report(const ExperimentConfig& config) {
    const auto v = validate_config(config);
    if (!v.ok()) {
        std::string msg = "invalid configuration:";
        for (const auto& f : v.failures) msg += "\n  " + f;
        throw ConfigError(msg);
    }
    const ValueTables tables(config.model);
    const auto weights = config.model.market.long_run_weights();
    json j;
    j["market_weights"] = num_list(weights);
    const LpReport single = optimal_stationary_welfare(tables, weights, config.oracle_options);
    j["single_price"] = lp_json(single, tables);
    if (single.status == lp::Status::Optimal) j["single_price"]["mix"] = single_price_mix(single, tables);
    try {
        const RelaxedReport rel = relaxed_welfare(tables, weights, config.oracle_options);
        j["per_user"] = lp_json(rel.relaxed, tables);
        if (rel.relaxed.status == lp::Status::Optimal && single.status == lp::Status::Optimal)
            j["price_of_single_price"] = num(rel.price_of_single_price);
    } catch (const DomainError& e) {
        j["per_user"] = {{"status", "skipped"}, {"reason", e.what()}};
    }
    return j;
}

}  // namespace wma

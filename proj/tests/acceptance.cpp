// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "support.hpp"
#include "wma/controller.hpp"
#include "wma/harness.hpp"
#include "wma/oracle.hpp"
#include "wma/procurement.hpp"

using namespace wma;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Verdict& v, double seconds, double limit) {
    const bool ok = v.pass && seconds <= limit;
    if (!ok) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1fs, limit %.0fs]\n", ok ? "PASS" : "FAIL", id, name, v.detail.c_str(),
                seconds, limit);
    std::fflush(stdout);
}

void run(int id, const char* name, double limit, const std::function<Verdict()>& body) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    report(id, name, v, std::chrono::duration<double>(Clock::now() - t0).count(), limit);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// Drift slack and bound tallies shared by criteria 1, 8 and 9.
struct PathTally {
    std::size_t runs = 0, bound_violations = 0, drift_violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    double worst_ratio = 0.0;  // max total queue / bound
};

PathTally queue_sweep(bool markov, PathTally& drift) {
    PathTally t;
    const std::size_t Ts[] = {2, 4, 8, 24};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        testing::InstanceShape shape;
        shape.T = Ts[seed % 4];
        shape.users = 1 + seed % 3;
        shape.states = markov ? 2 : 1 + seed % 3;
        shape.markov = markov;
        shape.grid = 11 + seed % 10;
        const auto m = testing::random_model(1000 * (markov ? 2 : 1) + seed, shape);
        const ValueTables tables(m);
        for (double eta : {1.0, 10.0, 50.0}) {
            WmaConfig cfg;
            cfg.eta = eta;
            cfg.gamma = tables.gamma();
            cfg.realtime_noise = 0.2;
            const auto st = run_simulation(tables, cfg, 200, seed);
            ++t.runs;
            t.bound_violations += st.queue_bound_violations;
            t.worst_ratio = std::max(t.worst_ratio, st.max_total_queue / st.queue_bound);
            drift.drift_violations += st.drift_violations;
            drift.min_slack = std::min(drift.min_slack, st.min_drift_slack);
            ++drift.runs;
        }
    }
    return t;
}

// Criterion 5 / 8 welfare check plus the QoU identity of criterion 10.
struct WelfareOutcome {
    Verdict welfare, qou;
};

WelfareOutcome welfare_vs_oracle(bool markov, PathTally& drift) {
    testing::InstanceShape shape;
    shape.T = 2;
    shape.users = 2;
    shape.states = 2;
    shape.grid = 11;
    shape.atoms = 3;
    shape.markov = markov;
    const auto m = testing::random_model(markov ? 7702 : 7701, shape);
    const ValueTables tables(m);
    const auto lp = optimal_stationary_welfare(tables, m.market.long_run_weights());
    WelfareOutcome out;
    if (lp.status != lp::Status::Optimal || !lp.certified()) {
        out.welfare = {false, "oracle LP not certified optimal"};
        return out;
    }
    const double C1 = drift_constants(m.users, m.T).C1;
    const std::size_t K = 5000;
    const double etas[] = {5, 10, 20, 40, 80};
    std::vector<double> gap, se;
    bool bound_ok = true, qou_ok = true, mono_ok = true;
    double worst_identity = std::numeric_limits<double>::infinity(), worst_tail = 0.0;
    std::string detail = fmt("W*=%.6g", lp.value);
    for (double eta : etas) {
        WmaConfig cfg;
        cfg.eta = eta;
        cfg.gamma = tables.gamma();
        const auto st = run_simulation(tables, cfg, K, 42);  // common random numbers across eta
        drift.drift_violations += st.drift_violations;
        drift.min_slack = std::min(drift.min_slack, st.min_drift_slack);
        ++drift.runs;
        const double w = st.average_welfare(), s = st.welfare_standard_error();
        const double floor = lp.value - C1 * static_cast<double>(m.T) / eta - 3 * s;
        bound_ok = bound_ok && w >= floor;
        gap.push_back(lp.value - w);
        se.push_back(s);
        detail += fmt("; eta=%g W=%.6g se=%.2g", eta, w, s);
        const double KT = static_cast<double>(K * m.T);
        double qtotal = 0.0;
        for (std::size_t n = 0; n < m.users.size(); ++n) {
            const double lhs = st.realized_load_sum[n] / KT;
            const double rhs = m.users[n].l_av - st.final_queue[n] / KT;
            worst_identity = std::min(worst_identity, lhs - rhs);
            qou_ok = qou_ok && lhs >= rhs - 1e-9;
            qtotal += st.final_queue[n];
        }
        worst_tail = std::max(worst_tail, qtotal / st.queue_bound);
        qou_ok = qou_ok && qtotal <= st.queue_bound;
    }
    for (std::size_t i = 1; i < gap.size(); ++i)
        mono_ok = mono_ok && gap[i] <= gap[i - 1] + 3 * std::sqrt(se[i] * se[i] + se[i - 1] * se[i - 1]);
    detail += fmt("; gaps %.4g -> %.4g", gap.front(), gap.back());
    if (!bound_ok) detail += "; welfare floor missed";
    if (!mono_ok) detail += "; gap not shrinking";
    out.welfare = {bound_ok && mono_ok, detail};
    out.qou = {qou_ok, fmt("min (avg load - (l_av - Q_end/KT)) = %.3g; max Q_end/bound = %.3g", worst_identity, worst_tail)};
    return out;
}

// Standard normal quantile by bisection on the CDF.
double normal_quantile(double p) {
    double lo = -10, hi = 10;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

int main() {
    PathTally drift;

    run(1, "queue bound on 20 configs x 3 eta x 200 days", 120, [&] {
        const auto t = queue_sweep(false, drift);
        return Verdict{t.bound_violations == 0, fmt("%g runs, %g violations, max queue/bound %.3g", double(t.runs),
                                                    double(t.bound_violations), t.worst_ratio)};
    });

    run(2, "bound arithmetic at eta=20", 10, [] {
        auto cfg = load_config(std::string(WMA_SOURCE_DIR) + "/configs/two_class.json");
        cfg.etas = {20};
        const auto v = validate_config(cfg);
        const double b = v.bounds.at(0);
        const bool ok = v.ok() && v.gamma_used == 1.0 && cfg.model.users.size() == 2 && cfg.model.T == 24 &&
                        v.sum_l_av == 12.5 && format_number(b) == "756" && std::fabs(b - 756) <= 1e-12 * 756;
        return Verdict{ok, "reported bound " + format_number(b) + fmt(" (delta_max %.12g)", v.delta_max)};
    });

    run(3, "procurement closed form vs brute force", 30, [] {
        RandomStream rng(303);
        int bad_b = 0, bad_cost = 0, bad_cont = 0;
        double worst_b = 0, worst_cost = 0;
        for (int i = 0; i < 100; ++i) {
            std::vector<Atom> a;
            const int n = 1 + static_cast<int>(rng.uniform() * 40);
            for (int k = 0; k < n; ++k) a.push_back({testing::draw(rng, -2, 5), testing::draw(rng, 0.1, 1)});
            double s = 0;
            for (auto& x : a) s += x.weight;
            for (auto& x : a) x.weight /= s;
            const auto z = EmpiricalDistribution::from_atoms(a);
            const double l = testing::draw(rng, 0.5, 10);
            const double beta = testing::draw(rng, 0.5, 4), alpha = beta * testing::draw(rng, 1.0, 3.0);
            const ProcurementInputs in{l, {beta, alpha}};
            // brute force over a 1e-3 l grid, with the kinks l - z added so the grid minimum is exact
            const double step = 1e-3 * l;
            auto direct = [&](double b) {
                double e = 0;
                for (const auto& x : z.atoms()) e += x.weight * std::max(0.0, l - b - x.value);
                return beta * b + alpha * e;
            };
            double best = std::numeric_limits<double>::infinity(), arg = 0;
            auto consider = [&](double b) {
                const double c = direct(b);
                if (c < best) best = c, arg = b;
            };
            const double top = std::max(0.0, l - z.atoms().front().value) + step;
            for (double b = 0; b <= top; b += step) consider(b);
            for (const auto& x : z.atoms())
                if (l - x.value > 0) consider(l - x.value);
            const auto opt = expected_cost_optimal(in, z);
            worst_b = std::max(worst_b, std::fabs(opt.b_star - arg) / step);
            if (std::fabs(opt.b_star - arg) > step + 1e-12) ++bad_b;
            worst_cost = std::max(worst_cost, std::fabs(opt.cost - best));
            if (std::fabs(opt.cost - best) > 1e-9) ++bad_cost;
            // continuous-law form: one atom of slack at the quantile
            const double q = z.quantile(beta / alpha);
            const double atom = z.cdf(q) - z.cdf(std::nextafter(q, -INFINITY));
            if (std::fabs(expected_cost_optimal_continuous_form(in, z) - best) > std::max(1e-9, std::fabs(q) * alpha * atom) + 1e-12 &&
                opt.b_star > 0)
                ++bad_cont;
        }
        return Verdict{bad_b == 0 && bad_cost == 0 && bad_cont == 0,
                       fmt("B* misses %g (worst %.3g steps), cost misses %g (worst %.3g)", bad_b, worst_b, bad_cost,
                           worst_cost) + fmt(", continuous-form misses %g", bad_cont)};
    });

    run(4, "VoR monotonicity and cost derivatives", 10, [] {
        std::vector<Atom> a;
        for (int i = 0; i < 1000; ++i) a.push_back({normal_quantile((i + 0.5) / 1000), 1e-3});
        const auto h = standardize(EmpiricalDistribution::from_atoms(a)).base;
        const SlotPrices pr{1.2, 3.0};
        bool mu_ok = true, sigma_ok = true;
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 20; ++i) {
            const double v = vor_location_scale(pr, LocationScaleDistribution::make(h, 0.25 * i, 1.0));
            mu_ok = mu_ok && v >= prev - 1e-12;
            prev = v;
        }
        prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 20; ++i) {
            const double v = vor_location_scale(pr, LocationScaleDistribution::make(h, 2.0, 0.1 * i));
            sigma_ok = sigma_ok && v <= prev + 1e-12;
            prev = v;
        }
        // real-time-only cost alpha E[(L - mu - sigma H)^+]; theta placed between two atoms
        const double theta = 0.5 * (h.atoms()[600].value + h.atoms()[601].value);
        const double mu = 1.0, sigma = 2.0, L = mu + sigma * theta, d = 1e-4;
        auto cost = [&](double m_, double s_) {
            return expected_cost({L, pr}, shift_scale(LocationScaleDistribution::make(h, m_, s_)), 0.0);
        };
        const double fd_mu = (cost(mu + d, sigma) - cost(mu - d, sigma)) / (2 * d);
        const double fd_sigma = (cost(mu, sigma + d) - cost(mu, sigma - d)) / (2 * d);
        const double an_mu = -pr.alpha_bar * h.cdf(theta);
        const double an_sigma = -pr.alpha_bar * partial_expectation(h, theta);
        const double e_mu = std::fabs(fd_mu - an_mu) / std::fabs(an_mu);
        const double e_sigma = std::fabs(fd_sigma - an_sigma) / std::fabs(an_sigma);
        return Verdict{mu_ok && sigma_ok && e_mu <= 1e-3 && e_sigma <= 1e-3,
                       fmt("mu monotone %g, sigma monotone %g, rel err d/dmu %.2g, d/dsigma %.2g", mu_ok, sigma_ok,
                           e_mu, e_sigma)};
    });

    WelfareOutcome iid;
    run(5, "welfare vs LP oracle, eta in {5..80}, 5000 days", 300, [&] {
        iid = welfare_vs_oracle(false, drift);
        return iid.welfare;
    });

    run(6, "decoupled objective sandwich on 20 tiny instances", 60, [] {
        int bad = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            testing::InstanceShape shape;
            shape.T = 2;
            shape.grid = 5;
            shape.users = 1 + seed % 3;
            const auto m = testing::random_model(600 + seed, shape);
            const ValueTables tables(m);
            RandomStream rng(seed);
            std::vector<double> q(m.users.size());
            for (double& x : q) x = testing::draw(rng, 0, 60);
            const auto c = dp_phi_star(tables, q, MarketBelief::observed(seed % 2), testing::draw(rng, 1, 40));
            if (!c.lower_bound_holds()) ++bad;
            worst = std::min(worst, c.phi_a_at_wma - (c.phi_star - static_cast<double>(c.slots) * c.c0));
        }
        return Verdict{bad == 0, fmt("%g violations, min margin %.4g", bad, worst)};
    });

    run(7, "price of single price", 120, [] {
        int negative = 0, nonzero_identical = 0;
        double worst_identical = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            for (bool identical : {false, true}) {
                testing::InstanceShape shape;
                shape.grid = 7;
                shape.users = 2 + seed % 2;
                shape.identical = identical;
                const auto m = testing::random_model(700 + seed, shape);
                const ValueTables tables(m);
                const auto r = relaxed_welfare(tables, m.market.long_run_weights());
                const double scale = std::max(1.0, std::fabs(r.single_price.value));
                if (r.price_of_single_price < -1e-9 * scale) ++negative;
                if (identical) {
                    worst_identical = std::max(worst_identical, std::fabs(r.price_of_single_price) / scale);
                    if (std::fabs(r.price_of_single_price) > 1e-9 * scale) ++nonzero_identical;
                }
            }
        }
        // directional check of per-user pricing on the flexible/firm user pair
        const auto cfg = load_config(std::string(WMA_SOURCE_DIR) + "/configs/two_class.json");
        const auto& m = cfg.model;
        const ValueTables tables(m);
        WmaConfig same = cfg.wma, per = cfg.wma;
        same.eta = per.eta = 20;
        same.gamma = per.gamma = validate_config(cfg).gamma_used;
        same.pricing = PricingMode::SamePrice;
        per.pricing = PricingMode::PerUser;
        const auto a = run_simulation(tables, same, 1000, cfg.seed);
        const auto b = run_simulation(tables, per, 1000, cfg.seed);
        const double dw = b.average_welfare() - a.average_welfare();
        const double dq = a.average_total_queue(m.T) - b.average_total_queue(m.T);
        return Verdict{negative == 0 && nonzero_identical == 0 && dw >= 0 && dq >= 0,
                       fmt("negative PoSP %g, identical-user |PoSP|/W max %.2g, per-user welfare gain %.4g, queue "
                           "reduction %.4g",
                           negative, worst_identical, dw, dq)};
    });

    WelfareOutcome mk;
    run(8, "Markov market: queue bound and welfare vs stationary LP", 300, [&] {
        const auto t = queue_sweep(true, drift);
        mk = welfare_vs_oracle(true, drift);
        return Verdict{t.bound_violations == 0 && mk.welfare.pass,
                       fmt("%g runs, %g bound violations, max queue/bound %.3g; ", double(t.runs),
                           double(t.bound_violations), t.worst_ratio) + mk.welfare.detail};
    });

    run(9, "pathwise drift inequality over criteria 1, 5, 8", 1, [&] {
        return Verdict{drift.drift_violations == 0 && drift.runs > 0,
                       fmt("%g runs, %g frame violations, min slack %.4g", double(drift.runs),
                           double(drift.drift_violations), drift.min_slack)};
    });

    run(10, "QoU delivery identity on criterion 5 runs", 1, [&] { return iid.qou; });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

#include "wma/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "wma/errors.hpp"

namespace wma {
namespace {

struct Column {
    std::size_t state;
    std::size_t slot;
    double value;               // E[U] - E[Cost] in this state and slot
    std::vector<double> loads;  // planned load per user
};

// Builds the program for a fixed column set and maps the LP answer back.
LpReport solve_columns(const ValueTables& tables, std::span<const double> weights,
                       const std::vector<std::vector<std::vector<Column>>>& blocks, const OracleOptions& options) {
    const std::size_t N = tables.users();
    const std::size_t T = tables.slots();
    const std::size_t M = blocks.size();
    const auto& users = tables.model().users;

    std::size_t vars = 0;
    for (const auto& per_state : blocks)
        for (const auto& cols : per_state) vars += cols.size();
    if (vars > options.max_variables) {
        std::ostringstream msg;
        msg << "oracle program has " << vars << " variables, above the limit " << options.max_variables;
        throw DomainError(msg.str());
    }

    lp::LinearProgram prog;
    prog.objective.reserve(vars);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < T; ++t)
            for (const auto& c : blocks[m][t]) prog.objective.push_back(weights[m] * c.value);

    std::size_t offset = 0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> row(vars, 0.0);
            for (std::size_t c = 0; c < blocks[m][t].size(); ++c) row[offset + c] = 1.0;
            offset += blocks[m][t].size();
            prog.add_row(std::move(row), lp::RowSense::Equal, 1.0);
        }
    }
    const std::size_t first_qou = prog.constraints();
    for (std::size_t n = 0; n < N; ++n) {
        std::vector<double> row(vars, 0.0);
        std::size_t j = 0;
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t t = 0; t < T; ++t)
                for (const auto& c : blocks[m][t]) row[j++] = weights[m] * c.loads[n];
        prog.add_row(std::move(row), lp::RowSense::GreaterEqual, static_cast<double>(T) * users[n].l_av);
    }

    const lp::Solution sol = lp::solve(prog, options.simplex);
    LpReport rep;
    rep.status = sol.status;
    rep.variables = vars;
    rep.iterations = sol.iterations;
    if (sol.status == lp::Status::Infeasible) {
        rep.farkas = sol.farkas;
        rep.certificate = sol.certificate;
        return rep;
    }
    if (sol.status != lp::Status::Optimal) return rep;

    rep.value = sol.value;
    rep.certificate = sol.certificate;
    rep.mix.assign(M, std::vector<std::vector<double>>(T));
    std::size_t j = 0;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < T; ++t) {
            rep.mix[m][t].resize(blocks[m][t].size());
            for (std::size_t c = 0; c < blocks[m][t].size(); ++c) rep.mix[m][t][c] = sol.x[j++];
        }
    rep.qou_duals.resize(N);
    rep.qou_slack.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        rep.qou_duals[n] = -sol.duals[first_qou + n];
        double lhs = 0.0;
        for (std::size_t k = 0; k < vars; ++k) lhs += prog.rows[first_qou + n][k] * sol.x[k];
        rep.qou_slack[n] = lhs - prog.rhs[first_qou + n];
    }
    return rep;
}

void check_weights(const ValueTables& tables, std::span<const double> weights) {
    if (weights.size() != tables.market_states()) throw DomainError("one market weight per state is required");
    double s = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw DomainError("market weights must be non-negative");
        s += w;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw DomainError("market weights must sum to 1");
}

}  // namespace

bool LpReport::certified(double tolerance) const {
    if (status != lp::Status::Optimal) return false;
    const double scale = 1.0 + std::fabs(value);
    return certificate.primal_infeasibility <= tolerance * scale &&
           certificate.dual_infeasibility <= tolerance * scale && certificate.duality_gap <= tolerance * scale;
}

LpReport optimal_stationary_welfare(const ValueTables& tables, std::span<const double> market_weights,
                                    const OracleOptions& options) {
    check_weights(tables, market_weights);
    const std::size_t N = tables.users();
    const std::size_t T = tables.slots();
    const std::size_t G = tables.grid_size();
    const std::size_t M = tables.market_states();
    std::vector<std::vector<std::vector<Column>>> blocks(M, std::vector<std::vector<Column>>(T));
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t g = 0; g < G; ++g) {
                Column c{m, t, 0.0, std::vector<double>(N)};
                double u = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    u += tables.expected_utility(n, t, g);
                    c.loads[n] = tables.planned(n, t, g);
                }
                c.value = u - tables.common_price_cost(m, t, g);
                blocks[m][t].push_back(std::move(c));
            }
    return solve_columns(tables, market_weights, blocks, options);
}

RelaxedReport relaxed_welfare(const ValueTables& tables, std::span<const double> market_weights,
                              const OracleOptions& options) {
    check_weights(tables, market_weights);
    const std::size_t N = tables.users();
    const std::size_t T = tables.slots();
    const std::size_t G = tables.grid_size();
    const std::size_t M = tables.market_states();

    double tuples = 1.0;
    for (std::size_t n = 0; n < N; ++n) tuples *= static_cast<double>(G);
    if (tuples * static_cast<double>(M * T) > static_cast<double>(options.max_variables)) {
        std::ostringstream msg;
        msg << "relaxed program needs " << tuples * static_cast<double>(M * T) << " variables, above the limit "
            << options.max_variables;
        throw DomainError(msg.str());
    }

    std::vector<std::vector<std::vector<Column>>> blocks(M, std::vector<std::vector<Column>>(T));
    std::vector<std::size_t> idx(N, 0);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < T; ++t) {
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                Column c{m, t, 0.0, std::vector<double>(N)};
                double u = 0.0;
                double load = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    u += tables.expected_utility(n, t, idx[n]);
                    c.loads[n] = tables.planned(n, t, idx[n]);
                    load += c.loads[n];
                }
                c.value = u - tables.cost_for_load(m, t, load);
                blocks[m][t].push_back(std::move(c));
                std::size_t pos = N;
                bool done = true;
                while (pos > 0) {
                    --pos;
                    if (++idx[pos] < G) {
                        done = false;
                        break;
                    }
                    idx[pos] = 0;
                }
                if (done) break;
            }
        }

    RelaxedReport rep;
    rep.relaxed = solve_columns(tables, market_weights, blocks, options);
    rep.single_price = optimal_stationary_welfare(tables, market_weights, options);
    if (rep.relaxed.status == lp::Status::Optimal && rep.single_price.status == lp::Status::Optimal)
        rep.price_of_single_price = rep.relaxed.value - rep.single_price.value;
    return rep;
}

double phi_exact(const ValueTables& tables, std::span<const std::size_t> prices, std::span<const double> q_at_frame_start,
                 const MarketBelief& belief, double eta) {
    const std::size_t N = tables.users();
    const std::size_t T = tables.slots();
    if (prices.size() != T || q_at_frame_start.size() != N)
        throw DomainError("phi_exact needs one price per slot and one queue per user");
    const auto& users = tables.model().users;

    double total = 0.0;
    // Penalty part does not depend on the queues.
    const std::vector<double> zero(N, 0.0);
    std::vector<std::size_t> idx(N);
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(idx.begin(), idx.end(), prices[t]);
        total += phi_a_slot(tables, t, idx, zero, belief, eta);
    }
    // Queue part: E[Q_n(t_k + t)] L_n^d(p_t), propagating each user's queue law.
    for (std::size_t n = 0; n < N; ++n) {
        std::map<double, double> law{{q_at_frame_start[n], 1.0}};
        for (std::size_t t = 0; t < T; ++t) {
            const double planned = tables.planned(n, t, prices[t]);
            double mean_q = 0.0;
            for (const auto& [q, p] : law) mean_q += q * p;
            total += mean_q * planned;
            if (t + 1 == T) break;
            std::map<double, double> next;
            for (const auto& [q, p] : law)
                for (const Atom& w : users[n].noise[t].atoms())
                    next[std::max(0.0, q - (planned + w.value)) + users[n].l_av] += p * w.weight;
            law.swap(next);
        }
    }
    return total;
}

bool PhiComparison::lower_bound_holds() const {
    const double tol = 1e-9 * std::max(1.0, std::fabs(phi_star));
    return phi_a_at_wma >= phi_star - static_cast<double>(slots) * c0 - tol;
}

PhiComparison dp_phi_star(const ValueTables& tables, std::span<const double> q_at_frame_start,
                          const MarketBelief& belief, double eta, const DpOptions& options) {
    const std::size_t T = tables.slots();
    const std::size_t G = tables.grid_size();
    const auto& users = tables.model().users;

    double vectors = std::pow(static_cast<double>(G), static_cast<double>(T));
    double paths = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double per_user = 0.0;
        for (const auto& u : users) {
            double a = 1.0;
            for (std::size_t s = 0; s < t; ++s) a *= static_cast<double>(u.noise[s].size());
            per_user += a;
        }
        paths += per_user;
    }
    if (vectors * paths > options.budget) {
        std::ostringstream msg;
        msg << "exhaustive day search needs " << vectors << " price vectors x " << paths
            << " queue paths, above the budget " << options.budget;
        throw DomainError(msg.str());
    }

    PhiComparison out;
    out.slots = T;
    out.c0 = drift_constants(users, T).C0;

    WmaConfig cfg;
    cfg.eta = eta;
    const PriceDecision wma = choose_prices(tables, cfg, q_at_frame_start, belief);
    out.phi_a_at_wma = wma.total_objective();
    std::vector<std::size_t> wma_prices(T);
    for (std::size_t t = 0; t < T; ++t) wma_prices[t] = wma.index[t][0];
    out.phi_at_wma = phi_exact(tables, wma_prices, q_at_frame_start, belief, eta);

    std::vector<std::size_t> p(T, 0);
    bool first = true;
    while (true) {
        const double v = phi_exact(tables, p, q_at_frame_start, belief, eta);
        if (first || v > out.phi_star) {
            out.phi_star = v;
            out.best_prices = p;
            first = false;
        }
        std::size_t pos = T;
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++p[pos] < G) {
                done = false;
                break;
            }
            p[pos] = 0;
        }
        if (done) break;
    }
    return out;
}

}  // namespace wma

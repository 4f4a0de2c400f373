#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wma/controller.hpp"
#include "wma/lp.hpp"
#include "wma/system.hpp"

namespace wma {

/// Optimum of the stationary randomized pricing program over the price grid:
/// a distribution over grid prices for every (market state, slot), weighted
/// by the long-run market law, subject to each user's QoU target.
struct LpReport {
    lp::Status status = lp::Status::IterationLimit;
    double value = 0.0;  // welfare per day
    /// mix[m][t][c]: probability of column c in state m, slot t. Columns are grid
    /// prices (single price) or grid-price tuples (per-user prices).
    std::vector<std::vector<std::vector<double>>> mix;
    std::vector<double> qou_duals;  // shadow price of each QoU row, >= 0
    std::vector<double> qou_slack;  // expected load minus T l_av, per user
    lp::Certificate certificate;
    std::vector<double> farkas;  // infeasibility ray, when infeasible
    std::size_t variables = 0;
    std::size_t iterations = 0;

    bool certified(double tolerance = 1e-9) const;
};

struct OracleOptions {
    std::size_t max_variables = 100000;
    lp::SimplexOptions simplex;
};

/// Common price for all users in every (state, slot).
LpReport optimal_stationary_welfare(const ValueTables& tables, std::span<const double> market_weights,
                                    const OracleOptions& options = {});

struct RelaxedReport {
    LpReport relaxed;        // per-user prices
    LpReport single_price;   // common price
    double price_of_single_price = 0.0;
};

/// Drops the equal-price constraint: each (state, slot) randomizes over tuples
/// of per-user grid prices, sharing the randomization. The difference to the
/// common-price optimum is the price of single price.
RelaxedReport relaxed_welfare(const ValueTables& tables, std::span<const double> market_weights,
                              const OracleOptions& options = {});

struct DpOptions {
    /// Hard cap on grid^T * sum_t atoms^t evaluations.
    double budget = 5e7;
};

struct PhiComparison {
    double phi_star = 0.0;        // max over price vectors of the exact day objective
    double phi_a_at_wma = 0.0;    // decoupled objective at WMA's prices
    double phi_at_wma = 0.0;      // exact objective at WMA's prices
    std::vector<std::size_t> best_prices;  // grid index per slot attaining phi_star
    double c0 = 0.0;
    std::size_t slots = 0;

    /// phi_a_at_wma >= phi_star - T C0.
    bool lower_bound_holds() const;
};

/// Exact day objective with within-day queue evolution, for a common price
/// vector (grid index per slot). Queue expectations are exact over noise atoms.
double phi_exact(const ValueTables& tables, std::span<const std::size_t> prices, std::span<const double> q_at_frame_start,
                 const MarketBelief& belief, double eta);

/// Exhaustive maximization of phi_exact over grid^T; throws DomainError with a
/// size report when the enumeration exceeds the budget.
PhiComparison dp_phi_star(const ValueTables& tables, std::span<const double> q_at_frame_start,
                          const MarketBelief& belief, double eta, const DpOptions& options = {});

}  // namespace wma

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wma/market.hpp"
#include "wma/random.hpp"
#include "wma/system.hpp"

namespace wma {

enum class PricingMode { SamePrice, PerUser };

struct WmaConfig {
    double eta = 1.0;  // penalty weight, 1/epsilon
    PricingMode pricing = PricingMode::SamePrice;
    /// Pricing for day k sees that day's market pair. When false, the expected
    /// cost in the pricing objective averages over the market law instead.
    bool observe_market_before_pricing = true;
    /// Heterogeneity constant used in the queue bound.
    double gamma = 1.0;
    /// Realized real-time price is alpha_bar (1 + noise (2u - 1)), clipped to
    /// [0, alpha_max]. Zero keeps alpha = alpha_bar.
    double realtime_noise = 0.0;
    /// Throw InvariantViolation as soon as the queue bound or drift inequality fails.
    bool abort_on_violation = false;
};

/// Per-user load-deficit backlogs Q_n(tau).
struct DeficitQueues {
    std::vector<double> q;
    std::size_t tau = 0;

    double total() const;
};

/// Q_n <- [Q_n - L_n]^+ + l_av_n for every user; tau advances by one slot.
DeficitQueues update_queue(const DeficitQueues& queues, std::span<const double> realized_loads,
                           std::span<const double> l_av);

/// 1/2 sum Q_n^2.
double lyapunov_value(std::span<const double> q);

struct DriftConstants {
    double C = 0.0;   // 1/2 sum (L_max^2 + l_av^2)
    double C0 = 0.0;  // (T - 1) C
    double C1 = 0.0;  // T C
};

DriftConstants drift_constants(std::span<const UserProfile> users, std::size_t T);

/// delta_max N gamma^2 eta + T sum l_av.
double queue_bound(double delta_max, std::size_t users, double gamma, double eta, std::size_t T, double sum_l_av);

/// Per-slot drift-plus-penalty objective with frame-start queues:
/// sum_n eta E[U_n] - eta E[Cost] + sum_n Q_n(t_k) L_n^d, one grid index per user.
double phi_a_slot(const ValueTables& tables, std::size_t slot, std::span<const std::size_t> price_index,
                  std::span<const double> q_at_frame_start, const MarketBelief& belief, double eta);

/// Grid indices chosen for one day: prices[t][n].
struct PriceDecision {
    std::vector<std::vector<std::size_t>> index;
    std::vector<double> objective;  // per slot maximum of phi_a_slot
    double total_objective() const;
};

/// Per-slot argmax of phi_a_slot over the grid (or the product grid in
/// per-user mode); ties go to the lowest price.
PriceDecision choose_prices(const ValueTables& tables, const WmaConfig& config,
                            std::span<const double> q_at_frame_start, const MarketBelief& belief);

struct SlotRecord {
    std::size_t slot = 0;
    double beta = 0.0;
    double alpha_bar = 0.0;
    double alpha = 0.0;
    double renewable = 0.0;
    double planned_total = 0.0;
    double base_power = 0.0;
    double deficit = 0.0;
    double cost = 0.0;
    double welfare = 0.0;
    std::vector<double> price;
    std::vector<double> planned;
    std::vector<double> realized;
    std::vector<double> utility;
    std::vector<double> queue_before;
    std::vector<double> queue_after;
};

struct DayRecord {
    std::size_t day = 0;
    std::size_t market_state = 0;
    std::vector<SlotRecord> slots;
    double welfare = 0.0;
    double pricing_objective = 0.0;  // Phi^A at the chosen prices
};

struct DriftCheck {
    bool holds = true;
    double drift = 0.0;  // V(t_{k+1}) - V(t_k)
    double bound = 0.0;  // C T - sum_t sum_n Q_n(t_k + t) (L_n - l_av)
    double slack = 0.0;  // bound - drift
};

/// Pathwise per-frame Lyapunov drift inequality.
DriftCheck drift_bound_check(const DayRecord& record, std::span<const UserProfile> users);

/// One WMA run: owns the queues, the market cursor and the random stream.
class WmaSimulation {
public:
    WmaSimulation(const ValueTables& tables, WmaConfig config, std::uint64_t seed);

    /// Pricing, planning, day-ahead procurement, consumption, real-time
    /// balancing and queue updates for one day.
    DayRecord run_day();

    const DeficitQueues& queues() const { return queues_; }
    std::size_t day() const { return day_; }
    const WmaConfig& config() const { return config_; }
    double bound() const { return bound_; }

private:
    MarketBelief pricing_belief(std::size_t observed) const;

    const ValueTables* tables_;
    WmaConfig config_;
    RandomStream rng_;
    MarketCursor cursor_;
    DeficitQueues queues_;
    std::size_t day_ = 0;
    double bound_ = 0.0;
};

/// Running statistics over a simulated horizon.
struct RunStats {
    std::size_t days = 0;
    std::vector<double> day_welfare;
    std::vector<double> realized_load_sum;  // per user, over all slots
    double total_queue_sum = 0.0;           // sum over slots of sum_n Q_n after the slot
    double max_total_queue = 0.0;
    double queue_bound = 0.0;
    std::size_t queue_bound_violations = 0;
    std::size_t drift_violations = 0;
    double min_drift_slack = 0.0;
    std::vector<double> final_queue;

    double average_welfare() const;
    double average_total_queue(std::size_t T) const;
    /// Batch-means standard error of the average day welfare.
    double welfare_standard_error(std::size_t batches = 50) const;
};

/// Arithmetic mean of day welfare; throws DomainError on an empty list.
double average_welfare(std::span<const DayRecord> records);
/// Running mean after each day.
std::vector<double> cumulative_average_welfare(std::span<const DayRecord> records);

using DayObserver = std::function<void(const DayRecord&)>;

/// Runs `days` days and checks the queue bound and drift inequality on every
/// slot and frame.
RunStats run_simulation(const ValueTables& tables, const WmaConfig& config, std::size_t days, std::uint64_t seed,
                        const DayObserver& observer = {});

}  // namespace wma

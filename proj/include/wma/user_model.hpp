#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wma/distribution.hpp"

namespace wma {

struct Breakpoint {
    double load = 0.0;
    double value = 0.0;
};

/// Continuous, non-decreasing piecewise-linear function given by breakpoints
/// with strictly increasing loads. Constant beyond the first and last point.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    static PiecewiseLinear make(std::vector<Breakpoint> points);

    double operator()(double load) const;
    std::span<const Breakpoint> breakpoints() const { return points_; }
    double max_slope() const;
    /// True when every segment up to `load` has positive slope.
    bool strictly_increasing_up_to(double load) const;

private:
    explicit PiecewiseLinear(std::vector<Breakpoint> points) : points_(std::move(points)) {}
    std::vector<Breakpoint> points_;
};

/// U_n(L, t): one piecewise-linear function per slot.
class UtilityFunction {
public:
    UtilityFunction() = default;
    explicit UtilityFunction(std::vector<PiecewiseLinear> per_slot);
    /// Same function in every slot.
    static UtilityFunction uniform(PiecewiseLinear f, std::size_t slots);

    std::size_t slots() const { return per_slot_.size(); }
    const PiecewiseLinear& slot(std::size_t t) const { return per_slot_.at(t); }
    double operator()(double load, std::size_t t) const { return per_slot_.at(t)(load); }

private:
    std::vector<PiecewiseLinear> per_slot_;
};

struct UserProfile {
    std::string name;
    UtilityFunction utility;
    std::vector<double> l_min;                // per slot
    double l_max = 0.0;
    double w_max = 0.0;
    double l_av = 0.0;                        // QoU target
    std::vector<EmpiricalDistribution> noise;  // per slot, zero mean

    std::size_t slots() const { return l_min.size(); }
    double l_d_max() const { return l_max - w_max; }

    /// Human-readable list of violated profile invariants; empty when valid.
    std::vector<std::string> violations() const;
    /// Throws ConfigError with the first violation.
    void validate() const;
};

/// Zero-noise profile helper.
UserProfile make_profile(std::string name, UtilityFunction utility, std::vector<double> l_min, double l_max,
                         double l_av);

struct PlanningOptions {
    double resolution = 1e-3;  // uniform search-grid step in load units
};

/// E[U(L + w, t)] over the slot's noise atoms.
double expected_utility(const UserProfile& user, double planned, std::size_t slot);
/// E[U(L + w, t) - p (L + w)].
double expected_net_benefit(const UserProfile& user, double planned, double price, std::size_t slot);

/// Search grid used by plan_consumption: uniform points on [l_min(t), l_d_max]
/// plus every utility breakpoint shifted by every noise atom.
std::vector<double> planning_grid(const UserProfile& user, std::size_t slot, const PlanningOptions& options = {});

/// Smallest maximizer of the expected net benefit over the planning grid.
double plan_consumption(const UserProfile& user, double price, std::size_t slot,
                        const PlanningOptions& options = {});

/// planned + noise; throws ModelViolation if the result exceeds l_max or is negative.
double realize_consumption(double planned, double noise_sample, double l_max);

/// Smallest gamma >= 1 with L_n <= gamma L_m for every user pair, grid price and
/// slot. +infinity when some user plans zero while another plans a positive load.
double heterogeneity_gamma(std::span<const UserProfile> users, std::span<const double> price_grid,
                           const PlanningOptions& options = {});

double aggregate_planned_load(std::span<const UserProfile> users, double price, std::size_t slot,
                              const PlanningOptions& options = {});

}  // namespace wma

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wma/distribution.hpp"
#include "wma/market.hpp"
#include "wma/user_model.hpp"

namespace wma {

/// Everything that defines one system instance: users, renewable law per slot,
/// market process and the discretized feasible price set.
struct SystemModel {
    std::size_t T = 0;
    std::vector<UserProfile> users;
    std::vector<EmpiricalDistribution> renewable;  // X(t)
    MarketProcess market;
    std::vector<double> price_grid;  // non-decreasing, same grid every slot
    PlanningOptions planning;
    ConvolutionOptions convolution;

    std::size_t user_count() const { return users.size(); }
    double sum_l_av() const;
    /// Collected invariant violations; empty when the model is usable.
    std::vector<std::string> violations() const;
    void validate() const;
};

/// Uniform grid of `points` prices on [lo, hi].
std::vector<double> uniform_price_grid(double lo, double hi, std::size_t points);

/// Immutable lookup tables derived from a SystemModel: planned loads and
/// expected utilities per (user, slot, grid price), effective renewable per
/// slot, and optimal expected procurement cost per (market state, slot,
/// grid price) under a common price.
class ValueTables {
public:
    explicit ValueTables(const SystemModel& model);
    ValueTables(SystemModel&&) = delete;  // keeps a pointer to the model

    const SystemModel& model() const { return *model_; }
    std::size_t users() const { return model_->users.size(); }
    std::size_t slots() const { return model_->T; }
    std::size_t grid_size() const { return model_->price_grid.size(); }
    std::size_t market_states() const { return model_->market.size(); }
    double price(std::size_t g) const { return model_->price_grid[g]; }

    double planned(std::size_t n, std::size_t t, std::size_t g) const { return planned_[index(n, t, g)]; }
    double expected_utility(std::size_t n, std::size_t t, std::size_t g) const { return utility_[index(n, t, g)]; }
    const EmpiricalDistribution& effective_renewable(std::size_t t) const { return effective_[t]; }

    /// Sum of planned loads when every user sees grid price g.
    double aggregate_planned(std::size_t t, std::size_t g) const;
    /// Optimal expected cost under a common grid price.
    double common_price_cost(std::size_t m, std::size_t t, std::size_t g) const {
        return cost_[(m * slots() + t) * grid_size() + g];
    }
    /// Optimal expected cost of serving an arbitrary aggregate planned load.
    double cost_for_load(std::size_t m, std::size_t t, double load) const;

    /// Heterogeneity constant over the grid (see heterogeneity_gamma).
    double gamma() const { return gamma_; }

private:
    std::size_t index(std::size_t n, std::size_t t, std::size_t g) const {
        return (n * slots() + t) * grid_size() + g;
    }

    const SystemModel* model_;
    std::vector<double> planned_;
    std::vector<double> utility_;
    std::vector<EmpiricalDistribution> effective_;
    std::vector<double> cost_;
    double gamma_ = 1.0;
};

/// Weights over market states used when taking the expected cost.
struct MarketBelief {
    std::vector<std::size_t> states;
    std::vector<double> weights;

    static MarketBelief observed(std::size_t m) { return {{m}, {1.0}}; }
    static MarketBelief from_weights(std::span<const double> w);
};

}  // namespace wma

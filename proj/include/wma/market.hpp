#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "wma/procurement.hpp"
#include "wma/random.hpp"

namespace wma {

/// Day-ahead and expected real-time price vectors for one day, in thousand
/// dollars per 100 MW slot.
struct MarketState {
    std::vector<double> beta;
    std::vector<double> alpha_bar;

    std::size_t slots() const { return beta.size(); }
    SlotPrices at(std::size_t t) const { return {beta.at(t), alpha_bar.at(t)}; }
};

enum class MarketMode { Iid, Markov };

/// Finite set of daily price pairs and the law that picks one per day.
class MarketProcess {
public:
    /// Empty placeholder; use iid() or markov() to build a usable process.
    MarketProcess() = default;

    /// Validates states, probabilities and price caps. Caps default to the
    /// largest observed prices.
    static MarketProcess iid(std::vector<MarketState> states, std::vector<double> probabilities,
                             std::optional<double> beta_max = {}, std::optional<double> alpha_max = {});
    /// Row-stochastic transition matrix; must be irreducible and aperiodic.
    /// The initial law defaults to the stationary distribution.
    static MarketProcess markov(std::vector<MarketState> states, std::vector<std::vector<double>> transition,
                                std::optional<std::vector<double>> initial = {},
                                std::optional<double> beta_max = {}, std::optional<double> alpha_max = {});

    MarketMode mode() const { return mode_; }
    std::size_t size() const { return states_.size(); }
    std::size_t slots() const { return states_.front().slots(); }
    const MarketState& state(std::size_t m) const { return states_.at(m); }
    const std::vector<MarketState>& states() const { return states_; }
    const std::vector<double>& probabilities() const { return probabilities_; }
    const std::vector<std::vector<double>>& transition() const { return transition_; }
    const std::vector<double>& initial() const { return initial_; }

    double beta_max() const { return beta_max_; }
    double alpha_max() const { return alpha_max_; }
    /// max(alpha_max, beta_max).
    double delta_max() const { return std::max(alpha_max_, beta_max_); }

    /// Long-run weight of each state: the IID probabilities, or the Markov
    /// stationary distribution.
    std::vector<double> long_run_weights() const;

private:
    void validate_states();
    void set_caps(std::optional<double> beta_max, std::optional<double> alpha_max);

    MarketMode mode_ = MarketMode::Iid;
    std::vector<MarketState> states_;
    std::vector<double> probabilities_;
    std::vector<std::vector<double>> transition_;
    std::vector<double> initial_;
    double beta_max_ = 0.0;
    double alpha_max_ = 0.0;
};

/// Per-run sampling position (previous state for Markov mode).
struct MarketCursor {
    std::optional<std::size_t> previous;
};

struct MarketDraw {
    std::size_t index = 0;
    const MarketState* state = nullptr;
};

MarketDraw sample_day(const MarketProcess& process, MarketCursor& cursor, RandomStream& rng);

/// Left eigenvector of a row-stochastic matrix for eigenvalue 1, by power
/// iteration to an L1 residual of 1e-12. Throws ConfigError on non-convergence.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& transition);

/// True when some power of the matrix is entrywise positive (irreducible and aperiodic).
bool is_primitive(const std::vector<std::vector<double>>& transition);

}  // namespace wma

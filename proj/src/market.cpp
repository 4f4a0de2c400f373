#include "wma/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wma/errors.hpp"

namespace wma {
namespace {

constexpr double kProbabilityTolerance = 1e-12;

void check_probability_vector(const std::vector<double>& p, std::size_t n, const std::string& what) {
    if (p.size() != n) throw ConfigError(what + " must have one entry per market state");
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw ConfigError(what + " entries must be non-negative");
        total += x;
    }
    if (std::fabs(total - 1.0) > kProbabilityTolerance) throw ConfigError(what + " must sum to 1");
}

}  // namespace

void MarketProcess::validate_states() {
    if (states_.empty()) throw ConfigError("market needs at least one state");
    const std::size_t T = states_.front().slots();
    if (T == 0) throw ConfigError("market state has no slots");
    for (const auto& s : states_) {
        if (s.beta.size() != T || s.alpha_bar.size() != T)
            throw ConfigError("market states must all have T day-ahead and T real-time prices");
        for (std::size_t t = 0; t < T; ++t) {
            if (!(s.beta[t] >= 0.0) || !(s.alpha_bar[t] >= 0.0) || !std::isfinite(s.beta[t]) ||
                !std::isfinite(s.alpha_bar[t]))
                throw ConfigError("market prices must be finite and non-negative");
            if (s.beta[t] == 0.0 && s.alpha_bar[t] == 0.0)
                throw ConfigError("market slot with both prices zero");
        }
    }
}

void MarketProcess::set_caps(std::optional<double> beta_max, std::optional<double> alpha_max) {
    double b = 0.0;
    double a = 0.0;
    for (const auto& s : states_) {
        b = std::max(b, *std::max_element(s.beta.begin(), s.beta.end()));
        a = std::max(a, *std::max_element(s.alpha_bar.begin(), s.alpha_bar.end()));
    }
    beta_max_ = beta_max.value_or(b);
    alpha_max_ = alpha_max.value_or(a);
    if (beta_max_ < b) throw ConfigError("beta_max is below an observed day-ahead price");
    if (alpha_max_ < a) throw ConfigError("alpha_max is below an observed real-time price");
}

MarketProcess MarketProcess::iid(std::vector<MarketState> states, std::vector<double> probabilities,
                                 std::optional<double> beta_max, std::optional<double> alpha_max) {
    MarketProcess p;
    p.mode_ = MarketMode::Iid;
    p.states_ = std::move(states);
    p.validate_states();
    check_probability_vector(probabilities, p.states_.size(), "market probabilities");
    p.probabilities_ = std::move(probabilities);
    p.set_caps(beta_max, alpha_max);
    return p;
}

MarketProcess MarketProcess::markov(std::vector<MarketState> states, std::vector<std::vector<double>> transition,
                                    std::optional<std::vector<double>> initial, std::optional<double> beta_max,
                                    std::optional<double> alpha_max) {
    MarketProcess p;
    p.mode_ = MarketMode::Markov;
    p.states_ = std::move(states);
    p.validate_states();
    const std::size_t M = p.states_.size();
    if (transition.size() != M) throw ConfigError("transition matrix must be M x M");
    for (const auto& row : transition) check_probability_vector(row, M, "transition matrix row");
    if (!is_primitive(transition)) throw ConfigError("market chain must be irreducible and aperiodic");
    p.transition_ = std::move(transition);
    p.probabilities_ = stationary_distribution(p.transition_);
    if (initial) {
        check_probability_vector(*initial, M, "initial distribution");
        p.initial_ = std::move(*initial);
    } else {
        p.initial_ = p.probabilities_;
    }
    p.set_caps(beta_max, alpha_max);
    return p;
}

std::vector<double> MarketProcess::long_run_weights() const { return probabilities_; }

MarketDraw sample_day(const MarketProcess& process, MarketCursor& cursor, RandomStream& rng) {
    std::size_t index = 0;
    if (process.mode() == MarketMode::Iid) {
        index = rng.categorical(process.probabilities());
    } else if (!cursor.previous) {
        index = rng.categorical(process.initial());
    } else {
        index = rng.categorical(process.transition()[*cursor.previous]);
    }
    cursor.previous = index;
    return {index, &process.state(index)};
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& transition) {
    const std::size_t M = transition.size();
    if (M == 0) throw ConfigError("empty transition matrix");
    std::vector<double> pi(M, 1.0 / static_cast<double>(M));
    std::vector<double> next(M);
    constexpr int kMaxIterations = 1000000;
    for (int it = 0; it < kMaxIterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) next[j] += pi[i] * transition[i][j];
        double total = 0.0;
        for (double x : next) total += x;
        for (double& x : next) x /= total;
        double residual = 0.0;
        for (std::size_t j = 0; j < M; ++j) residual += std::fabs(next[j] - pi[j]);
        pi.swap(next);
        if (residual < 1e-12) return pi;
    }
    throw ConfigError("stationary distribution did not converge (reducible or periodic chain?)");
}

bool is_primitive(const std::vector<std::vector<double>>& transition) {
    const std::size_t M = transition.size();
    std::vector<std::vector<char>> base(M, std::vector<char>(M, 0));
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) base[i][j] = transition[i][j] > 0.0;
    // Wielandt: a primitive M x M matrix has P^k > 0 for k = (M-1)^2 + 1.
    const std::size_t k = (M - 1) * (M - 1) + 1;
    auto power = base;
    for (std::size_t step = 1; step < k; ++step) {
        std::vector<std::vector<char>> next(M, std::vector<char>(M, 0));
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t l = 0; l < M; ++l)
                if (power[i][l])
                    for (std::size_t j = 0; j < M; ++j) next[i][j] |= base[l][j];
        power.swap(next);
    }
    for (const auto& row : power)
        for (char c : row)
            if (!c) return false;
    return true;
}

}  // namespace wma

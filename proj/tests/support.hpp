#pragma once

// Random instance builders shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "wma/market.hpp"
#include "wma/procurement.hpp"
#include "wma/random.hpp"
#include "wma/system.hpp"
#include "wma/user_model.hpp"

namespace wma::testing {

inline double draw(RandomStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Zero-mean noise with 1..3 atoms bounded by w_max.
inline EmpiricalDistribution random_noise(RandomStream& rng, std::size_t atoms, double w_max) {
    if (atoms <= 1 || w_max == 0.0) return EmpiricalDistribution::degenerate(0.0);
    const double a = draw(rng, 0.3, 1.0) * w_max;
    if (atoms == 2) return EmpiricalDistribution::from_atoms({{-a, 0.5}, {a, 0.5}});
    const double p = draw(rng, 0.1, 0.45);
    return EmpiricalDistribution::from_atoms({{-a, p}, {0.0, 1.0 - 2.0 * p}, {a, p}});
}

// Concave, strictly increasing up to l_max.
inline PiecewiseLinear random_utility(RandomStream& rng, double l_max) {
    const double x1 = draw(rng, 0.2, 0.45) * l_max;
    const double x2 = draw(rng, 0.55, 0.8) * l_max;
    const double s1 = draw(rng, 6.0, 12.0);
    const double s2 = draw(rng, 2.0, 6.0);
    const double s3 = draw(rng, 0.3, 2.0);
    const double v1 = s1 * x1;
    const double v2 = v1 + s2 * (x2 - x1);
    return PiecewiseLinear::make({{0.0, 0.0}, {x1, v1}, {x2, v2}, {l_max, v2 + s3 * (l_max - x2)}});
}

inline UserProfile random_user(RandomStream& rng, std::size_t T, std::size_t atoms, const char* name) {
    UserProfile u;
    u.name = name;
    u.l_max = draw(rng, 8.0, 12.0);
    u.w_max = atoms > 1 ? 0.5 : 0.0;
    u.l_min.resize(T);
    for (auto& v : u.l_min) v = draw(rng, 0.5, 2.0);
    double lo = 0.0;
    for (double v : u.l_min) lo = std::max(lo, v);
    const double hi = u.l_max - 2.0 * u.w_max;
    u.l_av = draw(rng, lo + 0.5, hi - 0.5);
    std::vector<PiecewiseLinear> f;
    for (std::size_t t = 0; t < T; ++t) {
        f.push_back(random_utility(rng, u.l_max));
        u.noise.push_back(random_noise(rng, atoms, u.w_max));
    }
    u.utility = UtilityFunction(std::move(f));
    return u;
}

inline MarketState random_state(RandomStream& rng, std::size_t T) {
    MarketState s;
    for (std::size_t t = 0; t < T; ++t) {
        const double b = draw(rng, 1.0, 5.0);
        s.beta.push_back(b);
        s.alpha_bar.push_back(b * draw(rng, 0.8, 2.0));
    }
    return s;
}

struct InstanceShape {
    std::size_t T = 2;
    std::size_t users = 2;
    std::size_t states = 2;
    std::size_t grid = 11;
    std::size_t atoms = 3;
    bool identical = false;
    bool markov = false;
    double price_max = 12.0;
};

inline SystemModel random_model(std::uint64_t seed, const InstanceShape& shape) {
    RandomStream rng(seed);
    SystemModel m;
    m.T = shape.T;
    static const char* names[] = {"u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7"};
    for (std::size_t n = 0; n < shape.users; ++n) {
        if (shape.identical && n > 0) {
            UserProfile copy = m.users.front();
            copy.name = names[n % 8];
            m.users.push_back(copy);
        } else {
            m.users.push_back(random_user(rng, shape.T, shape.atoms, names[n % 8]));
        }
    }
    for (std::size_t t = 0; t < shape.T; ++t) {
        const double c = draw(rng, 0.0, 4.0);
        m.renewable.push_back(
            EmpiricalDistribution::from_atoms({{c, 1.0 / 3.0}, {c + 1.0, 1.0 / 3.0}, {c + 2.5, 1.0 / 3.0}}));
    }
    std::vector<MarketState> states;
    for (std::size_t k = 0; k < shape.states; ++k) states.push_back(random_state(rng, shape.T));
    if (shape.markov && shape.states > 1) {
        std::vector<std::vector<double>> P(shape.states, std::vector<double>(shape.states));
        for (std::size_t i = 0; i < shape.states; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < shape.states; ++j) s += (P[i][j] = draw(rng, 0.2, 1.0) + (i == j ? 1.0 : 0.0));
            for (double& v : P[i]) v /= s;
        }
        m.market = MarketProcess::markov(std::move(states), std::move(P));
    } else {
        std::vector<double> probs(shape.states);
        double s = 0.0;
        for (double& p : probs) s += (p = draw(rng, 0.5, 1.5));
        for (double& p : probs) p /= s;
        m.market = MarketProcess::iid(std::move(states), std::move(probs));
    }
    m.price_grid = uniform_price_grid(0.0, shape.price_max, shape.grid);
    return m;
}

// Independent oracles used to check the tables and the controller.

// Effective renewable X - sum_n W_n by explicit enumeration of every atom combination.
inline std::vector<Atom> enumerate_effective(const SystemModel& m, std::size_t t) {
    std::vector<Atom> out;
    for (const Atom& x : m.renewable[t].atoms()) out.push_back(x);
    for (const auto& u : m.users) {
        std::vector<Atom> next;
        for (const Atom& a : out)
            for (const Atom& w : u.noise[t].atoms()) next.push_back({a.value - w.value, a.weight * w.weight});
        out = std::move(next);
    }
    return out;
}

// min_b beta b + alpha E[(l - b - Z)^+]; convex piecewise linear, so a kink or b = 0 is optimal.
inline double brute_cost(const std::vector<Atom>& z, double l, SlotPrices p) {
    auto cost = [&](double b) {
        double s = 0.0;
        for (const Atom& a : z) s += a.weight * std::max(0.0, l - b - a.value);
        return p.beta * b + p.alpha_bar * s;
    };
    double best = cost(0.0);
    for (const Atom& a : z)
        if (l - a.value > 0.0) best = std::min(best, cost(l - a.value));
    return best;
}

// Drift-plus-penalty slot objective rebuilt from the user model and a brute-force cost.
inline double brute_phi(const SystemModel& m, std::size_t t, const std::vector<double>& prices, const std::vector<double>& q,
                 std::size_t state, double eta) {
    double util = 0.0, load = 0.0, pressure = 0.0;
    for (std::size_t n = 0; n < m.users.size(); ++n) {
        const double l = plan_consumption(m.users[n], prices[n], t, m.planning);
        util += expected_utility(m.users[n], l, t);
        load += l;
        pressure += q[n] * l;
    }
    return eta * (util - brute_cost(enumerate_effective(m, t), load, m.market.state(state).at(t))) + pressure;
}

}  // namespace wma::testing

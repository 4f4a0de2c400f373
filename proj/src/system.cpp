#include "wma/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "wma/errors.hpp"
#include "wma/procurement.hpp"

namespace wma {

double SystemModel::sum_l_av() const {
    double s = 0.0;
    for (const auto& u : users) s += u.l_av;
    return s;
}

std::vector<std::string> SystemModel::violations() const {
    std::vector<std::string> out;
    if (T == 0) out.push_back("T must be positive");
    if (users.empty()) out.push_back("at least one user is required");
    for (const auto& u : users) {
        if (u.slots() != T) out.push_back("user '" + u.name + "' does not define T slots");
        auto v = u.violations();
        out.insert(out.end(), v.begin(), v.end());
    }
    if (renewable.size() != T) out.push_back("renewable distribution must be given for every slot");
    for (std::size_t t = 0; t < renewable.size(); ++t)
        if (renewable[t].min() < 0.0) out.push_back("renewable output must be non-negative (slot " + std::to_string(t) + ")");
    if (market.size() == 0) out.push_back("market process has no states");
    else if (market.slots() != T) out.push_back("market states must have T slots");
    if (price_grid.empty()) out.push_back("price grid is empty");
    for (std::size_t g = 0; g < price_grid.size(); ++g) {
        if (!(price_grid[g] >= 0.0)) out.push_back("grid prices must be non-negative");
        if (g > 0 && price_grid[g] < price_grid[g - 1]) out.push_back("price grid must be ascending");
    }
    return out;
}

void SystemModel::validate() const {
    const auto v = violations();
    if (!v.empty()) throw ConfigError(v.front());
}

std::vector<double> uniform_price_grid(double lo, double hi, std::size_t points) {
    if (points == 0) throw ConfigError("price grid needs at least one point");
    if (!(hi >= lo) || lo < 0.0) throw ConfigError("price interval must satisfy 0 <= lo <= hi");
    if (points == 1) return {lo};
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    grid.back() = hi;
    return grid;
}

ValueTables::ValueTables(const SystemModel& model) : model_(&model) {
    model.validate();
    const std::size_t N = model.users.size();
    const std::size_t T = model.T;
    const std::size_t G = model.price_grid.size();
    planned_.resize(N * T * G);
    utility_.resize(N * T * G);

    // Rows (n, t) are independent; split them over a few workers.
    const std::size_t jobs = N * T;
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, std::thread::hardware_concurrency()));
    auto fill = [&](std::size_t first) {
        for (std::size_t job = first; job < jobs; job += workers) {
            const std::size_t n = job / T;
            const std::size_t t = job % T;
            const auto& user = model.users[n];
            for (std::size_t g = 0; g < G; ++g) {
                const double l = plan_consumption(user, model.price_grid[g], t, model.planning);
                planned_[index(n, t, g)] = l;
                utility_[index(n, t, g)] = wma::expected_utility(user, l, t);
            }
        }
    };
    if (workers == 1) {
        fill(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill, w);
        for (auto& th : pool) th.join();
    }

    effective_.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<EmpiricalDistribution> noise;
        noise.reserve(N);
        for (const auto& u : model.users) noise.push_back(u.noise[t]);
        const auto w = sum_independent(noise, model.convolution);
        effective_.push_back(wma::effective_renewable(model.renewable[t], w, model.convolution));
    }

    const std::size_t M = model.market.size();
    cost_.resize(M * T * G);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t g = 0; g < G; ++g)
                cost_[(m * T + t) * G + g] = cost_for_load(m, t, aggregate_planned(t, g));

    gamma_ = 1.0;
    if (N > 1) {
        for (std::size_t t = 0; t < T && std::isfinite(gamma_); ++t) {
            for (std::size_t g = 0; g < G; ++g) {
                double lo = std::numeric_limits<double>::infinity();
                double hi = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    lo = std::min(lo, planned(n, t, g));
                    hi = std::max(hi, planned(n, t, g));
                }
                if (hi == 0.0) continue;
                if (lo == 0.0) {
                    gamma_ = std::numeric_limits<double>::infinity();
                    break;
                }
                gamma_ = std::max(gamma_, hi / lo);
            }
        }
    }
}

double ValueTables::aggregate_planned(std::size_t t, std::size_t g) const {
    double s = 0.0;
    for (std::size_t n = 0; n < users(); ++n) s += planned(n, t, g);
    return s;
}

double ValueTables::cost_for_load(std::size_t m, std::size_t t, double load) const {
    const ProcurementInputs in{load, model_->market.state(m).at(t)};
    return expected_cost_optimal(in, effective_[t]).cost;
}

MarketBelief MarketBelief::from_weights(std::span<const double> w) {
    MarketBelief b;
    for (std::size_t m = 0; m < w.size(); ++m) {
        if (w[m] > 0.0) {
            b.states.push_back(m);
            b.weights.push_back(w[m]);
        }
    }
    return b;
}

}  // namespace wma

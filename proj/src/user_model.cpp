#include "wma/user_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wma/errors.hpp"

namespace wma {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kLoadTolerance = 1e-9;

}  // namespace

PiecewiseLinear PiecewiseLinear::make(std::vector<Breakpoint> points) {
    if (points.empty()) throw ConfigError("utility needs at least one breakpoint");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i].load) || !std::isfinite(points[i].value))
            throw ConfigError("utility breakpoint must be finite");
        if (i > 0) {
            if (!(points[i].load > points[i - 1].load))
                throw ConfigError("utility breakpoint loads must be strictly increasing");
            if (points[i].value < points[i - 1].value)
                throw ConfigError("utility must be non-decreasing in load");
        }
    }
    return PiecewiseLinear(std::move(points));
}

double PiecewiseLinear::operator()(double load) const {
    if (load <= points_.front().load) return points_.front().value;
    if (load >= points_.back().load) return points_.back().value;
    auto it = std::upper_bound(points_.begin(), points_.end(), load,
                               [](double x, const Breakpoint& b) { return x < b.load; });
    const Breakpoint& hi = *it;
    const Breakpoint& lo = *(it - 1);
    return lo.value + (hi.value - lo.value) * (load - lo.load) / (hi.load - lo.load);
}

double PiecewiseLinear::max_slope() const {
    double s = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i)
        s = std::max(s, (points_[i].value - points_[i - 1].value) / (points_[i].load - points_[i - 1].load));
    return s;
}

bool PiecewiseLinear::strictly_increasing_up_to(double load) const {
    if (load > points_.back().load) return false;
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i - 1].load >= load) break;
        if (!(points_[i].value > points_[i - 1].value)) return false;
    }
    return true;
}

UtilityFunction::UtilityFunction(std::vector<PiecewiseLinear> per_slot) : per_slot_(std::move(per_slot)) {}

UtilityFunction UtilityFunction::uniform(PiecewiseLinear f, std::size_t slots) {
    return UtilityFunction(std::vector<PiecewiseLinear>(slots, f));
}

std::vector<std::string> UserProfile::violations() const {
    std::vector<std::string> out;
    auto fail = [&](const std::string& msg) { out.push_back("user '" + name + "': " + msg); };
    const std::size_t T = slots();
    if (T == 0) fail("l_min must have one entry per slot");
    if (utility.slots() != T) fail("utility must define every slot");
    if (noise.size() != T) fail("noise must define every slot");
    if (!(l_max > 0.0)) fail("l_max must be positive");
    if (w_max < 0.0) fail("w_max must be non-negative");
    const double max_l_min = T ? *std::max_element(l_min.begin(), l_min.end()) : 0.0;
    if (!(l_av > max_l_min)) fail("QoU target l_av must exceed max_t l_min(t)");
    if (l_d_max() < l_av + w_max) fail("l_d_max = l_max - w_max must be at least l_av + w_max");
    for (std::size_t t = 0; t < T; ++t) {
        if (l_min[t] < 0.0) fail("l_min must be non-negative");
        if (l_min[t] > l_d_max()) fail("empty planning interval in slot " + std::to_string(t));
        if (t < noise.size()) {
            const auto& w = noise[t];
            if (std::fabs(w.mean()) > 1e-9) fail("noise must have zero mean (slot " + std::to_string(t) + ")");
            if (w.max() > w_max + kLoadTolerance) fail("noise exceeds w_max (slot " + std::to_string(t) + ")");
            if (l_min[t] + w.min() < -kLoadTolerance)
                fail("l_min + smallest noise atom is negative (slot " + std::to_string(t) + ")");
        }
    }
    return out;
}

void UserProfile::validate() const {
    const auto v = violations();
    if (!v.empty()) throw ConfigError(v.front());
}

UserProfile make_profile(std::string name, UtilityFunction utility, std::vector<double> l_min, double l_max,
                         double l_av) {
    UserProfile p;
    p.name = std::move(name);
    p.utility = std::move(utility);
    p.noise.assign(l_min.size(), EmpiricalDistribution::degenerate(0.0));
    p.l_min = std::move(l_min);
    p.l_max = l_max;
    p.w_max = 0.0;
    p.l_av = l_av;
    return p;
}

double expected_utility(const UserProfile& user, double planned, std::size_t slot) {
    const auto& f = user.utility.slot(slot);
    double acc = 0.0;
    for (const Atom& w : user.noise.at(slot).atoms()) acc += w.weight * f(planned + w.value);
    return acc;
}

double expected_net_benefit(const UserProfile& user, double planned, double price, std::size_t slot) {
    const auto& f = user.utility.slot(slot);
    double acc = 0.0;
    for (const Atom& w : user.noise.at(slot).atoms()) {
        const double load = planned + w.value;
        acc += w.weight * (f(load) - price * load);
    }
    return acc;
}

std::vector<double> planning_grid(const UserProfile& user, std::size_t slot, const PlanningOptions& options) {
    const double lo = user.l_min.at(slot);
    const double hi = user.l_d_max();
    if (lo > hi) throw ConfigError("empty planning interval for user '" + user.name + "'");
    if (!(options.resolution > 0.0)) throw ConfigError("planning resolution must be positive");
    std::vector<double> grid;
    const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / options.resolution));
    grid.reserve(steps + 2);
    for (std::size_t i = 0; i <= steps; ++i) grid.push_back(lo + static_cast<double>(i) * options.resolution);
    grid.push_back(hi);
    for (const Breakpoint& b : user.utility.slot(slot).breakpoints()) {
        for (const Atom& w : user.noise.at(slot).atoms()) {
            const double x = b.load - w.value;
            if (x >= lo && x <= hi) grid.push_back(x);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

double plan_consumption(const UserProfile& user, double price, std::size_t slot, const PlanningOptions& options) {
    const auto grid = planning_grid(user, slot, options);
    double best_load = grid.front();
    double best_value = expected_net_benefit(user, best_load, price, slot);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = expected_net_benefit(user, grid[i], price, slot);
        if (v > best_value + kTieTolerance * std::max(1.0, std::fabs(best_value))) {
            best_value = v;
            best_load = grid[i];
        }
    }
    return best_load;
}

double realize_consumption(double planned, double noise_sample, double l_max) {
    const double load = planned + noise_sample;
    if (load > l_max + kLoadTolerance) {
        std::ostringstream msg;
        msg << "realized load " << load << " exceeds l_max " << l_max;
        throw ModelViolation(msg.str());
    }
    if (load < -kLoadTolerance) {
        std::ostringstream msg;
        msg << "realized load " << load << " is negative";
        throw ModelViolation(msg.str());
    }
    return load;
}

double heterogeneity_gamma(std::span<const UserProfile> users, std::span<const double> price_grid,
                           const PlanningOptions& options) {
    if (users.size() <= 1) return 1.0;
    const std::size_t T = users.front().slots();
    double gamma = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (double p : price_grid) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = 0.0;
            for (const auto& u : users) {
                const double l = plan_consumption(u, p, t, options);
                lo = std::min(lo, l);
                hi = std::max(hi, l);
            }
            if (hi == 0.0) continue;
            if (lo == 0.0) return std::numeric_limits<double>::infinity();
            gamma = std::max(gamma, hi / lo);
        }
    }
    return gamma;
}

double aggregate_planned_load(std::span<const UserProfile> users, double price, std::size_t slot,
                              const PlanningOptions& options) {
    double total = 0.0;
    for (const auto& u : users) total += plan_consumption(u, price, slot, options);
    return total;
}

}  // namespace wma

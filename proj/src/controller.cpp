#include "wma/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wma/errors.hpp"
#include "wma/procurement.hpp"

namespace wma {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kMaxPriceCombinations = 4000000;

bool strictly_better(double candidate, double incumbent) {
    return candidate > incumbent + kTieTolerance * std::max(1.0, std::fabs(incumbent));
}

double expected_cost(const ValueTables& tables, std::size_t t, double load, const MarketBelief& belief) {
    double c = 0.0;
    for (std::size_t i = 0; i < belief.states.size(); ++i)
        c += belief.weights[i] * tables.cost_for_load(belief.states[i], t, load);
    return c;
}

double expected_common_cost(const ValueTables& tables, std::size_t t, std::size_t g, const MarketBelief& belief) {
    double c = 0.0;
    for (std::size_t i = 0; i < belief.states.size(); ++i)
        c += belief.weights[i] * tables.common_price_cost(belief.states[i], t, g);
    return c;
}

}  // namespace

double DeficitQueues::total() const { return std::accumulate(q.begin(), q.end(), 0.0); }

DeficitQueues update_queue(const DeficitQueues& queues, std::span<const double> realized_loads,
                           std::span<const double> l_av) {
    if (realized_loads.size() != queues.q.size() || l_av.size() != queues.q.size())
        throw DomainError("queue update needs one load and one target per user");
    DeficitQueues next{std::vector<double>(queues.q.size()), queues.tau + 1};
    for (std::size_t n = 0; n < queues.q.size(); ++n) {
        if (realized_loads[n] < 0.0) throw DomainError("realized load must be non-negative");
        next.q[n] = std::max(0.0, queues.q[n] - realized_loads[n]) + l_av[n];
    }
    return next;
}

double lyapunov_value(std::span<const double> q) {
    double v = 0.0;
    for (double x : q) v += x * x;
    return 0.5 * v;
}

DriftConstants drift_constants(std::span<const UserProfile> users, std::size_t T) {
    double s = 0.0;
    for (const auto& u : users) s += u.l_max * u.l_max + u.l_av * u.l_av;
    DriftConstants c;
    c.C = 0.5 * s;
    c.C0 = 0.5 * static_cast<double>(T - 1) * s;
    c.C1 = 0.5 * static_cast<double>(T) * s;
    return c;
}

double queue_bound(double delta_max, std::size_t users, double gamma, double eta, std::size_t T, double sum_l_av) {
    return delta_max * static_cast<double>(users) * gamma * gamma * eta + static_cast<double>(T) * sum_l_av;
}

double phi_a_slot(const ValueTables& tables, std::size_t slot, std::span<const std::size_t> price_index,
                  std::span<const double> q_at_frame_start, const MarketBelief& belief, double eta) {
    const std::size_t N = tables.users();
    if (price_index.size() != N || q_at_frame_start.size() != N)
        throw DomainError("phi_a_slot needs one price index and one queue per user");
    double utility = 0.0;
    double load = 0.0;
    double pressure = 0.0;
    bool common = true;
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t g = price_index[n];
        utility += tables.expected_utility(n, slot, g);
        const double l = tables.planned(n, slot, g);
        load += l;
        pressure += q_at_frame_start[n] * l;
        common = common && g == price_index[0];
    }
    const double cost = common ? expected_common_cost(tables, slot, price_index[0], belief)
                               : expected_cost(tables, slot, load, belief);
    return eta * (utility - cost) + pressure;
}

double PriceDecision::total_objective() const { return std::accumulate(objective.begin(), objective.end(), 0.0); }

PriceDecision choose_prices(const ValueTables& tables, const WmaConfig& config,
                            std::span<const double> q_at_frame_start, const MarketBelief& belief) {
    const std::size_t N = tables.users();
    const std::size_t T = tables.slots();
    const std::size_t G = tables.grid_size();
    if (G == 0) throw ConfigError("price grid is empty");
    PriceDecision d;
    d.index.assign(T, std::vector<std::size_t>(N, 0));
    d.objective.assign(T, 0.0);

    if (config.pricing == PricingMode::SamePrice) {
        std::vector<std::size_t> idx(N);
        for (std::size_t t = 0; t < T; ++t) {
            std::size_t best_g = 0;
            double best = 0.0;
            for (std::size_t g = 0; g < G; ++g) {
                std::fill(idx.begin(), idx.end(), g);
                const double v = phi_a_slot(tables, t, idx, q_at_frame_start, belief, config.eta);
                if (g == 0 || strictly_better(v, best)) {
                    best = v;
                    best_g = g;
                }
            }
            std::fill(d.index[t].begin(), d.index[t].end(), best_g);
            d.objective[t] = best;
        }
        return d;
    }

    double combos = 1.0;
    for (std::size_t n = 0; n < N; ++n) combos *= static_cast<double>(G);
    if (combos > static_cast<double>(kMaxPriceCombinations))
        throw ConfigError("per-user pricing search exceeds the enumeration budget (grid^N too large)");
    std::vector<std::size_t> idx(N);
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(idx.begin(), idx.end(), 0);
        std::vector<std::size_t> best_idx = idx;
        double best = phi_a_slot(tables, t, idx, q_at_frame_start, belief, config.eta);
        while (true) {
            // Odometer with user 0 most significant gives lexicographic order.
            std::size_t pos = N;
            while (pos > 0) {
                --pos;
                if (++idx[pos] < G) break;
                idx[pos] = 0;
                if (pos == 0) {
                    pos = N;
                    break;
                }
            }
            if (pos == N) break;
            const double v = phi_a_slot(tables, t, idx, q_at_frame_start, belief, config.eta);
            if (strictly_better(v, best)) {
                best = v;
                best_idx = idx;
            }
        }
        d.index[t] = best_idx;
        d.objective[t] = best;
    }
    return d;
}

DriftCheck drift_bound_check(const DayRecord& record, std::span<const UserProfile> users) {
    DriftCheck c;
    if (record.slots.empty()) return c;
    const std::size_t T = record.slots.size();
    const DriftConstants k = drift_constants(users, T);
    double rhs = k.C * static_cast<double>(T);
    for (const auto& s : record.slots)
        for (std::size_t n = 0; n < users.size(); ++n)
            rhs -= s.queue_before[n] * (s.realized[n] - users[n].l_av);
    c.drift = lyapunov_value(record.slots.back().queue_after) - lyapunov_value(record.slots.front().queue_before);
    c.bound = rhs;
    c.slack = rhs - c.drift;
    c.holds = c.slack >= -1e-9 * std::max(1.0, std::fabs(rhs) + std::fabs(c.drift));
    return c;
}

WmaSimulation::WmaSimulation(const ValueTables& tables, WmaConfig config, std::uint64_t seed)
    : tables_(&tables), config_(config), rng_(seed) {
    if (!(config_.eta > 0.0)) throw ConfigError("eta must be positive");
    if (!(config_.gamma >= 1.0)) throw ConfigError("gamma must be at least 1");
    if (config_.realtime_noise < 0.0 || config_.realtime_noise > 1.0)
        throw ConfigError("realtime_noise must lie in [0, 1]");
    const auto& model = tables.model();
    queues_.q.assign(model.users.size(), 0.0);
    bound_ = queue_bound(model.market.delta_max(), model.users.size(), config_.gamma, config_.eta, model.T,
                         model.sum_l_av());
}

MarketBelief WmaSimulation::pricing_belief(std::size_t observed) const {
    if (config_.observe_market_before_pricing) return MarketBelief::observed(observed);
    const auto& market = tables_->model().market;
    if (market.mode() == MarketMode::Iid) return MarketBelief::from_weights(market.probabilities());
    if (!cursor_.previous) return MarketBelief::from_weights(market.initial());
    return MarketBelief::from_weights(market.transition()[*cursor_.previous]);
}

DayRecord WmaSimulation::run_day() {
    const auto& model = tables_->model();
    const std::size_t N = model.users.size();
    const std::size_t T = model.T;

    // The belief for an unobserved market depends on the previous state, so take it before drawing.
    MarketBelief belief = config_.observe_market_before_pricing ? MarketBelief{} : pricing_belief(0);
    const MarketDraw draw = sample_day(model.market, cursor_, rng_);
    if (config_.observe_market_before_pricing) belief = pricing_belief(draw.index);

    const PriceDecision decision = choose_prices(*tables_, config_, queues_.q, belief);

    DayRecord rec;
    rec.day = day_;
    rec.market_state = draw.index;
    rec.pricing_objective = decision.total_objective();
    rec.slots.reserve(T);

    std::vector<double> l_av(N);
    for (std::size_t n = 0; n < N; ++n) l_av[n] = model.users[n].l_av;

    for (std::size_t t = 0; t < T; ++t) {
        SlotRecord s;
        s.slot = t;
        const SlotPrices prices = draw.state->at(t);
        s.beta = prices.beta;
        s.alpha_bar = prices.alpha_bar;
        s.price.resize(N);
        s.planned.resize(N);
        s.realized.resize(N);
        s.utility.resize(N);
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t g = decision.index[t][n];
            s.price[n] = tables_->price(g);
            s.planned[n] = tables_->planned(n, t, g);
            s.planned_total += s.planned[n];
        }
        s.base_power = optimal_base_power({s.planned_total, prices}, tables_->effective_renewable(t));

        s.renewable = rng_.sample(model.renewable[t]);
        double load = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double w = rng_.sample(model.users[n].noise[t]);
            s.realized[n] = realize_consumption(s.planned[n], w, model.users[n].l_max);
            s.utility[n] = model.users[n].utility(s.realized[n], t);
            load += s.realized[n];
        }
        const double u = rng_.uniform();
        s.alpha = std::clamp(prices.alpha_bar * (1.0 + config_.realtime_noise * (2.0 * u - 1.0)), 0.0,
                             model.market.alpha_max());

        s.deficit = realtime_deficit(load, s.base_power, s.renewable);
        s.cost = s.beta * s.base_power + s.alpha * s.deficit;
        s.welfare = std::accumulate(s.utility.begin(), s.utility.end(), 0.0) - s.cost;

        s.queue_before = queues_.q;
        queues_ = update_queue(queues_, s.realized, l_av);
        s.queue_after = queues_.q;

        rec.welfare += s.welfare;
        rec.slots.push_back(std::move(s));
    }
    ++day_;
    return rec;
}

double RunStats::average_welfare() const {
    if (day_welfare.empty()) throw DomainError("no simulated days");
    return std::accumulate(day_welfare.begin(), day_welfare.end(), 0.0) / static_cast<double>(day_welfare.size());
}

double RunStats::average_total_queue(std::size_t T) const {
    if (days == 0) throw DomainError("no simulated days");
    return total_queue_sum / static_cast<double>(days * T);
}

double RunStats::welfare_standard_error(std::size_t batches) const {
    const std::size_t K = day_welfare.size();
    if (batches < 2 || K < 2 * batches) {
        if (K < 2) return 0.0;
        const double mean = average_welfare();
        double ss = 0.0;
        for (double w : day_welfare) ss += (w - mean) * (w - mean);
        return std::sqrt(ss / static_cast<double>(K - 1) / static_cast<double>(K));
    }
    const std::size_t size = K / batches;
    const std::size_t offset = K - size * batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < size; ++i) means[b] += day_welfare[offset + b * size + i];
        means[b] /= static_cast<double>(size);
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    double ss = 0.0;
    for (double m : means) ss += (m - grand) * (m - grand);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

double average_welfare(std::span<const DayRecord> records) {
    if (records.empty()) throw DomainError("average_welfare of an empty record list");
    double s = 0.0;
    for (const auto& r : records) s += r.welfare;
    return s / static_cast<double>(records.size());
}

std::vector<double> cumulative_average_welfare(std::span<const DayRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    double s = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        s += records[i].welfare;
        out.push_back(s / static_cast<double>(i + 1));
    }
    return out;
}

RunStats run_simulation(const ValueTables& tables, const WmaConfig& config, std::size_t days, std::uint64_t seed,
                        const DayObserver& observer) {
    const auto& model = tables.model();
    WmaSimulation sim(tables, config, seed);
    RunStats stats;
    stats.queue_bound = sim.bound();
    stats.realized_load_sum.assign(model.users.size(), 0.0);
    stats.day_welfare.reserve(days);
    bool first_check = true;
    const double tolerance = 1e-9 * std::max(1.0, sim.bound());
    for (std::size_t k = 0; k < days; ++k) {
        const DayRecord rec = sim.run_day();
        // Emit first so a dump of the offending day exists when a check throws below.
        if (observer) observer(rec);
        for (const auto& s : rec.slots) {
            double total = 0.0;
            for (std::size_t n = 0; n < s.queue_after.size(); ++n) {
                total += s.queue_after[n];
                stats.realized_load_sum[n] += s.realized[n];
            }
            stats.total_queue_sum += total;
            stats.max_total_queue = std::max(stats.max_total_queue, total);
            if (total > sim.bound() + tolerance) {
                ++stats.queue_bound_violations;
                if (config.abort_on_violation) {
                    std::ostringstream msg;
                    msg << "queue bound violated on day " << rec.day << " slot " << s.slot << ": total " << total
                        << " > bound " << sim.bound();
                    throw InvariantViolation(msg.str());
                }
            }
        }
        const DriftCheck drift = drift_bound_check(rec, model.users);
        if (first_check || drift.slack < stats.min_drift_slack) stats.min_drift_slack = drift.slack;
        first_check = false;
        if (!drift.holds) {
            ++stats.drift_violations;
            if (config.abort_on_violation) {
                std::ostringstream msg;
                msg << "drift inequality violated on day " << rec.day << ": slack " << drift.slack;
                throw InvariantViolation(msg.str());
            }
        }
        stats.day_welfare.push_back(rec.welfare);
        ++stats.days;
    }
    stats.final_queue = sim.queues().q;
    return stats;
}

}  // namespace wma

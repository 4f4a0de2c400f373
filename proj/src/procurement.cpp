#include "wma/procurement.hpp"

#include <algorithm>
#include <cmath>

#include "wma/errors.hpp"

namespace wma {
namespace {

void check_prices(const SlotPrices& p) {
    if (!(p.beta >= 0.0) || !(p.alpha_bar >= 0.0)) throw DomainError("market prices must be non-negative");
}

}  // namespace

double optimal_base_power(const ProcurementInputs& in, const EmpiricalDistribution& z) {
    check_prices(in.prices);
    if (in.l_d < 0.0) throw DomainError("planned load must be non-negative");
    const auto [beta, alpha_bar] = in.prices;
    if (beta == 0.0) {
        if (alpha_bar == 0.0) throw DomainError("degenerate pricing: beta = alpha_bar = 0");
        return std::max(0.0, in.l_d - z.min());
    }
    if (alpha_bar < beta) return 0.0;
    return std::max(0.0, in.l_d - z.quantile(beta / alpha_bar));
}

double expected_cost(const ProcurementInputs& in, const EmpiricalDistribution& z, double b) {
    if (!(b >= 0.0)) throw DomainError("base power must be non-negative");
    check_prices(in.prices);
    return in.prices.alpha_bar * z.expected_shortfall(in.l_d - b) + in.prices.beta * b;
}

OptimalCost expected_cost_optimal(const ProcurementInputs& in, const EmpiricalDistribution& z) {
    const double b = optimal_base_power(in, z);
    const auto [beta, alpha_bar] = in.prices;
    if (b == 0.0 || beta == 0.0) return {b, expected_cost(in, z, b)};
    const double q = z.quantile(beta / alpha_bar);
    const double cost = beta * in.l_d - alpha_bar * z.partial_expectation(q) + q * (alpha_bar * z.cdf(q) - beta);
    return {b, cost};
}

double expected_cost_optimal_continuous_form(const ProcurementInputs& in, const EmpiricalDistribution& z) {
    const double b = optimal_base_power(in, z);
    const auto [beta, alpha_bar] = in.prices;
    if (b == 0.0 || beta == 0.0) return expected_cost(in, z, b);
    const double q = z.quantile(beta / alpha_bar);
    return beta * in.l_d - alpha_bar * z.partial_expectation(q);
}

double value_of_renewable(const SlotPrices& prices, const EmpiricalDistribution& z) {
    check_prices(prices);
    if (!(prices.beta > 0.0) || prices.alpha_bar < prices.beta)
        throw DomainError("value_of_renewable requires alpha_bar >= beta > 0");
    const double q = z.quantile(prices.beta / prices.alpha_bar);
    return prices.alpha_bar * z.partial_expectation(q) - q * (prices.alpha_bar * z.cdf(q) - prices.beta);
}

RenewableValue value_of_renewable_any(double l_d, const SlotPrices& prices, const EmpiricalDistribution& z) {
    check_prices(prices);
    if (prices.beta > 0.0 && prices.alpha_bar >= prices.beta) return {value_of_renewable(prices, z), false};
    const double v = prices.alpha_bar * (l_d - z.expected_shortfall(l_d));
    return {std::max(0.0, v), true};
}

double vor_location_scale(const SlotPrices& prices, const LocationScaleDistribution& z) {
    check_prices(prices);
    if (!(prices.beta > 0.0) || prices.alpha_bar < prices.beta)
        throw DomainError("vor_location_scale requires alpha_bar >= beta > 0");
    if (!(z.sigma >= 0.0)) throw DomainError("sigma must be non-negative");
    const double ratio = prices.beta / prices.alpha_bar;
    if (z.sigma == 0.0) return prices.beta * z.mu;
    const auto& h = z.base;
    const double theta = h.quantile(ratio);
    const double truncated = h.partial_expectation(theta) - theta * (h.cdf(theta) - ratio);
    return prices.beta * z.mu + z.sigma * prices.alpha_bar * truncated;
}

double realtime_deficit(double load, double base, double renewable_sample) {
    return std::max(0.0, load - base - renewable_sample);
}

}  // namespace wma

#pragma once

#include "wma/distribution.hpp"

namespace wma {

/// Day-ahead price and expected real-time price for one slot.
struct SlotPrices {
    double beta = 0.0;
    double alpha_bar = 0.0;
};

/// Two-stage newsvendor procurement for one slot.
///
/// The utility buys base power b day-ahead at beta and covers the deficit
/// (l_d - b - Z)^+ in real time at alpha_bar, where Z is the effective
/// renewable (renewable output minus aggregate consumption noise).
///
/// For atom-valued Z the generalized-inverse quantile q = F^{-1}(beta/alpha_bar)
/// still yields an exact minimizer. The closed-form cost then carries the extra
/// term q (alpha_bar F(q) - beta), which is zero whenever F(q) = beta/alpha_bar
/// exactly (always the case for continuous laws).
struct ProcurementInputs {
    double l_d = 0.0;  // aggregate planned load
    SlotPrices prices;
};

/// B* = 0 if alpha_bar < beta, else [l_d - F_Z^{-1}(beta/alpha_bar)]^+.
/// beta = 0 < alpha_bar gives [l_d - min Z]^+; beta = alpha_bar = 0 throws.
double optimal_base_power(const ProcurementInputs& in, const EmpiricalDistribution& z);

/// alpha_bar E[(l_d - b - Z)^+] + beta b, exact over the atoms.
double expected_cost(const ProcurementInputs& in, const EmpiricalDistribution& z, double b);

struct OptimalCost {
    double b_star = 0.0;
    double cost = 0.0;
};

/// B* together with its closed-form expected cost.
OptimalCost expected_cost_optimal(const ProcurementInputs& in, const EmpiricalDistribution& z);

/// beta l_d - alpha_bar * PE_Z(q): the continuous-law closed form, without the
/// atom correction. Differs from expected_cost_optimal by at most
/// |q| alpha_bar P(Z = q).
double expected_cost_optimal_continuous_form(const ProcurementInputs& in, const EmpiricalDistribution& z);

/// Value of renewable on the B* > 0 branch (requires alpha_bar >= beta > 0):
/// alpha_bar PE_Z(q) - q (alpha_bar F_Z(q) - beta), which equals
/// beta l_d - optimal cost whenever B* > 0.
double value_of_renewable(const SlotPrices& prices, const EmpiricalDistribution& z);

struct RenewableValue {
    double value = 0.0;
    bool extended = false;  // true when computed by the alpha_bar < beta extension
};

/// value_of_renewable when alpha_bar >= beta > 0; otherwise the cost reduction
/// alpha_bar (l_d - E[(l_d - Z)^+]) clipped at zero, flagged as extended.
RenewableValue value_of_renewable_any(double l_d, const SlotPrices& prices, const EmpiricalDistribution& z);

/// Location-scale form beta mu + sigma alpha_bar [PE_H(t) - t (F_H(t) - beta/alpha_bar)],
/// t = F_H^{-1}(beta/alpha_bar). Equals value_of_renewable on shift_scale(H, mu, sigma).
double vor_location_scale(const SlotPrices& prices, const LocationScaleDistribution& z);

/// Y = [load - base - renewable]^+.
double realtime_deficit(double load, double base, double renewable_sample);

}  // namespace wma

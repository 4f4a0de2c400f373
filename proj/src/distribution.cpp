#include "wma/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wma/errors.hpp"

namespace wma {
namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kQuantileSlack = 1e-12;

// Value rounded to 12 significant digits; the coalescing key.
double coalesce_key(double v) {
    if (v == 0.0) return 0.0;
    const double exponent = std::floor(std::log10(std::fabs(v)));
    const double scale = std::pow(10.0, 11.0 - exponent);
    return std::round(v * scale) / scale;
}

// Sorts, merges equal keys (weighted mean of the merged values) and rescales
// the weights to sum to one.
std::vector<Atom> normalize(std::vector<Atom> atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    double group_key = 0.0;
    double group_moment = 0.0;
    for (const Atom& a : atoms) {
        const double key = coalesce_key(a.value);
        if (!merged.empty() && key == group_key) {
            merged.back().weight += a.weight;
            group_moment += a.value * a.weight;
            merged.back().value = group_moment / merged.back().weight;
        } else {
            merged.push_back(a);
            group_key = key;
            group_moment = a.value * a.weight;
        }
    }
    double total = 0.0;
    for (const Atom& a : merged) total += a.weight;
    for (Atom& a : merged) a.weight /= total;
    return merged;
}

EmpiricalDistribution cap_atoms(EmpiricalDistribution dist, std::size_t cap) {
    if (cap == 0) throw ConfigError("convolution atom cap must be positive");
    if (dist.size() <= cap) return dist;
    return rebin_equal_probability(dist, cap);
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution() : EmpiricalDistribution(std::vector<Atom>{{0.0, 1.0}}) {}

EmpiricalDistribution::EmpiricalDistribution(std::vector<Atom> sorted_atoms)
    : atoms_(std::move(sorted_atoms)) {
    build_prefix();
}

void EmpiricalDistribution::build_prefix() {
    cum_weight_.resize(atoms_.size());
    cum_moment_.resize(atoms_.size());
    double w = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        w += atoms_[i].weight;
        m += atoms_[i].value * atoms_[i].weight;
        cum_weight_[i] = w;
        cum_moment_[i] = m;
    }
}

EmpiricalDistribution EmpiricalDistribution::from_atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) throw DomainError("distribution needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms) {
        if (!std::isfinite(a.value)) throw DomainError("atom value must be finite");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw DomainError("atom weight must be strictly positive, got " + std::to_string(a.weight));
        total += a.weight;
    }
    if (std::fabs(total - 1.0) > kSumTolerance)
        throw DomainError("atom weights sum to " + std::to_string(total) + ", expected 1");
    return EmpiricalDistribution(normalize(std::move(atoms)));
}

EmpiricalDistribution EmpiricalDistribution::degenerate(double value) {
    return from_atoms({{value, 1.0}});
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("no samples");
    std::vector<Atom> atoms;
    atoms.reserve(samples.size());
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double s : samples) {
        if (!std::isfinite(s)) throw DomainError("sample must be finite");
        atoms.push_back({s, w});
    }
    return EmpiricalDistribution(normalize(std::move(atoms)));
}

double EmpiricalDistribution::mean() const { return cum_moment_.back(); }

double EmpiricalDistribution::variance() const {
    const double mu = mean();
    double v = 0.0;
    for (const Atom& a : atoms_) v += a.weight * (a.value - mu) * (a.value - mu);
    return v;
}

double EmpiricalDistribution::cdf(double z) const {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), z,
                               [](double x, const Atom& a) { return x < a.value; });
    if (it == atoms_.begin()) return 0.0;
    return std::min(1.0, cum_weight_[static_cast<std::size_t>(it - atoms_.begin()) - 1]);
}

double EmpiricalDistribution::quantile(double a) const {
    if (!(a > 0.0) || a > 1.0) throw DomainError("quantile level must lie in (0,1], got " + std::to_string(a));
    auto it = std::lower_bound(cum_weight_.begin(), cum_weight_.end(), a - kQuantileSlack);
    if (it == cum_weight_.end()) return atoms_.back().value;
    return atoms_[static_cast<std::size_t>(it - cum_weight_.begin())].value;
}

double EmpiricalDistribution::partial_expectation(double theta) const {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), theta,
                               [](double x, const Atom& a) { return x < a.value; });
    if (it == atoms_.begin()) return 0.0;
    return cum_moment_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double EmpiricalDistribution::expected_shortfall(double y) const {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), y,
                               [](double x, const Atom& a) { return x < a.value; });
    if (it == atoms_.begin()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(it - atoms_.begin()) - 1;
    return std::max(0.0, y * cum_weight_[i] - cum_moment_[i]);
}

bool EmpiricalDistribution::operator==(const EmpiricalDistribution& other) const {
    if (atoms_.size() != other.atoms_.size()) return false;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (atoms_[i].value != other.atoms_[i].value || atoms_[i].weight != other.atoms_[i].weight)
            return false;
    }
    return true;
}

Moments moments(const EmpiricalDistribution& dist) { return {dist.mean(), dist.variance()}; }

double quantile(const EmpiricalDistribution& dist, double a) { return dist.quantile(a); }

double partial_expectation(const EmpiricalDistribution& dist, double theta) {
    return dist.partial_expectation(theta);
}

LocationScaleDistribution LocationScaleDistribution::make(EmpiricalDistribution base, double mu, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("sigma must be non-negative");
    if (std::fabs(base.mean()) > 1e-9) throw DomainError("location-scale base must have zero mean");
    if (std::fabs(base.variance() - 1.0) > 1e-9) throw DomainError("location-scale base must have unit variance");
    return {std::move(base), mu, sigma};
}

EmpiricalDistribution shift_scale(const LocationScaleDistribution& dist) {
    if (!(dist.sigma >= 0.0)) throw DomainError("sigma must be non-negative");
    if (dist.sigma == 0.0) return EmpiricalDistribution::degenerate(dist.mu);
    std::vector<Atom> atoms;
    atoms.reserve(dist.base.size());
    for (const Atom& a : dist.base.atoms()) atoms.push_back({dist.mu + dist.sigma * a.value, a.weight});
    return EmpiricalDistribution::from_atoms(std::move(atoms));
}

LocationScaleDistribution standardize(const EmpiricalDistribution& dist) {
    const Moments m = moments(dist);
    if (!(m.variance > 0.0)) throw DomainError("cannot standardize a degenerate distribution");
    const double sd = std::sqrt(m.variance);
    std::vector<Atom> atoms;
    atoms.reserve(dist.size());
    for (const Atom& a : dist.atoms()) atoms.push_back({(a.value - m.mean) / sd, a.weight});
    auto base = EmpiricalDistribution::from_atoms(std::move(atoms));
    // One more pass removes the rounding left by the first.
    const Moments b = moments(base);
    std::vector<Atom> exact;
    exact.reserve(base.size());
    const double bsd = std::sqrt(b.variance);
    for (const Atom& a : base.atoms()) exact.push_back({(a.value - b.mean) / bsd, a.weight});
    return LocationScaleDistribution::make(EmpiricalDistribution::from_atoms(std::move(exact)), m.mean, sd);
}

EmpiricalDistribution convolve_sum(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                                   const ConvolutionOptions& options) {
    std::vector<Atom> out;
    out.reserve(a.size() * b.size());
    for (const Atom& x : a.atoms())
        for (const Atom& y : b.atoms()) out.push_back({x.value + y.value, x.weight * y.weight});
    return cap_atoms(EmpiricalDistribution::from_atoms(normalize(std::move(out))), options.max_atoms);
}

EmpiricalDistribution convolve_difference(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                                          const ConvolutionOptions& options) {
    std::vector<Atom> out;
    out.reserve(a.size() * b.size());
    for (const Atom& x : a.atoms())
        for (const Atom& y : b.atoms()) out.push_back({x.value - y.value, x.weight * y.weight});
    return cap_atoms(EmpiricalDistribution::from_atoms(normalize(std::move(out))), options.max_atoms);
}

EmpiricalDistribution sum_independent(std::span<const EmpiricalDistribution> terms,
                                      const ConvolutionOptions& options) {
    EmpiricalDistribution acc = EmpiricalDistribution::degenerate(0.0);
    for (const auto& t : terms) acc = convolve_sum(acc, t, options);
    return acc;
}

EmpiricalDistribution effective_renewable(const EmpiricalDistribution& renewable,
                                          const EmpiricalDistribution& noise,
                                          const ConvolutionOptions& options) {
    return convolve_difference(renewable, noise, options);
}

EmpiricalDistribution rebin_equal_probability(const EmpiricalDistribution& dist, std::size_t bins) {
    if (bins == 0) throw DomainError("bin count must be positive");
    if (dist.size() <= bins) return dist;
    const double target = 1.0 / static_cast<double>(bins);
    std::vector<Atom> out;
    out.reserve(bins);
    double mass = 0.0;
    double moment = 0.0;
    for (const Atom& a : dist.atoms()) {
        double remaining = a.weight;
        while (remaining > 0.0) {
            const bool last_bin = out.size() + 1 == bins;
            const double room = last_bin ? remaining : target - mass;
            const double take = std::min(room, remaining);
            mass += take;
            moment += take * a.value;
            remaining -= take;
            if (!last_bin && mass >= target * (1.0 - 1e-12)) {
                out.push_back({moment / mass, mass});
                mass = 0.0;
                moment = 0.0;
            }
            if (take <= 0.0) break;
        }
    }
    if (mass > 0.0) out.push_back({moment / mass, mass});
    return EmpiricalDistribution::from_atoms(normalize(std::move(out)));
}

}  // namespace wma

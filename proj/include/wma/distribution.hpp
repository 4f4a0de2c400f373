#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wma {

struct Atom {
    double value = 0.0;
    double weight = 0.0;
};

/// Finite weighted distribution standing in for a continuous law.
///
/// Atoms are kept sorted by value with equal values (to 12 significant
/// digits) coalesced; weights are strictly positive and sum to one.
/// Prefix sums of weight and first moment make cdf, quantile and partial
/// expectation O(log n).
class EmpiricalDistribution {
public:
    /// Degenerate at zero.
    EmpiricalDistribution();

    /// Validates (finite values, positive weights summing to 1 within 1e-9),
    /// sorts, coalesces and renormalizes.
    static EmpiricalDistribution from_atoms(std::vector<Atom> atoms);
    static EmpiricalDistribution degenerate(double value);
    /// Equal weight per sample; repeated samples coalesce.
    static EmpiricalDistribution from_samples(std::span<const double> samples);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double min() const { return atoms_.front().value; }
    double max() const { return atoms_.back().value; }

    double mean() const;
    double variance() const;

    /// P(Z <= z).
    double cdf(double z) const;
    /// Generalized inverse: smallest atom v with P(Z <= v) >= a, a in (0,1].
    double quantile(double a) const;
    /// E[Z 1{Z <= theta}].
    double partial_expectation(double theta) const;
    /// E[(y - Z)^+].
    double expected_shortfall(double y) const;

    bool operator==(const EmpiricalDistribution& other) const;

private:
    explicit EmpiricalDistribution(std::vector<Atom> sorted_atoms);
    void build_prefix();

    std::vector<Atom> atoms_;
    std::vector<double> cum_weight_;
    std::vector<double> cum_moment_;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments moments(const EmpiricalDistribution& dist);
double quantile(const EmpiricalDistribution& dist, double a);
double partial_expectation(const EmpiricalDistribution& dist, double theta);

/// Z = mu + sigma * H with H zero-mean, unit-variance.
struct LocationScaleDistribution {
    EmpiricalDistribution base;
    double mu = 0.0;
    double sigma = 1.0;

    /// Throws DomainError unless base has mean 0 and variance 1 (within 1e-9)
    /// and sigma >= 0.
    static LocationScaleDistribution make(EmpiricalDistribution base, double mu, double sigma);
};

EmpiricalDistribution shift_scale(const LocationScaleDistribution& dist);

/// Decomposes a non-degenerate distribution into (mean, stddev, standardized base).
LocationScaleDistribution standardize(const EmpiricalDistribution& dist);

struct ConvolutionOptions {
    std::size_t max_atoms = 100000;
};

/// Law of A + B for independent A, B.
EmpiricalDistribution convolve_sum(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                                   const ConvolutionOptions& options = {});
/// Law of A - B for independent A, B.
EmpiricalDistribution convolve_difference(const EmpiricalDistribution& a,
                                          const EmpiricalDistribution& b,
                                          const ConvolutionOptions& options = {});

/// Sum of independent terms; degenerate at 0 when empty.
EmpiricalDistribution sum_independent(std::span<const EmpiricalDistribution> terms,
                                      const ConvolutionOptions& options = {});

/// Z = X - w for renewable X and aggregate consumption noise w.
EmpiricalDistribution effective_renewable(const EmpiricalDistribution& renewable,
                                          const EmpiricalDistribution& noise,
                                          const ConvolutionOptions& options = {});

/// Weight-preserving reduction to at most `bins` equal-probability bins; each
/// bin is represented by its conditional mean, so the overall mean is kept.
EmpiricalDistribution rebin_equal_probability(const EmpiricalDistribution& dist, std::size_t bins);

}  // namespace wma

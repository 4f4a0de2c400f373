#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "wma/distribution.hpp"

namespace wma {

/// Seedable pseudo-random stream. Draw order is fixed by the callers, and the
/// uniform mapping uses the top 53 bits directly so sequences do not depend on
/// the standard library's distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Index drawn from a probability vector (assumed to sum to 1).
    std::size_t categorical(std::span<const double> probabilities) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            acc += probabilities[i];
            if (u < acc) return i;
        }
        // Rounding left u above the accumulated total; take the last positive entry.
        for (std::size_t i = probabilities.size(); i-- > 0;)
            if (probabilities[i] > 0.0) return i;
        return 0;
    }

    double sample(const EmpiricalDistribution& dist) {
        const double u = uniform();
        double acc = 0.0;
        const auto atoms = dist.atoms();
        for (const Atom& a : atoms) {
            acc += a.weight;
            if (u < acc) return a.value;
        }
        return atoms.back().value;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace wma

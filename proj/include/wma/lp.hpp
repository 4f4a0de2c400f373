#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wma::lp {

enum class RowSense { LessEqual, Equal, GreaterEqual };

/// maximize c'x  s.t.  A x (<=, =, >=) b,  x >= 0.  Dense storage.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<RowSense> senses;
    std::vector<double> rhs;

    std::size_t variables() const { return objective.size(); }
    std::size_t constraints() const { return rows.size(); }
    std::size_t add_row(std::vector<double> coefficients, RowSense sense, double b);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(Status s);

/// Residuals recomputed from the original data, independent of the tableau.
struct Certificate {
    double primal_infeasibility = 0.0;  // worst row or bound violation of x
    double dual_infeasibility = 0.0;    // worst violation of A'y >= c and the sign rules on y
    double duality_gap = 0.0;           // |c'x - b'y|
    /// For Infeasible: b'y of the ray (negative) and its worst violation of
    /// A'y >= 0 with y >= 0 on <= rows and y <= 0 on >= rows.
    double farkas_value = 0.0;
    double farkas_violation = 0.0;
};

struct Solution {
    Status status = Status::IterationLimit;
    double value = 0.0;
    std::vector<double> x;
    /// Dual of the original rows: y >= 0 for <=, y <= 0 for >=, free for =.
    std::vector<double> duals;
    /// Phase-one dual ray proving infeasibility (empty otherwise).
    std::vector<double> farkas;
    Certificate certificate;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
    std::size_t max_iterations = 200000;
    /// Degenerate pivots in a row before switching to Bland's rule.
    std::size_t bland_after = 50;
};

/// Two-phase dense tableau simplex with Dantzig pricing and a Bland fallback
/// against cycling. Duals are read off the reduced costs of the identity
/// columns; the certificate is then recomputed from the original rows.
Solution solve(const LinearProgram& program, const SimplexOptions& options = {});

Certificate certify(const LinearProgram& program, const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wma::lp

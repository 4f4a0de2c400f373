#include "wma/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wma/errors.hpp"

namespace wma::lp {

std::size_t LinearProgram::add_row(std::vector<double> coefficients, RowSense sense, double b) {
    if (coefficients.size() != objective.size()) throw DomainError("row length must equal the variable count");
    rows.push_back(std::move(coefficients));
    senses.push_back(sense);
    rhs.push_back(b);
    return rows.size() - 1;
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

namespace {

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), data_(rows * (cols + 1), 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data_[i * (n_ + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * (n_ + 1) + j]; }
    double& rhs(std::size_t i) { return at(i, n_); }
    double rhs(std::size_t i) const { return at(i, n_); }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

    void pivot(std::size_t r, std::size_t e, std::vector<double>& reduced) {
        double* pr = &data_[r * (n_ + 1)];
        const double inv = 1.0 / pr[e];
        for (std::size_t j = 0; j <= n_; ++j) pr[j] *= inv;
        pr[e] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* pi = &data_[i * (n_ + 1)];
            const double f = pi[e];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) pi[j] -= f * pr[j];
            pi[e] = 0.0;
            if (pi[n_] < 0.0 && pi[n_] > -1e-12) pi[n_] = 0.0;
        }
        const double fd = reduced[e];
        if (fd != 0.0) {
            for (std::size_t j = 0; j < n_; ++j) reduced[j] -= fd * pr[j];
            reduced[e] = 0.0;
        }
    }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> data_;
};

enum class RunResult { Optimal, Unbounded, IterationLimit };

struct Simplex {
    Tableau tab;
    std::vector<std::size_t> basis;
    std::vector<char> enterable;
    SimplexOptions options;
    std::size_t iterations = 0;

    std::vector<double> reduced_costs(const std::vector<double>& cost) const {
        std::vector<double> d(cost);
        for (std::size_t i = 0; i < tab.rows(); ++i) {
            const double cb = cost[basis[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < tab.cols(); ++j) d[j] -= cb * tab.at(i, j);
        }
        return d;
    }

    RunResult run(const std::vector<double>& cost, std::vector<double>& d) {
        d = reduced_costs(cost);
        bool bland = false;
        std::size_t degenerate = 0;
        while (true) {
            if (iterations >= options.max_iterations) return RunResult::IterationLimit;
            std::size_t enter = tab.cols();
            double best = options.pivot_tolerance;
            for (std::size_t j = 0; j < tab.cols(); ++j) {
                if (!enterable[j] || d[j] <= options.pivot_tolerance) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (d[j] > best) {
                    best = d[j];
                    enter = j;
                }
            }
            if (enter == tab.cols()) return RunResult::Optimal;

            std::size_t leave = tab.rows();
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < tab.rows(); ++i) {
                const double a = tab.at(i, enter);
                if (a <= options.pivot_tolerance) continue;
                const double r = tab.rhs(i) / a;
                if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && leave < tab.rows() && basis[i] < basis[leave])) {
                    if (r < ratio) ratio = r;
                    leave = i;
                }
            }
            if (leave == tab.rows()) return RunResult::Unbounded;

            degenerate = ratio <= options.feasibility_tolerance ? degenerate + 1 : 0;
            if (degenerate > options.bland_after) bland = true;

            tab.pivot(leave, enter, d);
            basis[leave] = enter;
            ++iterations;
        }
    }
};

}  // namespace

Certificate certify(const LinearProgram& program, const std::vector<double>& x, const std::vector<double>& y) {
    Certificate c;
    const std::size_t m = program.constraints();
    const std::size_t n = program.variables();
    double primal_value = 0.0;
    double dual_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        c.primal_infeasibility = std::max(c.primal_infeasibility, -x[j]);
        primal_value += program.objective[j] * x[j];
    }
    std::vector<double> aty(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            ax += program.rows[i][j] * x[j];
            aty[j] += program.rows[i][j] * y[i];
        }
        const double b = program.rhs[i];
        switch (program.senses[i]) {
            case RowSense::LessEqual:
                c.primal_infeasibility = std::max(c.primal_infeasibility, ax - b);
                c.dual_infeasibility = std::max(c.dual_infeasibility, -y[i]);
                break;
            case RowSense::GreaterEqual:
                c.primal_infeasibility = std::max(c.primal_infeasibility, b - ax);
                c.dual_infeasibility = std::max(c.dual_infeasibility, y[i]);
                break;
            case RowSense::Equal:
                c.primal_infeasibility = std::max(c.primal_infeasibility, std::fabs(ax - b));
                break;
        }
        dual_value += b * y[i];
    }
    for (std::size_t j = 0; j < n; ++j)
        c.dual_infeasibility = std::max(c.dual_infeasibility, program.objective[j] - aty[j]);
    c.duality_gap = std::fabs(primal_value - dual_value);
    return c;
}

Solution solve(const LinearProgram& program, const SimplexOptions& options) {
    const std::size_t m = program.constraints();
    const std::size_t n = program.variables();
    for (const auto& row : program.rows)
        if (row.size() != n) throw DomainError("row length must equal the variable count");

    // Orient every row so that b >= 0.
    std::vector<double> flip(m, 1.0);
    std::vector<RowSense> sense(program.senses);
    for (std::size_t i = 0; i < m; ++i) {
        if (program.rhs[i] < 0.0) {
            flip[i] = -1.0;
            if (sense[i] == RowSense::LessEqual) sense[i] = RowSense::GreaterEqual;
            else if (sense[i] == RowSense::GreaterEqual) sense[i] = RowSense::LessEqual;
        }
    }
    std::size_t cols = n;
    std::vector<std::size_t> slack(m, SIZE_MAX);
    std::vector<std::size_t> artificial(m, SIZE_MAX);
    for (std::size_t i = 0; i < m; ++i)
        if (sense[i] != RowSense::Equal) slack[i] = cols++;
    for (std::size_t i = 0; i < m; ++i)
        if (sense[i] != RowSense::LessEqual) artificial[i] = cols++;

    Simplex sx{Tableau(m, cols), std::vector<std::size_t>(m), std::vector<char>(cols, 1), options};
    std::vector<char> is_artificial(cols, 0);
    std::vector<std::size_t> identity(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) sx.tab.at(i, j) = flip[i] * program.rows[i][j];
        sx.tab.rhs(i) = flip[i] * program.rhs[i];
        if (slack[i] != SIZE_MAX) sx.tab.at(i, slack[i]) = sense[i] == RowSense::LessEqual ? 1.0 : -1.0;
        if (artificial[i] != SIZE_MAX) {
            sx.tab.at(i, artificial[i]) = 1.0;
            is_artificial[artificial[i]] = 1;
        }
        identity[i] = sense[i] == RowSense::LessEqual ? slack[i] : artificial[i];
        sx.basis[i] = identity[i];
    }

    Solution sol;
    std::vector<double> d;

    // Phase one: maximize -sum(artificials).
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j)
        if (is_artificial[j]) phase1[j] = -1.0;
    if (sx.run(phase1, d) == RunResult::IterationLimit) {
        sol.status = Status::IterationLimit;
        sol.iterations = sx.iterations;
        return sol;
    }
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (is_artificial[sx.basis[i]]) infeasibility += sx.tab.rhs(i);
    double scale = 1.0;
    for (double b : program.rhs) scale = std::max(scale, std::fabs(b));
    if (infeasibility > options.feasibility_tolerance * scale) {
        sol.status = Status::Infeasible;
        sol.iterations = sx.iterations;
        // y_i = c_j - d_j on the identity column of row i, mapped back to the original orientation.
        sol.farkas.resize(m);
        for (std::size_t i = 0; i < m; ++i) sol.farkas[i] = flip[i] * (phase1[identity[i]] - d[identity[i]]);
        double yb = 0.0;
        double violation = 0.0;
        std::vector<double> aty(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            yb += sol.farkas[i] * program.rhs[i];
            for (std::size_t j = 0; j < n; ++j) aty[j] += program.rows[i][j] * sol.farkas[i];
            if (program.senses[i] == RowSense::LessEqual) violation = std::max(violation, -sol.farkas[i]);
            if (program.senses[i] == RowSense::GreaterEqual) violation = std::max(violation, sol.farkas[i]);
        }
        for (double v : aty) violation = std::max(violation, -v);
        sol.certificate.farkas_value = yb;
        sol.certificate.farkas_violation = violation;
        return sol;
    }

    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
        if (!is_artificial[sx.basis[i]]) continue;
        for (std::size_t j = 0; j < cols; ++j) {
            if (is_artificial[j] || std::fabs(sx.tab.at(i, j)) <= options.pivot_tolerance) continue;
            sx.tab.pivot(i, j, d);
            sx.basis[i] = j;
            break;
        }
    }
    for (std::size_t j = 0; j < cols; ++j)
        if (is_artificial[j]) sx.enterable[j] = 0;

    std::vector<double> phase2(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) phase2[j] = program.objective[j];
    const RunResult r = sx.run(phase2, d);
    sol.iterations = sx.iterations;
    if (r == RunResult::IterationLimit) {
        sol.status = Status::IterationLimit;
        return sol;
    }
    if (r == RunResult::Unbounded) {
        sol.status = Status::Unbounded;
        return sol;
    }

    sol.status = Status::Optimal;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (sx.basis[i] < n) sol.x[sx.basis[i]] = std::max(0.0, sx.tab.rhs(i));
    sol.duals.resize(m);
    for (std::size_t i = 0; i < m; ++i) sol.duals[i] = flip[i] * (phase2[identity[i]] - d[identity[i]]);
    sol.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.value += program.objective[j] * sol.x[j];
    sol.certificate = certify(program, sol.x, sol.duals);
    return sol;
}

}  // namespace wma::lp

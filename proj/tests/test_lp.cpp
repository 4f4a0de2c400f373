#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "support.hpp"
#include "wma/lp.hpp"

using namespace wma;
using namespace wma::lp;

namespace {

// Solves the square system M x = r by Gaussian elimination with partial pivoting.
std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> M, std::vector<double> r) {
    const std::size_t n = r.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t i = c + 1; i < n; ++i)
            if (std::fabs(M[i][c]) > std::fabs(M[p][c])) p = i;
        if (std::fabs(M[p][c]) < 1e-12) return std::nullopt;
        std::swap(M[p], M[c]);
        std::swap(r[p], r[c]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c) continue;
            const double f = M[i][c] / M[c][c];
            for (std::size_t k = c; k < n; ++k) M[i][k] -= f * M[c][k];
            r[i] -= f * r[c];
        }
    }
    for (std::size_t i = 0; i < n; ++i) r[i] /= M[i][i];
    return r;
}

// Brute-force optimum over all vertices of {x >= 0, rows}; equality rows are
// always active. Empty optional when no vertex is feasible.
std::optional<double> vertex_optimum(const LinearProgram& lp) {
    const std::size_t n = lp.variables();
    std::vector<std::vector<double>> cons;
    std::vector<double> rhs;
    std::vector<bool> must;
    for (std::size_t i = 0; i < lp.constraints(); ++i) {
        cons.push_back(lp.rows[i]);
        rhs.push_back(lp.rhs[i]);
        must.push_back(lp.senses[i] == RowSense::Equal);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        cons.push_back(e);
        rhs.push_back(0.0);
        must.push_back(false);
    }
    const std::size_t total = cons.size();
    std::optional<double> best;
    std::vector<std::size_t> pick(n);
    // enumerate n-subsets of constraints
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == n) {
            for (std::size_t i = 0; i < total; ++i)
                if (must[i] && std::find(pick.begin(), pick.end(), i) == pick.end()) return;
            std::vector<std::vector<double>> M;
            std::vector<double> r;
            for (std::size_t k : pick) M.push_back(cons[k]), r.push_back(rhs[k]);
            const auto x = solve_square(M, r);
            if (!x) return;
            for (double v : *x)
                if (v < -1e-9) return;
            for (std::size_t i = 0; i < lp.constraints(); ++i) {
                double a = 0.0;
                for (std::size_t j = 0; j < n; ++j) a += lp.rows[i][j] * (*x)[j];
                if (lp.senses[i] == RowSense::LessEqual && a > lp.rhs[i] + 1e-9) return;
                if (lp.senses[i] == RowSense::GreaterEqual && a < lp.rhs[i] - 1e-9) return;
                if (lp.senses[i] == RowSense::Equal && std::fabs(a - lp.rhs[i]) > 1e-9) return;
            }
            double v = 0.0;
            for (std::size_t j = 0; j < n; ++j) v += lp.objective[j] * (*x)[j];
            if (!best || v > *best) best = v;
            return;
        }
        for (std::size_t i = start; i < total; ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

LinearProgram random_lp(RandomStream& rng, std::size_t n, std::size_t m) {
    LinearProgram lp;
    for (std::size_t j = 0; j < n; ++j) lp.objective.push_back(testing::draw(rng, -2, 3));
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> row(n);
        for (double& a : row) a = std::round(testing::draw(rng, -3, 4));
        const double u = rng.uniform();
        const RowSense s = u < 0.6 ? RowSense::LessEqual : (u < 0.85 ? RowSense::GreaterEqual : RowSense::Equal);
        lp.add_row(row, s, std::round(testing::draw(rng, -2, 8)));
    }
    // a box keeps the program bounded
    std::vector<double> ones(n, 1.0);
    lp.add_row(ones, RowSense::LessEqual, 10.0);
    return lp;
}

}  // namespace

TEST_CASE("textbook maximum") {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
    LinearProgram lp;
    lp.objective = {3, 5};
    lp.add_row({1, 0}, RowSense::LessEqual, 4);
    lp.add_row({0, 2}, RowSense::LessEqual, 12);
    lp.add_row({3, 2}, RowSense::LessEqual, 18);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.value == doctest::Approx(36));
    CHECK(s.x[0] == doctest::Approx(2));
    CHECK(s.x[1] == doctest::Approx(6));
    // known duals (0, 1.5, 1)
    CHECK(s.duals[0] == doctest::Approx(0).scale(1));
    CHECK(s.duals[1] == doctest::Approx(1.5));
    CHECK(s.duals[2] == doctest::Approx(1));
    CHECK(s.certificate.duality_gap <= 1e-9);
}

TEST_CASE("equality and >= rows") {
    // max x + y, x + y = 3, x >= 1, y >= 0.5 with x <= 2
    LinearProgram lp;
    lp.objective = {1, 2};
    lp.add_row({1, 1}, RowSense::Equal, 3);
    lp.add_row({1, 0}, RowSense::GreaterEqual, 1);
    lp.add_row({1, 0}, RowSense::LessEqual, 2);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(1));
    CHECK(s.x[1] == doctest::Approx(2));
    CHECK(s.value == doctest::Approx(5));
    CHECK(s.duals[1] <= 1e-12);  // >= row dual is non-positive
    CHECK(s.certificate.dual_infeasibility <= 1e-9);
}

TEST_CASE("infeasible program yields a Farkas ray") {
    LinearProgram lp;
    lp.objective = {1, 1};
    lp.add_row({1, 1}, RowSense::LessEqual, 1);
    lp.add_row({1, 1}, RowSense::GreaterEqual, 2);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::Infeasible);
    REQUIRE(s.farkas.size() == 2);
    CHECK(s.certificate.farkas_value < -1e-9);
    CHECK(s.certificate.farkas_violation <= 1e-9);
}

TEST_CASE("unbounded program") {
    LinearProgram lp;
    lp.objective = {1, 0};
    lp.add_row({-1, 1}, RowSense::LessEqual, 1);
    CHECK(solve(lp).status == Status::Unbounded);
}

TEST_CASE("degenerate program that cycles under plain Dantzig pricing") {
    // Beale's example
    LinearProgram lp;
    lp.objective = {0.75, -150, 0.02, -6};
    lp.add_row({0.25, -60, -0.04, 9}, RowSense::LessEqual, 0);
    lp.add_row({0.5, -90, -0.02, 3}, RowSense::LessEqual, 0);
    lp.add_row({0, 0, 1, 0}, RowSense::LessEqual, 1);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.value == doctest::Approx(0.05));
}

TEST_CASE("negative right-hand sides") {
    // max -x, -x <= -2 (x >= 2)
    LinearProgram lp;
    lp.objective = {-1};
    lp.add_row({-1}, RowSense::LessEqual, -2);
    const auto s = solve(lp);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(2));
    CHECK(s.value == doctest::Approx(-2));
}

TEST_CASE("property: simplex matches vertex enumeration with certificates") {
    RandomStream rng(41);
    int feasible = 0, infeasible = 0;
    for (int i = 0; i < 300; ++i) {
        const auto lp = random_lp(rng, 2 + i % 3, 1 + i % 4);
        const auto s = solve(lp);
        const auto ref = vertex_optimum(lp);
        if (!ref) {
            CHECK(s.status == Status::Infeasible);
            CHECK(s.certificate.farkas_value < 0.0);
            CHECK(s.certificate.farkas_violation <= 1e-9);
            ++infeasible;
            continue;
        }
        ++feasible;
        REQUIRE(s.status == Status::Optimal);
        CHECK(s.value == doctest::Approx(*ref).epsilon(1e-9).scale(1));
        CHECK(s.certificate.primal_infeasibility <= 1e-9);
        CHECK(s.certificate.dual_infeasibility <= 1e-9);
        CHECK(s.certificate.duality_gap <= 1e-9 * (1 + std::fabs(s.value)));
        const auto again = certify(lp, s.x, s.duals);
        CHECK(again.duality_gap == doctest::Approx(s.certificate.duality_gap).scale(1));
    }
    CHECK(feasible > 50);
    CHECK(infeasible > 5);
}

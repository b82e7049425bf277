#include <gtest/gtest.h>

#include "lp_oracle.hpp"
#include "support.hpp"

using namespace slicekpi;

namespace {

LpProblem make(Vector c, std::vector<Vector> rows, Vector b, double lo, double hi) {
    LpProblem p;
    p.c = c;
    p.A = Matrix(rows.size(), c.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) p.A(i, j) = rows[i][j];
    p.b = b;
    p.lo.assign(c.size(), lo);
    p.hi.assign(c.size(), hi);
    return p;
}

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(Simplex, IdentityRows) {
    auto s = solve(make({1, 1}, {{1, 0}, {0, 1}}, {2, 3}, -1e3, 1e3));
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.w[0], 2.0, 1e-12);
    EXPECT_NEAR(s.w[1], 3.0, 1e-12);
    EXPECT_NEAR(s.objective, 5.0, 1e-12);
}

TEST(Simplex, TwoRowsInBox) {
    auto p = make({1, 2}, {{1, 1}, {2, 1}}, {4, 6}, 0, 10);
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.w[0], 4.0, 1e-12);
    EXPECT_NEAR(s.w[1], 0.0, 1e-12);
    EXPECT_NEAR(s.objective, 4.0, 1e-12);
    EXPECT_TRUE(bound_active(s, p));  // w2 = 0 sits on the box
}

TEST(Simplex, FreeVariablesUnboundedAlongRay) {
    auto p = make({1, 2}, {{1, 1}, {2, 1}}, {4, 6}, -inf, inf);
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Unbounded);
    EXPECT_TRUE(oracle::ray_certifies(p, s.ray));
    // the ray is a positive multiple of (1, -1)
    EXPECT_GT(s.ray[0], 0.0);
    EXPECT_NEAR(s.ray[0] + s.ray[1], 0.0, 1e-12);
    EXPECT_TRUE(std::isnan(s.objective));
}

TEST(Simplex, WideBoxReturnsBoxLimitedOptimum) {
    auto p = make({1, 2}, {{1, 1}, {2, 1}}, {4, 6}, -1e9, 1e9);
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_TRUE(bound_active(s, p));
    auto o = oracle::enumerate_vertices(p);
    EXPECT_NEAR(s.objective, o.objective, 1e-8 * std::abs(o.objective));
}

TEST(Simplex, Infeasible) {
    auto s = solve(make({1}, {{1}, {-1}}, {1, 1}, -1e3, 1e3));
    EXPECT_EQ(s.status, LpStatus::Infeasible);
    EXPECT_TRUE(s.w.empty());
    // box excludes the row
    s = solve(make({1}, {{1}}, {5}, 0, 2));
    EXPECT_EQ(s.status, LpStatus::Infeasible);
}

TEST(Simplex, ValidationErrors) {
    auto p = make({1, 1}, {{1, 0}}, {1}, 0, 1);
    p.hi[1] = -1;
    EXPECT_THROW(solve(p), DataError);
    p = make({1, 1}, {{1, 0}}, {1}, 0, 1);
    p.A = Matrix(2, 2);
    EXPECT_THROW(solve(p), DataError);
    p = make({1, 1}, {{1, 0}}, {std::nan("")}, 0, 1);
    EXPECT_THROW(solve(p), DataError);
    p = make({inf, 1}, {{1, 0}}, {1}, 0, 1);
    EXPECT_THROW(solve(p), DataError);
}

TEST(Simplex, NoRowsPicksBestBoxCorner) {
    auto p = make({1, -2, 0}, {}, {}, -1, 3);
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_EQ(s.w[0], -1.0);
    EXPECT_EQ(s.w[1], 3.0);
    EXPECT_NEAR(s.objective, -7.0, 1e-12);
}

TEST(Simplex, MatchesVertexEnumeration) {
    std::mt19937_64 g(20240601);
    int optimal = 0, infeasible = 0;
    for (int k = 0; k < 200; ++k) {
        auto p = oracle::random_lp(g);
        auto s = solve(p);
        auto o = oracle::enumerate_vertices(p);
        if (!o.feasible) {
            EXPECT_EQ(s.status, LpStatus::Infeasible) << "lp " << k;
            ++infeasible;
            continue;
        }
        ASSERT_EQ(s.status, LpStatus::Optimal) << "lp " << k;
        ++optimal;
        EXPECT_NEAR(s.objective, o.objective, 1e-8) << "lp " << k;
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(s.w.data(), s.w.size());
        EXPECT_TRUE(oracle::feasible_point(p, w, 1e-9)) << "lp " << k;
    }
    EXPECT_GT(optimal, 50);
    EXPECT_GT(infeasible, 5);
}

TEST(Simplex, MatchesVertexEnumerationWide) {
    std::mt19937_64 g(31337);
    for (int k = 0; k < 200; ++k) {
        auto p = oracle::random_lp(g, 6, 4);
        auto s = solve(p);
        auto o = oracle::enumerate_vertices(p);
        if (!o.feasible) {
            EXPECT_EQ(s.status, LpStatus::Infeasible) << "lp " << k;
            continue;
        }
        ASSERT_EQ(s.status, LpStatus::Optimal) << "lp " << k;
        EXPECT_NEAR(s.objective, o.objective, 1e-8) << "lp " << k;
    }
}

TEST(Simplex, FreeVariableRaysCertify) {
    std::mt19937_64 g(99);
    int unbounded = 0;
    for (int k = 0; k < 200; ++k) {
        auto p = oracle::random_lp(g);
        for (std::size_t j = 0; j < p.vars(); j += 2) {
            p.lo[j] = -inf;
            p.hi[j] = inf;
        }
        auto s = solve(p);
        if (s.status == LpStatus::Unbounded) {
            ++unbounded;
            EXPECT_TRUE(oracle::ray_certifies(p, s.ray)) << "lp " << k;
        } else if (s.status == LpStatus::Optimal) {
            // no improving ray may exist: a vertex-enumeration optimum of a
            // box-bounded version matches once the box is large enough
            auto q = p;
            for (std::size_t j = 0; j < q.vars(); ++j) {
                q.lo[j] = std::max(q.lo[j], -1e4);
                q.hi[j] = std::min(q.hi[j], 1e4);
            }
            auto o = oracle::enumerate_vertices(q);
            ASSERT_TRUE(o.feasible);
            EXPECT_NEAR(s.objective, o.objective, 1e-7 * (1 + std::abs(o.objective))) << "lp " << k;
        }
    }
    EXPECT_GT(unbounded, 10);
}

TEST(Simplex, DegenerateCycleProneProblem) {
    // Beale's example (recast as >= rows); Bland's rule must terminate.
    auto p = make({-0.75, 150, -0.02, 6},
                  {{-0.25, 60, 0.04, -9}, {-0.5, 90, 0.02, -3}, {0, 0, -1, 0}},
                  {0, 0, -1}, 0, 1e3);
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    auto o = oracle::enumerate_vertices(p);
    EXPECT_NEAR(s.objective, o.objective, 1e-9);
    EXPECT_NEAR(s.objective, -0.05, 1e-9);
}

TEST(Simplex, DeterministicIterationCount) {
    std::mt19937_64 g(5);
    auto p = oracle::random_lp(g);
    auto a = solve(p), b = solve(p);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.w, b.w);
}

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subot/error.hpp"
#include "subot/ot.hpp"

using namespace subot;

namespace {

Vector random_simplex(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
    return v / v.sum();
}

Matrix random_cost(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    Matrix c(rows, cols);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
    return c;
}

CostMatrix as_cost(Matrix m) { return CostMatrix{std::move(m), CostKind::Center}; }

}  // namespace

// Sinkhorn ----------------------------------------------------------------

TEST(Sinkhorn, TwoByTwoClosedForm) {
    Matrix c(2, 2);
    c << 0, 1, 1, 0;
    const Vector w = Vector::Constant(2, 0.5);
    const auto p = sinkhorn(as_cost(c), w, w, 1.0);
    // Symmetry gives pi = [[a, b], [b, a]] with a / b = e and a + b = 1/2.
    EXPECT_NEAR(p.plan(0, 0), 0.36552928931500245, 1e-12);
    EXPECT_NEAR(p.plan(0, 1), 0.13447071068499755, 1e-12);
    EXPECT_NEAR(p.plan(1, 1), 0.36552928931500245, 1e-12);
    EXPECT_TRUE(p.converged);
}

TEST(Sinkhorn, MatchesPlainDomainScaling) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = 2 + static_cast<Eigen::Index>(trial % 9);
        const auto m = 2 + static_cast<Eigen::Index>((trial * 7) % 11);
        const Matrix c = random_cost(rng, n, m);
        const Vector a = random_simplex(rng, n), b = random_simplex(rng, m);
        const double lambda = 0.2 + 0.1 * (trial % 5);
        const auto p = sinkhorn(as_cost(c), a, b, lambda, 1e-12, 100000);
        const Eigen::MatrixXd ref = oracle::plain_sinkhorn(c, a, b, lambda, 20000);
        ASSERT_LT((p.plan - ref).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
        ASSERT_LT((p.plan.rowwise().sum() - a).cwiseAbs().maxCoeff(), 1e-12);
        ASSERT_LT((p.plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Sinkhorn, ConstantCostGivesIndependentCoupling) {
    std::mt19937_64 rng(2);
    const Vector a = random_simplex(rng, 5), b = random_simplex(rng, 7);
    const auto p = sinkhorn(as_cost(Matrix::Constant(5, 7, 3.0)), a, b, 0.5);
    EXPECT_LT((p.plan - a * b.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sinkhorn, LargeRegularizationApproachesIndependentCoupling) {
    std::mt19937_64 rng(3);
    const Vector a = random_simplex(rng, 6), b = random_simplex(rng, 4);
    const auto p = sinkhorn(as_cost(random_cost(rng, 6, 4)), a, b, 1e3);
    EXPECT_LT((p.plan - a * b.transpose()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Sinkhorn, PermutationEquivariant) {
    std::mt19937_64 rng(4);
    const Matrix c = random_cost(rng, 6, 5);
    const Vector a = random_simplex(rng, 6), b = random_simplex(rng, 5);
    const auto p = sinkhorn(as_cost(c), a, b, 0.3);
    std::vector<int> rp(6), cp(5);
    std::iota(rp.begin(), rp.end(), 0);
    std::iota(cp.begin(), cp.end(), 0);
    std::shuffle(rp.begin(), rp.end(), rng);
    std::shuffle(cp.begin(), cp.end(), rng);
    Matrix c2(6, 5);
    Vector a2(6), b2(5);
    for (int i = 0; i < 6; ++i) {
        a2[i] = a[rp[static_cast<std::size_t>(i)]];
        for (int j = 0; j < 5; ++j) c2(i, j) = c(rp[static_cast<std::size_t>(i)], cp[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < 5; ++j) b2[j] = b[cp[static_cast<std::size_t>(j)]];
    const auto p2 = sinkhorn(as_cost(c2), a2, b2, 0.3);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 5; ++j) {
            EXPECT_NEAR(p2.plan(i, j), p.plan(rp[static_cast<std::size_t>(i)], cp[static_cast<std::size_t>(j)]), 1e-12);
        }
    }
}

TEST(Sinkhorn, SmallRegularizationStaysFinite) {
    std::mt19937_64 rng(5);
    const Vector a = random_simplex(rng, 10), b = random_simplex(rng, 10);
    const auto p = sinkhorn(as_cost(random_cost(rng, 10, 10, 100.0)), a, b, 1e-2, 1e-9, 200000);
    EXPECT_TRUE(p.plan.allFinite());
    EXPECT_LT(p.marginal_residual, 1e-8);
}

TEST(Sinkhorn, ZeroMassEntriesGetEmptyRowsAndColumns) {
    Vector a(3), b(2);
    a << 0.5, 0.0, 0.5;
    b << 1.0, 0.0;
    const auto p = sinkhorn(as_cost(Matrix::Ones(3, 2)), a, b, 1.0);
    EXPECT_EQ(p.plan.row(1).sum(), 0.0);
    EXPECT_EQ(p.plan.col(1).sum(), 0.0);
    EXPECT_NEAR(p.plan(0, 0), 0.5, 1e-12);
}

TEST(Sinkhorn, RejectsBadInput) {
    const Vector w = Vector::Constant(2, 0.5);
    EXPECT_THROW(sinkhorn(as_cost(Matrix::Ones(2, 2)), w, Vector::Constant(2, 0.4), 1.0), Error);
    EXPECT_THROW(sinkhorn(as_cost(Matrix::Ones(2, 3)), w, w, 1.0), Error);
    EXPECT_THROW(sinkhorn(as_cost(Matrix::Ones(2, 2)), w, w, 0.0), Error);
    Matrix bad = Matrix::Ones(2, 2);
    bad(0, 0) = std::nan("");
    EXPECT_THROW(sinkhorn(as_cost(bad), w, w, 1.0), Error);
}

// Partial OT --------------------------------------------------------------

TEST(PartialOt, SingleColumnIsASoftmax) {
    Matrix c(2, 1);
    c << 0, 1;
    const auto r = partial_ot_source_weights(as_cost(c), Vector::Ones(1), 1.0);
    EXPECT_NEAR(r.source_weights[0], 0.7310585786300049, 1e-15);
    EXPECT_NEAR(r.source_weights[1], 0.2689414213699951, 1e-15);
}

TEST(PartialOt, EqualCostsSplitEvenly) {
    const auto r = partial_ot_source_weights(as_cost(Matrix::Constant(4, 3, 2.0)), Vector::Constant(3, 1.0 / 3.0), 0.7);
    EXPECT_LT((r.source_weights.array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(PartialOt, ColumnsAreProportionalToTheKernel) {
    std::mt19937_64 rng(6);
    const Matrix c = random_cost(rng, 5, 4, 3.0);
    const Vector w_t = random_simplex(rng, 4);
    const double lambda1 = 0.8;
    const auto r = partial_ot_source_weights(as_cost(c), w_t, lambda1);
    for (Eigen::Index j = 0; j < 4; ++j) {
        for (Eigen::Index i = 1; i < 5; ++i) {
            EXPECT_NEAR(r.plan.plan(i, j) / r.plan.plan(0, j), std::exp(-(c(i, j) - c(0, j)) / lambda1), 1e-12);
        }
    }
    EXPECT_NEAR(r.source_weights.sum(), 1.0, 1e-14);
    EXPECT_LT((r.plan.plan.colwise().sum().transpose() - w_t).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialOt, AgreesWithIterativeProjectionSolver) {
    std::mt19937_64 rng(7);
    for (double lambda1 : {0.1, 1.0, 10.0}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix c = random_cost(rng, 3 + trial, 4 + trial, 2.0);
            const Vector w_t = random_simplex(rng, 4 + trial);
            const auto r = partial_ot_source_weights(as_cost(c), w_t, lambda1);
            const Eigen::MatrixXd ref = oracle::column_constrained_entropic(c, w_t, lambda1, 500);
            EXPECT_LT((r.plan.plan - ref).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(PartialOt, HugeCostsDoNotUnderflow) {
    Matrix c(2, 2);
    c << 1e4, 2e4, 1e4 + 1, 2e4 + 3;
    Vector w(2);
    w << 0.5, 0.5;
    const auto r = partial_ot_source_weights(as_cost(c), w, 0.01);
    EXPECT_TRUE(r.source_weights.allFinite());
    EXPECT_NEAR(r.source_weights.sum(), 1.0, 1e-14);
}

// Group lasso and GCG -----------------------------------------------------

TEST(GroupLasso, ValueAndGradient) {
    Matrix p(2, 2);
    p << 0.1, 0.2, 0.3, 0.4;
    const std::vector<int> one_class{0, 0};
    EXPECT_NEAR(group_lasso_value(p, one_class), 0.7634413615167959, 1e-15);
    const std::vector<int> two_classes{0, 1};
    EXPECT_NEAR(group_lasso_value(p, two_classes), 1.0, 1e-15);

    // Finite-difference check of the gradient.
    const Matrix g = group_lasso_gradient(p, one_class);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            Matrix up = p, down = p;
            up(i, j) += 1e-6;
            down(i, j) -= 1e-6;
            const double fd = (group_lasso_value(up, one_class) - group_lasso_value(down, one_class)) / 2e-6;
            EXPECT_NEAR(g(i, j), fd, 1e-8);
        }
    }
    EXPECT_EQ(group_lasso_gradient(Matrix::Zero(2, 2), one_class).cwiseAbs().sum(), 0.0);
    EXPECT_THROW(group_lasso_value(p, std::vector<int>{0}), Error);
}

TEST(Gcg, ZeroEtaReturnsTheSinkhornPlan) {
    std::mt19937_64 rng(8);
    const Matrix c = random_cost(rng, 6, 5);
    const Vector a = random_simplex(rng, 6), b = random_simplex(rng, 5);
    OtParams params;
    params.eta = 0.0;
    params.lambda = 0.4;
    const std::vector<int> cls{0, 0, 1, 1, 2, 2};
    const auto g = gcg_solve(as_cost(c), a, b, cls, params);
    const auto s = sinkhorn(as_cost(c), a, b, 0.4);
    EXPECT_LT((g.plan - s.plan).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gcg, ObjectiveTraceNeverIncreases) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 4 + trial % 5, m = 3 + trial % 6;
        std::vector<int> cls(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
        OtParams params;
        params.eta = 0.1 * (1 + trial % 10);
        params.lambda = 0.1 + 0.1 * (trial % 4);
        const Matrix c = random_cost(rng, n, m);
        const Vector a = random_simplex(rng, n), b = random_simplex(rng, m);
        const auto g = gcg_solve(as_cost(c), a, b, cls, params);
        for (std::size_t k = 1; k < g.objective_trace.size(); ++k) {
            ASSERT_LE(g.objective_trace[k], g.objective_trace[k - 1] + 1e-10);
        }
        ASSERT_LT(g.marginal_residual, 1e-8);
        ASSERT_NEAR(g.objective_trace.back(), gcg_objective(g.plan, c, cls, params.lambda, params.eta), 1e-12);
    }
}

TEST(Gcg, StrongRegularizationConcentratesColumnsOnOneClassWhenSeparable) {
    // Two source classes around (0,0) and (4,0); targets near the same two
    // places, slightly shifted.
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal;
    Matrix xs(10, 2), xt(10, 2);
    std::vector<int> cls;
    for (int i = 0; i < 10; ++i) {
        const double cx = i < 5 ? 0.0 : 4.0;
        xs(i, 0) = cx + 0.5 * normal(rng);
        xs(i, 1) = 0.5 * normal(rng);
        xt(i, 0) = cx + 0.5 + 0.5 * normal(rng);
        xt(i, 1) = 0.5 * normal(rng);
        cls.push_back(i < 5 ? 0 : 1);
    }
    const Vector w = Vector::Constant(10, 0.1);
    OtParams params;
    params.eta = 100.0;
    params.max_outer = 200;
    const auto g = gcg_solve(as_cost(pairwise_sq_euclidean(xs, xt)), w, w, cls, params);
    for (Eigen::Index j = 0; j < 10; ++j) {
        const double c0 = g.plan.col(j).head(5).sum(), c1 = g.plan.col(j).tail(5).sum();
        EXPECT_GE(std::max(c0, c1) / (c0 + c1), 0.99) << "column " << j;
    }
}

TEST(Gcg, RejectsMismatchedClasses) {
    const Vector w = Vector::Constant(2, 0.5);
    EXPECT_THROW(gcg_solve(as_cost(Matrix::Ones(2, 2)), w, w, std::vector<int>{0}, OtParams{}), Error);
    OtParams bad;
    bad.lambda = -1.0;
    EXPECT_THROW(gcg_solve(as_cost(Matrix::Ones(2, 2)), w, w, std::vector<int>{0, 1}, bad), Error);
}

// Mapping -----------------------------------------------------------------

TEST(Barycentric, Examples) {
    Matrix p(2, 2);
    p << 0.25, 0.25, 0.0, 0.5;
    Matrix t(2, 2);
    t << 0, 0, 2, 4;
    const auto m = barycentric_map(Coupling::from_plan(p), t);
    EXPECT_DOUBLE_EQ(m.mapped(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.mapped(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m.mapped(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(m.mapped(1, 1), 4.0);
    EXPECT_TRUE(m.fallback_rows.empty());
}

TEST(Barycentric, StaysInsideTheBoundingBoxAndIsEquivariant) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix plan = random_cost(rng, 5, 7);
        const Matrix t = random_cost(rng, 7, 3, 10.0);
        const auto m = barycentric_map(Coupling::from_plan(plan), t);
        for (Eigen::Index f = 0; f < 3; ++f) {
            ASSERT_GE(m.mapped.col(f).minCoeff(), t.col(f).minCoeff() - 1e-12);
            ASSERT_LE(m.mapped.col(f).maxCoeff(), t.col(f).maxCoeff() + 1e-12);
        }
        // Permuting target columns together with the representation rows leaves the map unchanged.
        std::vector<int> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix plan2(5, 7), t2(7, 3);
        for (int j = 0; j < 7; ++j) {
            plan2.col(j) = plan.col(perm[static_cast<std::size_t>(j)]);
            t2.row(j) = t.row(perm[static_cast<std::size_t>(j)]);
        }
        const auto m2 = barycentric_map(Coupling::from_plan(plan2), t2);
        ASSERT_LT((m2.mapped - m.mapped).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Barycentric, ZeroMassRow) {
    Matrix p(2, 2);
    p << 0.5, 0.5, 0.0, 0.0;
    Matrix t(2, 1);
    t << 1, 3;
    try {
        barycentric_map(Coupling::from_plan(p), t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroMassRow);
    }
    Matrix c(2, 2);
    c << 0, 0, 5, 1;
    const auto m = barycentric_map(Coupling::from_plan(p), t, as_cost(c));
    EXPECT_DOUBLE_EQ(m.mapped(1, 0), 3.0);
    EXPECT_EQ(m.fallback_rows, (std::vector<std::size_t>{1}));
}

#include <gtest/gtest.h>

#include <cmath>

#include "hypergame/mpec.hpp"
#include "hypergame/nlp.hpp"

using namespace hypergame;

TEST(Dual, ProductQuotientSqrt) {
    using D = Dual<double, 2>;
    D x, y;
    x.v = 1.5;
    x.d[0] = 1.0;
    y.v = 0.5;
    y.d[1] = 1.0;
    D r = x * x * y + sqrt(x) / y;
    EXPECT_NEAR(r.v, 1.125 + std::sqrt(1.5) / 0.5, 1e-14);
    EXPECT_NEAR(r.d[0], 2 * 1.5 * 0.5 + 0.5 / std::sqrt(1.5) / 0.5, 1e-14);
    EXPECT_NEAR(r.d[1], 1.5 * 1.5 - std::sqrt(1.5) / 0.25, 1e-14);
}

TEST(LocalFunction, HessianMatchesHand) {
    auto f = local_function<2>({0, 1}, [](const auto& v) { return v[0] * v[0] * v[1] + v[1] * v[1] * v[1]; });
    Vector x(2);
    x << 2.0, 3.0;
    EXPECT_DOUBLE_EQ(f(x), 12.0 + 27.0);
    Vector g = f.gradient(x);
    EXPECT_NEAR(g[0], 12.0, 1e-12);
    EXPECT_NEAR(g[1], 4.0 + 27.0, 1e-12);
    Matrix h = f.hessian(x);
    EXPECT_NEAR(h(0, 0), 6.0, 1e-12);
    EXPECT_NEAR(h(0, 1), 4.0, 1e-12);
    EXPECT_NEAR(h(1, 0), 4.0, 1e-12);
    EXPECT_NEAR(h(1, 1), 18.0, 1e-12);
}

namespace {

// min (x-2)^2 + (y-1)^2  s.t.  x + y <= 2,  x = 2y
NlpProblem small_qp() {
    NlpProblem p(2);
    p.objective = local_function<2>({0, 1}, [](const auto& v) { return (v[0] - 2.0) * (v[0] - 2.0) + (v[1] - 1.0) * (v[1] - 1.0); });
    p.ineq_constraints.push_back(local_function<2>({0, 1}, [](const auto& v) { return v[0] + v[1] - 2.0; }));
    p.eq_constraints.push_back(local_function<2>({0, 1}, [](const auto& v) { return v[0] - 2.0 * v[1]; }));
    return p;
}

}  // namespace

TEST(SolveNlp, ActiveInequalityAndEquality) {
    // on x = 2y, x + y = 2 gives (4/3, 2/3); the unconstrained optimum along the line is (2, 1) which is infeasible
    NlpProblem p = small_qp();
    KktPoint pt = solve_nlp(p, Vector::Zero(2), 1e-10);
    EXPECT_NEAR(pt.x[0], 4.0 / 3.0, 1e-7);
    EXPECT_NEAR(pt.x[1], 2.0 / 3.0, 1e-7);
    EXPECT_GT(pt.lambda_ineq[0], 0.0);
    EXPECT_LT(kkt_residual(p, pt).max(), 1e-7);
}

TEST(SolveNlp, AugmentedLagrangianAgrees) {
    NlpProblem p = small_qp();
    NlpOptions o;
    o.method = NlpMethod::augmented_lagrangian;
    KktPoint a = solve_nlp(p, Vector::Zero(2), 1e-10, o);
    KktPoint b = solve_nlp(p, Vector::Zero(2), 1e-10);
    EXPECT_NEAR((a.x - b.x).norm(), 0.0, 1e-6);
    EXPECT_NEAR(a.lambda_ineq[0], b.lambda_ineq[0], 1e-5);
    EXPECT_NEAR(a.lambda_eq[0], b.lambda_eq[0], 1e-5);
}

TEST(SolveNlp, BoundsOnly) {
    NlpProblem p(2);
    p.objective = local_function<2>({0, 1}, [](const auto& v) { return (v[0] + 1.0) * (v[0] + 1.0) + (v[1] - 5.0) * (v[1] - 5.0); });
    p.lower.setZero();
    p.upper.setConstant(3.0);
    KktPoint pt = solve_nlp(p, Vector::Ones(2), 1e-10);
    EXPECT_NEAR(pt.x[0], 0.0, 1e-7);
    EXPECT_NEAR(pt.x[1], 3.0, 1e-7);
}

TEST(SolveNlp, InfeasibleReportsError) {
    NlpProblem p(1);
    p.objective = local_function<1>({0}, [](const auto& v) { return v[0] * v[0]; });
    p.ineq_constraints.push_back(local_function<1>({0}, [](const auto& v) { return 1.0 - v[0]; }));
    p.ineq_constraints.push_back(local_function<1>({0}, [](const auto& v) { return v[0] + 1.0; }));
    EXPECT_THROW(solve_nlp(p, Vector::Zero(1), 1e-9), Error);
}

TEST(SolveNlp, DimensionMismatch) {
    NlpProblem p = small_qp();
    try {
        solve_nlp(p, Vector::Zero(3), 1e-9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(KktResidual, DetectsWrongMultiplierSign) {
    NlpProblem p = small_qp();
    KktPoint pt = solve_nlp(p, Vector::Zero(2), 1e-10);
    pt.lambda_ineq[0] = -pt.lambda_ineq[0];
    EXPECT_GT(kkt_residual(p, pt).max(), 1e-3);
}

TEST(EstimateMultipliers, RecoversSolverDuals) {
    NlpProblem p = small_qp();
    KktPoint pt = solve_nlp(p, Vector::Zero(2), 1e-10);
    KktPoint e = estimate_multipliers(p, pt.x);
    EXPECT_NEAR(e.lambda_ineq[0], pt.lambda_ineq[0], 1e-6);
    EXPECT_NEAR(e.lambda_eq[0], pt.lambda_eq[0], 1e-6);
}

TEST(CheckGradient, AutodiffMatchesDifferences) {
    NlpProblem p = small_qp();
    Vector x(2);
    x << 0.3, -1.7;
    EXPECT_LT(check_gradient(p, x), 1e-6);
}

TEST(SolveMpec, TwoVariableComplementarity) {
    // min (x-1)^2 + (y-1)^2  s.t.  x >= 0, y >= 0, x*y = 0: optimum at (1,0) or (0,1), value 1
    NlpProblem p(2);
    p.objective = local_function<2>({0, 1}, [](const auto& v) { return (v[0] - 1.0) * (v[0] - 1.0) + (v[1] - 1.0) * (v[1] - 1.0); });
    p.nonneg_exprs.push_back(variable_expr(0, 1.0, 0.0));
    p.nonneg_exprs.push_back(variable_expr(1, 1.0, 0.0));
    p.comp_pairs.push_back({0, 1});
    Vector x0(2);
    x0 << 0.8, 0.3;
    KktPoint pt = solve_mpec(p, x0);
    EXPECT_NEAR(pt.objective, 1.0, 1e-6);
    EXPECT_LT(std::abs(pt.x[0] * pt.x[1]), 1e-7);
    EXPECT_GE(std::min(pt.x[0], pt.x[1]), -1e-8);
}

TEST(SolveMpec, BilevelQuadratic) {
    // leader x in [0,2], follower y = argmin (y - x)^2 s.t. y >= 1 written through its KKT conditions;
    // leader minimises (x - 0.5)^2 + (y - 0.5)^2 so y sticks at 1 and x = 0.5
    NlpProblem p(3);  // x, y, mu
    p.objective = local_function<2>({0, 1}, [](const auto& v) { return (v[0] - 0.5) * (v[0] - 0.5) + (v[1] - 0.5) * (v[1] - 0.5); });
    p.eq_constraints.push_back(local_function<3>({0, 1, 2}, [](const auto& v) { return 2.0 * (v[1] - v[0]) - v[2]; }));
    p.nonneg_exprs.push_back(variable_expr(1, 1.0, -1.0));
    p.nonneg_exprs.push_back(variable_expr(2, 1.0, 0.0));
    p.comp_pairs.push_back({0, 1});
    p.lower[0] = 0.0;
    p.upper[0] = 2.0;
    Vector x0(3);
    x0 << 1.5, 1.5, 0.0;
    KktPoint pt = solve_mpec(p, x0);
    EXPECT_NEAR(pt.x[0], 0.5, 1e-6);
    EXPECT_NEAR(pt.x[1], 1.0, 1e-6);
    EXPECT_NEAR(pt.x[2], 1.0, 1e-6);
}

TEST(SolveNlp, ScaledObjectiveSameArgmin) {
    NlpProblem p = small_qp();
    NlpProblem q = small_qp();
    q.objective = scaled(q.objective, 10.0);
    KktPoint a = solve_nlp(p, Vector::Zero(2), 1e-10), b = solve_nlp(q, Vector::Zero(2), 1e-10);
    EXPECT_LT((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_NEAR(b.lambda_ineq[0], 10.0 * a.lambda_ineq[0], 1e-5);
}

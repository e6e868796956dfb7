#include <gtest/gtest.h>

#include <cmath>

#include "hypergame/fan.hpp"
#include "hypergame/robustness.hpp"

using namespace hypergame;

namespace {

// theta1 (u1 + u2/2) + theta2 (u2 + u1^2) on the box [0, 10]^2: the argmin is the corner (0, 0)
ThetaLinearProblem corner() {
    ThetaLinearProblem cp;
    cp.features = {local_function<2>({0, 1}, [](const auto& v) { return v[0] + 0.5 * v[1]; }),
                   local_function<2>({0, 1}, [](const auto& v) { return v[1] + v[0] * v[0]; })};
    cp.theta = Vector::Ones(2);
    cp.base = NlpProblem(2);
    cp.base.lower.setZero();
    cp.base.upper.setConstant(10.0);
    return cp;
}

KktPoint solve(const ThetaLinearProblem& tp) {
    NlpOptions o;
    o.n_starts = 1;
    return solve_nlp(tp.instantiate(), Vector::Ones(tp.base.n_vars), 1e-10, o);
}

KktPoint fan_point() {
    FanParams fp;
    FanSolution b = fan_baseline(fp);
    Vector u(2);
    u << b.m, b.p;
    return estimate_multipliers(fan_theta_problem(fp.theta, fp.c()).instantiate(), u);
}

}  // namespace

TEST(Robustness, CornerActiveSets) {
    ThetaLinearProblem cp = corner();
    KktPoint pt = solve(cp);
    EXPECT_NEAR(pt.x.norm(), 0.0, 1e-7);
    ActiveSets a = active_sets(cp, pt);
    EXPECT_EQ(a.S.size(), 2u);
    EXPECT_EQ(a.Sprime.size(), 2u);  // both bounds bind with positive multipliers
}

TEST(Robustness, CornerRadiusValues) {
    ThetaLinearProblem cp = corner();
    KktPoint pt = solve(cp);
    auto r2 = robustness_radius(cp, pt, 2.0);
    auto ri = robustness_radius(cp, pt, kInf);
    ASSERT_TRUE(r2 && ri);
    // lambda = (1, 1.5), A+R = [[1, 0], [-0.5, 1]]
    EXPECT_NEAR(*ri, 2.0 / 3.0, 1e-6);
    EXPECT_NEAR(*r2, 0.7808, 1e-4);
}

TEST(Robustness, RadiusBallKeepsArgmin) {
    ThetaLinearProblem cp = corner();
    KktPoint pt = solve(cp);
    double r = *robustness_radius(cp, pt);
    for (int k = 0; k < 16; ++k) {
        double a = 2.0 * 3.14159265358979 * k / 16;
        Vector d(2);
        d << std::cos(a), std::sin(a);
        Vector th = cp.theta + 0.999 * r * d;
        EXPECT_TRUE(same_argmin(resolve_argmin(cp, th, pt.x, 3), pt.x)) << k;
    }
}

TEST(Robustness, FanSpanConditionFails) {
    KktPoint pt = fan_point();
    FanParams fp;
    RobustnessCertificate c = robustness_certificate(fan_theta_problem(fp.theta, fp.c()), pt);
    EXPECT_FALSE(c.span_condition);
    EXPECT_FALSE(c.radius.has_value());
}

TEST(Robustness, FanNonRobustDirectionMovesArgmin) {
    FanParams fp;
    ThetaLinearProblem tp = fan_theta_problem(fp.theta, fp.c());
    KktPoint pt = fan_point();
    auto d = find_nonrobust_direction(tp, pt);
    ASSERT_TRUE(d.has_value());
    for (double eps : {1e-2, 1e-3}) {
        Vector x = resolve_argmin(tp, fp.theta + eps * *d, pt.x);
        EXPECT_GT((x - pt.x).norm(), 1e-2 * eps);
    }
}

TEST(Robustness, ScalingShiftIsCertified) {
    FanParams fp;
    ThetaLinearProblem tp = fan_theta_problem(fp.theta, fp.c());
    Lemma1Result l = lemma1_certificate(tp, fan_point(), 0.5 * fp.theta);
    EXPECT_TRUE(l.holds);
    ASSERT_TRUE(l.resolve_gap.has_value());
    EXPECT_LE(*l.resolve_gap, 1e-6);
}

TEST(Robustness, SensitivityMatchesFiniteDifferences) {
    FanParams fp;
    ThetaLinearProblem tp = fan_theta_problem(fp.theta, fp.c());
    KktPoint pt = fan_point();
    Matrix S = sensitivity_dtheta(tp, pt);
    const double h = 1e-5;
    for (Index j = 0; j < 3; ++j) {
        Vec3 tp_ = fp.theta, tm = fp.theta;
        tp_[j] += h;
        tm[j] -= h;
        FanSolution a = fan_respond({tp_, fp.c()}), b = fan_respond({tm, fp.c()});
        EXPECT_NEAR(S(0, j), (a.m - b.m) / (2 * h), 1e-5) << j;
        EXPECT_NEAR(S(1, j), (a.p - b.p) / (2 * h), 1e-5) << j;
    }
}

TEST(Robustness, ConeProbe) {
    ThetaLinearProblem cp = corner();
    ConeProbeReport rep = theta_cone_probe(cp, solve(cp), 10);
    EXPECT_TRUE(rep.ok());
    EXPECT_GT(rep.blends_checked, 0);
}

TEST(Robustness, RejectsNonKktPoint) {
    ThetaLinearProblem cp = corner();
    KktPoint pt = solve(cp);
    pt.x << 3.0, 4.0;
    EXPECT_THROW(active_sets(cp, pt), Error);
}

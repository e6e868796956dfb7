#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hypergame/hvac.hpp"

using namespace hypergame;

namespace {

HvacParams params(int horizon) {
    HvacParams p;
    p.horizon = horizon;
    return p;
}

const HvacAttackResult& static5() {
    static const HvacAttackResult r = hvac_static_attack(params(5));
    return r;
}

const HvacAttackResult& dynamic5() {
    static const HvacAttackResult r = hvac_dynamic_attack(params(5));
    return r;
}

}  // namespace

TEST(HvacBaseline, FanAndDamperAtLowerBounds) {
    HvacTrajectory tr = hvac_baseline(params(5));
    for (double m : tr.controls.m) EXPECT_NEAR(m, 3.93, 1e-5);
    for (double d : tr.controls.d) EXPECT_NEAR(d, 0.2, 1e-5);
}

TEST(HvacBaseline, ReturnsToInitialTemperature) {
    HvacParams p = params(10);
    HvacTrajectory tr = hvac_baseline(p);
    EXPECT_NEAR(tr.Tn.back(), p.Tn_initial, 1e-6);
    EXPECT_NEAR(hvac_true_violation(p, tr), 0.0, 1e-9);
    for (double d : tr.dT) EXPECT_NEAR(d, 0.0, 1e-12);
}

TEST(HvacBaseline, KktResidualSmall) {
    HvacParams p = params(5);
    HvacBaselineResult b = hvac_baseline_solve(p);
    EXPECT_LT(kkt_residual(hvac_defender_problem(p), b.point).max(), 1e-6);
    EXPECT_EQ(b.trajectory.lambda.size(), 5u);
}

TEST(HvacPowerBook, StepsSumToTotal) {
    HvacParams p = params(5);
    HvacTrajectory tr = hvac_baseline(p);
    double s = 0.0;
    for (std::size_t t = 0; t < tr.controls.size(); ++t) {
        double m = tr.controls.m[t];
        EXPECT_NEAR(tr.power_true.fan[t], p.theta1 * m + p.theta2 * m * m, 1e-12);
        s += tr.power_true.step(t);
    }
    EXPECT_NEAR(s, tr.total_true(), 1e-10);
    EXPECT_NEAR(tr.total_true(), 14.7887, 1e-3);
}

TEST(HvacSimulate, ZeroPerturbationTrueEqualsPerceived) {
    HvacParams p = params(5);
    HvacTrajectory b = hvac_baseline(p);
    HvacTrajectory tr = simulate_true_trajectory(p, b.controls, {});
    EXPECT_DOUBLE_EQ(tr.total_true(), tr.total_perceived());
    for (std::size_t t = 0; t < tr.Tn.size(); ++t) EXPECT_DOUBLE_EQ(tr.Tn[t], tr.Tn_hat[t]);
}

TEST(HvacAttack, ZeroBudgetReturnsBaseline) {
    HvacParams p = params(5);
    double base = hvac_baseline(p).total_true();
    p.delta_max = 0.0;
    p.dT_max = 0.0;
    EXPECT_NEAR(hvac_static_attack(p).outcome.true_cost, base, 1e-9);
    HvacAttackResult d = hvac_dynamic_attack(p);
    EXPECT_NEAR(d.outcome.true_cost, base, 1e-9);
    EXPECT_EQ(d.outcome.perturbation.at("dT0").size(), 5);
    EXPECT_NEAR(d.outcome.perturbation.at("dT0").norm(), 0.0, 1e-15);
}

TEST(HvacAttack, StaticWithinBudgetAndRaisesPower) {
    HvacParams p = params(5);
    const HvacAttackResult& r = static5();
    double rb = r.trajectory.perturbation.dbeta / p.beta, rg = r.trajectory.perturbation.dgamma / p.gamma;
    EXPECT_LE(0.5 * (rb * rb + rg * rg), p.delta_max * (1 + 1e-8));
    EXPECT_GT(r.outcome.true_cost, hvac_baseline(p).total_true());
    for (const auto& d : r.outcome.solver_diagnostics) EXPECT_LT(d.report.max(), 1e-6) << d.level;
}

TEST(HvacAttack, PerceivedTrajectoryMeetsEndpoint) {
    HvacParams p = params(5);
    EXPECT_NEAR(static5().trajectory.Tn_hat.back(), p.Tn_initial, 1e-6);
    EXPECT_NEAR(dynamic5().trajectory.Tn_hat.back(), p.Tn_initial, 1e-6);
}

TEST(HvacAttack, DynamicWithinBudget) {
    HvacParams p = params(5);
    const Vector& d = dynamic5().outcome.perturbation.at("dT0");
    EXPECT_LE(0.5 * d.squaredNorm(), p.dynamic_budget() * (1 + 1e-8));
}

TEST(HvacAttack, DynamicBeatsStatic) {
    EXPECT_GE(dynamic5().outcome.true_cost, static5().outcome.true_cost);
}

TEST(HvacAttack, StaticMonotoneInBudget) {
    double prev = -1e300;
    for (double b : {0.0, 0.05, 0.1}) {
        HvacParams p = params(5);
        p.delta_max = b;
        double f = hvac_static_attack(p).outcome.true_cost;
        EXPECT_GE(f, prev - 1e-7) << b;
        prev = f;
    }
}

TEST(HvacParamsTest, ValidateRejects) {
    HvacParams p = params(1);
    EXPECT_THROW(p.validate(), Error);
    p = params(5);
    p.nu_h = 1.5;
    EXPECT_THROW(p.validate(), Error);
    p = params(5);
    p.T0_series = {25.0, 25.0};
    EXPECT_THROW(p.validate(), Error);
}

TEST(HvacLambda, MissingDuals) {
    HvacTrajectory tr;
    try {
        lambda_mean(tr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingDuals);
    }
}

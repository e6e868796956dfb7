#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hypergame/fan.hpp"

using namespace hypergame;

namespace {

const FanParams kFan{};

AttackOutcome run(AttackerMode mode, DefenderBelief belief, bool bluff = false) {
    return fan_outcome(kFan, fan_scenario(kFan, mode, belief, bluff, 0.1));
}

double half_sq(const Vector& d) { return 0.5 * d.squaredNorm(); }

}  // namespace

TEST(FanBaseline, MatchesBoundaryScan) {
    // J is linear in p so the optimum sits on the envelope; scan the circle
    double best = 1e300, bm = 0, bp = 0;
    const int n = 2000000;
    for (int k = 0; k < n; ++k) {
        double a = 2.0 * std::numbers::pi * k / n;
        double m = kFan.c_m + kFan.c_r * std::cos(a), p = kFan.c_p + kFan.c_r * std::sin(a);
        double j = fan::cost(1.0, 1.0, 2.0, m, p);
        if (j < best) best = j, bm = m, bp = p;
    }
    FanSolution s = fan_baseline(kFan);
    EXPECT_NEAR(s.power, best, 1e-9);
    EXPECT_NEAR(s.m, bm, 1e-5);
    EXPECT_NEAR(s.p, bp, 1e-5);
    EXPECT_NEAR(s.m, 2.0552, 1e-4);
    EXPECT_NEAR(s.p, 3.8475, 1e-4);
    EXPECT_NEAR(s.power, 13.9741, 1e-4);
}

TEST(FanBaseline, AgreesWithGenericSolver) {
    NlpProblem p = fan_defender_problem(kFan.theta, kFan.c());
    Vector x0(2);
    x0 << 5.0, 5.0;
    KktPoint pt = solve_nlp(p, x0, 1e-10);
    FanSolution s = fan_baseline(kFan);
    EXPECT_NEAR(pt.x[0], s.m, 1e-7);
    EXPECT_NEAR(pt.x[1], s.p, 1e-7);
    EXPECT_NEAR(pt.lambda_ineq[0], s.duals.at("lambda"), 1e-6);
    EXPECT_GT(pt.lambda_ineq[0], 0.0);
}

TEST(FanTheta, TrueManipulation) {
    FanThetaTrueResult r = fan_theta_true_attack(kFan);
    EXPECT_NEAR(r.outcome.true_cost, 16.6774, 1e-3);
    EXPECT_LE(half_sq(r.dtheta), 0.1 + 1e-9);
    EXPECT_GT(r.outcome.true_cost, fan_baseline(kFan).power);
}

TEST(FanTheta, PerceptionManipulation) {
    AttackOutcome o = run(AttackerMode::theta_perception, DefenderBelief::normal);
    EXPECT_NEAR(o.true_cost, 14.2639, 1e-3);
    EXPECT_NEAR(o.perceived_cost, 12.4192, 1e-3);
    EXPECT_LE(half_sq(o.perturbation.at("dtheta")), 0.1 + 1e-9);
}

TEST(FanTheta, FaultyAnticipation) {
    AttackOutcome o = run(AttackerMode::none, DefenderBelief::anticipates_theta);
    EXPECT_NEAR(o.true_cost, 14.0808, 1e-3);
    EXPECT_NEAR(o.perceived_cost, 14.7100, 1e-3);
}

TEST(FanTheta, DoubleBluff) {
    FanBluffResult r = fan_theta_double_bluff_solve(kFan);
    EXPECT_NEAR(r.outcome.true_cost, 14.3034, 1e-3);
    Vector d = r.outcome.perturbation.at("dtheta");
    EXPECT_NEAR(d[0], 0.0684, 1e-3);
    EXPECT_NEAR(d[1], 0.2592, 1e-3);
    EXPECT_NEAR(d[2], -0.3580, 1e-3);
    EXPECT_LE(half_sq(d), 0.1 + 1e-9);
}

TEST(FanTheta, ClosedFormMatchesMpec) {
    AttackOutcome a = fan_theta_perception_attack(kFan);
    FanMpecResult m = fan_perception_attack_mpec(kFan);
    EXPECT_NEAR(m.m, a.defender_action[0], 1e-4);
    EXPECT_NEAR(m.p, a.defender_action[1], 1e-4);
}

TEST(FanConstraint, Outcomes) {
    AttackOutcome pm = run(AttackerMode::constraint_powermax, DefenderBelief::normal);
    EXPECT_NEAR(pm.true_cost, 17.7593, 1e-3);
    EXPECT_NEAR(pm.violation, 0.0, 1e-9);
    AttackOutcome br = run(AttackerMode::constraint_break, DefenderBelief::normal);
    EXPECT_NEAR(br.true_cost, 10.7879, 1e-3);
    EXPECT_NEAR(br.violation, 2.2, 1e-3);
    AttackOutcome nb = run(AttackerMode::none, DefenderBelief::anticipates_break);
    EXPECT_NEAR(nb.true_cost, 17.7556, 1e-3);
    AttackOutcome pb = run(AttackerMode::constraint_powermax, DefenderBelief::anticipates_break);
    EXPECT_NEAR(pb.true_cost, 22.2115, 1e-3);
}

TEST(FanConstraint, PerturbationWithinBudget) {
    for (AttackerMode m : {AttackerMode::constraint_powermax, AttackerMode::constraint_break}) {
        Vector dc = run(m, DefenderBelief::normal).perturbation.at("dc");
        EXPECT_LE(half_sq(dc), 0.1 + 1e-9);
        EXPECT_GT(half_sq(dc), 0.1 - 1e-6);  // the attacker spends the whole budget
    }
}

TEST(FanConstraint, DoubleBluffStaysNearBaseline) {
    // a defender anticipating exactly the attack it faces undoes most of it
    FanSolution b = fan_baseline(kFan);
    for (AttackerMode m : {AttackerMode::constraint_powermax, AttackerMode::constraint_break}) {
        DefenderBelief belief =
            m == AttackerMode::constraint_powermax ? DefenderBelief::anticipates_powermax : DefenderBelief::anticipates_break;
        AttackOutcome o = run(m, belief, true);
        EXPECT_NEAR(o.true_cost, b.power, 0.05);
    }
}

TEST(FanConstraint, ClosedFormMatchesMpec) {
    AttackOutcome a = fan_constraint_attack(kFan, FanConstraintMode::powermax, FanAwareness::unaware);
    FanMpecResult m = fan_constraint_attack_mpec(kFan, FanConstraintMode::powermax);
    EXPECT_NEAR(m.m, a.defender_action[0], 1e-4);
    EXPECT_NEAR(m.p, a.defender_action[1], 1e-4);
}

TEST(FanConstraint, PowermaxMonotoneInBudget) {
    double prev = -1e300;
    for (double d : {0.0, 0.025, 0.05, 0.1, 0.15}) {
        FanParams q = kFan;
        q.delta_c_max = d;
        double f = fan_constraint_attack(q, FanConstraintMode::powermax, FanAwareness::unaware).true_cost;
        EXPECT_GE(f, prev - 1e-9) << d;
        prev = f;
    }
}

TEST(FanOutcome, ZeroBudgetIsBaseline) {
    double base = fan_baseline(kFan).power;
    for (AttackerMode m : {AttackerMode::theta_true, AttackerMode::theta_perception, AttackerMode::constraint_powermax,
                           AttackerMode::constraint_break}) {
        AttackOutcome o = fan_outcome(kFan, fan_scenario(kFan, m, DefenderBelief::normal, false, 0.0));
        EXPECT_NEAR(o.true_cost, base, 1e-6) << to_string(m);
    }
}

TEST(FanOutcome, RejectsMismatchedPairing) {
    try {
        run(AttackerMode::theta_true, DefenderBelief::anticipates_powermax);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownMode);
    }
    EXPECT_THROW(run(AttackerMode::hvac_static, DefenderBelief::normal), Error);
}

TEST(FanParamsTest, ValidateRejectsBadRadius) {
    FanParams q = kFan;
    q.c_r = -1.0;
    EXPECT_THROW(q.validate(), Error);
}

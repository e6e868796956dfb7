#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"
#include "nlp.hpp"

namespace hypergame {

enum class AttackerMode { none, theta_true, theta_perception, constraint_powermax, constraint_break, hvac_static, hvac_dynamic };
enum class DefenderBelief { normal, anticipates_theta, anticipates_powermax, anticipates_break };
enum class HypergameLevel { game, first_level, second_level, third_level };

using ParamMap = std::map<std::string, Vector>;

inline const char* to_string(AttackerMode m) {
    switch (m) {
    case AttackerMode::none: return "none";
    case AttackerMode::theta_true: return "theta_true";
    case AttackerMode::theta_perception: return "theta_perception";
    case AttackerMode::constraint_powermax: return "constraint_powermax";
    case AttackerMode::constraint_break: return "constraint_break";
    case AttackerMode::hvac_static: return "hvac_static";
    case AttackerMode::hvac_dynamic: return "hvac_dynamic";
    }
    return "?";
}

inline const char* to_string(DefenderBelief b) {
    switch (b) {
    case DefenderBelief::normal: return "normal";
    case DefenderBelief::anticipates_theta: return "anticipates_theta";
    case DefenderBelief::anticipates_powermax: return "anticipates_powermax";
    case DefenderBelief::anticipates_break: return "anticipates_break";
    }
    return "?";
}

inline const char* to_string(HypergameLevel l) {
    switch (l) {
    case HypergameLevel::game: return "game";
    case HypergameLevel::first_level: return "first_level";
    case HypergameLevel::second_level: return "second_level";
    case HypergameLevel::third_level: return "third_level";
    }
    return "?";
}

inline AttackerMode parse_attacker_mode(const std::string& s) {
    for (auto m : {AttackerMode::none, AttackerMode::theta_true, AttackerMode::theta_perception,
                   AttackerMode::constraint_powermax, AttackerMode::constraint_break, AttackerMode::hvac_static,
                   AttackerMode::hvac_dynamic})
        if (s == to_string(m)) return m;
    throw Error(ErrorCode::UnknownMode, "attacker mode '" + s + "'");
}

inline DefenderBelief parse_defender_belief(const std::string& s) {
    for (auto b : {DefenderBelief::normal, DefenderBelief::anticipates_theta, DefenderBelief::anticipates_powermax,
                   DefenderBelief::anticipates_break})
        if (s == to_string(b)) return b;
    throw Error(ErrorCode::UnknownMode, "defender belief '" + s + "'");
}

struct PerceptionScenario {
    ParamMap true_params;
    AttackerMode attacker_mode = AttackerMode::none;
    DefenderBelief defender_belief = DefenderBelief::normal;
    bool attacker_anticipates_defender = false;  // double-bluff
    double budget = 0.0;
    Vector break_weights = Vector::Ones(1);

    void validate() const {
        if (!(budget >= 0.0)) throw Error(ErrorCode::ParseError, "budget must be nonnegative");
        if ((break_weights.array() < 0.0).any()) throw Error(ErrorCode::ParseError, "break weights must be nonnegative");
        if (attacker_mode == AttackerMode::constraint_break && !(break_weights.array() > 0.0).any())
            throw Error(ErrorCode::ParseError, "break mode needs a positive break weight");
        if (attacker_anticipates_defender && defender_belief == DefenderBelief::normal)
            throw Error(ErrorCode::ParseError, "double-bluff requires a defender that anticipates an attack");
    }
};

struct SolverDiagnostic {
    std::string level;
    KktReport report;
};

struct AttackOutcome {
    ParamMap perturbation;
    Vector defender_action;
    double true_cost = 0.0;
    double perceived_cost = 0.0;
    double violation = 0.0;           // max_l max(0, g_l(u, c_true))
    double weighted_violation = 0.0;  // break_weights . g(u, c_true)
    std::vector<SolverDiagnostic> solver_diagnostics;
};

// no attacker and a normal defender: game; double-bluff: third level; anything else involves one aware side.
inline HypergameLevel hypergame_level(const PerceptionScenario& s) {
    if (s.attacker_anticipates_defender) return HypergameLevel::third_level;
    if (s.attacker_mode == AttackerMode::none && s.defender_belief == DefenderBelief::normal) return HypergameLevel::game;
    if (s.attacker_mode == AttackerMode::theta_true && s.defender_belief == DefenderBelief::normal)
        return HypergameLevel::game;
    return HypergameLevel::second_level;
}

// Half squared norm of a perturbation in the units its budget is stated in.
inline double budget_usage(const ParamMap& perturbation, const ParamMap& true_params) {
    double s = 0.0;
    for (const auto& [name, v] : perturbation) {
        if (name == "dbeta" || name == "dgamma") {
            auto base = true_params.find(name == "dbeta" ? "beta" : "gamma");
            if (base == true_params.end()) throw Error(ErrorCode::DimensionMismatch, "relative budget needs " + name);
            s += (v.array() / base->second.array()).square().sum();
        } else {
            s += v.squaredNorm();
        }
    }
    return 0.5 * s;
}

// System provides:
//   believed(scenario, perturbation) -> parameters the defender acts on
//   perceived_residual(believed, action) -> KktReport of the defender's own problem
//   true_cost(scenario, perturbation, action), perceived_cost(believed, action)
//   violation(scenario, action) -> {max violation, weighted violation}
template <typename System>
AttackOutcome assemble_outcome(const System& sys, const PerceptionScenario& scenario, const ParamMap& perturbation,
                               const Vector& defender_action) {
    auto believed = sys.believed(scenario, perturbation);
    KktReport rep = sys.perceived_residual(believed, defender_action);
    if (!(rep.max() <= 1e-6))
        throw Error(ErrorCode::PerceivedProblemNotSolved,
                    "defender action is not a KKT point of its perceived problem (residual " +
                        std::to_string(rep.max()) + ")");
    AttackOutcome out;
    out.perturbation = perturbation;
    out.defender_action = defender_action;
    out.true_cost = sys.true_cost(scenario, perturbation, defender_action);
    out.perceived_cost = sys.perceived_cost(believed, defender_action);
    auto [v, wv] = sys.violation(scenario, defender_action);
    out.violation = v;
    out.weighted_violation = wv;
    out.solver_diagnostics.push_back({"defender", rep});
    return out;
}

}  // namespace hypergame

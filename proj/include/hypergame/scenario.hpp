#pragma once

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fan.hpp"
#include "hvac.hpp"
#include "hypergame.hpp"
#include "log.hpp"

namespace hypergame {

enum class SystemKind { fan, hvac };

inline const char* to_string(SystemKind s) { return s == SystemKind::fan ? "fan" : "hvac"; }

struct ScenarioEntry {
    std::string label;
    std::map<std::string, std::string> values;  // file-level defaults merged in
    int line = 0;
};

struct ScenarioFile {
    SystemKind system = SystemKind::fan;
    std::vector<ScenarioEntry> entries;
};

namespace scn {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline const std::set<std::string>& fan_keys() {
    static const std::set<std::string> k{"label", "mode", "belief", "double_bluff", "budget", "theta",
                                         "c_m", "c_p", "c_r", "break_weight"};
    return k;
}

inline const std::set<std::string>& hvac_keys() {
    static const std::set<std::string> k{"label", "mode", "budget", "horizon", "theta1", "theta2", "nu_h", "nu_n",
                                         "nu_c", "c_p", "T0", "beta", "gamma", "Q", "d_lower", "d_upper", "m_lower",
                                         "m_upper", "Tn_lower", "Tn_upper", "Tsn_lower", "Tsn_upper", "Tn_initial",
                                         "Ts_lower", "tol", "max_rounds", "penalty0"};
    return k;
}

[[noreturn]] inline void fail(ErrorCode code, int line, const std::string& msg) {
    throw Error(code, "line " + std::to_string(line) + ": " + msg);
}

inline double to_double(const ScenarioEntry& e, const std::string& key) {
    const std::string& v = e.values.at(key);
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::ParseError, e.line, "'" + key + "' expects a number, got '" + v + "'");
}

inline std::vector<double> to_list(const ScenarioEntry& e, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(e.values.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        ScenarioEntry tmp{e.label, {{key, trim(item)}}, e.line};
        out.push_back(to_double(tmp, key));
    }
    return out;
}

inline bool to_bool(const ScenarioEntry& e, const std::string& key) {
    const std::string& v = e.values.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::ParseError, e.line, "'" + key + "' expects true/false, got '" + v + "'");
}

inline bool has(const ScenarioEntry& e, const std::string& key) { return e.values.count(key) > 0; }

}  // namespace scn

// key = value lines; '#' starts a comment. Keys before the first [scenario] header are defaults for
// every scenario, except `system` which selects fan or hvac.
inline ScenarioFile parse_scenarios(std::istream& in) {
    ScenarioFile f;
    std::map<std::string, std::string> defaults;
    std::vector<ScenarioEntry> raw;
    bool have_system = false;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = scn::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line != "[scenario]") scn::fail(ErrorCode::ParseError, ln, "unknown section " + line);
            raw.push_back({"", {}, ln});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) scn::fail(ErrorCode::ParseError, ln, "expected key = value");
        std::string key = scn::trim(line.substr(0, eq)), val = scn::trim(line.substr(eq + 1));
        if (key.empty()) scn::fail(ErrorCode::ParseError, ln, "empty key");
        if (raw.empty()) {
            if (key == "system") {
                if (val == "fan") f.system = SystemKind::fan;
                else if (val == "hvac") f.system = SystemKind::hvac;
                else scn::fail(ErrorCode::UnknownMode, ln, "unknown system '" + val + "'");
                have_system = true;
            } else {
                defaults[key] = val;
            }
        } else {
            if (raw.back().values.count(key)) scn::fail(ErrorCode::ParseError, ln, "duplicate key '" + key + "'");
            raw.back().values[key] = val;
        }
    }
    if (!have_system) throw Error(ErrorCode::ParseError, "missing 'system = fan|hvac'");
    const auto& allowed = f.system == SystemKind::fan ? scn::fan_keys() : scn::hvac_keys();
    for (const auto& [k, v] : defaults)
        if (!allowed.count(k) || k == "label") throw Error(ErrorCode::ParseError, "unknown default key '" + k + "'");
    std::set<std::string> labels;
    for (ScenarioEntry& e : raw) {
        for (const auto& [k, v] : e.values)
            if (!allowed.count(k)) scn::fail(ErrorCode::ParseError, e.line, "unknown key '" + k + "' for " + to_string(f.system));
        for (const auto& [k, v] : defaults) e.values.emplace(k, v);
        if (!scn::has(e, "label") || e.values["label"].empty()) scn::fail(ErrorCode::ParseError, e.line, "scenario without label");
        e.label = e.values["label"];
        if (e.label.find_first_of(",\"/\\ ") != std::string::npos)
            scn::fail(ErrorCode::ParseError, e.line, "label may not contain spaces, commas, quotes or slashes");
        if (!labels.insert(e.label).second) scn::fail(ErrorCode::ParseError, e.line, "duplicate label '" + e.label + "'");
        if (!scn::has(e, "mode")) scn::fail(ErrorCode::ParseError, e.line, "scenario without mode");
        AttackerMode mode;
        try {
            mode = parse_attacker_mode(e.values["mode"]);
            if (scn::has(e, "belief")) parse_defender_belief(e.values["belief"]);
        } catch (const Error& err) {
            scn::fail(ErrorCode::UnknownMode, e.line, err.what());
        }
        bool hvac_mode = mode == AttackerMode::hvac_static || mode == AttackerMode::hvac_dynamic;
        if (f.system == SystemKind::fan && hvac_mode)
            scn::fail(ErrorCode::UnknownMode, e.line, "mode '" + e.values["mode"] + "' is not valid for fan");
        if (f.system == SystemKind::hvac && !(hvac_mode || mode == AttackerMode::none))
            scn::fail(ErrorCode::UnknownMode, e.line, "mode '" + e.values["mode"] + "' is not valid for hvac");
        f.entries.push_back(std::move(e));
    }
    return f;
}

inline ScenarioFile parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file " + path);
    return parse_scenarios(in);
}

inline FanParams fan_params_from(const ScenarioEntry& e) {
    FanParams fp;
    if (scn::has(e, "theta")) {
        auto t = scn::to_list(e, "theta");
        if (t.size() != 3) scn::fail(ErrorCode::ParseError, e.line, "theta needs three values");
        fp.theta = Vec3(t[0], t[1], t[2]);
    }
    if (scn::has(e, "c_m")) fp.c_m = scn::to_double(e, "c_m");
    if (scn::has(e, "c_p")) fp.c_p = scn::to_double(e, "c_p");
    if (scn::has(e, "c_r")) fp.c_r = scn::to_double(e, "c_r");
    if (scn::has(e, "break_weight")) fp.break_weight = scn::to_double(e, "break_weight");
    fp.validate();
    return fp;
}

inline PerceptionScenario fan_perception_from(const ScenarioEntry& e, const FanParams& fp) {
    AttackerMode mode = parse_attacker_mode(e.values.at("mode"));
    DefenderBelief belief = scn::has(e, "belief") ? parse_defender_belief(e.values.at("belief")) : DefenderBelief::normal;
    bool bluff = scn::has(e, "double_bluff") && scn::to_bool(e, "double_bluff");
    double budget = scn::has(e, "budget") ? scn::to_double(e, "budget") : 0.1;
    try {
        return fan_scenario(fp, mode, belief, bluff, budget);
    } catch (const Error& err) {
        scn::fail(ErrorCode::ParseError, e.line, err.what());
    }
}

inline HvacParams hvac_params_from(const ScenarioEntry& e) {
    HvacParams p;
    auto num = [&](const char* k, double& dst) {
        if (scn::has(e, k)) dst = scn::to_double(e, k);
    };
    num("theta1", p.theta1);
    num("theta2", p.theta2);
    num("nu_h", p.nu_h);
    num("nu_n", p.nu_n);
    num("nu_c", p.nu_c);
    num("c_p", p.c_p);
    num("beta", p.beta);
    num("gamma", p.gamma);
    num("d_lower", p.d_lower);
    num("d_upper", p.d_upper);
    num("m_lower", p.m_lower);
    num("m_upper", p.m_upper);
    num("Tn_lower", p.Tn_lower);
    num("Tn_upper", p.Tn_upper);
    num("Tsn_lower", p.Tsn_lower);
    num("Tsn_upper", p.Tsn_upper);
    num("Tn_initial", p.Tn_initial);
    num("Ts_lower", p.Ts_lower);
    if (scn::has(e, "horizon")) {
        double h = scn::to_double(e, "horizon");
        if (h != std::floor(h)) scn::fail(ErrorCode::ParseError, e.line, "horizon must be an integer");
        p.horizon = static_cast<int>(h);
    }
    if (scn::has(e, "T0")) {
        auto v = scn::to_list(e, "T0");
        if (v.size() == 1) p.T0_default = v[0];
        else p.T0_series = v;
    }
    if (scn::has(e, "Q")) p.Q_series = scn::to_list(e, "Q");
    AttackerMode mode = parse_attacker_mode(e.values.at("mode"));
    if (scn::has(e, "budget")) {
        double b = scn::to_double(e, "budget");
        if (b < 0.0) scn::fail(ErrorCode::ParseError, e.line, "budget must be nonnegative");
        if (mode == AttackerMode::hvac_dynamic) p.dT_max = b;
        else p.delta_max = b;
    }
    try {
        p.validate();
    } catch (const Error& err) {
        scn::fail(ErrorCode::ParseError, e.line, err.what());
    }
    return p;
}

inline RelaxationSchedule hvac_schedule_from(const ScenarioEntry& e) {
    RelaxationSchedule s = hvac_default_schedule();
    if (scn::has(e, "tol")) s.nlp_tol = scn::to_double(e, "tol");
    if (scn::has(e, "max_rounds")) s.max_rounds = static_cast<int>(scn::to_double(e, "max_rounds"));
    if (scn::has(e, "penalty0")) s.penalty0 = scn::to_double(e, "penalty0");
    return s;
}

struct ScenarioResult {
    std::string label;
    SystemKind system = SystemKind::fan;
    std::string mode, belief;
    bool double_bluff = false;
    HypergameLevel level = HypergameLevel::game;
    double budget = 0.0;
    bool ok = false;
    std::string error;  // error code name when !ok
    std::string message;

    AttackOutcome outcome;
    double kkt = 0.0;  // worst residual over the solver diagnostics

    // fan
    FanParams fan_params;
    std::optional<FanBelief> fan_belief;
    std::string delta_kind = "none";

    // hvac
    int horizon = 0;
    double baseline_power = 0.0;
    std::optional<HvacTrajectory> trajectory;
    std::optional<double> lambda_mean_value;
};

inline double worst_residual(const AttackOutcome& o) {
    double r = 0.0;
    for (const auto& d : o.solver_diagnostics) r = std::max(r, d.report.max());
    return r;
}

inline ScenarioResult run_scenario(SystemKind system, const ScenarioEntry& e) {
    ScenarioResult r;
    r.label = e.label;
    r.system = system;
    r.mode = e.values.at("mode");
    try {
        if (system == SystemKind::fan) {
            FanParams fp = fan_params_from(e);
            PerceptionScenario s = fan_perception_from(e, fp);
            r.belief = to_string(s.defender_belief);
            r.double_bluff = s.attacker_anticipates_defender;
            r.level = hypergame_level(s);
            r.budget = s.budget;
            r.fan_params = fp;
            r.outcome = fan_outcome(fp, s);
            if (s.attacker_mode != AttackerMode::none) {
                if (r.outcome.perturbation.count("dtheta")) r.delta_kind = "theta";
                if (r.outcome.perturbation.count("dc")) r.delta_kind = "c";
            }
            FanParams fb = fp;
            r.fan_belief = FanSystem{fb}.believed(s, r.outcome.perturbation);
        } else {
            HvacParams p = hvac_params_from(e);
            r.belief = "normal";
            r.horizon = p.horizon;
            AttackerMode mode = parse_attacker_mode(r.mode);
            r.level = mode == AttackerMode::none ? HypergameLevel::game : HypergameLevel::second_level;
            HvacBaselineResult base = hvac_baseline_solve(p);
            r.baseline_power = base.trajectory.total_true();
            if (mode == AttackerMode::none) {
                r.trajectory = base.trajectory;
                r.outcome.defender_action = hvac_action_vector(base.trajectory.controls);
                r.outcome.true_cost = r.outcome.perceived_cost = r.baseline_power;
                r.outcome.violation = r.outcome.weighted_violation = hvac_true_violation(p, base.trajectory);
                r.outcome.solver_diagnostics.push_back({"baseline", kkt_residual(hvac_defender_problem(p), base.point)});
            } else {
                auto kind = mode == AttackerMode::hvac_static ? HvacAttackKind::static_params : HvacAttackKind::dynamic_T0;
                r.budget = kind == HvacAttackKind::static_params ? p.delta_max : p.dynamic_budget();
                HvacAttackResult a = hvac_attack(p, kind, hvac_schedule_from(e));
                r.outcome = a.outcome;
                r.trajectory = a.trajectory;
            }
            r.lambda_mean_value = lambda_mean(*r.trajectory);
        }
        r.kkt = worst_residual(r.outcome);
        r.ok = true;
    } catch (const Error& err) {
        r.ok = false;
        r.error = to_string(err.code());
        r.message = err.what();
        log(LogLevel::error, "scenario ", r.label, ": ", err.what());
    }
    return r;
}

// Runs every scenario on a pool of `jobs` threads; results keep file order.
inline std::vector<ScenarioResult> run_scenarios(const ScenarioFile& f, int jobs = 1) {
    std::vector<ScenarioResult> out(f.entries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < f.entries.size(); i = next++) {
            log(LogLevel::info, "running ", f.entries[i].label);
            out[i] = run_scenario(f.system, f.entries[i]);
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(f.entries.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace hypergame

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scenario.hpp"
#include "svg.hpp"

namespace hypergame {

inline const std::vector<std::string>& csv_columns(SystemKind s) {
    static const std::vector<std::string> fan{"label", "status", "mode", "belief", "double_bluff", "level", "budget",
                                              "delta_kind", "m", "p", "delta_1", "delta_2", "delta_3", "power",
                                              "perceived_power", "violation", "weighted_violation", "kkt_residual"};
    static const std::vector<std::string> hvac{"label", "status", "mode", "horizon", "budget", "baseline_power",
                                               "power", "perceived_power", "power_increase_pct",
                                               "perceived_increase_pct", "dbeta", "dgamma", "lambda_mean", "mu_tau",
                                               "violation", "dT0", "kkt_residual"};
    return s == SystemKind::fan ? fan : hvac;
}

// Full precision unless `round` >= 0 decimals are requested.
inline std::string format_number(double v, int round = -1) {
    char buf[64];
    if (round >= 0)
        std::snprintf(buf, sizeof buf, "%.*f", round, v);
    else
        std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // avoid "-0" / "-0.00"
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

inline void write_csv(std::ostream& os, SystemKind system, const std::vector<ScenarioResult>& rows, int round = -1) {
    const auto& cols = csv_columns(system);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    auto n = [&](double v) { return format_number(v, round); };
    for (const ScenarioResult& r : rows) {
        std::vector<std::string> f;
        f.push_back(r.label);
        f.push_back(r.ok ? "ok" : r.error);
        f.push_back(r.mode);
        if (system == SystemKind::fan) {
            f.push_back(r.belief);
            f.push_back(r.double_bluff ? "true" : "false");
            f.push_back(to_string(r.level));
            f.push_back(r.ok ? n(r.budget) : "");
            if (!r.ok) {
                f.resize(cols.size());
            } else {
                const AttackOutcome& o = r.outcome;
                Vec3 d = Vec3::Zero();
                if (r.delta_kind == "theta") d = o.perturbation.at("dtheta");
                if (r.delta_kind == "c") d = o.perturbation.at("dc");
                f.push_back(r.delta_kind);
                f.push_back(n(o.defender_action[0]));
                f.push_back(n(o.defender_action[1]));
                for (int k = 0; k < 3; ++k) f.push_back(n(d[k]));
                f.push_back(n(o.true_cost));
                f.push_back(n(o.perceived_cost));
                f.push_back(n(o.violation));
                f.push_back(n(o.weighted_violation));
                f.push_back(n(r.kkt));
            }
        } else {
            f.push_back(std::to_string(r.horizon));
            if (!r.ok) {
                f.resize(cols.size());
            } else {
                const AttackOutcome& o = r.outcome;
                f.push_back(n(r.budget));
                f.push_back(n(r.baseline_power));
                f.push_back(n(o.true_cost));
                f.push_back(n(o.perceived_cost));
                f.push_back(n(100.0 * (o.true_cost - r.baseline_power) / r.baseline_power));
                f.push_back(n(100.0 * (o.perceived_cost - r.baseline_power) / r.baseline_power));
                auto scalar = [&](const char* k) { return o.perturbation.count(k) ? n(o.perturbation.at(k)[0]) : n(0.0); };
                f.push_back(scalar("dbeta"));
                f.push_back(scalar("dgamma"));
                f.push_back(r.lambda_mean_value ? n(*r.lambda_mean_value) : "");
                f.push_back(r.trajectory && r.trajectory->mu_tau ? n(*r.trajectory->mu_tau) : "");
                f.push_back(n(o.violation));
                std::string prof;
                if (o.perturbation.count("dT0")) {
                    const Vector& v = o.perturbation.at("dT0");
                    for (Index t = 0; t < v.size(); ++t) prof += (t ? ";" : "") + n(v[t]);
                }
                f.push_back(prof);
                f.push_back(n(r.kkt));
            }
        }
        for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
        os << '\n';
    }
}

inline svg::Plot fan_contour_plot(const ScenarioResult& r) {
    if (!r.ok || !r.fan_belief) throw Error(ErrorCode::MissingSeries, "no fan solution for '" + r.label + "'");
    const FanParams& fp = r.fan_params;
    const FanBelief& b = *r.fan_belief;
    svg::Plot p;
    p.title = r.label + ": objective contours and envelope";
    p.xlabel = "mass flow m";
    p.ylabel = "pressure p";
    p.equal_aspect = true;
    double span = fp.c_r * 1.45;
    p.box = std::array<double, 4>{fp.c_m - span, fp.c_m + span, fp.c_p - span, fp.c_p + span};
    const Vec3 th = fp.theta, tb = b.theta;
    FanSolution base = fan_respond({th, fp.c()});
    std::vector<double> levels;
    for (int k = -6; k <= 12; ++k) levels.push_back(base.power + 2.0 * k);
    p.contours.push_back({[th](double m, double q) { return fan::cost(th[0], th[1], th[2], m, q); }, levels, "#9aa5b1",
                          false, "true objective"});
    if ((tb - th).norm() > 1e-12) {
        FanSolution pb = fan_respond(b);
        std::vector<double> lv;
        for (int k = -6; k <= 12; ++k) lv.push_back(pb.power + 2.0 * k);
        p.contours.push_back({[tb](double m, double q) { return fan::cost(tb[0], tb[1], tb[2], m, q); }, lv, "#e3a34f", true,
                              "perceived objective"});
    }
    p.circles.push_back({fp.c_m, fp.c_p, fp.c_r, "#2b6cb0", false, "true envelope"});
    if ((b.c - fp.c()).norm() > 1e-12) p.circles.push_back({b.c[0], b.c[1], b.c[2], "#c53030", true, "perceived envelope"});
    p.markers.push_back({base.m, base.p, "#2b6cb0", "true optimum", 'o'});
    p.markers.push_back({r.outcome.defender_action[0], r.outcome.defender_action[1], "#c53030", "defender action", 'x'});
    return p;
}

inline std::vector<double> steps(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i + 1);
    return t;
}

inline svg::Plot hvac_temperature_plot(const ScenarioResult& r) {
    if (!r.ok || !r.trajectory) throw Error(ErrorCode::MissingSeries, "no hvac trajectory for '" + r.label + "'");
    const HvacTrajectory& tr = *r.trajectory;
    svg::Plot p;
    p.title = r.label + ": temperature trajectories";
    p.xlabel = "time step";
    p.ylabel = "temperature";
    auto t = steps(tr.Tn.size());
    p.series.push_back({"T_n true", t, tr.Tn, "#2b6cb0", false, true});
    p.series.push_back({"T_n perceived", t, tr.Tn_hat, "#c53030", true, true});
    p.series.push_back({"T_s", t, tr.controls.Ts, "#2f855a", false, true});
    p.series.push_back({"T_i true", t, tr.Ti, "#805ad5", false, true});
    p.series.push_back({"T_sn", t, tr.controls.Tsn, "#dd6b20", false, true});
    return p;
}

inline svg::Plot hvac_series_plot(const std::string& title, const std::string& ylabel, const std::string& name,
                                  const std::vector<double>& y) {
    svg::Plot p;
    p.title = title;
    p.xlabel = "time step";
    p.ylabel = ylabel;
    p.series.push_back({name, steps(y.size()), y, "#2b6cb0", false, true});
    return p;
}

// Writes the figures for every successful scenario; returns the file names in scenario order.
inline std::vector<std::string> emit_figures(const std::vector<ScenarioResult>& rows, const std::filesystem::path& dir) {
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const svg::Plot& p) {
        std::string body = svg::render(p);
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error(ErrorCode::ParseError, "cannot write " + (dir / name).string());
        out << body;
        written.push_back(name);
    };
    for (const ScenarioResult& r : rows) {
        if (!r.ok) continue;
        if (r.system == SystemKind::fan) {
            put(r.label + "_contour.svg", fan_contour_plot(r));
        } else {
            put(r.label + "_temperature.svg", hvac_temperature_plot(r));
            put(r.label + "_dT.svg", hvac_series_plot(r.label + ": true minus perceived zone temperature", "dT", "dT",
                                                      r.trajectory->dT));
            if (r.mode == "hvac_dynamic")
                put(r.label + "_dT0.svg", hvac_series_plot(r.label + ": outside temperature perturbation", "dT0", "dT0",
                                                           r.trajectory->perturbation.dT0));
        }
    }
    return written;
}

}  // namespace hypergame

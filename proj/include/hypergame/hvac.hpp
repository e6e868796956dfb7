#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hypergame.hpp"
#include "mpec.hpp"
#include "nlp.hpp"

namespace hypergame {

struct HvacParams {
    double theta1 = 0.1;
    double theta2 = 0.1;
    double nu_h = 0.99;
    double nu_n = 0.99;
    double nu_c = 0.99;
    double c_p = 1.0;
    std::vector<double> T0_series;  // empty: T0_default at every step
    double T0_default = 25.0;
    double beta = 0.0045;
    double gamma = 8.4e-5;
    std::vector<double> Q_series;  // empty: zero load
    int horizon = 5;
    double d_lower = 0.2, d_upper = 0.5;
    double m_lower = 3.93, m_upper = 13.1;
    double Tn_lower = 21.1, Tn_upper = 23.9;
    double Tsn_lower = 12.7, Tsn_upper = 35.0;
    double Tn_initial = 23.71;
    double Ts_lower = 5.0;
    double delta_max = 0.1;  // relative budget, static attack
    double dT_max = -1.0;    // dynamic attack budget; negative means 0.1 * horizon

    double T0(int t) const { return T0_series.empty() ? T0_default : T0_series.at(static_cast<std::size_t>(t)); }
    double Q(int t) const { return Q_series.empty() ? 0.0 : Q_series.at(static_cast<std::size_t>(t)); }
    double dynamic_budget() const { return dT_max < 0.0 ? 0.1 * horizon : dT_max; }

    void validate() const {
        auto eff = [](double v) { return v > 0.0 && v <= 1.0; };
        if (!eff(nu_h) || !eff(nu_n) || !eff(nu_c)) throw Error(ErrorCode::ParseError, "efficiencies must lie in (0, 1]");
        if (!(d_lower <= d_upper && m_lower <= m_upper && Tn_lower <= Tn_upper && Tsn_lower <= Tsn_upper))
            throw Error(ErrorCode::ParseError, "bounds must be ordered");
        if (horizon < 2) throw Error(ErrorCode::ParseError, "horizon must be at least 2");
        if (Tn_initial < Tn_lower || Tn_initial > Tn_upper)
            throw Error(ErrorCode::ParseError, "initial zone temperature outside comfort bounds");
        if (!T0_series.empty() && static_cast<int>(T0_series.size()) != horizon)
            throw Error(ErrorCode::ParseError, "T0 series length must equal horizon");
        if (!Q_series.empty() && static_cast<int>(Q_series.size()) != horizon)
            throw Error(ErrorCode::ParseError, "Q series length must equal horizon");
        if (delta_max < 0.0) throw Error(ErrorCode::ParseError, "budget must be nonnegative");
        if (!(beta > 0.0 && gamma > 0.0)) throw Error(ErrorCode::ParseError, "beta and gamma must be positive");
    }
};

struct HvacControls {
    std::vector<double> m, d, Ts, Tsn;

    std::size_t size() const { return m.size(); }
};

// Absolute perturbations; the static budget is stated relative to beta and gamma.
struct HvacPerturbation {
    double dbeta = 0.0;
    double dgamma = 0.0;
    std::vector<double> dT0;

    double dT(int t) const { return dT0.empty() ? 0.0 : dT0.at(static_cast<std::size_t>(t)); }
};

struct HvacPower {
    std::vector<double> fan, heater, zonal, chiller;

    double step(std::size_t t) const { return fan[t] + heater[t] + zonal[t] + chiller[t]; }
    double total() const {
        double s = 0.0;
        for (std::size_t t = 0; t < fan.size(); ++t) s += step(t);
        return s;
    }
};

struct HvacTrajectory {
    HvacControls controls;
    std::vector<double> Tn, Ti;          // true
    std::vector<double> Tn_hat, Ti_hat;  // perceived
    std::vector<double> dT;              // Tn - Tn_hat
    HvacPower power_true, power_perceived;
    std::vector<double> lambda;  // thermal-evolution multipliers
    std::optional<double> mu_tau;
    HvacPerturbation perturbation;

    double total_true() const { return power_true.total(); }
    double total_perceived() const { return power_perceived.total(); }
};

struct HvacAttackResult {
    AttackOutcome outcome;
    HvacTrajectory trajectory;
    KktPoint mpec_point;
};

namespace detail {

struct StepPower {
    double fan, heater, zonal, chiller;
};

inline StepPower hvac_step_power(const HvacParams& p, double m, double d, double Ts, double Tsn, double Ti, double Tn,
                                 double T0) {
    StepPower s;
    s.fan = p.theta1 * m + p.theta2 * m * m;
    s.heater = p.nu_h * p.c_p * m * (Ti - d * T0 - (1.0 - d) * Tn);
    s.zonal = p.c_p * p.nu_n * m * (Tsn - Ts);
    s.chiller = p.nu_c * p.c_p * m * (Ti - Ts);
    return s;
}

// Forward recursion of the zone temperature and the complementarity-determined inlet temperature.
inline void hvac_forward(const HvacParams& p, const HvacControls& u, double beta, double gamma,
                         const std::vector<double>& T0, std::vector<double>& Tn, std::vector<double>& Ti,
                         HvacPower& pw) {
    const std::size_t n = u.size();
    Tn.assign(n, 0.0);
    Ti.assign(n, 0.0);
    pw.fan.assign(n, 0.0);
    pw.heater.assign(n, 0.0);
    pw.zonal.assign(n, 0.0);
    pw.chiller.assign(n, 0.0);
    double prev = p.Tn_initial;
    for (std::size_t t = 0; t < n; ++t) {
        double bm = beta * u.m[t];
        Tn[t] = ((1.0 - gamma) * prev + bm * u.Tsn[t] + gamma * T0[t] + p.Q(static_cast<int>(t))) / (1.0 + bm);
        double mix = u.d[t] * T0[t] + (1.0 - u.d[t]) * Tn[t];
        Ti[t] = std::max(u.Ts[t], mix);
        StepPower s = hvac_step_power(p, u.m[t], u.d[t], u.Ts[t], u.Tsn[t], Ti[t], Tn[t], T0[t]);
        pw.fan[t] = s.fan;
        pw.heater[t] = s.heater;
        pw.zonal[t] = s.zonal;
        pw.chiller[t] = s.chiller;
        prev = Tn[t];
    }
}

}  // namespace detail

// True states follow the unperturbed physics; perceived states follow the defender's perturbed model.
inline HvacTrajectory simulate_true_trajectory(const HvacParams& p, const HvacControls& u, const HvacPerturbation& dp) {
    const int n = static_cast<int>(u.size());
    std::vector<double> T0(n), T0h(n);
    for (int t = 0; t < n; ++t) {
        T0[t] = p.T0(t);
        T0h[t] = p.T0(t) + dp.dT(t);
    }
    HvacTrajectory tr;
    tr.controls = u;
    tr.perturbation = dp;
    detail::hvac_forward(p, u, p.beta, p.gamma, T0, tr.Tn, tr.Ti, tr.power_true);
    detail::hvac_forward(p, u, p.beta + dp.dbeta, p.gamma + dp.dgamma, T0h, tr.Tn_hat, tr.Ti_hat, tr.power_perceived);
    tr.dT.resize(n);
    for (int t = 0; t < n; ++t) tr.dT[t] = tr.Tn[t] - tr.Tn_hat[t];
    return tr;
}

inline double lambda_mean(const HvacTrajectory& tr) {
    if (tr.lambda.empty()) throw Error(ErrorCode::MissingDuals, "trajectory carries no thermal-evolution multipliers");
    return std::accumulate(tr.lambda.begin(), tr.lambda.end(), 0.0) / static_cast<double>(tr.lambda.size());
}

// Defender problem: variables per step [m, d, Ts, Tsn, Ti, Tn].
struct HvacDefenderLayout {
    static constexpr Index K = 6;
    static constexpr Index m = 0, d = 1, Ts = 2, Tsn = 3, Ti = 4, Tn = 5;
    static Index at(int t, Index field) { return t * K + field; }
};

inline NlpProblem hvac_defender_problem(const HvacParams& p, const HvacPerturbation& dp = {}) {
    using L = HvacDefenderLayout;
    const int n = p.horizon;
    NlpProblem prob(n * L::K);
    const double bh = p.beta + dp.dbeta, gh = p.gamma + dp.dgamma;
    std::vector<ScalarFunction> obj;
    for (int t = 0; t < n; ++t) {
        const double T0h = p.T0(t) + dp.dT(t), Q = p.Q(t);
        obj.push_back(local_function<6>(
            {L::at(t, L::m), L::at(t, L::d), L::at(t, L::Ts), L::at(t, L::Tsn), L::at(t, L::Ti), L::at(t, L::Tn)},
            [p, T0h](const auto& v) {
                const auto &m = v[0], &d = v[1], &Ts = v[2], &Tsn = v[3], &Ti = v[4], &Tn = v[5];
                return p.theta1 * m + p.theta2 * m * m + p.nu_h * p.c_p * m * (Ti - d * T0h - (1.0 - d) * Tn) +
                       p.c_p * p.nu_n * m * (Tsn - Ts) + p.nu_c * p.c_p * m * (Ti - Ts);
            }));
        if (t == 0) {
            double T_init = p.Tn_initial;
            prob.eq_constraints.push_back(local_function<3>(
                {L::at(t, L::m), L::at(t, L::Tsn), L::at(t, L::Tn)}, [=](const auto& v) {
                    return -v[2] + (1.0 - gh) * T_init + bh * v[0] * (v[1] - v[2]) + gh * T0h + Q;
                }));
        } else {
            prob.eq_constraints.push_back(local_function<4>(
                {L::at(t, L::m), L::at(t, L::Tsn), L::at(t, L::Tn), L::at(t - 1, L::Tn)}, [=](const auto& v) {
                    return -v[2] + (1.0 - gh) * v[3] + bh * v[0] * (v[1] - v[2]) + gh * T0h + Q;
                }));
        }
        prob.ineq_constraints.push_back(
            local_function<2>({L::at(t, L::Ts), L::at(t, L::Tsn)}, [](const auto& v) { return v[0] - v[1]; }));
        prob.ineq_constraints.push_back(local_function<3>(
            {L::at(t, L::d), L::at(t, L::Tn), L::at(t, L::Ti)},
            [T0h](const auto& v) { return v[0] * T0h + (1.0 - v[0]) * v[1] - v[2]; }));
        prob.ineq_constraints.push_back(
            local_function<2>({L::at(t, L::Ts), L::at(t, L::Ti)}, [](const auto& v) { return v[0] - v[1]; }));
        prob.lower[L::at(t, L::m)] = p.m_lower;
        prob.upper[L::at(t, L::m)] = p.m_upper;
        prob.lower[L::at(t, L::d)] = p.d_lower;
        prob.upper[L::at(t, L::d)] = p.d_upper;
        prob.lower[L::at(t, L::Ts)] = p.Ts_lower;
        prob.lower[L::at(t, L::Tsn)] = p.Tsn_lower;
        prob.upper[L::at(t, L::Tsn)] = p.Tsn_upper;
        prob.lower[L::at(t, L::Tn)] = p.Tn_lower;
        prob.upper[L::at(t, L::Tn)] = p.Tn_upper;
    }
    const double T_init = p.Tn_initial;
    prob.eq_constraints.push_back(
        local_function<1>({L::at(n - 1, L::Tn)}, [T_init](const auto& v) { return v[0] - T_init; }));
    prob.objective = sum_of(std::move(obj));
    return prob;
}

inline Vector hvac_defender_start(const HvacParams& p, const HvacPerturbation& dp = {}) {
    using L = HvacDefenderLayout;
    Vector x(p.horizon * L::K);
    for (int t = 0; t < p.horizon; ++t) {
        double T0h = p.T0(t) + dp.dT(t);
        double mix = p.d_lower * T0h + (1.0 - p.d_lower) * p.Tn_initial;
        x[L::at(t, L::m)] = p.m_lower;
        x[L::at(t, L::d)] = p.d_lower;
        x[L::at(t, L::Ts)] = mix;
        x[L::at(t, L::Tsn)] = mix;
        x[L::at(t, L::Ti)] = mix;
        x[L::at(t, L::Tn)] = p.Tn_initial;
    }
    return x;
}

inline HvacControls hvac_controls_from(const Vector& x, int horizon, Index stride, Index m_off, Index d_off,
                                       Index Ts_off, Index Tsn_off) {
    HvacControls u;
    for (int t = 0; t < horizon; ++t) {
        u.m.push_back(x[t * stride + m_off]);
        u.d.push_back(x[t * stride + d_off]);
        u.Ts.push_back(x[t * stride + Ts_off]);
        u.Tsn.push_back(x[t * stride + Tsn_off]);
    }
    return u;
}

inline Vector hvac_action_vector(const HvacControls& u) {
    const std::size_t n = u.size();
    Vector a(4 * n);
    for (std::size_t t = 0; t < n; ++t) {
        a[4 * t] = u.m[t];
        a[4 * t + 1] = u.d[t];
        a[4 * t + 2] = u.Ts[t];
        a[4 * t + 3] = u.Tsn[t];
    }
    return a;
}

inline HvacControls hvac_controls_from_action(const Vector& a) {
    return hvac_controls_from(a, static_cast<int>(a.size() / 4), 4, 0, 1, 2, 3);
}

struct HvacBaselineResult {
    HvacTrajectory trajectory;
    KktPoint point;
};

inline HvacBaselineResult hvac_baseline_solve(const HvacParams& p, double tol = 1e-9) {
    using L = HvacDefenderLayout;
    p.validate();
    NlpProblem prob = hvac_defender_problem(p);
    NlpOptions opt;
    opt.n_starts = 1;
    KktPoint pt;
    try {
        pt = solve_nlp(prob, hvac_defender_start(p), tol, opt);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MaxIterations) throw Error(ErrorCode::Infeasible, e.what());
        throw;
    }
    HvacBaselineResult r;
    HvacControls u = hvac_controls_from(pt.x, p.horizon, L::K, L::m, L::d, L::Ts, L::Tsn);
    r.trajectory = simulate_true_trajectory(p, u, {});
    r.trajectory.lambda.assign(pt.lambda_eq.data(), pt.lambda_eq.data() + p.horizon);
    r.trajectory.mu_tau = -pt.lambda_eq[p.horizon];
    r.point = pt;
    return r;
}

inline HvacTrajectory hvac_baseline(const HvacParams& p) { return hvac_baseline_solve(p).trajectory; }

// Attack MPEC: per step [m, d, Ts, Tsn, Ti^, Tn^, l, s_mu, s_du, s_u, s_snu, s_is, Ti, Tn], then
// [l_mu, rel_dbeta, rel_dgamma, dT0_0 .. dT0_{n-1}]. Multipliers are stored scaled by nu_c c_p / beta.
struct HvacMpecLayout {
    static constexpr Index K = 14;
    static constexpr Index m = 0, d = 1, Ts = 2, Tsn = 3, Tih = 4, Tnh = 5, lam = 6, s_mu = 7, s_du = 8, s_u = 9,
                           s_snu = 10, s_is = 11, Ti = 12, Tn = 13;
    int horizon;

    Index at(int t, Index field) const { return t * K + field; }
    Index mu() const { return horizon * K; }
    Index rel_beta() const { return horizon * K + 1; }
    Index rel_gamma() const { return horizon * K + 2; }
    Index dT(int t) const { return horizon * K + 3 + t; }
    Index size() const { return horizon * K + 3 + horizon; }
};

enum class HvacAttackKind { static_params, dynamic_T0 };

inline double hvac_multiplier_scale(const HvacParams& p) { return p.nu_c * p.c_p / p.beta; }

inline NlpProblem hvac_attack_mpec(const HvacParams& p, HvacAttackKind kind) {
    const int n = p.horizon;
    HvacMpecLayout L{n};
    NlpProblem prob(L.size());
    const double S = hvac_multiplier_scale(p);
    const double nh = p.nu_h * p.c_p, nn = p.nu_n * p.c_p, nc = p.nu_c * p.c_p;
    const double beta = p.beta, gamma = p.gamma;
    const Index ib = L.rel_beta(), ig = L.rel_gamma();

    std::vector<ScalarFunction> obj;
    for (int t = 0; t < n; ++t) {
        const double T0 = p.T0(t), Q = p.Q(t);
        const Index m = L.at(t, L.m), d = L.at(t, L.d), Ts = L.at(t, L.Ts), Tsn = L.at(t, L.Tsn),
                    Tih = L.at(t, L.Tih), Tnh = L.at(t, L.Tnh), lam = L.at(t, L.lam), smu = L.at(t, L.s_mu),
                    sdu = L.at(t, L.s_du), su = L.at(t, L.s_u), ssnu = L.at(t, L.s_snu), sis = L.at(t, L.s_is),
                    Ti = L.at(t, L.Ti), Tn = L.at(t, L.Tn), dT = L.dT(t);
        const bool last = t == n - 1;

        // attacker objective: true power
        obj.push_back(local_function<6>({m, d, Ts, Tsn, Ti, Tn}, [p, T0](const auto& v) {
            const auto &mm = v[0], &dd = v[1], &ts = v[2], &tsn = v[3], &ti = v[4], &tn = v[5];
            return -(p.theta1 * mm + p.theta2 * mm * mm + p.nu_h * p.c_p * mm * (ti - dd * T0 - (1.0 - dd) * tn) +
                     p.c_p * p.nu_n * mm * (tsn - ts) + p.nu_c * p.c_p * mm * (ti - ts));
        }));

        // perceived thermal evolution
        if (t == 0) {
            const double Tinit = p.Tn_initial;
            prob.eq_constraints.push_back(local_function<6>({m, Tsn, Tnh, ib, ig, dT}, [=](const auto& v) {
                auto bh = beta * (1.0 + v[3]);
                auto gh = gamma * (1.0 + v[4]);
                return -v[2] + (1.0 - gh) * Tinit + bh * v[0] * (v[1] - v[2]) + gh * (T0 + v[5]) + Q;
            }));
            prob.eq_constraints.push_back(local_function<3>({m, Tsn, Tn}, [=](const auto& v) {
                return -v[2] + (1.0 - gamma) * Tinit + beta * v[0] * (v[1] - v[2]) + gamma * T0 + Q;
            }));
        } else {
            const Index Tnh_prev = L.at(t - 1, L.Tnh), Tn_prev = L.at(t - 1, L.Tn);
            prob.eq_constraints.push_back(local_function<7>({m, Tsn, Tnh, ib, ig, dT, Tnh_prev}, [=](const auto& v) {
                auto bh = beta * (1.0 + v[3]);
                auto gh = gamma * (1.0 + v[4]);
                return -v[2] + (1.0 - gh) * v[6] + bh * v[0] * (v[1] - v[2]) + gh * (T0 + v[5]) + Q;
            }));
            prob.eq_constraints.push_back(local_function<4>({m, Tsn, Tn, Tn_prev}, [=](const auto& v) {
                return -v[2] + (1.0 - gamma) * v[3] + beta * v[0] * (v[1] - v[2]) + gamma * T0 + Q;
            }));
        }

        auto add_pair = [&](ScalarFunction a, ScalarFunction b) {
            prob.nonneg_exprs.push_back(std::move(a));
            prob.nonneg_exprs.push_back(std::move(b));
            prob.comp_pairs.push_back({prob.nonneg_exprs.size() - 2, prob.nonneg_exprs.size() - 1});
        };

        // stationarity in m
        add_pair(local_function<10>({m, d, Ts, Tsn, Tih, Tnh, lam, smu, ib, dT},
                                    [=](const auto& v) {
                                        const auto &mm = v[0], &dd = v[1], &ts = v[2], &tsn = v[3], &tih = v[4],
                                                   &tnh = v[5];
                                        auto bh = beta * (1.0 + v[8]);
                                        auto T0h = T0 + v[9];
                                        return p.theta1 + 2.0 * p.theta2 * mm +
                                               nh * (tih - dd * T0h - (1.0 - dd) * tnh) + nn * (tsn - ts) +
                                               nc * (tih - ts) + S * v[6] * bh * (tsn - tnh) + v[7];
                                    }),
                 variable_expr(m, 1.0, -p.m_lower));
        add_pair(variable_expr(smu, 1.0, 0.0), variable_expr(m, -1.0, p.m_upper));
        // stationarity in d
        add_pair(variable_expr(d, 1.0, -p.d_lower), local_function<5>({sis, m, Tnh, sdu, dT}, [=](const auto& v) {
                     return (v[0] - nc * v[1]) * (v[2] - (T0 + v[4])) + v[3];
                 }));
        add_pair(variable_expr(sdu, 1.0, 0.0), variable_expr(d, -1.0, p.d_upper));
        // stationarity in Tn^
        if (last) {
            add_pair(local_function<7>({sis, m, d, lam, su, ib, L.mu()},
                                       [=](const auto& v) {
                                           auto bh = beta * (1.0 + v[5]);
                                           return (v[0] - nc * v[1]) * (v[2] - 1.0) - S * v[3] * (1.0 + bh * v[1]) -
                                                  S * v[6] + v[4];
                                       }),
                     variable_expr(Tnh, 1.0, -p.Tn_lower));
        } else {
            const Index lam_next = L.at(t + 1, L.lam);
            add_pair(local_function<8>({sis, m, d, lam, su, ib, ig, lam_next},
                                       [=](const auto& v) {
                                           auto bh = beta * (1.0 + v[5]);
                                           auto gh = gamma * (1.0 + v[6]);
                                           return (v[0] - nc * v[1]) * (v[2] - 1.0) - S * v[3] * (1.0 + bh * v[1]) +
                                                  (1.0 - gh) * S * v[7] + v[4];
                                       }),
                     variable_expr(Tnh, 1.0, -p.Tn_lower));
        }
        add_pair(variable_expr(su, 1.0, 0.0), variable_expr(Tnh, -1.0, p.Tn_upper));
        // stationarity in Tsn
        add_pair(local_function<5>({lam, m, sis, ssnu, ib},
                                   [=](const auto& v) {
                                       auto bh = beta * (1.0 + v[4]);
                                       return S * v[0] * bh * v[1] + v[2] - nc * v[1] + v[3];
                                   }),
                 variable_expr(Tsn, 1.0, -p.Tsn_lower));
        add_pair(variable_expr(ssnu, 1.0, 0.0), variable_expr(Tsn, -1.0, p.Tsn_upper));
        // inlet heater, zonal reheat and chiller relations
        add_pair(local_function<2>({m, sis}, [=](const auto& v) { return nh * v[0] - (v[1] - nc * v[0]); }),
                 local_function<4>({Tih, d, Tnh, dT}, [=](const auto& v) {
                     return v[0] - v[1] * (T0 + v[3]) - (1.0 - v[1]) * v[2];
                 }));
        add_pair(local_function<2>({m, sis}, [=](const auto& v) { return nn * v[0] - (v[1] - nc * v[0]); }),
                 local_function<2>({Tsn, Ts}, [](const auto& v) { return v[0] - v[1]; }));
        add_pair(variable_expr(sis, 1.0, 0.0),
                 local_function<2>({Tih, Ts}, [](const auto& v) { return v[0] - v[1]; }));
        // true inlet temperature
        add_pair(local_function<2>({Ti, Ts}, [](const auto& v) { return v[0] - v[1]; }),
                 local_function<3>({Ti, d, Tn}, [=](const auto& v) { return v[0] - v[1] * T0 - (1.0 - v[1]) * v[2]; }));

        prob.lower[m] = p.m_lower;
        prob.upper[m] = p.m_upper;
        prob.lower[d] = p.d_lower;
        prob.upper[d] = p.d_upper;
        prob.lower[Ts] = p.Ts_lower;
        prob.lower[Tsn] = p.Tsn_lower;
        prob.upper[Tsn] = p.Tsn_upper;
        prob.lower[Tnh] = p.Tn_lower;
        prob.upper[Tnh] = p.Tn_upper;
        for (Index s : {smu, sdu, su, ssnu, sis}) prob.lower[s] = 0.0;
    }
    const double Tinit = p.Tn_initial;
    prob.eq_constraints.push_back(
        local_function<1>({L.at(n - 1, L.Tnh)}, [Tinit](const auto& v) { return v[0] - Tinit; }));

    if (kind == HvacAttackKind::static_params) {
        for (int t = 0; t < n; ++t) prob.lower[L.dT(t)] = prob.upper[L.dT(t)] = 0.0;
        const double budget = p.delta_max;
        prob.ineq_constraints.push_back(
            local_function<2>({ib, ig}, [budget](const auto& v) { return 0.5 * (v[0] * v[0] + v[1] * v[1]) - budget; }));
        // keep the perceived parameters physical
        prob.lower[ib] = -0.99;
        prob.lower[ig] = -0.99;
    } else {
        prob.lower[ib] = prob.upper[ib] = 0.0;
        prob.lower[ig] = prob.upper[ig] = 0.0;
        std::vector<ScalarFunction> terms;
        for (int t = 0; t < n; ++t)
            terms.push_back(local_function<1>({L.dT(t)}, [](const auto& v) { return 0.5 * v[0] * v[0]; }));
        terms.push_back(constant_function(-p.dynamic_budget()));
        prob.ineq_constraints.push_back(sum_of(std::move(terms)));
    }
    prob.objective = sum_of(std::move(obj));
    return prob;
}

// Warm start: baseline controls, states and multipliers with zero deltas.
inline Vector hvac_attack_start(const HvacParams& p, const KktPoint& base) {
    using D = HvacDefenderLayout;
    HvacMpecLayout L{p.horizon};
    const double S = hvac_multiplier_scale(p);
    Vector z = Vector::Zero(L.size());
    for (int t = 0; t < p.horizon; ++t) {
        z[L.at(t, L.m)] = base.x[D::at(t, D::m)];
        z[L.at(t, L.d)] = base.x[D::at(t, D::d)];
        z[L.at(t, L.Ts)] = base.x[D::at(t, D::Ts)];
        z[L.at(t, L.Tsn)] = base.x[D::at(t, D::Tsn)];
        z[L.at(t, L.Tih)] = base.x[D::at(t, D::Ti)];
        z[L.at(t, L.Tnh)] = base.x[D::at(t, D::Tn)];
        z[L.at(t, L.Ti)] = base.x[D::at(t, D::Ti)];
        z[L.at(t, L.Tn)] = base.x[D::at(t, D::Tn)];
        z[L.at(t, L.lam)] = base.lambda_eq[t] / S;
        z[L.at(t, L.s_is)] = base.lambda_ineq[3 * t + 2];
    }
    z[L.mu()] = -base.lambda_eq[p.horizon] / S;
    return z;
}

inline RelaxationSchedule hvac_default_schedule() {
    RelaxationSchedule s;
    s.nlp_tol = 1e-9;
    return s;
}

// Largest excursion of the true zone temperature outside the comfort band, and the endpoint gap.
inline double hvac_true_violation(const HvacParams& p, const HvacTrajectory& tr) {
    double v = 0.0;
    for (double T : tr.Tn) v = std::max({v, p.Tn_lower - T, T - p.Tn_upper});
    return v;
}

inline HvacAttackResult hvac_attack(const HvacParams& p, HvacAttackKind kind,
                                    const RelaxationSchedule& schedule = hvac_default_schedule()) {
    p.validate();
    HvacBaselineResult base = hvac_baseline_solve(p);
    const double budget = kind == HvacAttackKind::static_params ? p.delta_max : p.dynamic_budget();
    NlpProblem prob = hvac_attack_mpec(p, kind);
    HvacMpecLayout L{p.horizon};
    HvacAttackResult r;
    HvacPerturbation dp;
    std::optional<KktReport> mpec_rep;
    if (budget == 0.0) {
        // nothing to spend: the defender plays its baseline
        if (kind == HvacAttackKind::dynamic_T0) dp.dT0.assign(static_cast<std::size_t>(p.horizon), 0.0);
        r.trajectory = base.trajectory;
        r.trajectory.perturbation = dp;
        r.mpec_point = base.point;
    } else {
        KktPoint pt = solve_mpec(prob, hvac_attack_start(p, base.point), schedule);
        const double S = hvac_multiplier_scale(p);
        if (kind == HvacAttackKind::static_params) {
            dp.dbeta = p.beta * pt.x[L.rel_beta()];
            dp.dgamma = p.gamma * pt.x[L.rel_gamma()];
        } else {
            for (int t = 0; t < p.horizon; ++t) dp.dT0.push_back(pt.x[L.dT(t)]);
        }
        HvacControls u = hvac_controls_from(pt.x, p.horizon, L.K, L.m, L.d, L.Ts, L.Tsn);
        r.trajectory = simulate_true_trajectory(p, u, dp);
        for (int t = 0; t < p.horizon; ++t) r.trajectory.lambda.push_back(S * pt.x[L.at(t, L.lam)]);
        r.trajectory.mu_tau = S * pt.x[L.mu()];
        r.mpec_point = pt;
        mpec_rep = kkt_residual(prob, pt);
    }

    AttackOutcome& o = r.outcome;
    if (kind == HvacAttackKind::static_params) {
        o.perturbation["dbeta"] = Vector::Constant(1, dp.dbeta);
        o.perturbation["dgamma"] = Vector::Constant(1, dp.dgamma);
    } else {
        o.perturbation["dT0"] = Eigen::Map<const Vector>(dp.dT0.data(), p.horizon);
    }
    o.defender_action = hvac_action_vector(r.trajectory.controls);
    o.true_cost = r.trajectory.total_true();
    o.perceived_cost = r.trajectory.total_perceived();
    o.violation = hvac_true_violation(p, r.trajectory);
    o.weighted_violation = o.violation;
    o.solver_diagnostics.push_back({"baseline", kkt_residual(hvac_defender_problem(p), base.point)});
    if (mpec_rep) o.solver_diagnostics.push_back({"attack_mpec", *mpec_rep});
    return r;
}

inline HvacAttackResult hvac_static_attack(const HvacParams& p) { return hvac_attack(p, HvacAttackKind::static_params); }
inline HvacAttackResult hvac_dynamic_attack(const HvacParams& p) { return hvac_attack(p, HvacAttackKind::dynamic_T0); }

}  // namespace hypergame

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hypergame.hpp"
#include "mpec.hpp"
#include "nlp.hpp"
#include "robustness.hpp"

namespace hypergame {

using Vec3 = Eigen::Vector3d;

struct FanParams {
    Vec3 theta{1.0, 1.0, 2.0};
    double c_m = 5.0, c_p = 5.0;
    double c_r = std::sqrt(10.0);  // radius; the envelope uses c_r^2
    double delta_theta_max = 0.1;
    double delta_c_max = 0.1;
    double break_weight = 1.0;

    Vec3 c() const { return {c_m, c_p, c_r}; }

    void validate() const {
        if ((theta.array() < 0.0).any()) throw Error(ErrorCode::ParseError, "theta must be nonnegative");
        if (!(c_r > 0.0)) throw Error(ErrorCode::ParseError, "envelope radius must be positive");
        if (!(delta_theta_max >= 0.0 && delta_c_max >= 0.0)) throw Error(ErrorCode::ParseError, "budgets must be nonnegative");
        if (!(break_weight >= 0.0)) throw Error(ErrorCode::ParseError, "break weight must be nonnegative");
    }
};

struct FanSolution {
    double m = 0.0, p = 0.0, power = 0.0;
    std::map<std::string, double> duals;
};

// What the defender acts on.
struct FanBelief {
    Vec3 theta;
    Vec3 c;  // (c_m, c_p, c_r)
};

enum class FanBranch { positive, negative, best };
enum class FanConstraintMode { powermax, break_system };
enum class FanAwareness { unaware, aware, double_bluff };
enum class FanAction { none, powermax, break_system };

namespace fan {

inline auto cost(const auto& t1, const auto& t2, const auto& t3, const auto& m, const auto& p) {
    return t1 * m + t2 * m * m + t3 * p;
}

inline auto envelope(const auto& m, const auto& p, const auto& cm, const auto& cp, const auto& cr) {
    return 0.5 * ((m - cm) * (m - cm) + (p - cp) * (p - cp) - cr * cr);
}

// Defender stationarity with the multiplier eliminated.
inline auto stationarity(const auto& t1, const auto& t2, const auto& t3, const auto& m, const auto& p, const auto& cm,
                         const auto& cp) {
    return (p - cp) * (t1 + 2.0 * t2 * m) - (m - cm) * t3;
}

// grad J . (u - c); nonpositive exactly when the envelope multiplier is nonnegative.
inline auto multiplier_sign(const auto& t1, const auto& t2, const auto& t3, const auto& m, const auto& p,
                            const auto& cm, const auto& cp) {
    return (t1 + 2.0 * t2 * m) * (m - cm) + t3 * (p - cp);
}

// Perception attack on theta against an unaware defender at (m, p).
template <typename S>
std::array<S, 3> theta_attack_map(const S& m, const S& p, double cm, double cp, double delta, double sign) {
    using std::sqrt;
    S a = p - cp, b = 2.0 * (p - cp) * m, e = -(m - cm);
    S nrm2 = a * a + b * b + e * e;
    S tau = sign * sqrt(2.0 * delta / nrm2);
    return {tau * a, tau * b, tau * e};
}

// Envelope attack from the attacker's KKT system at the perceived optimum (m, p) of envelope ch:
// [2 th2 (p - ch_p) - th3, m - ch_m; th1 + 2 th2 m, p - ch_p] [sigma; rho] = (g_m, g_p),
// dc = tau (rho (m - ch_m) - sigma th3, sigma (th1 + 2 th2 m) + rho (p - ch_p), -rho ch_r).
template <typename S>
std::array<S, 3> constraint_attack_map(const Vec3& th, const S& m, const S& p, const S& chm, const S& chp,
                                       const S& chr, const S& gm, const S& gp, double delta) {
    using std::sqrt;
    S a11 = 2.0 * th[1] * (p - chp) - th[2], a12 = m - chm;
    S a21 = th[0] + 2.0 * th[1] * m, a22 = p - chp;
    S det = a11 * a22 - a12 * a21;
    if (std::abs(value_of(det)) < 1e-12) throw Error(ErrorCode::SingularDualSystem, "attacker dual system is singular");
    S sigma = (a22 * gm - a12 * gp) / det;
    S rho = (a11 * gp - a21 * gm) / det;
    S v0 = rho * (m - chm) - sigma * th[2];
    S v1 = sigma * a21 + rho * (p - chp);
    S v2 = -(rho * chr);
    S nrm2 = v0 * v0 + v1 * v1 + v2 * v2;
    if (delta == 0.0) return {S(0.0), S(0.0), S(0.0)};
    S tau = sqrt(2.0 * delta / nrm2);
    return {tau * v0, tau * v1, tau * v2};
}

inline Vec3 perceived_envelope(const Vec3& c, const Vec3& dc) { return {c[0] + dc[0], c[1] + dc[1], c[2] - dc[2]}; }

template <std::size_t N, typename Sys>
std::array<double, N> newton(Sys f, std::array<double, N> x, double tol = 1e-12, int max_iter = 80) {
    using D = Dual<double, N>;
    using Mat = Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)>;
    using Vec = Eigen::Matrix<double, static_cast<int>(N), 1>;
    auto residual = [&](const std::array<double, N>& z) {
        auto r = f(z);
        Vec out;
        for (std::size_t i = 0; i < N; ++i) out[static_cast<Index>(i)] = r[i];
        return out;
    };
    for (int it = 0; it < max_iter; ++it) {
        std::array<D, N> zd;
        for (std::size_t i = 0; i < N; ++i) {
            zd[i].v = x[i];
            zd[i].d[i] = 1.0;
        }
        auto r = f(zd);
        Vec Fv;
        Mat J;
        for (std::size_t i = 0; i < N; ++i) {
            Fv[static_cast<Index>(i)] = r[i].v;
            for (std::size_t j = 0; j < N; ++j) J(static_cast<Index>(i), static_cast<Index>(j)) = r[i].d[j];
        }
        if (!Fv.allFinite()) throw Error(ErrorCode::NewtonDiverged, "non-finite residual");
        double fn = Fv.norm();
        if (fn <= tol) return x;
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible()) throw Error(ErrorCode::NewtonDiverged, "singular Jacobian");
        Vec step = -lu.solve(Fv);
        double a = 1.0;
        bool ok = false;
        std::array<double, N> trial;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = x[i] + a * step[static_cast<Index>(i)];
            Vec Fvt = residual(trial);
            if (Fvt.allFinite() && Fvt.norm() <= (1.0 - 1e-4 * a) * fn) {
                ok = true;
                break;
            }
            a *= 0.5;
        }
        if (!ok) {
            if (fn <= 1e3 * tol) return x;
            throw Error(ErrorCode::NewtonDiverged, "line search failed");
        }
        x = trial;
    }
    if (residual(x).norm() <= 1e3 * tol) return x;
    throw Error(ErrorCode::NewtonDiverged, "iteration limit");
}

// Points on the circle (cm, cp, cr) where h changes sign, refined by bisection in the angle.
template <typename H>
std::vector<std::array<double, 2>> circle_roots(const Vec3& c, H h, int samples = 1440) {
    const double two_pi = 2.0 * std::acos(-1.0);
    auto at = [&](double phi) { return std::array<double, 2>{c[0] + c[2] * std::cos(phi), c[1] + c[2] * std::sin(phi)}; };
    auto val = [&](double phi) {
        auto u = at(phi);
        return h(u[0], u[1]);
    };
    std::vector<std::array<double, 2>> roots;
    double prev_phi = 0.0, prev = val(0.0);
    for (int k = 1; k <= samples; ++k) {
        double phi = two_pi * k / samples, v = val(phi);
        if (v == 0.0 || (prev < 0.0) != (v < 0.0)) {
            double lo = prev_phi, hi = phi, flo = prev;
            for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
                double mid = 0.5 * (lo + hi), fm = val(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(at(0.5 * (lo + hi)));
        }
        prev_phi = phi;
        prev = v;
    }
    return roots;
}

struct Response {
    double m, p, lambda;
};

inline double envelope_multiplier(const Vec3& th, const Vec3& c, double m, double p) {
    double gm = th[0] + 2.0 * th[1] * m, gp = th[2];
    double dm = m - c[0], dp = p - c[1];
    return -(gm * dm + gp * dp) / (dm * dm + dp * dp);
}

inline NlpProblem defender_problem(const Vec3& th, const Vec3& c) {
    NlpProblem prob(2);
    prob.objective = local_function<2>({0, 1}, [th](const auto& v) { return cost(th[0], th[1], th[2], v[0], v[1]); });
    prob.ineq_constraints.push_back(
        local_function<2>({0, 1}, [c](const auto& v) { return envelope(v[0], v[1], c[0], c[1], c[2]); }));
    return prob;
}

// Defender optimum on the perceived envelope: Newton on the reduced 2x2 system, started from the
// point where the objective gradient at the centre leaves the circle.
inline Response response(const Vec3& th, const Vec3& c) {
    auto sys = [&](const auto& v) {
        using S = std::decay_t<decltype(v[0])>;
        return std::array<S, 2>{stationarity(th[0], th[1], th[2], v[0], v[1], c[0], c[1]),
                                envelope(v[0], v[1], c[0], c[1], c[2])};
    };
    double gm = th[0] + 2.0 * th[1] * c[0], gp = th[2], gn = std::hypot(gm, gp);
    if (gn == 0.0) throw Error(ErrorCode::NewtonDiverged, "objective gradient vanishes at the envelope centre");
    std::array<double, 2> u{c[0] - c[2] * gm / gn, c[1] - c[2] * gp / gn};
    try {
        u = newton<2>(sys, u);
        double lam = envelope_multiplier(th, c, u[0], u[1]);
        if (lam > 0.0) return {u[0], u[1], lam};
    } catch (const Error&) {
    }
    // Fallback: every stationary point on the circle, keep the minimiser with a positive multiplier.
    std::optional<Response> best;
    for (auto r : circle_roots(c, [&](double m, double p) { return stationarity(th[0], th[1], th[2], m, p, c[0], c[1]); })) {
        double lam = envelope_multiplier(th, c, r[0], r[1]);
        if (lam <= 0.0) continue;
        if (!best || cost(th[0], th[1], th[2], r[0], r[1]) < cost(th[0], th[1], th[2], best->m, best->p))
            best = Response{r[0], r[1], lam};
    }
    if (!best) throw Error(ErrorCode::NewtonDiverged, "no defender optimum on the perceived envelope");
    return *best;
}

inline Vec3 recover_theta(const Vec3& theta_hat, const Vec3& c, double delta) {
    Response r = response(theta_hat, c);
    auto d = theta_attack_map(r.m, r.p, c[0], c[1], delta, 1.0);
    return theta_hat - Vec3(d[0], d[1], d[2]);
}

// Defender anticipating a power-max attack: the map needs only the perceived envelope.
inline Vec3 recover_powermax(const Vec3& th, const Vec3& ch, double delta) {
    Response r = response(th, ch);
    auto d = constraint_attack_map<double>(th, r.m, r.p, ch[0], ch[1], ch[2], th[0] + 2.0 * th[1] * r.m, th[2], delta);
    return {ch[0] - d[0], ch[1] - d[1], ch[2] + d[2]};
}

// Defender anticipating a break-system attack: the map depends on the true envelope, so solve for it.
inline Vec3 recover_break(const Vec3& th, const Vec3& ch, double delta) {
    Response r = response(th, ch);
    auto sys = [&](const auto& v) {
        using S = std::decay_t<decltype(v[0])>;
        S m(r.m), p(r.p), chm(ch[0]), chp(ch[1]), chr(ch[2]);
        auto d = constraint_attack_map<S>(th, m, p, chm, chp, chr, m - v[0], p - v[1], delta);
        return std::array<S, 3>{v[0] + d[0] - ch[0], v[1] + d[1] - ch[1], v[2] - d[2] - ch[2]};
    };
    auto c = newton<3>(sys, {ch[0], ch[1], ch[2]});
    return {c[0], c[1], c[2]};
}

inline FanBelief believe(const FanParams& fp, DefenderBelief belief, const Vec3& dtheta, const Vec3& dc, double budget) {
    FanBelief b{fp.theta + dtheta, perceived_envelope(fp.c(), dc)};
    switch (belief) {
    case DefenderBelief::normal: break;
    case DefenderBelief::anticipates_theta: b.theta = recover_theta(b.theta, b.c, budget); break;
    case DefenderBelief::anticipates_powermax: b.c = recover_powermax(b.theta, b.c, budget); break;
    case DefenderBelief::anticipates_break: b.c = recover_break(b.theta, b.c, budget); break;
    }
    return b;
}

// Deterministic samples of the sphere of radius r (and optionally inner shells).
inline std::vector<Vec3> sphere_grid(double r, int n_polar, int n_azimuth, std::vector<double> shells = {1.0}) {
    const double pi = std::acos(-1.0);
    std::vector<Vec3> out;
    for (double s : shells) {
        for (int i = 0; i <= n_polar; ++i) {
            double a = pi * i / n_polar;
            int na = (i == 0 || i == n_polar) ? 1 : n_azimuth;
            for (int j = 0; j < na; ++j) {
                double b = 2.0 * pi * j / n_azimuth;
                out.emplace_back(s * r * std::sin(a) * std::cos(b), s * r * std::sin(a) * std::sin(b), s * r * std::cos(a));
            }
        }
    }
    return out;
}

// Best few well-separated grid points of a payoff (failed evaluations are skipped).
template <typename F>
std::vector<Vec3> best_grid_points(const std::vector<Vec3>& grid, F payoff, std::size_t k, double min_sep) {
    std::vector<std::pair<double, std::size_t>> vals;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            double v = payoff(grid[i]);
            if (std::isfinite(v)) vals.emplace_back(v, i);
        } catch (const Error&) {
        }
    }
    std::stable_sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Vec3> picked;
    for (const auto& [v, i] : vals) {
        bool far = std::all_of(picked.begin(), picked.end(), [&](const Vec3& q) { return (q - grid[i]).norm() >= min_sep; });
        if (far) picked.push_back(grid[i]);
        if (picked.size() >= k) break;
    }
    if (picked.empty()) throw Error(ErrorCode::NoFeasibleStart, "no admissible attack on the budget grid");
    return picked;
}

}  // namespace fan

// Defender problem as theta . (m, m^2, p) for the robustness analysis.
inline ThetaLinearProblem fan_theta_problem(const Vec3& theta, const Vec3& c) {
    ThetaLinearProblem tp;
    tp.features = {variable_expr(0, 1.0, 0.0), local_function<1>({0}, [](const auto& v) { return v[0] * v[0]; }),
                   variable_expr(1, 1.0, 0.0)};
    tp.theta = theta;
    tp.base = fan::defender_problem(theta, c);
    return tp;
}

inline NlpProblem fan_defender_problem(const Vec3& theta, const Vec3& c) { return fan::defender_problem(theta, c); }

// Defender optimum for the given belief, as a solution record.
inline FanSolution fan_respond(const FanBelief& b) {
    fan::Response r = fan::response(b.theta, b.c);
    FanSolution s;
    s.m = r.m;
    s.p = r.p;
    s.power = fan::cost(b.theta[0], b.theta[1], b.theta[2], r.m, r.p);
    s.duals["lambda"] = r.lambda;
    return s;
}

inline FanSolution fan_baseline(const FanParams& fp) {
    fp.validate();
    FanSolution s = fan_respond({fp.theta, fp.c()});
    if (!(s.m > 0.0)) throw Error(ErrorCode::ParseError, "envelope radius too large: optimal mass flow is not positive");
    NlpOptions opt;
    opt.n_starts = 1;
    Vector x0(2);
    x0 << fp.c_m - 0.5 * fp.c_r, fp.c_p - 0.5 * fp.c_r;
    KktPoint pt = solve_nlp(fan::defender_problem(fp.theta, fp.c()), x0, 1e-10, opt);
    double gap = std::max(std::abs(pt.x[0] - s.m), std::abs(pt.x[1] - s.p));
    log(LogLevel::debug, "fan baseline: reduced system vs NLP gap ", gap);
    if (gap > 1e-6) throw Error(ErrorCode::NewtonDiverged, "reduced system disagrees with the NLP solve");
    return s;
}

// Evaluation adapter for assemble_outcome.
struct FanSystem {
    FanParams params;

    static Vec3 take(const ParamMap& m, const char* key) {
        auto it = m.find(key);
        return it == m.end() ? Vec3::Zero() : Vec3(it->second);
    }

    FanBelief believed(const PerceptionScenario& s, const ParamMap& pert) const {
        return fan::believe(params, s.defender_belief, take(pert, "dtheta"), take(pert, "dc"), s.budget);
    }
    KktReport perceived_residual(const FanBelief& b, const Vector& u) const {
        NlpProblem prob = fan::defender_problem(b.theta, b.c);
        return kkt_residual(prob, estimate_multipliers(prob, u));
    }
    double true_cost(const PerceptionScenario& s, const ParamMap& pert, const Vector& u) const {
        Vec3 th = params.theta;
        if (s.attacker_mode == AttackerMode::theta_true) th += take(pert, "dtheta");
        return fan::cost(th[0], th[1], th[2], u[0], u[1]);
    }
    double perceived_cost(const FanBelief& b, const Vector& u) const {
        return fan::cost(b.theta[0], b.theta[1], b.theta[2], u[0], u[1]);
    }
    std::pair<double, double> violation(const PerceptionScenario& s, const Vector& u) const {
        double g = fan::envelope(u[0], u[1], params.c_m, params.c_p, params.c_r);
        double w = s.break_weights.size() > 0 ? s.break_weights[0] : 1.0;
        return {std::max(g, 0.0), w * g};
    }
};

inline PerceptionScenario fan_scenario(const FanParams& fp, AttackerMode mode, DefenderBelief belief, bool double_bluff,
                                       double budget) {
    PerceptionScenario s;
    s.true_params["theta"] = fp.theta;
    s.true_params["c"] = fp.c();
    s.attacker_mode = mode;
    s.defender_belief = belief;
    s.attacker_anticipates_defender = double_bluff;
    s.budget = budget;
    s.break_weights = Vector::Constant(1, fp.break_weight);
    s.validate();
    return s;
}

inline AttackOutcome fan_assemble(const FanParams& fp, const PerceptionScenario& s, const Vec3& dtheta, const Vec3& dc) {
    ParamMap pert;
    if (s.attacker_mode == AttackerMode::theta_true || s.attacker_mode == AttackerMode::theta_perception ||
        (s.attacker_mode == AttackerMode::none && s.defender_belief == DefenderBelief::anticipates_theta))
        pert["dtheta"] = dtheta;
    else
        pert["dc"] = dc;
    FanSystem sys{fp};
    FanSolution sol = fan_respond(sys.believed(s, pert));
    Vector u(2);
    u << sol.m, sol.p;
    AttackOutcome out = assemble_outcome(sys, s, pert, u);
    return out;
}

struct FanThetaTrueResult {
    FanSolution solution;
    Vec3 dtheta = Vec3::Zero();
    AttackOutcome outcome;
};

// Min-max over true theta: the attacker's best response is tau (m, m^2, p), leaving the robust
// objective J + sqrt(2 delta (m^2 + m^4 + p^2)) on the envelope.
inline FanThetaTrueResult fan_theta_true_attack(const FanParams& fp) {
    fp.validate();
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_theta_max;
    FanSolution base = fan_respond({th, c});
    auto sys = [&](const auto& v) {
        using S = std::decay_t<decltype(v[0])>;
        using std::sqrt;
        const S &m = v[0], &p = v[1];
        S gm = th[0] + 2.0 * th[1] * m, gp = S(th[2]);
        if (dl > 0.0) {
            S root = sqrt(2.0 * dl * (m * m + m * m * m * m + p * p));
            gm = gm + dl * (2.0 * m + 4.0 * m * m * m) / root;
            gp = gp + 2.0 * dl * p / root;
        }
        return std::array<S, 2>{gm * (p - c[1]) - gp * (m - c[0]), fan::envelope(m, p, c[0], c[1], c[2])};
    };
    auto u = fan::newton<2>(sys, {base.m, base.p});
    const double m = u[0], p = u[1];
    double q = m * m + m * m * m * m + p * p;
    double tau = dl > 0.0 ? std::sqrt(2.0 * dl / q) : 0.0;
    FanThetaTrueResult r;
    r.dtheta = tau * Vec3(m, m * m, p);

    // Cross-check against a direct NLP solve of the robust counterpart.
    NlpProblem prob(2);
    prob.objective = local_function<2>({0, 1}, [th, dl](const auto& v) {
        using std::sqrt;
        return fan::cost(th[0], th[1], th[2], v[0], v[1]) +
               sqrt(2.0 * dl * (v[0] * v[0] + v[0] * v[0] * v[0] * v[0] + v[1] * v[1]) + 1e-300);
    });
    prob.ineq_constraints.push_back(
        local_function<2>({0, 1}, [c](const auto& v) { return fan::envelope(v[0], v[1], c[0], c[1], c[2]); }));
    NlpOptions opt;
    opt.n_starts = 1;
    Vector x0(2);
    x0 << base.m, base.p;
    KktPoint pt = solve_nlp(prob, x0, 1e-10, opt);
    double gap = std::max(std::abs(pt.x[0] - m), std::abs(pt.x[1] - p));
    if (gap > 1e-6) throw Error(ErrorCode::NewtonDiverged, "robust counterpart: reduced system disagrees with NLP");

    const Vec3 tt = th + r.dtheta;
    r.solution.m = m;
    r.solution.p = p;
    r.solution.power = fan::cost(tt[0], tt[1], tt[2], m, p);
    r.solution.duals["lambda"] = fan::envelope_multiplier(tt, c, m, p);
    r.solution.duals["sigma"] = tau > 0.0 ? 1.0 / tau : 0.0;
    PerceptionScenario s = fan_scenario(fp, AttackerMode::theta_true, DefenderBelief::normal, false, dl);
    r.outcome = fan_assemble(fp, s, r.dtheta, Vec3::Zero());
    return r;
}

namespace fan {

// Perception attack on theta with the defender KKT substituted: on the envelope, the attacker's Delta theta
// is tau (p - c_p, 2 (p - c_p) m, -(m - c_m)), and the defender stationarity at theta + Delta theta remains.
inline std::vector<std::pair<Vec3, Response>> theta_perception_candidates(const FanParams& fp, double sign) {
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_theta_max;
    auto h = [&](double m, double p) {
        auto d = theta_attack_map(m, p, c[0], c[1], dl, sign);
        return stationarity(th[0] + d[0], th[1] + d[1], th[2] + d[2], m, p, c[0], c[1]);
    };
    std::vector<std::pair<Vec3, Response>> out;
    for (auto r : circle_roots(c, h)) {
        // polish on the 2x2 reduced system
        auto sys = [&](const auto& v) {
            using S = std::decay_t<decltype(v[0])>;
            auto d = theta_attack_map<S>(v[0], v[1], c[0], c[1], dl, sign);
            return std::array<S, 2>{stationarity(th[0] + d[0], th[1] + d[1], th[2] + d[2], v[0], v[1], c[0], c[1]),
                                    envelope(v[0], v[1], c[0], c[1], c[2])};
        };
        try {
            r = newton<2>(sys, r);
        } catch (const Error&) {
        }
        auto d = theta_attack_map(r[0], r[1], c[0], c[1], dl, sign);
        Vec3 dth(d[0], d[1], d[2]), thh = th + dth;
        double lam = envelope_multiplier(thh, c, r[0], r[1]);
        if (lam <= 0.0) continue;
        out.push_back({dth, Response{r[0], r[1], lam}});
    }
    return out;
}

}  // namespace fan

inline AttackOutcome fan_theta_perception_attack(const FanParams& fp, FanBranch branch = FanBranch::best) {
    fp.validate();
    PerceptionScenario s = fan_scenario(fp, AttackerMode::theta_perception, DefenderBelief::normal, false,
                                        fp.delta_theta_max);
    if (fp.delta_theta_max == 0.0) return fan_assemble(fp, s, Vec3::Zero(), Vec3::Zero());
    std::vector<double> signs;
    if (branch != FanBranch::negative) signs.push_back(1.0);
    if (branch != FanBranch::positive) signs.push_back(-1.0);
    std::optional<Vec3> best;
    double best_val = -kInf;
    for (double sg : signs) {
        for (const auto& [dth, r] : fan::theta_perception_candidates(fp, sg)) {
            double v = fan::cost(fp.theta[0], fp.theta[1], fp.theta[2], r.m, r.p);
            if (v > best_val) {
                best_val = v;
                best = dth;
            }
        }
    }
    if (!best) throw Error(ErrorCode::NewtonDiverged, "no perception-attack stationary point on the envelope");
    return fan_assemble(fp, s, *best, Vec3::Zero());
}

struct FanAwareResult {
    FanSolution solution;
    Vec3 theta_reconstructed = Vec3::Zero();
    Vec3 dtheta_assumed = Vec3::Zero();
    AttackOutcome outcome;
};

// fp.theta is what the defender observes.
inline FanAwareResult fan_theta_defender_aware(const FanParams& fp) {
    fp.validate();
    FanAwareResult r;
    r.theta_reconstructed = fan::recover_theta(fp.theta, fp.c(), fp.delta_theta_max);
    r.dtheta_assumed = fp.theta - r.theta_reconstructed;
    r.solution = fan_respond({r.theta_reconstructed, fp.c()});
    PerceptionScenario s = fan_scenario(fp, AttackerMode::none, DefenderBelief::anticipates_theta, false,
                                        fp.delta_theta_max);
    r.outcome = fan_assemble(fp, s, Vec3::Zero(), Vec3::Zero());
    return r;
}

namespace fan {

// Stacked single-level problem for the theta double-bluff, variables
// (dth1, dth2, dth3, m_hat, p_hat, m, p, tau).
struct ThetaBluffLayout {
    static constexpr Index n = 8;
    static constexpr Index mh = 3, ph = 4, m = 5, p = 6, tau = 7;
};

inline std::array<double, 6> theta_bluff_residuals(const FanParams& fp, const Vector& z) {
    const Vec3 th = fp.theta, c = fp.c();
    using L = ThetaBluffLayout;
    double mh = z[L::mh], ph = z[L::ph], m = z[L::m], p = z[L::p], tau = z[L::tau];
    Vec3 thh = th + z.head<3>();
    Vec3 dd(tau * (ph - c[1]), 2.0 * tau * (ph - c[1]) * mh, -tau * (mh - c[0]));
    Vec3 tht = thh - dd;
    return {envelope(mh, ph, c[0], c[1], c[2]),
            stationarity(thh[0], thh[1], thh[2], mh, ph, c[0], c[1]),
            envelope(m, p, c[0], c[1], c[2]),
            stationarity(tht[0], tht[1], tht[2], m, p, c[0], c[1]),
            tau * tau * ((ph - c[1]) * (ph - c[1]) + 4.0 * (ph - c[1]) * (ph - c[1]) * mh * mh + (mh - c[0]) * (mh - c[0])) -
                2.0 * fp.delta_theta_max,
            0.5 * z.head<3>().squaredNorm() - fp.delta_theta_max};
}

inline NlpProblem theta_bluff_problem(const FanParams& fp) {
    using L = ThetaBluffLayout;
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_theta_max;
    NlpProblem prob(L::n);
    prob.objective = local_function<2>({L::m, L::p}, [th](const auto& v) { return -cost(th[0], th[1], th[2], v[0], v[1]); });
    prob.eq_constraints.push_back(
        local_function<2>({L::mh, L::ph}, [c](const auto& v) { return envelope(v[0], v[1], c[0], c[1], c[2]); }));
    prob.eq_constraints.push_back(local_function<5>({0, 1, 2, L::mh, L::ph}, [th, c](const auto& v) {
        return stationarity(th[0] + v[0], th[1] + v[1], th[2] + v[2], v[3], v[4], c[0], c[1]);
    }));
    prob.eq_constraints.push_back(
        local_function<2>({L::m, L::p}, [c](const auto& v) { return envelope(v[0], v[1], c[0], c[1], c[2]); }));
    prob.eq_constraints.push_back(local_function<8>({0, 1, 2, L::mh, L::ph, L::m, L::p, L::tau}, [th, c](const auto& v) {
        const auto &mh = v[3], &ph = v[4], &tau = v[7];
        auto t1 = th[0] + v[0] - tau * (ph - c[1]);
        auto t2 = th[1] + v[1] - 2.0 * tau * (ph - c[1]) * mh;
        auto t3 = th[2] + v[2] + tau * (mh - c[0]);
        return stationarity(t1, t2, t3, v[5], v[6], c[0], c[1]);
    }));
    prob.eq_constraints.push_back(local_function<3>({L::mh, L::ph, L::tau}, [c, dl](const auto& v) {
        auto a = v[1] - c[1];
        return v[2] * v[2] * (a * a + 4.0 * a * a * v[0] * v[0] + (v[0] - c[0]) * (v[0] - c[0])) - 2.0 * dl;
    }));
    prob.ineq_constraints.push_back(
        local_function<3>({0, 1, 2}, [dl](const auto& v) { return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - dl; }));
    prob.ineq_constraints.push_back(local_function<5>({0, 1, 2, L::mh, L::ph}, [th, c](const auto& v) {
        return multiplier_sign(th[0] + v[0], th[1] + v[1], th[2] + v[2], v[3], v[4], c[0], c[1]);
    }));
    prob.ineq_constraints.push_back(local_function<8>({0, 1, 2, L::mh, L::ph, L::m, L::p, L::tau}, [th, c](const auto& v) {
        const auto &mh = v[3], &ph = v[4], &tau = v[7];
        auto t1 = th[0] + v[0] - tau * (ph - c[1]);
        auto t2 = th[1] + v[1] - 2.0 * tau * (ph - c[1]) * mh;
        auto t3 = th[2] + v[2] + tau * (mh - c[0]);
        return multiplier_sign(t1, t2, t3, v[5], v[6], c[0], c[1]);
    }));
    prob.lower[L::tau] = 0.0;
    return prob;
}

inline Vector theta_bluff_point(const FanParams& fp, const Vec3& dth) {
    using L = ThetaBluffLayout;
    const Vec3 c = fp.c();
    Vec3 thh = fp.theta + dth;
    Response rh = response(thh, c);
    auto d = theta_attack_map(rh.m, rh.p, c[0], c[1], fp.delta_theta_max, 1.0);
    double a = rh.p - c[1];
    double nrm2 = a * a + 4.0 * a * a * rh.m * rh.m + (rh.m - c[0]) * (rh.m - c[0]);
    Response r = response(thh - Vec3(d[0], d[1], d[2]), c);
    Vector z(L::n);
    z << dth, rh.m, rh.p, r.m, r.p, std::sqrt(2.0 * fp.delta_theta_max / nrm2);
    return z;
}

}  // namespace fan

struct FanBluffResult {
    AttackOutcome outcome;
    Vector stacked;                     // point of the stacked single-level problem
    std::vector<double> residuals;      // equation residuals of the stacked system
};

inline FanBluffResult fan_theta_double_bluff_solve(const FanParams& fp) {
    fp.validate();
    const double dl = fp.delta_theta_max;
    PerceptionScenario s = fan_scenario(fp, AttackerMode::theta_perception, DefenderBelief::anticipates_theta, true, dl);
    FanBluffResult res;
    if (dl == 0.0) {
        res.outcome = fan_assemble(fp, s, Vec3::Zero(), Vec3::Zero());
        res.stacked = fan::theta_bluff_point(fp, Vec3::Zero());
        auto r = fan::theta_bluff_residuals(fp, res.stacked);
        res.residuals.assign(r.begin(), r.end());
        return res;
    }
    const Vec3 th = fp.theta;
    auto payoff = [&](const Vec3& d) {
        FanBelief b = fan::believe(fp, DefenderBelief::anticipates_theta, d, Vec3::Zero(), dl);
        fan::Response r = fan::response(b.theta, b.c);
        return fan::cost(th[0], th[1], th[2], r.m, r.p);
    };
    const double rad = std::sqrt(2.0 * dl);
    auto starts = fan::best_grid_points(fan::sphere_grid(rad, 24, 48, {0.5, 1.0}), payoff, 4, 0.25 * rad);
    NlpProblem prob = fan::theta_bluff_problem(fp);
    NlpOptions opt;
    opt.n_starts = 1;
    std::optional<KktPoint> best;
    for (const Vec3& d0 : starts) {
        try {
            KktPoint pt = solve_nlp(prob, fan::theta_bluff_point(fp, d0), 1e-10, opt);
            if (!best || pt.objective < best->objective) best = pt;
        } catch (const Error& e) {
            log(LogLevel::debug, "theta double-bluff start failed: ", e.what());
        }
    }
    if (!best) throw Error(ErrorCode::NoFeasibleStart, "theta double-bluff: no start converged");
    res.stacked = best->x;
    auto r = fan::theta_bluff_residuals(fp, res.stacked);
    res.residuals.assign(r.begin(), r.end());
    res.outcome = fan_assemble(fp, s, res.stacked.head<3>(), Vec3::Zero());
    return res;
}

inline AttackOutcome fan_theta_double_bluff(const FanParams& fp) { return fan_theta_double_bluff_solve(fp).outcome; }

namespace fan {

inline std::array<double, 2> attacker_gradient(const FanParams& fp, FanConstraintMode mode, double m, double p) {
    if (mode == FanConstraintMode::powermax) return {fp.theta[0] + 2.0 * fp.theta[1] * m, fp.theta[2]};
    return {fp.break_weight * (m - fp.c_m), fp.break_weight * (p - fp.c_p)};
}

inline double attacker_payoff(const FanParams& fp, FanConstraintMode mode, double m, double p) {
    if (mode == FanConstraintMode::powermax) return cost(fp.theta[0], fp.theta[1], fp.theta[2], m, p);
    return fp.break_weight * envelope(m, p, fp.c_m, fp.c_p, fp.c_r);
}

// Unaware defender: Newton on (m, p, dc) with the defender's reduced optimality system at the perceived
// envelope and dc from the attacker's KKT map.
inline Vec3 constraint_unaware_attack(const FanParams& fp, FanConstraintMode mode) {
    const double dl = fp.delta_c_max;
    if (dl == 0.0) return Vec3::Zero();
    const Vec3 th = fp.theta, c = fp.c();
    if (mode == FanConstraintMode::break_system && !(fp.break_weight > 0.0))
        throw Error(ErrorCode::ParseError, "break mode needs a positive break weight");
    auto payoff = [&](const Vec3& d) {
        Response r = response(th, perceived_envelope(c, d));
        return attacker_payoff(fp, mode, r.m, r.p);
    };
    const double rad = std::sqrt(2.0 * dl);
    auto starts = best_grid_points(sphere_grid(rad, 24, 48), payoff, 3, 0.25 * rad);
    auto sys = [&](const auto& v) {
        using S = std::decay_t<decltype(v[0])>;
        const S &m = v[0], &p = v[1];
        S chm = c[0] + v[2], chp = c[1] + v[3], chr = c[2] - v[4];
        S gm, gp;
        if (mode == FanConstraintMode::powermax) {
            gm = th[0] + 2.0 * th[1] * m;
            gp = S(th[2]);
        } else {
            gm = fp.break_weight * (m - c[0]);
            gp = fp.break_weight * (p - c[1]);
        }
        auto d = constraint_attack_map<S>(th, m, p, chm, chp, chr, gm, gp, dl);
        return std::array<S, 5>{stationarity(th[0], th[1], th[2], m, p, chm, chp), envelope(m, p, chm, chp, chr),
                                v[2] - d[0], v[3] - d[1], v[4] - d[2]};
    };
    std::optional<Vec3> best;
    double best_val = -kInf;
    for (const Vec3& d0 : starts) {
        try {
            Response r0 = response(th, perceived_envelope(c, d0));
            auto z = newton<5>(sys, {r0.m, r0.p, d0[0], d0[1], d0[2]});
            Vec3 d(z[2], z[3], z[4]);
            Vec3 ch = perceived_envelope(c, d);
            if (envelope_multiplier(th, ch, z[0], z[1]) <= 0.0) continue;
            double v = attacker_payoff(fp, mode, z[0], z[1]);
            if (v > best_val) {
                best_val = v;
                best = d;
            }
        } catch (const Error& e) {
            log(LogLevel::debug, "constraint attack start failed: ", e.what());
        }
    }
    if (!best) throw Error(ErrorCode::NewtonDiverged, "constraint attack: reduced system did not converge");
    return *best;
}

// Stacked problem for the constraint double-bluff, variables
// (dc_m, dc_p, dc_r, m_hat, p_hat, ct_m, ct_p, ct_r, m, p); ct is the envelope the defender reconstructs.
struct ConstraintBluffLayout {
    static constexpr Index n = 10;
    static constexpr Index mh = 3, ph = 4, ct = 5, m = 8, p = 9;
};

template <typename S>
std::array<S, 3> bluff_recovery_residual(const Vec3& th, const Vec3& c, double dl, FanConstraintMode belief,
                                         const std::array<S, 8>& v) {
    // v = (dc_m, dc_p, dc_r, m_hat, p_hat, ct_m, ct_p, ct_r)
    S chm = c[0] + v[0], chp = c[1] + v[1], chr = c[2] - v[2];
    const S &mh = v[3], &ph = v[4];
    S gm, gp;
    if (belief == FanConstraintMode::powermax) {
        gm = th[0] + 2.0 * th[1] * mh;
        gp = S(th[2]);
    } else {
        gm = mh - v[5];
        gp = ph - v[6];
    }
    auto d = constraint_attack_map<S>(th, mh, ph, chm, chp, chr, gm, gp, dl);
    return {v[5] + d[0] - chm, v[6] + d[1] - chp, v[7] - d[2] - chr};
}

inline NlpProblem constraint_bluff_problem(const FanParams& fp, FanConstraintMode mode, FanConstraintMode belief) {
    using L = ConstraintBluffLayout;
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_c_max, w = fp.break_weight;
    NlpProblem prob(L::n);
    if (mode == FanConstraintMode::powermax)
        prob.objective =
            local_function<2>({L::m, L::p}, [th](const auto& v) { return -cost(th[0], th[1], th[2], v[0], v[1]); });
    else
        prob.objective =
            local_function<2>({L::m, L::p}, [c, w](const auto& v) { return -w * envelope(v[0], v[1], c[0], c[1], c[2]); });
    prob.eq_constraints.push_back(local_function<5>({0, 1, 2, L::mh, L::ph}, [th, c](const auto& v) {
        return stationarity(th[0], th[1], th[2], v[3], v[4], c[0] + v[0], c[1] + v[1]);
    }));
    prob.eq_constraints.push_back(local_function<5>({0, 1, 2, L::mh, L::ph}, [c](const auto& v) {
        return envelope(v[3], v[4], c[0] + v[0], c[1] + v[1], c[2] - v[2]);
    }));
    for (int k = 0; k < 3; ++k) {
        prob.eq_constraints.push_back(local_function<8>(
            {0, 1, 2, L::mh, L::ph, L::ct, L::ct + 1, L::ct + 2},
            [th, c, dl, belief, k](const auto& v) { return bluff_recovery_residual(th, c, dl, belief, v)[k]; }));
    }
    prob.eq_constraints.push_back(local_function<4>({L::ct, L::ct + 1, L::m, L::p}, [th](const auto& v) {
        return stationarity(th[0], th[1], th[2], v[2], v[3], v[0], v[1]);
    }));
    prob.eq_constraints.push_back(local_function<5>({L::ct, L::ct + 1, L::ct + 2, L::m, L::p}, [](const auto& v) {
        return envelope(v[3], v[4], v[0], v[1], v[2]);
    }));
    prob.ineq_constraints.push_back(
        local_function<3>({0, 1, 2}, [dl](const auto& v) { return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - dl; }));
    prob.ineq_constraints.push_back(local_function<4>({0, 1, L::mh, L::ph}, [th, c](const auto& v) {
        return multiplier_sign(th[0], th[1], th[2], v[2], v[3], c[0] + v[0], c[1] + v[1]);
    }));
    prob.ineq_constraints.push_back(local_function<4>({L::ct, L::ct + 1, L::m, L::p}, [th](const auto& v) {
        return multiplier_sign(th[0], th[1], th[2], v[2], v[3], v[0], v[1]);
    }));
    return prob;
}

inline Vector constraint_bluff_point(const FanParams& fp, FanConstraintMode belief, const Vec3& dc) {
    using L = ConstraintBluffLayout;
    const Vec3 ch = perceived_envelope(fp.c(), dc);
    Response rh = response(fp.theta, ch);
    Vec3 ct = belief == FanConstraintMode::powermax ? recover_powermax(fp.theta, ch, fp.delta_c_max)
                                                    : recover_break(fp.theta, ch, fp.delta_c_max);
    Response r = response(fp.theta, ct);
    Vector z(L::n);
    z << dc, rh.m, rh.p, ct, r.m, r.p;
    return z;
}

inline DefenderBelief belief_of(FanConstraintMode m) {
    return m == FanConstraintMode::powermax ? DefenderBelief::anticipates_powermax : DefenderBelief::anticipates_break;
}

inline AttackerMode mode_of(FanConstraintMode m) {
    return m == FanConstraintMode::powermax ? AttackerMode::constraint_powermax : AttackerMode::constraint_break;
}

}  // namespace fan

inline FanBluffResult fan_constraint_double_bluff_solve(const FanParams& fp, FanConstraintMode mode,
                                                        FanConstraintMode belief) {
    fp.validate();
    const double dl = fp.delta_c_max;
    PerceptionScenario s = fan_scenario(fp, fan::mode_of(mode), fan::belief_of(belief), true, dl);
    FanBluffResult res;
    if (dl == 0.0) {
        res.stacked = fan::constraint_bluff_point(fp, belief, Vec3::Zero());
        res.outcome = fan_assemble(fp, s, Vec3::Zero(), Vec3::Zero());
        return res;
    }
    auto payoff = [&](const Vec3& d) {
        FanBelief b = fan::believe(fp, fan::belief_of(belief), Vec3::Zero(), d, dl);
        fan::Response r = fan::response(b.theta, b.c);
        return fan::attacker_payoff(fp, mode, r.m, r.p);
    };
    const double rad = std::sqrt(2.0 * dl);
    auto starts = fan::best_grid_points(fan::sphere_grid(rad, 16, 32, {0.5, 1.0}), payoff, 4, 0.25 * rad);
    NlpProblem prob = fan::constraint_bluff_problem(fp, mode, belief);
    NlpOptions opt;
    opt.n_starts = 1;
    std::optional<KktPoint> best;
    for (const Vec3& d0 : starts) {
        try {
            KktPoint pt = solve_nlp(prob, fan::constraint_bluff_point(fp, belief, d0), 1e-10, opt);
            if (!best || pt.objective < best->objective) best = pt;
        } catch (const Error& e) {
            log(LogLevel::debug, "constraint double-bluff start failed: ", e.what());
        }
    }
    if (!best) throw Error(ErrorCode::NoFeasibleStart, "constraint double-bluff: no start converged");
    res.stacked = best->x;
    KktReport rep = kkt_residual(prob, *best);
    res.residuals = {rep.feasibility};
    res.outcome = fan_assemble(fp, s, Vec3::Zero(), res.stacked.head<3>());
    return res;
}

inline AttackOutcome fan_constraint_attack(const FanParams& fp, FanConstraintMode mode, FanAwareness awareness) {
    fp.validate();
    if (awareness == FanAwareness::double_bluff) return fan_constraint_double_bluff_solve(fp, mode, mode).outcome;
    Vec3 dc = fan::constraint_unaware_attack(fp, mode);
    DefenderBelief belief = awareness == FanAwareness::aware ? fan::belief_of(mode) : DefenderBelief::normal;
    PerceptionScenario s = fan_scenario(fp, fan::mode_of(mode), belief, false, fp.delta_c_max);
    return fan_assemble(fp, s, Vec3::Zero(), dc);
}

// Attacker plays against a normal defender; the defender acts on its own belief.
inline AttackOutcome fan_cross_case(const FanParams& fp, FanAction action, DefenderBelief belief) {
    fp.validate();
    Vec3 dc = Vec3::Zero();
    AttackerMode mode = AttackerMode::none;
    if (action != FanAction::none) {
        FanConstraintMode cm = action == FanAction::powermax ? FanConstraintMode::powermax : FanConstraintMode::break_system;
        dc = fan::constraint_unaware_attack(fp, cm);
        mode = fan::mode_of(cm);
    }
    PerceptionScenario s = fan_scenario(fp, mode, belief, false, fp.delta_c_max);
    return fan_assemble(fp, s, Vec3::Zero(), dc);
}

// Generic MPEC forms, used to cross-check the reductions. Variables (d1, d2, d3, m, p, lambda) with the
// defender's KKT system in complementarity form.
inline NlpProblem fan_perception_mpec(const FanParams& fp) {
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_theta_max;
    NlpProblem prob(6);
    prob.objective = local_function<2>({3, 4}, [th](const auto& v) { return -fan::cost(th[0], th[1], th[2], v[0], v[1]); });
    prob.eq_constraints.push_back(local_function<5>({0, 1, 3, 5, 4}, [th, c](const auto& v) {
        return th[0] + v[0] + 2.0 * (th[1] + v[1]) * v[2] + v[3] * (v[2] - c[0]);
    }));
    prob.eq_constraints.push_back(
        local_function<3>({2, 4, 5}, [th, c](const auto& v) { return th[2] + v[0] + v[2] * (v[1] - c[1]); }));
    prob.ineq_constraints.push_back(
        local_function<3>({0, 1, 2}, [dl](const auto& v) { return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - dl; }));
    prob.nonneg_exprs.push_back(variable_expr(5, 1.0, 0.0));
    prob.nonneg_exprs.push_back(
        local_function<2>({3, 4}, [c](const auto& v) { return -fan::envelope(v[0], v[1], c[0], c[1], c[2]); }));
    prob.comp_pairs.push_back({0, 1});
    prob.lower[5] = 0.0;
    return prob;
}

inline NlpProblem fan_constraint_mpec(const FanParams& fp, FanConstraintMode mode) {
    const Vec3 th = fp.theta, c = fp.c();
    const double dl = fp.delta_c_max, w = fp.break_weight;
    NlpProblem prob(6);
    if (mode == FanConstraintMode::powermax)
        prob.objective = local_function<2>({3, 4}, [th](const auto& v) { return -fan::cost(th[0], th[1], th[2], v[0], v[1]); });
    else
        prob.objective =
            local_function<2>({3, 4}, [c, w](const auto& v) { return -w * fan::envelope(v[0], v[1], c[0], c[1], c[2]); });
    prob.eq_constraints.push_back(local_function<3>({0, 3, 5}, [th, c](const auto& v) {
        return th[0] + 2.0 * th[1] * v[1] + v[2] * (v[1] - c[0] - v[0]);
    }));
    prob.eq_constraints.push_back(
        local_function<3>({1, 4, 5}, [th, c](const auto& v) { return th[2] + v[2] * (v[1] - c[1] - v[0]); }));
    prob.ineq_constraints.push_back(
        local_function<3>({0, 1, 2}, [dl](const auto& v) { return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - dl; }));
    prob.nonneg_exprs.push_back(variable_expr(5, 1.0, 0.0));
    prob.nonneg_exprs.push_back(local_function<5>(
        {0, 1, 2, 3, 4}, [c](const auto& v) { return -fan::envelope(v[3], v[4], c[0] + v[0], c[1] + v[1], c[2] - v[2]); }));
    prob.comp_pairs.push_back({0, 1});
    prob.lower[5] = 0.0;
    return prob;
}

// Start for the MPEC forms: a perturbation from the budget grid and the matching defender optimum.
inline Vector fan_mpec_start(const FanParams& fp, bool theta_attack, const Vec3& d) {
    FanBelief b{fp.theta, fp.c()};
    if (theta_attack)
        b.theta += d;
    else
        b.c = fan::perceived_envelope(fp.c(), d);
    fan::Response r = fan::response(b.theta, b.c);
    Vector z(6);
    z << d, r.m, r.p, r.lambda;
    return z;
}

struct FanMpecResult {
    double m = 0.0, p = 0.0;
    Vec3 delta = Vec3::Zero();
    KktPoint point;
};

inline FanMpecResult fan_solve_mpec(const FanParams& fp, const NlpProblem& prob, bool theta_attack,
                                    const std::function<double(const Vec3&)>& payoff) {
    double dl = theta_attack ? fp.delta_theta_max : fp.delta_c_max;
    double rad = std::sqrt(2.0 * dl);
    Vec3 d0 = Vec3::Zero();
    if (dl > 0.0) d0 = fan::best_grid_points(fan::sphere_grid(rad, 12, 24), payoff, 1, 0.0)[0];
    RelaxationSchedule sch;
    FanMpecResult r;
    r.point = solve_mpec(prob, fan_mpec_start(fp, theta_attack, d0), sch);
    r.delta = r.point.x.head<3>();
    r.m = r.point.x[3];
    r.p = r.point.x[4];
    return r;
}

inline FanMpecResult fan_perception_attack_mpec(const FanParams& fp) {
    auto payoff = [&](const Vec3& d) {
        fan::Response r = fan::response(fp.theta + d, fp.c());
        return fan::cost(fp.theta[0], fp.theta[1], fp.theta[2], r.m, r.p);
    };
    return fan_solve_mpec(fp, fan_perception_mpec(fp), true, payoff);
}

inline FanMpecResult fan_constraint_attack_mpec(const FanParams& fp, FanConstraintMode mode) {
    auto payoff = [&](const Vec3& d) {
        fan::Response r = fan::response(fp.theta, fan::perceived_envelope(fp.c(), d));
        return fan::attacker_payoff(fp, mode, r.m, r.p);
    };
    return fan_solve_mpec(fp, fan_constraint_mpec(fp, mode), false, payoff);
}

// Scenario dispatch used by the CLI; the scenario budget overrides the matching FanParams budget.
inline AttackOutcome fan_outcome(FanParams fp, const PerceptionScenario& s) {
    s.validate();
    const bool theta_family = s.attacker_mode == AttackerMode::theta_true || s.attacker_mode == AttackerMode::theta_perception ||
                              s.defender_belief == DefenderBelief::anticipates_theta;
    if (theta_family)
        fp.delta_theta_max = s.budget;
    else
        fp.delta_c_max = s.budget;
    if (s.break_weights.size() > 0) fp.break_weight = s.break_weights[0];
    switch (s.attacker_mode) {
    case AttackerMode::none:
        if (s.defender_belief == DefenderBelief::normal) {
            PerceptionScenario b = fan_scenario(fp, AttackerMode::none, DefenderBelief::normal, false, s.budget);
            return fan_assemble(fp, b, Vec3::Zero(), Vec3::Zero());
        }
        if (s.defender_belief == DefenderBelief::anticipates_theta) return fan_theta_defender_aware(fp).outcome;
        return fan_cross_case(fp, FanAction::none, s.defender_belief);
    case AttackerMode::theta_true:
        if (s.defender_belief != DefenderBelief::normal)
            throw Error(ErrorCode::UnknownMode, "true-parameter manipulation is played against a normal defender");
        return fan_theta_true_attack(fp).outcome;
    case AttackerMode::theta_perception:
        if (s.defender_belief == DefenderBelief::normal) return fan_theta_perception_attack(fp);
        if (s.defender_belief == DefenderBelief::anticipates_theta && s.attacker_anticipates_defender)
            return fan_theta_double_bluff(fp);
        if (s.defender_belief == DefenderBelief::anticipates_theta) {
            AttackOutcome a = fan_theta_perception_attack(fp);
            PerceptionScenario b = fan_scenario(fp, AttackerMode::theta_perception, DefenderBelief::anticipates_theta, false, s.budget);
            return fan_assemble(fp, b, Vec3(a.perturbation.at("dtheta")), Vec3::Zero());
        }
        throw Error(ErrorCode::UnknownMode, "theta attack against a defender anticipating an envelope attack");
    case AttackerMode::constraint_powermax:
    case AttackerMode::constraint_break: {
        FanConstraintMode cm =
            s.attacker_mode == AttackerMode::constraint_powermax ? FanConstraintMode::powermax : FanConstraintMode::break_system;
        if (s.defender_belief == DefenderBelief::anticipates_theta)
            throw Error(ErrorCode::UnknownMode, "envelope attack against a defender anticipating a theta attack");
        if (s.attacker_anticipates_defender) {
            FanConstraintMode bm = s.defender_belief == DefenderBelief::anticipates_powermax ? FanConstraintMode::powermax
                                                                                              : FanConstraintMode::break_system;
            return fan_constraint_double_bluff_solve(fp, cm, bm).outcome;
        }
        return fan_cross_case(fp, cm == FanConstraintMode::powermax ? FanAction::powermax : FanAction::break_system,
                              s.defender_belief);
    }
    default: throw Error(ErrorCode::UnknownMode, std::string("mode ") + to_string(s.attacker_mode) + " is not a fan mode");
    }
}

}  // namespace hypergame

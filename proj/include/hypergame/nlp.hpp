#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include "error.hpp"
#include "function.hpp"
#include "log.hpp"

namespace hypergame {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NlpProblem {
    Index n_vars = 0;
    ScalarFunction objective;
    std::vector<ScalarFunction> eq_constraints;    // h(x) = 0
    std::vector<ScalarFunction> ineq_constraints;  // g(x) <= 0
    std::vector<ScalarFunction> nonneg_exprs;      // e(x) >= 0
    std::vector<std::pair<std::size_t, std::size_t>> comp_pairs;
    Vector lower;
    Vector upper;

    explicit NlpProblem(Index n = 0)
        : n_vars(n), lower(Vector::Constant(n, -kInf)), upper(Vector::Constant(n, kInf)) {}
};

struct KktPoint {
    Vector x;
    Vector lambda_eq;
    Vector lambda_ineq;
    Vector lambda_nonneg;  // multipliers of e(x) >= 0, MPEC problems only
    double objective = 0.0;
    double stationarity_residual = 0.0;
    double feas_residual = 0.0;
    double comp_residual = 0.0;
    int iterations = 0;
};

struct KktReport {
    double stationarity = 0.0;
    double feasibility = 0.0;
    double complementarity = 0.0;
    double sign_violation = 0.0;

    double max() const { return std::max({stationarity, feasibility, complementarity, sign_violation}); }
};

enum class NlpMethod { interior_point, augmented_lagrangian };

struct NlpOptions {
    NlpMethod method = NlpMethod::interior_point;
    double mu0 = 0.1;          // initial barrier parameter
    double bound_push = 1e-2;  // relative distance the start is pushed inside finite bounds
    int max_iter = 3000;       // interior-point iterations
    int n_starts = 8;
    double start_spread = 0.1;
    unsigned seed = 0;
    int max_outer = 60;
    int max_inner = 20000;
    double penalty0 = 10.0;
    double penalty_max = 1e12;
    bool newton = true;  // projected Newton inner solves when every function has a Hessian
    Vector lambda_eq0, lambda_ineq0;  // initial multipliers; empty means estimate them at a feasible start
};

namespace detail {

inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteEvaluation, what);
}

inline Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

inline double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi) {
    return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

inline void validate(const NlpProblem& p, const Vector& x0) {
    if (x0.size() != p.n_vars || p.lower.size() != p.n_vars || p.upper.size() != p.n_vars)
        throw Error(ErrorCode::DimensionMismatch, "variable vector and bounds must have n_vars entries");
    for (const auto& [i, j] : p.comp_pairs)
        if (i >= p.nonneg_exprs.size() || j >= p.nonneg_exprs.size())
            throw Error(ErrorCode::DimensionMismatch, "complementarity pair references an unknown expression");
    for (Index i = 0; i < p.n_vars; ++i)
        if (p.lower[i] > p.upper[i]) throw Error(ErrorCode::Infeasible, "crossed variable bounds");
}

struct InnerResult {
    int iterations = 0;
    double pg_norm = 0.0;
    bool converged = false;
};

// Projected BFGS on a box. H is the inverse Hessian estimate, reused across calls.
template <typename Fun>
InnerResult minimize_box(Fun&& fun, Vector& x, const Vector& lo, const Vector& hi, double tol, int max_iter,
                         Matrix& H) {
    const Index n = x.size();
    Vector g(n);
    double f = fun(x, g);
    check_finite(f, "objective at inner start");
    InnerResult res;
    bool fresh = H.size() == 0;
    if (fresh) H = Matrix::Identity(n, n);
    Vector g_new(n), x_new(n), d(n);
    std::vector<Index> free;
    free.reserve(n);
    int failures = 0;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        res.pg_norm = projected_gradient_norm(x, g, lo, hi);
        if (res.pg_norm <= tol) {
            res.converged = true;
            return res;
        }
        double eps = std::min(1e-3, res.pg_norm);
        free.clear();
        d.setZero();
        for (Index i = 0; i < n; ++i) {
            bool at_lo = x[i] <= lo[i] + eps && g[i] > 0.0;
            bool at_hi = x[i] >= hi[i] - eps && g[i] < 0.0;
            if (at_lo || at_hi)
                d[i] = -g[i];
            else
                free.push_back(i);
        }
        for (Index a : free) {
            double s = 0.0;
            for (Index b : free) s -= H(a, b) * g[b];
            d[a] = s;
        }
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            H.setIdentity();
            d = -g;
            slope = -g.squaredNorm();
        }
        double alpha = 1.0;
        bool accepted = false;
        double f_new = f;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = project(x + alpha * d, lo, hi);
            f_new = fun(x_new, g_new);
            Vector step = x_new - x;
            double decrease = g.dot(step);
            if (std::isfinite(f_new) && decrease < 0.0) {
                if (f_new <= f + 1e-4 * decrease) {
                    accepted = true;
                    break;
                }
                // approximate Wolfe: near a minimum f differences drown in roundoff, so trust slopes instead
                if (f_new <= f + 1e-10 * (1.0 + std::abs(f)) && g_new.dot(step) <= (1.0 - 2e-4) * -decrease) {
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (++failures > 2) return res;
            H.setIdentity();
            continue;
        }
        Vector s = x_new - x;
        Vector y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            if (fresh) {
                H *= sy / y.squaredNorm();
                fresh = false;
            }
            double rho = 1.0 / sy;
            Vector Hy = H * y;
            double yHy = y.dot(Hy);
            H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
            H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
            failures = 0;
        }
        x = x_new;
        g = g_new;
        if (std::abs(f_new - f) <= 1e-16 * (1.0 + std::abs(f)) && s.lpNorm<Eigen::Infinity>() <= 1e-16) {
            f = f_new;
            res.pg_norm = projected_gradient_norm(x, g, lo, hi);
            res.converged = res.pg_norm <= tol;
            return res;
        }
        f = f_new;
    }
    res.iterations = max_iter;
    res.pg_norm = projected_gradient_norm(x, g, lo, hi);
    res.converged = res.pg_norm <= tol;
    return res;
}

// Trust-region Newton on a box: generalized Cauchy point along the projected gradient path, then Newton
// refinement on the variables the Cauchy step left free.
template <typename Fun, typename Hess>
InnerResult minimize_box_newton(Fun&& fun, Hess&& hess, Vector& x, const Vector& lo, const Vector& hi, double tol,
                                int max_iter) {
    const Index n = x.size();
    Vector g(n), g_new(n), x_new(n), l(n), u(n), s(n), Hs(n);
    Matrix H(n, n);
    double f = fun(x, g);
    check_finite(f, "objective at inner start");
    InnerResult res;
    auto model = [&](const Vector& step, Vector& Hstep) {
        Hstep.noalias() = H.selfadjointView<Eigen::Lower>() * step;
        return g.dot(step) + 0.5 * step.dot(Hstep);
    };
    double radius = 1.0;
    bool need_hessian = true;
    double best_pg = kInf, f_mark = f;
    int since_best = 0;
    std::vector<Index> free;
    free.reserve(n);
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        res.pg_norm = projected_gradient_norm(x, g, lo, hi);
        if (res.pg_norm <= tol) {
            res.converged = true;
            return res;
        }
        // stagnation at the roundoff floor: neither the gradient nor f has moved materially in a while
        if (res.pg_norm < 0.5 * best_pg) {
            best_pg = res.pg_norm;
            since_best = 0;
            f_mark = f;
        } else if (++since_best >= 100) {
            if (f_mark - f <= 1e-9 * (1.0 + std::abs(f))) return res;
            since_best = 0;
            f_mark = f;
        }
        if (need_hessian) {
            H.setZero();
            hess(x, H);
            H = H.selfadjointView<Eigen::Lower>();
            need_hessian = false;
        }
        l = (lo - x).cwiseMax(-radius);
        u = (hi - x).cwiseMin(radius);

        // Cauchy point
        double gmax = g.lpNorm<Eigen::Infinity>();
        double t = radius / std::max(gmax, 1e-300);
        auto cauchy = [&](double tt) { return (-tt * g).cwiseMax(l).cwiseMin(u); };
        auto sufficient = [&](const Vector& step) {
            double lin = g.dot(step);
            return lin < 0.0 && model(step, Hs) <= 0.01 * lin;
        };
        s = cauchy(t);
        if (sufficient(s)) {
            for (int k = 0; k < 20; ++k) {
                Vector s2 = cauchy(2.0 * t);
                if ((s2 - s).lpNorm<Eigen::Infinity>() == 0.0 || !sufficient(s2)) break;
                t *= 2.0;
                s = s2;
            }
        } else {
            for (int k = 0; k < 80; ++k) {
                t *= 0.5;
                s = cauchy(t);
                if (sufficient(s)) break;
            }
        }
        double q = model(s, Hs);

        // Newton refinement on the free subspace
        for (int k = 0; k < 5; ++k) {
            free.clear();
            for (Index i = 0; i < n; ++i)
                if (s[i] > l[i] && s[i] < u[i]) free.push_back(i);
            const Index nf = static_cast<Index>(free.size());
            if (nf == 0) break;
            Vector r = g + Hs;
            Matrix Hf(nf, nf);
            Vector rf(nf);
            for (Index a2 = 0; a2 < nf; ++a2) {
                rf[a2] = r[free[a2]];
                for (Index b2 = 0; b2 < nf; ++b2) Hf(a2, b2) = H(free[a2], free[b2]);
            }
            if (rf.lpNorm<Eigen::Infinity>() <= 1e-300) break;
            double scale = std::max(1e-300, Hf.diagonal().cwiseAbs().maxCoeff());
            // Levenberg shift: positive definite, step within the trust radius, and close to it when shifted
            auto try_shift = [&](double sh, Vector& out) {
                Matrix M = Hf;
                M.diagonal().array() += sh;
                Eigen::LLT<Matrix> llt(M);
                if (llt.info() != Eigen::Success) return false;
                out = -llt.solve(rf);
                return out.allFinite() && rf.dot(out) < 0.0 && out.norm() <= radius;
            };
            Vector df, trial_d;
            if (!try_shift(0.0, df)) {
                double lo_s = 0.0, hi_s = std::max(1e-12 * scale, 1e-3 * rf.norm() / radius);
                bool found = false;
                for (int attempt = 0; attempt < 80 && !found; ++attempt) {
                    if (try_shift(hi_s, df))
                        found = true;
                    else {
                        lo_s = hi_s;
                        hi_s *= 4.0;
                    }
                }
                if (!found) df.resize(0);
                for (int bis = 0; found && bis < 4; ++bis) {
                    double mid = lo_s > 0.0 ? std::sqrt(lo_s * hi_s) : 0.25 * hi_s;
                    if (try_shift(mid, trial_d)) {
                        hi_s = mid;
                        df = trial_d;
                    } else {
                        lo_s = mid;
                    }
                }
            }
            if (df.size() != nf) break;
            Vector d = Vector::Zero(n);
            for (Index a2 = 0; a2 < nf; ++a2) d[free[a2]] = df[a2];
            bool moved = false, clipped = false;
            double alpha = 1.0;
            {
                Vector trial = (s + d).cwiseMax(l).cwiseMin(u);
                Vector Ht(n);
                double qt = model(trial, Ht);
                if (qt <= q + 0.01 * r.dot(trial - s) && qt < q) {
                    clipped = (trial - (s + d)).lpNorm<Eigen::Infinity>() > 0.0;
                    s = trial;
                    Hs = Ht;
                    q = qt;
                    moved = true;
                }
            }
            if (!moved) {
                // stop at the first breakpoint and minimize the model exactly along d
                double amax = 1.0;
                for (Index i : free) {
                    if (d[i] > 0.0) amax = std::min(amax, (u[i] - s[i]) / d[i]);
                    if (d[i] < 0.0) amax = std::min(amax, (l[i] - s[i]) / d[i]);
                }
                Vector Hd = H.selfadjointView<Eigen::Lower>() * d;
                double slope = r.dot(d), curv = d.dot(Hd);
                alpha = curv > 0.0 ? std::min(amax, -slope / curv) : amax;
                if (alpha > 0.0 && slope < 0.0) {
                    Vector trial = (s + alpha * d).cwiseMax(l).cwiseMin(u);
                    Vector Ht(n);
                    double qt = model(trial, Ht);
                    if (qt < q) {
                        clipped = alpha >= amax;
                        s = trial;
                        Hs = Ht;
                        q = qt;
                        moved = true;
                    }
                }
                if (moved && clipped) {
                    // pin the variable that reached its bound
                    for (Index i : free)
                        if (std::abs(s[i] - u[i]) <= 1e-15 * (1.0 + std::abs(u[i])) && d[i] > 0.0) s[i] = u[i];
                        else if (std::abs(s[i] - l[i]) <= 1e-15 * (1.0 + std::abs(l[i])) && d[i] < 0.0) s[i] = l[i];
                }
            }
            if (!moved || (!clipped && alpha == 1.0)) break;
        }

        x_new = project(x + s, lo, hi);
        double f_new = fun(x_new, g_new);
        double pred = -q, ared = f - f_new;
        double snorm = s.norm();
        // differences of f drown in roundoff for short steps; a trapezoid estimate from gradients does not
        if (std::isfinite(f_new) && std::abs(ared) <= 1e-10 * (1.0 + std::abs(f)))
            ared = -0.5 * (g + g_new).dot(x_new - x);
        double rho = std::isfinite(f_new) && pred > 0.0 ? ared / pred : -1.0;
        bool accept = rho > 1e-4;
        if (rho < 0.25 || !accept)
            radius = 0.25 * std::min(radius, snorm);
        else if (rho > 0.75 && snorm >= 0.5 * radius)
            radius *= 2.0;
        if (accept) {
            x = x_new;
            g = g_new;
            f = f_new;
            need_hessian = true;
        }
        if (radius <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
    }
    res.pg_norm = projected_gradient_norm(x, g, lo, hi);
    res.converged = res.pg_norm <= tol;
    return res;
}

inline double radical_inverse(unsigned long long k, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (k > 0) {
        r += f * static_cast<double>(k % base);
        k /= base;
        f *= inv;
    }
    return r;
}

inline unsigned nth_prime(std::size_t n) {
    static const std::vector<unsigned> table = [] {
        std::vector<unsigned> primes;
        for (unsigned c = 2; primes.size() < 4096; ++c) {
            bool prime = true;
            for (unsigned p : primes) {
                if (p * p > c) break;
                if (c % p == 0) {
                    prime = false;
                    break;
                }
            }
            if (prime) primes.push_back(c);
        }
        return primes;
    }();
    return table[n % table.size()];
}

}  // namespace detail

// Residual report for a candidate point; the Lagrangian is f + lambda_eq.h + lambda_ineq.g - lambda_nonneg.e.
inline KktReport kkt_residual(const NlpProblem& p, const KktPoint& pt) {
    if (pt.x.size() != p.n_vars || pt.lambda_eq.size() != static_cast<Index>(p.eq_constraints.size()) ||
        pt.lambda_ineq.size() != static_cast<Index>(p.ineq_constraints.size()) ||
        (pt.lambda_nonneg.size() != 0 && pt.lambda_nonneg.size() != static_cast<Index>(p.nonneg_exprs.size())))
        throw Error(ErrorCode::DimensionMismatch, "KKT point does not match problem dimensions");
    const Vector& x = pt.x;
    KktReport r;
    Vector grad = Vector::Zero(p.n_vars);
    p.objective.add_gradient(x, 1.0, grad);
    for (std::size_t j = 0; j < p.eq_constraints.size(); ++j) {
        double h = p.eq_constraints[j].value(x);
        r.feasibility = std::max(r.feasibility, std::abs(h));
        p.eq_constraints[j].add_gradient(x, pt.lambda_eq[j], grad);
    }
    for (std::size_t i = 0; i < p.ineq_constraints.size(); ++i) {
        double g = p.ineq_constraints[i].value(x);
        double mu = pt.lambda_ineq[i];
        r.feasibility = std::max(r.feasibility, std::max(g, 0.0));
        r.complementarity = std::max(r.complementarity, std::abs(mu * g));
        r.sign_violation = std::max(r.sign_violation, std::max(-mu, 0.0));
        p.ineq_constraints[i].add_gradient(x, mu, grad);
    }
    std::vector<double> e(p.nonneg_exprs.size());
    for (std::size_t i = 0; i < p.nonneg_exprs.size(); ++i) {
        e[i] = p.nonneg_exprs[i].value(x);
        r.feasibility = std::max(r.feasibility, std::max(-e[i], 0.0));
        if (pt.lambda_nonneg.size() != 0) {
            double nu = pt.lambda_nonneg[i];
            r.complementarity = std::max(r.complementarity, std::abs(nu * e[i]));
            p.nonneg_exprs[i].add_gradient(x, -nu, grad);
        }
    }
    for (const auto& [i, j] : p.comp_pairs) r.complementarity = std::max(r.complementarity, std::abs(e[i] * e[j]));
    for (Index i = 0; i < p.n_vars; ++i) {
        r.feasibility = std::max(r.feasibility, std::max(p.lower[i] - x[i], 0.0));
        r.feasibility = std::max(r.feasibility, std::max(x[i] - p.upper[i], 0.0));
    }
    r.stationarity = detail::projected_gradient_norm(x, grad, p.lower, p.upper);
    return r;
}

// Least-squares multipliers for a primal point: equalities, active inequalities and active
// nonnegative expressions; variables sitting on a bound are left to the projection.
inline KktPoint estimate_multipliers(const NlpProblem& p, const Vector& x, double active_tol = 1e-6) {
    if (x.size() != p.n_vars) throw Error(ErrorCode::DimensionMismatch, "point size");
    const std::size_t me = p.eq_constraints.size(), mi = p.ineq_constraints.size(), mn = p.nonneg_exprs.size();
    Vector grad = Vector::Zero(p.n_vars);
    p.objective.add_gradient(x, 1.0, grad);
    std::vector<Index> rows;
    for (Index i = 0; i < p.n_vars; ++i) {
        double tol_i = active_tol * (1.0 + std::abs(x[i]));
        bool on_bound = x[i] <= p.lower[i] + tol_i || x[i] >= p.upper[i] - tol_i;
        if (!on_bound) rows.push_back(i);
    }
    std::vector<Vector> cols;
    std::vector<std::pair<int, std::size_t>> which;  // 0 eq, 1 ineq, 2 nonneg
    for (std::size_t j = 0; j < me; ++j) {
        cols.push_back(p.eq_constraints[j].gradient(x));
        which.push_back({0, j});
    }
    for (std::size_t i = 0; i < mi; ++i) {
        double g = p.ineq_constraints[i].value(x);
        if (std::abs(g) <= active_tol * (1.0 + std::abs(g))) {
            cols.push_back(p.ineq_constraints[i].gradient(x));
            which.push_back({1, i});
        }
    }
    for (std::size_t i = 0; i < mn; ++i) {
        double e = p.nonneg_exprs[i].value(x);
        if (std::abs(e) <= active_tol) {
            cols.push_back(-p.nonneg_exprs[i].gradient(x));
            which.push_back({2, i});
        }
    }
    KktPoint pt;
    pt.x = x;
    pt.lambda_eq = Vector::Zero(me);
    pt.lambda_ineq = Vector::Zero(mi);
    if (mn > 0) pt.lambda_nonneg = Vector::Zero(mn);
    if (!cols.empty() && !rows.empty()) {
        Matrix A(rows.size(), cols.size());
        Vector b(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            b[r] = -grad[rows[r]];
            for (std::size_t c = 0; c < cols.size(); ++c) A(r, c) = cols[c][rows[r]];
        }
        Vector mult = A.completeOrthogonalDecomposition().solve(b);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            auto [kind, k] = which[c];
            if (kind == 0) pt.lambda_eq[k] = mult[c];
            else if (kind == 1) pt.lambda_ineq[k] = mult[c];
            else pt.lambda_nonneg[k] = mult[c];
        }
    }
    KktReport rep = kkt_residual(p, pt);
    pt.objective = p.objective.value(x);
    pt.stationarity_residual = rep.stationarity;
    pt.feas_residual = rep.feasibility;
    pt.comp_residual = rep.complementarity;
    return pt;
}

namespace detail {

// Least-squares correction of multipliers at a (near) feasible x, anchored at the current estimate.
inline void refine_multipliers(const NlpProblem& p, KktPoint& pt, double active_tol) {
    const std::size_t me = p.eq_constraints.size(), mi = p.ineq_constraints.size();
    Vector grad = Vector::Zero(p.n_vars);
    p.objective.add_gradient(pt.x, 1.0, grad);
    std::vector<Vector> cols;
    std::vector<std::size_t> ineq_cols;
    for (std::size_t j = 0; j < me; ++j) {
        cols.push_back(p.eq_constraints[j].gradient(pt.x));
        p.eq_constraints[j].add_gradient(pt.x, pt.lambda_eq[j], grad);
    }
    for (std::size_t i = 0; i < mi; ++i) {
        if (p.ineq_constraints[i].value(pt.x) >= -active_tol) {
            cols.push_back(p.ineq_constraints[i].gradient(pt.x));
            ineq_cols.push_back(i);
            p.ineq_constraints[i].add_gradient(pt.x, pt.lambda_ineq[i], grad);
        } else {
            pt.lambda_ineq[i] = 0.0;
        }
    }
    std::vector<Index> rows;
    for (Index i = 0; i < p.n_vars; ++i) {
        double t = active_tol * (1.0 + std::abs(pt.x[i]));
        if (!(pt.x[i] <= p.lower[i] + t || pt.x[i] >= p.upper[i] - t)) rows.push_back(i);
    }
    if (cols.empty() || rows.empty()) return;
    Matrix A(rows.size(), cols.size());
    Vector b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        b[r] = -grad[rows[r]];
        for (std::size_t c = 0; c < cols.size(); ++c) A(r, c) = cols[c][rows[r]];
    }
    Vector delta = A.completeOrthogonalDecomposition().solve(b);
    if (!delta.allFinite()) return;
    for (std::size_t j = 0; j < me; ++j) pt.lambda_eq[j] += delta[j];
    for (std::size_t c = 0; c < ineq_cols.size(); ++c) {
        double& m = pt.lambda_ineq[ineq_cols[c]];
        m = std::max(0.0, m + delta[me + c]);
    }
}

// Inequalities become g(x) + s = 0 with s >= 0 so the subproblem is smooth and every
// inequality is enforced through the box projection.
inline KktPoint solve_single(const NlpProblem& p, const Vector& x0, double tol, const NlpOptions& opt) {
    const std::size_t me = p.eq_constraints.size(), mi = p.ineq_constraints.size();
    const Index n = p.n_vars, nz = n + static_cast<Index>(mi);
    Vector lo(nz), hi(nz);
    lo.head(n) = p.lower;
    hi.head(n) = p.upper;
    lo.tail(mi).setZero();
    hi.tail(mi).setConstant(kInf);
    Vector z(nz);
    z.head(n) = project(x0, p.lower, p.upper);
    Vector hv(me), gv(mi);
    auto eval_constraints = [&](const Vector& w) {
        for (std::size_t j = 0; j < me; ++j) hv[j] = p.eq_constraints[j].value(w);
        for (std::size_t i = 0; i < mi; ++i) gv[i] = p.ineq_constraints[i].value(w);
    };
    eval_constraints(z);
    for (std::size_t i = 0; i < mi; ++i) z[n + i] = std::max(0.0, -gv[i]);

    Vector lam = Vector::Zero(me), mu = Vector::Zero(mi);
    if (opt.lambda_eq0.size() == static_cast<Index>(me) && opt.lambda_ineq0.size() == static_cast<Index>(mi)) {
        lam = opt.lambda_eq0;
        mu = opt.lambda_ineq0.cwiseMax(0.0);
    } else {
        KktPoint start;
        start.x = z.head(n);
        start.lambda_eq = lam;
        start.lambda_ineq = mu;
        if (kkt_residual(p, start).feasibility <= 1e-8) {
            refine_multipliers(p, start, 1e-8);
            lam = start.lambda_eq;
            mu = start.lambda_ineq;
        }
    }
    double c = opt.penalty0;
    auto merit = [&](const Vector& w, Vector& grad) {
        double f = p.objective.value(w);
        grad.setZero();
        p.objective.add_gradient(w, 1.0, grad);
        eval_constraints(w);
        for (std::size_t j = 0; j < me; ++j) {
            f += lam[j] * hv[j] + 0.5 * c * hv[j] * hv[j];
            p.eq_constraints[j].add_gradient(w, lam[j] + c * hv[j], grad);
        }
        for (std::size_t i = 0; i < mi; ++i) {
            double r = gv[i] + w[n + i];
            f += mu[i] * r + 0.5 * c * r * r;
            double k = mu[i] + c * r;
            p.ineq_constraints[i].add_gradient(w, k, grad);
            grad[n + i] += k;
        }
        if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
        return f;
    };

    bool have_hessian = opt.newton && static_cast<bool>(p.objective.add_hessian);
    for (const auto& h : p.eq_constraints) have_hessian = have_hessian && static_cast<bool>(h.add_hessian);
    for (const auto& q : p.ineq_constraints) have_hessian = have_hessian && static_cast<bool>(q.add_hessian);
    Vector scratch = Vector::Zero(nz);
    std::vector<Index> nnz;
    auto add_outer = [&](const ScalarFunction& fn, const Vector& w, Index slack, Matrix& Hm) {
        fn.add_gradient(w, 1.0, scratch);
        if (slack >= 0) scratch[slack] += 1.0;
        nnz.clear();
        for (Index k = 0; k < nz; ++k)
            if (scratch[k] != 0.0) nnz.push_back(k);
        for (Index a : nnz)
            for (Index b : nnz) Hm(a, b) += c * scratch[a] * scratch[b];
        for (Index a : nnz) scratch[a] = 0.0;
    };
    auto merit_hessian = [&](const Vector& w, Matrix& Hm) {
        p.objective.add_hessian(w, 1.0, Hm);
        eval_constraints(w);
        for (std::size_t j = 0; j < me; ++j) {
            p.eq_constraints[j].add_hessian(w, lam[j] + c * hv[j], Hm);
            add_outer(p.eq_constraints[j], w, -1, Hm);
        }
        for (std::size_t i = 0; i < mi; ++i) {
            p.ineq_constraints[i].add_hessian(w, mu[i] + c * (gv[i] + w[n + i]), Hm);
            add_outer(p.ineq_constraints[i], w, n + static_cast<Index>(i), Hm);
        }
    };

    Matrix H;
    double v_prev = kInf;
    int total = 0;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        double omega = std::max(tol, 1e-3 * std::pow(0.1, outer));
        InnerResult in = have_hessian ? minimize_box_newton(merit, merit_hessian, z, lo, hi, omega, opt.max_inner)
                                      : minimize_box(merit, z, lo, hi, omega, opt.max_inner, H);
        total += in.iterations;
        eval_constraints(z);
        double v = 0.0;
        for (std::size_t j = 0; j < me; ++j) v = std::max(v, std::abs(hv[j]));
        for (std::size_t i = 0; i < mi; ++i) v = std::max(v, std::abs(gv[i] + z[n + i]));
        for (std::size_t j = 0; j < me; ++j) lam[j] += c * hv[j];
        for (std::size_t i = 0; i < mi; ++i) mu[i] += c * (gv[i] + z[n + i]);

        KktPoint pt;
        pt.x = z.head(n);
        pt.lambda_eq = lam;
        pt.lambda_ineq = mu.cwiseMax(0.0);
        KktReport rep = kkt_residual(p, pt);
        if (log_level() == LogLevel::debug) {
            Index worst_eq = 0, worst_in = 0;
            if (me > 0) hv.cwiseAbs().maxCoeff(&worst_eq);
            if (mi > 0) gv.maxCoeff(&worst_in);
            log(LogLevel::debug, "al outer ", outer, " c=", c, " inner=", in.iterations, " stat=", rep.stationarity,
                " feas=", rep.feasibility, " comp=", rep.complementarity, " worst eq ", worst_eq, " worst ineq ",
                worst_in);
        }
        if (rep.feasibility <= tol && rep.max() > tol) {
            KktPoint polished = pt;
            refine_multipliers(p, polished, std::max(tol, 1e-3 * std::sqrt(tol)));
            KktReport prep = kkt_residual(p, polished);
            if (prep.max() < rep.max()) {
                pt = polished;
                rep = prep;
            }
        }
        if (rep.stationarity <= tol && rep.feasibility <= tol && rep.complementarity <= tol) {
            pt.objective = p.objective.value(pt.x);
            pt.stationarity_residual = rep.stationarity;
            pt.feas_residual = rep.feasibility;
            pt.comp_residual = rep.complementarity;
            pt.iterations = total;
            return pt;
        }
        if (v > tol && v > 0.25 * v_prev) {
            c *= 10.0;
            H.resize(0, 0);
        }
        if (c > opt.penalty_max) throw Error(ErrorCode::Infeasible, "penalty limit reached without feasibility");
        v_prev = v;
    }
    throw Error(ErrorCode::MaxIterations, "augmented Lagrangian did not converge");
}


// Primal-dual interior point. Inequalities get slacks t >= 0, fixed variables are held out, and the
// Newton system is factored with a sparse LDL^T whose pivot signs give the inertia.
inline KktPoint solve_interior(const NlpProblem& p, const Vector& x0, double tol, const NlpOptions& opt) {
    const Index me = static_cast<Index>(p.eq_constraints.size()), mi = static_cast<Index>(p.ineq_constraints.size());
    const Index M = me + mi;
    Vector xbase = project(x0, p.lower, p.upper);
    std::vector<Index> vars;
    for (Index i = 0; i < p.n_vars; ++i)
        if (p.lower[i] < p.upper[i]) vars.push_back(i);
    const Index nx = static_cast<Index>(vars.size()), N = nx + mi;
    Vector lo(N), hi(N);
    for (Index k = 0; k < nx; ++k) {
        lo[k] = p.lower[vars[k]];
        hi[k] = p.upper[vars[k]];
    }
    lo.tail(mi).setZero();
    hi.tail(mi).setConstant(kInf);
    std::vector<char> has_lo(N), has_hi(N);
    for (Index k = 0; k < N; ++k) {
        has_lo[k] = std::isfinite(lo[k]);
        has_hi[k] = std::isfinite(hi[k]);
    }
    auto to_x = [&](const Vector& y) {
        Vector x = xbase;
        for (Index k = 0; k < nx; ++k) x[vars[k]] = y[k];
        return x;
    };

    Vector y(N);
    for (Index k = 0; k < nx; ++k) y[k] = xbase[vars[k]];
    for (Index i = 0; i < mi; ++i) y[nx + i] = std::max(0.0, -p.ineq_constraints[i].value(xbase));
    for (Index k = 0; k < N; ++k) {
        double pl = opt.bound_push * std::max(1.0, std::abs(lo[k])), pu = opt.bound_push * std::max(1.0, std::abs(hi[k]));
        if (has_lo[k] && has_hi[k]) {
            pl = std::min(pl, opt.bound_push * (hi[k] - lo[k]));
            pu = std::min(pu, opt.bound_push * (hi[k] - lo[k]));
        }
        if (has_lo[k]) y[k] = std::max(y[k], lo[k] + pl);
        if (has_hi[k]) y[k] = std::min(y[k], hi[k] - pu);
    }

    Vector lam = Vector::Zero(M);
    if (opt.lambda_eq0.size() == me && opt.lambda_ineq0.size() == mi) {
        lam.head(me) = opt.lambda_eq0;
        lam.tail(mi) = opt.lambda_ineq0.cwiseMax(0.0);
    }
    double mu = opt.mu0;
    double mu_min = std::max(1e-14, 1e-2 * tol);
    Vector zl = Vector::Zero(N), zu = Vector::Zero(N);
    for (Index k = 0; k < N; ++k) {
        if (has_lo[k]) zl[k] = mu / (y[k] - lo[k]);
        if (has_hi[k]) zu[k] = mu / (hi[k] - y[k]);
    }

    const Index n = p.n_vars;
    Vector gfull(n), grad(N), c(M);
    Matrix A = Matrix::Zero(M, N), Wfull(n, n);
    auto eval_f = [&](const Vector& yy) {
        double f = p.objective.value(to_x(yy));
        return f;
    };
    auto eval_c = [&](const Vector& yy, Vector& cc) {
        Vector x = to_x(yy);
        for (Index j = 0; j < me; ++j) cc[j] = p.eq_constraints[j].value(x);
        for (Index i = 0; i < mi; ++i) cc[me + i] = p.ineq_constraints[i].value(x) + yy[nx + i];
    };
    auto barrier = [&](const Vector& yy, double f) {
        double b = f;
        for (Index k = 0; k < N; ++k) {
            if (has_lo[k]) b -= mu * std::log(yy[k] - lo[k]);
            if (has_hi[k]) b -= mu * std::log(hi[k] - yy[k]);
        }
        return b;
    };
    auto eval_derivatives = [&](const Vector& yy) {
        Vector x = to_x(yy);
        gfull.setZero();
        p.objective.add_gradient(x, 1.0, gfull);
        grad.setZero();
        for (Index k = 0; k < nx; ++k) grad[k] = gfull[vars[k]];
        A.setZero();
        for (Index j = 0; j < M; ++j) {
            gfull.setZero();
            if (j < me)
                p.eq_constraints[j].add_gradient(x, 1.0, gfull);
            else
                p.ineq_constraints[j - me].add_gradient(x, 1.0, gfull);
            for (Index k = 0; k < nx; ++k) A(j, k) = gfull[vars[k]];
            if (j >= me) A(j, nx + j - me) = 1.0;
        }
    };
    auto eval_hessian = [&](const Vector& yy, Matrix& W) {
        Vector x = to_x(yy);
        Wfull.setZero();
        p.objective.add_hessian(x, 1.0, Wfull);
        for (Index j = 0; j < me; ++j) p.eq_constraints[j].add_hessian(x, lam[j], Wfull);
        for (Index i = 0; i < mi; ++i) p.ineq_constraints[i].add_hessian(x, lam[me + i], Wfull);
        W.setZero(N, N);
        for (Index a = 0; a < nx; ++a)
            for (Index b = 0; b < nx; ++b) W(a, b) = 0.5 * (Wfull(vars[a], vars[b]) + Wfull(vars[b], vars[a]));
    };
    auto make_point = [&](const Vector& yy) {
        KktPoint pt;
        pt.x = to_x(yy);
        pt.lambda_eq = lam.head(me);
        pt.lambda_ineq = lam.tail(mi).cwiseMax(0.0);
        return pt;
    };

    using SpMat = Eigen::SparseMatrix<double>;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    SpMat K(N + M, N + M);
    std::vector<Eigen::Triplet<double>> trip;
    Matrix W;
    Vector sigma(N);
    double dw_last = 0.0, nu = 1.0;

    auto factor = [&](double dw, double dc) {
        trip.clear();
        for (Index a = 0; a < N; ++a) {
            trip.emplace_back(a, a, W(a, a) + sigma[a] + dw);
            for (Index b = 0; b < a; ++b)
                if (W(a, b) != 0.0) trip.emplace_back(a, b, W(a, b));
        }
        for (Index j = 0; j < M; ++j) {
            for (Index k = 0; k < N; ++k)
                if (A(j, k) != 0.0) trip.emplace_back(N + j, k, A(j, k));
            trip.emplace_back(N + j, N + j, -dc);
        }
        K.setFromTriplets(trip.begin(), trip.end());
        ldlt.compute(K);
        if (ldlt.info() != Eigen::Success) return false;
        const Vector& D = ldlt.vectorD();
        Index pos = 0, neg = 0;
        for (Index i = 0; i < D.size(); ++i) {
            if (D[i] > 0.0) ++pos;
            else if (D[i] < 0.0) ++neg;
        }
        return pos == N && neg == M;
    };
    auto solve_k = [&](const Vector& rhs) {
        Vector sol = ldlt.solve(rhs);
        for (int r = 0; r < 2; ++r) {
            Vector res = rhs - K.selfadjointView<Eigen::Lower>() * sol;
            sol += ldlt.solve(res);
        }
        return sol;
    };

    for (int it = 0; it < opt.max_iter; ++it) {
        double f = eval_f(y);
        check_finite(f, "objective at interior-point iterate");
        eval_c(y, c);
        eval_derivatives(y);

        // optimality measures
        Vector rd = grad + A.transpose() * lam - zl + zu;
        double zsum = zl.lpNorm<1>() + zu.lpNorm<1>();
        double sd = std::max(100.0, (lam.lpNorm<1>() + zsum) / std::max<Index>(1, M + 2 * N)) / 100.0;
        double sc = std::max(100.0, zsum / std::max<Index>(1, 2 * N)) / 100.0;
        auto comp_err = [&](double m) {
            double e = 0.0;
            for (Index k = 0; k < N; ++k) {
                if (has_lo[k]) e = std::max(e, std::abs((y[k] - lo[k]) * zl[k] - m));
                if (has_hi[k]) e = std::max(e, std::abs((hi[k] - y[k]) * zu[k] - m));
            }
            return e;
        };
        double cinf = M > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
        double dinf = rd.lpNorm<Eigen::Infinity>();
        if (std::max({dinf / sd, cinf, comp_err(0.0) / sc}) <= tol || mu <= 10.0 * mu_min) {
            KktPoint pt = make_point(y);
            KktReport rep = kkt_residual(p, pt);
            {
                // variables whose bound multiplier dominates their distance are put on the bound
                Vector ys = y;
                for (Index k = 0; k < nx; ++k) {
                    if (has_lo[k] && y[k] - lo[k] < zl[k] * 1e-3) ys[k] = lo[k];
                    if (has_hi[k] && hi[k] - y[k] < zu[k] * 1e-3) ys[k] = hi[k];
                }
                KktPoint snapped = make_point(ys);
                KktReport srep = kkt_residual(p, snapped);
                if (srep.max() < rep.max()) {
                    pt = snapped;
                    rep = srep;
                }
            }
            if (rep.max() > tol && rep.feasibility <= tol) {
                KktPoint polished = pt;
                refine_multipliers(p, polished, std::max(tol, 1e-3 * std::sqrt(tol)));
                KktReport prep = kkt_residual(p, polished);
                if (prep.max() < rep.max()) {
                    pt = polished;
                    rep = prep;
                }
            }
            if (rep.max() <= tol) {
                pt.objective = p.objective.value(pt.x);
                pt.stationarity_residual = rep.stationarity;
                pt.feas_residual = rep.feasibility;
                pt.comp_residual = rep.complementarity;
                pt.iterations = it;
                log(LogLevel::debug, "ip converged it=", it, " obj=", pt.objective);
                return pt;
            }
            // interior variables still carry bound multipliers of size mu / distance
            if (mu <= mu_min * (1.0 + 1e-12) && mu_min > 1e-20) mu_min *= 0.1;
        }
        while (mu > mu_min && std::max({dinf / sd, cinf, comp_err(mu) / sc}) <= 10.0 * mu) {
            mu = std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));
            rd = grad + A.transpose() * lam - zl + zu;
        }

        // Newton system
        eval_hessian(y, W);
        Vector gphi = grad;
        for (Index k = 0; k < N; ++k) {
            sigma[k] = 0.0;
            if (has_lo[k]) {
                sigma[k] += zl[k] / (y[k] - lo[k]);
                gphi[k] -= mu / (y[k] - lo[k]);
            }
            if (has_hi[k]) {
                sigma[k] += zu[k] / (hi[k] - y[k]);
                gphi[k] += mu / (hi[k] - y[k]);
            }
        }
        Vector rhs(N + M);
        rhs.head(N) = -(gphi + A.transpose() * lam);
        rhs.tail(M) = -c;

        double dw = 0.0, dc = 0.0;
        bool ok = factor(0.0, 0.0);
        if (!ok) {
            dc = 1e-8 * std::pow(mu, 0.25);
            ok = factor(0.0, dc);
        }
        if (!ok) {
            dw = dw_last == 0.0 ? 1e-4 : std::max(1e-20, dw_last / 3.0);
            while (!(ok = factor(dw, dc))) {
                dw *= dw_last == 0.0 ? 100.0 : 8.0;
                if (dw > 1e40) throw Error(ErrorCode::SolverFailure, "inertia correction failed");
            }
            dw_last = dw;
        }

        bool stepped = false;
        for (int reg = 0; reg < 8 && !stepped; ++reg) {
            Vector sol = solve_k(rhs);
            if (!sol.allFinite()) throw Error(ErrorCode::NonFiniteEvaluation, "Newton step is not finite");
            Vector dy = sol.head(N), dlam = sol.tail(M);
            Vector dzl = Vector::Zero(N), dzu = Vector::Zero(N);
            for (Index k = 0; k < N; ++k) {
                if (has_lo[k]) dzl[k] = mu / (y[k] - lo[k]) - zl[k] - zl[k] / (y[k] - lo[k]) * dy[k];
                if (has_hi[k]) dzu[k] = mu / (hi[k] - y[k]) - zu[k] + zu[k] / (hi[k] - y[k]) * dy[k];
            }
            const double tau = std::max(0.99, 1.0 - mu);
            double amax = 1.0, az = 1.0;
            for (Index k = 0; k < N; ++k) {
                if (has_lo[k] && dy[k] < 0.0) amax = std::min(amax, -tau * (y[k] - lo[k]) / dy[k]);
                if (has_hi[k] && dy[k] > 0.0) amax = std::min(amax, tau * (hi[k] - y[k]) / dy[k]);
                if (dzl[k] < 0.0) az = std::min(az, -tau * zl[k] / dzl[k]);
                if (dzu[k] < 0.0) az = std::min(az, -tau * zu[k] / dzu[k]);
            }

            double c1 = M > 0 ? c.lpNorm<1>() : 0.0;
            double slope = gphi.dot(dy);
            if (c1 > 0.0) {
                double curv = dy.dot(W * dy) + dy.dot(sigma.cwiseProduct(dy)) + dw * dy.squaredNorm();
                double need = (slope + 0.5 * std::max(0.0, curv)) / (0.9 * c1);
                if (nu < need) nu = need + 1.0;
            }
            double phi0 = barrier(y, f) + nu * c1;
            double D = slope - nu * c1;
            Vector ctrial(M), ytrial(N);
            double alpha = amax;
            bool accepted = false;
            for (int ls = 0; ls < 60 && alpha > 1e-16; ++ls) {
                ytrial = y + alpha * dy;
                double ft = eval_f(ytrial);
                if (std::isfinite(ft)) {
                    eval_c(ytrial, ctrial);
                    double phit = barrier(ytrial, ft) + nu * (M > 0 ? ctrial.lpNorm<1>() : 0.0);
                    if (std::isfinite(phit) && phit <= phi0 + 1e-4 * alpha * std::min(D, 0.0) &&
                        (D < 0.0 || phit <= phi0)) {
                        accepted = true;
                        break;
                    }
                    if (ls == 0 && M > 0 && ctrial.lpNorm<1>() >= c1) {
                        // second-order correction for curved constraints
                        Vector rhs2 = rhs;
                        rhs2.tail(M) = -(alpha * c + ctrial);
                        Vector sol2 = solve_k(rhs2);
                        Vector dy2 = sol2.head(N);
                        double a2 = 1.0;
                        for (Index k = 0; k < N; ++k) {
                            if (has_lo[k] && dy2[k] < 0.0) a2 = std::min(a2, -tau * (y[k] - lo[k]) / dy2[k]);
                            if (has_hi[k] && dy2[k] > 0.0) a2 = std::min(a2, tau * (hi[k] - y[k]) / dy2[k]);
                        }
                        Vector ysoc = y + a2 * dy2;
                        double fs = eval_f(ysoc);
                        if (std::isfinite(fs)) {
                            Vector csoc(M);
                            eval_c(ysoc, csoc);
                            double phis = barrier(ysoc, fs) + nu * csoc.lpNorm<1>();
                            if (std::isfinite(phis) && phis <= phi0 + 1e-4 * alpha * std::min(D, 0.0)) {
                                ytrial = ysoc;
                                accepted = true;
                                break;
                            }
                        }
                    }
                }
                alpha *= 0.5;
            }
            if (accepted) {
                y = ytrial;
                lam += alpha * dlam;
                zl += az * dzl;
                zu += az * dzu;
                for (Index k = 0; k < N; ++k) {
                    if (has_lo[k]) {
                        double s_k = y[k] - lo[k];
                        zl[k] = std::clamp(zl[k], mu / (1e10 * s_k), 1e10 * mu / s_k);
                    }
                    if (has_hi[k]) {
                        double s_k = hi[k] - y[k];
                        zu[k] = std::clamp(zu[k], mu / (1e10 * s_k), 1e10 * mu / s_k);
                    }
                }
                stepped = true;
            } else {
                dw = std::max(1e-4, 10.0 * dw);
                while (!factor(dw, dc)) dw *= 8.0;
                dw_last = dw;
            }
        }
        if (!stepped) throw Error(ErrorCode::Infeasible, "interior-point line search failed");
        if (log_level() == LogLevel::debug && it % 10 == 0)
            log(LogLevel::debug, "ip it=", it, " mu=", mu, " f=", f, " inf_pr=", cinf, " inf_du=", dinf, " dw=", dw);
    }
    throw Error(ErrorCode::MaxIterations, "interior-point iteration limit reached");
}

}  // namespace detail

// Deterministic multi-start over the chosen method; the lowest objective among converged starts wins.
inline KktPoint solve_nlp(const NlpProblem& p, const Vector& x0, double tol, const NlpOptions& opt = {}) {
    if (!(tol > 0.0)) throw Error(ErrorCode::DimensionMismatch, "tol must be positive");
    detail::validate(p, x0);
    if (!p.comp_pairs.empty())
        throw Error(ErrorCode::DimensionMismatch, "problem has complementarity pairs; use solve_mpec");
    std::optional<KktPoint> best;
    std::optional<Error> first_error;
    const int starts = std::max(1, opt.n_starts);
    for (int k = 0; k < starts; ++k) {
        Vector start = x0;
        if (k > 0) {
            for (Index i = 0; i < p.n_vars; ++i) {
                double u = detail::radical_inverse(static_cast<unsigned long long>(k) + opt.seed,
                                                   detail::nth_prime(static_cast<std::size_t>(i)));
                start[i] += opt.start_spread * (1.0 + std::abs(x0[i])) * (2.0 * u - 1.0);
            }
        }
        try {
            KktPoint pt = opt.method == NlpMethod::interior_point ? detail::solve_interior(p, start, tol, opt)
                                                                  : detail::solve_single(p, start, tol, opt);
            if (!best || pt.objective < best->objective - 1e-12 * (1.0 + std::abs(best->objective))) best = pt;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DimensionMismatch) throw;
            log(LogLevel::debug, "start ", k, " failed: ", e.what());
            if (!first_error) first_error = e;
        }
    }
    if (!best) throw *first_error;
    return *best;
}

// Max relative discrepancy between analytic gradients and central differences over every function in p.
inline double check_gradient(const NlpProblem& p, const Vector& x) {
    if (x.size() != p.n_vars) throw Error(ErrorCode::DimensionMismatch, "point size");
    std::vector<const ScalarFunction*> fns{&p.objective};
    for (const auto& f : p.eq_constraints) fns.push_back(&f);
    for (const auto& f : p.ineq_constraints) fns.push_back(&f);
    for (const auto& f : p.nonneg_exprs) fns.push_back(&f);
    double worst = 0.0;
    Vector xp = x;
    for (const ScalarFunction* f : fns) {
        Vector a = Vector::Zero(p.n_vars);
        f->add_gradient(x, 1.0, a);
        Vector fd(p.n_vars);
        for (Index i = 0; i < p.n_vars; ++i) {
            double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            xp[i] = x[i] + h;
            double fp = f->value(xp);
            xp[i] = x[i] - h;
            double fm = f->value(xp);
            xp[i] = x[i];
            detail::check_finite(fp, "finite-difference evaluation");
            detail::check_finite(fm, "finite-difference evaluation");
            fd[i] = (fp - fm) / (2.0 * h);
        }
        double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, (a - fd).lpNorm<Eigen::Infinity>() / scale);
    }
    return worst;
}

}  // namespace hypergame

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>
#include <cstdint>

#include "nlp.hpp"

namespace hypergame {

// Objective sum_k theta_k f_k(u) over the constraints and bounds of `base` (its objective is ignored).
struct ThetaLinearProblem {
    std::vector<ScalarFunction> features;
    Vector theta;
    NlpProblem base;

    static ThetaLinearProblem from(const NlpProblem& p) {
        ThetaLinearProblem t;
        t.features = {p.objective};
        t.theta = Vector::Ones(1);
        t.base = p;
        return t;
    }

    void check() const {
        if (features.empty() || static_cast<Index>(features.size()) != theta.size())
            throw Error(ErrorCode::NotThetaLinear, "objective is not a theta-weighted sum of features");
        for (const auto& f : features)
            if (!f.value || !f.add_gradient) throw Error(ErrorCode::NotThetaLinear, "feature without value or gradient");
    }

    NlpProblem instantiate(const Vector& th) const {
        check();
        if (th.size() != theta.size()) throw Error(ErrorCode::DimensionMismatch, "theta size");
        NlpProblem p = base;
        std::vector<ScalarFunction> terms;
        for (std::size_t k = 0; k < features.size(); ++k) terms.push_back(scaled(features[k], th[static_cast<Index>(k)]));
        p.objective = sum_of(std::move(terms));
        return p;
    }

    NlpProblem instantiate() const { return instantiate(theta); }

    // Columns are the feature gradients at x.
    Matrix feature_jacobian(const Vector& x) const {
        Matrix R(x.size(), static_cast<Index>(features.size()));
        for (std::size_t k = 0; k < features.size(); ++k) R.col(static_cast<Index>(k)) = features[k].gradient(x);
        return R;
    }
};

struct ConstraintRef {
    enum class Kind { ineq, lower, upper, eq } kind;
    Index index;

    std::string name() const {
        const char* k = kind == Kind::ineq ? "g" : kind == Kind::lower ? "lb" : kind == Kind::upper ? "ub" : "h";
        return std::string(k) + std::to_string(index);
    }
    bool operator==(const ConstraintRef&) const = default;
};

struct ActiveSets {
    std::vector<ConstraintRef> S;       // positive multiplier (equalities always)
    std::vector<ConstraintRef> Sprime;  // binding
    Matrix R;                           // feature gradients, one column per theta_k
    Matrix T;                           // constraint gradients over S, g <= 0 orientation
    Matrix Tprime;                      // over S'
    Vector lambda_S;
    Vector lambda_Sprime;
};

struct RobustnessCertificate {
    std::vector<ConstraintRef> active_set_S;
    std::vector<ConstraintRef> active_set_Sprime;
    bool span_condition = false;
    std::optional<double> radius;
    double lambda_min = 0.0;
    double pinv_norm = 0.0;
    double norm_order = 2.0;  // 2 or infinity
};

namespace robust {

inline constexpr double kRankTol = 1e-10;

inline Index numeric_rank(const Matrix& M) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(M);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > kRankTol * s[0]) ++r;
    return r;
}

inline Matrix pinv(const Matrix& A) {
    if (A.size() == 0) return Matrix::Zero(A.cols(), A.rows());
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Vector inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > kRankTol * s[0]) inv[i] = 1.0 / s[i];
    Matrix P = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    double err = (A * P * A - A).norm();
    if (!(err <= 1e-8 * std::max(1.0, A.norm())))
        throw Error(ErrorCode::RankDeficientT, "pseudo-inverse of the active constraint gradients is inaccurate");
    return P;
}

// Induced 2-norm by power iteration on M^T M.
inline double norm2(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Vector v = Vector::Ones(M.cols()) / std::sqrt(static_cast<double>(M.cols()));
    double est = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vector w = M.transpose() * (M * v);
        double n = w.norm();
        if (n == 0.0) return 0.0;
        double next = std::sqrt(n);
        v = w / n;
        if (std::abs(next - est) <= 1e-14 * next) return next;
        est = next;
    }
    return est;
}

inline double induced_norm(const Matrix& M, double p) {
    if (std::isinf(p)) return M.size() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
    if (p != 2.0) throw Error(ErrorCode::DimensionMismatch, "norm order must be 2 or infinity");
    return norm2(M);
}

inline double vector_norm(const Vector& v, double p) { return std::isinf(p) ? v.lpNorm<Eigen::Infinity>() : v.norm(); }

inline Vector constraint_gradient(const NlpProblem& p, const ConstraintRef& c, const Vector& x) {
    using K = ConstraintRef::Kind;
    switch (c.kind) {
    case K::ineq: return p.ineq_constraints[static_cast<std::size_t>(c.index)].gradient(x);
    case K::eq: return p.eq_constraints[static_cast<std::size_t>(c.index)].gradient(x);
    case K::lower: return -Vector::Unit(x.size(), c.index);
    case K::upper: return Vector::Unit(x.size(), c.index);
    }
    return {};
}

inline Matrix gradients(const NlpProblem& p, const std::vector<ConstraintRef>& cs, const Vector& x) {
    Matrix T(x.size(), static_cast<Index>(cs.size()));
    for (std::size_t j = 0; j < cs.size(); ++j) T.col(static_cast<Index>(j)) = constraint_gradient(p, cs[j], x);
    return T;
}

inline bool sign_free(const ConstraintRef& c) { return c.kind == ConstraintRef::Kind::eq; }

}  // namespace robust

inline ActiveSets active_sets(const ThetaLinearProblem& tp, const KktPoint& point, double tol = 1e-6) {
    using K = ConstraintRef::Kind;
    NlpProblem p = tp.instantiate();
    if (!p.nonneg_exprs.empty()) throw Error(ErrorCode::NotAKktPoint, "complementarity problems are not analysed");
    const Vector& x = point.x;
    KktPoint pt = point;
    if (pt.lambda_eq.size() != static_cast<Index>(p.eq_constraints.size()) ||
        pt.lambda_ineq.size() != static_cast<Index>(p.ineq_constraints.size()))
        pt = estimate_multipliers(p, x);
    KktReport rep = kkt_residual(p, pt);
    if (!(rep.max() <= std::max(tol, 1e-6) * 10.0))
        throw Error(ErrorCode::NotAKktPoint, "point is not a KKT point (residual " + std::to_string(rep.max()) + ")");

    // Bound multipliers from the Lagrangian gradient without the bound terms.
    Vector grad = p.objective.gradient(x);
    for (std::size_t j = 0; j < p.eq_constraints.size(); ++j) p.eq_constraints[j].add_gradient(x, pt.lambda_eq[j], grad);
    for (std::size_t i = 0; i < p.ineq_constraints.size(); ++i)
        p.ineq_constraints[i].add_gradient(x, pt.lambda_ineq[i], grad);

    std::vector<std::pair<ConstraintRef, double>> binding;
    for (std::size_t j = 0; j < p.eq_constraints.size(); ++j)
        binding.push_back({{K::eq, static_cast<Index>(j)}, pt.lambda_eq[j]});
    for (std::size_t i = 0; i < p.ineq_constraints.size(); ++i) {
        double g = p.ineq_constraints[i].value(x);
        if (std::abs(g) <= tol) binding.push_back({{K::ineq, static_cast<Index>(i)}, pt.lambda_ineq[i]});
    }
    for (Index i = 0; i < p.n_vars; ++i) {
        if (std::isfinite(p.lower[i]) && std::abs(x[i] - p.lower[i]) <= tol * (1.0 + std::abs(p.lower[i])))
            binding.push_back({{K::lower, i}, std::max(grad[i], 0.0)});
        else if (std::isfinite(p.upper[i]) && std::abs(x[i] - p.upper[i]) <= tol * (1.0 + std::abs(p.upper[i])))
            binding.push_back({{K::upper, i}, std::max(-grad[i], 0.0)});
    }
    double scale = 1.0;
    for (const auto& b : binding) scale = std::max(scale, std::abs(b.second));
    ActiveSets a;
    std::vector<double> ls, lsp;
    for (const auto& [c, lam] : binding) {
        a.Sprime.push_back(c);
        lsp.push_back(lam);
        if (robust::sign_free(c) || lam > tol * scale) {
            a.S.push_back(c);
            ls.push_back(lam);
        }
    }
    a.lambda_S = Eigen::Map<Vector>(ls.data(), static_cast<Index>(ls.size()));
    a.lambda_Sprime = Eigen::Map<Vector>(lsp.data(), static_cast<Index>(lsp.size()));
    a.R = tp.feature_jacobian(x);
    a.T = robust::gradients(p, a.S, x);
    a.Tprime = robust::gradients(p, a.Sprime, x);
    return a;
}

// Re-solve at theta_hat from a perturbed copy of the reference point and a few spread starts.
inline Vector resolve_argmin(const ThetaLinearProblem& tp, const Vector& theta_hat, const Vector& x_ref,
                             std::uint64_t seed = 1, double tol = 1e-10) {
    NlpProblem p = tp.instantiate(theta_hat);
    NlpOptions opt;
    opt.n_starts = 4;
    opt.seed = static_cast<unsigned>(seed);
    Vector x0 = x_ref;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index i = 0; i < x0.size(); ++i) x0[i] += 1e-2 * (1.0 + std::abs(x0[i])) * u(rng);
    x0 = detail::project(x0, p.lower, p.upper);
    return solve_nlp(p, x0, tol, opt).x;
}

inline bool same_argmin(const Vector& a, const Vector& b, double tol = 1e-6) {
    return (a - b).lpNorm<Eigen::Infinity>() <= tol * (1.0 + b.lpNorm<Eigen::Infinity>());
}

struct Lemma1Result {
    bool holds = false;
    std::optional<Vector> delta_lambda;  // over S'
    double residual = 0.0;
    std::optional<double> resolve_gap;  // argmin displacement after re-solving, when holds
};

inline Lemma1Result lemma1_certificate(const ThetaLinearProblem& tp, const KktPoint& point, const Vector& dtheta,
                                       bool verify = true) {
    tp.check();
    if (dtheta.size() != tp.theta.size()) throw Error(ErrorCode::DimensionMismatch, "delta theta size");
    if (((tp.theta + dtheta).array() < 0.0).any())
        throw Error(ErrorCode::NotThetaLinear, "theta + delta theta must stay nonnegative");
    ActiveSets a = active_sets(tp, point);
    Vector rhs = a.R * dtheta;
    Lemma1Result out;
    Vector dl = Vector::Zero(static_cast<Index>(a.Sprime.size()));
    if (a.Sprime.empty()) {
        out.residual = rhs.norm();
    } else {
        dl = -a.Tprime.completeOrthogonalDecomposition().solve(rhs);
        out.residual = (rhs + a.Tprime * dl).norm();
        // The minimum-norm shift may break a sign condition that another solution meets.
        bool signs_ok = true;
        for (std::size_t j = 0; j < a.Sprime.size(); ++j)
            if (!robust::sign_free(a.Sprime[j]) && a.lambda_Sprime[j] + dl[j] < -1e-10) signs_ok = false;
        if (!signs_ok && robust::numeric_rank(a.Tprime) < a.Tprime.cols()) {
            const Index m = a.Tprime.cols();
            NlpProblem q(m);
            Matrix Tp = a.Tprime;
            Vector r = rhs;
            q.objective.value = [Tp, r](const Vector& z) { return 0.5 * (r + Tp * z).squaredNorm(); };
            q.objective.add_gradient = [Tp, r](const Vector& z, double f, Vector& g) { g += f * Tp.transpose() * (r + Tp * z); };
            q.objective.add_hessian = [Tp](const Vector&, double f, Matrix& h) { h += f * Tp.transpose() * Tp; };
            for (Index j = 0; j < m; ++j)
                if (!robust::sign_free(a.Sprime[static_cast<std::size_t>(j)])) q.lower[j] = -a.lambda_Sprime[j];
            NlpOptions opt;
            opt.n_starts = 1;
            dl = solve_nlp(q, detail::project(dl, q.lower, q.upper), 1e-12, opt).x;
            out.residual = (rhs + a.Tprime * dl).norm();
        }
    }
    bool signs = true;
    for (std::size_t j = 0; j < a.Sprime.size(); ++j)
        if (!robust::sign_free(a.Sprime[j]) && a.lambda_Sprime[j] + dl[j] < -1e-10) signs = false;
    out.holds = out.residual <= 1e-8 && signs;
    if (out.holds) {
        out.delta_lambda = dl;
        if (verify) {
            Vector x = resolve_argmin(tp, tp.theta + dtheta, point.x);
            out.resolve_gap = (x - point.x).lpNorm<Eigen::Infinity>();
        }
    }
    return out;
}

inline RobustnessCertificate robustness_certificate(const ThetaLinearProblem& tp, const KktPoint& point,
                                                    double norm_order = 2.0) {
    tp.check();
    ActiveSets a = active_sets(tp, point);
    RobustnessCertificate c;
    c.active_set_S = a.S;
    c.active_set_Sprime = a.Sprime;
    c.norm_order = norm_order;
    c.lambda_min = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < a.S.size(); ++j) {
        if (robust::sign_free(a.S[j])) continue;
        c.lambda_min = any ? std::min(c.lambda_min, a.lambda_S[static_cast<Index>(j)]) : a.lambda_S[static_cast<Index>(j)];
        any = true;
    }
    if (a.S.empty()) {
        c.span_condition = a.R.norm() == 0.0;
        return c;
    }
    Matrix TR(a.T.rows(), a.T.cols() + a.R.cols());
    TR << a.T, a.R;
    c.span_condition = robust::numeric_rank(TR) == robust::numeric_rank(a.T);
    if (!c.span_condition) return c;
    Matrix M = robust::pinv(a.T) * a.R;
    c.pinv_norm = robust::induced_norm(M, norm_order);
    if (!any) return c;  // only equalities: no sign margin to spend
    c.radius = c.pinv_norm > 0.0 ? c.lambda_min / c.pinv_norm : kInf;
    return c;
}

inline std::optional<double> robustness_radius(const ThetaLinearProblem& tp, const KktPoint& point, double norm_order = 2.0) {
    return robustness_certificate(tp, point, norm_order).radius;
}

// Unit direction whose feature image leaves span T' the most, or none when every image stays inside.
inline std::optional<Vector> find_nonrobust_direction(const ThetaLinearProblem& tp, const KktPoint& point) {
    tp.check();
    ActiveSets a = active_sets(tp, point);
    const Index n = a.R.rows();
    Matrix P = Matrix::Identity(n, n);
    if (!a.Sprime.empty()) P -= a.Tprime * robust::pinv(a.Tprime);
    Matrix PR = P * a.R;
    double scale = std::max(1.0, a.R.norm());
    Eigen::JacobiSVD<Matrix> svd(PR, Eigen::ComputeFullV);
    if (svd.singularValues().size() == 0 || svd.singularValues()[0] <= 1e-8 * scale) return std::nullopt;
    Vector d = svd.matrixV().col(0);
    // Prefer the orientation that keeps theta + eps d nonnegative.
    double neg_plus = 0.0, neg_minus = 0.0;
    for (Index k = 0; k < d.size(); ++k) {
        if (tp.theta[k] == 0.0 && d[k] < 0.0) neg_plus += -d[k];
        if (tp.theta[k] == 0.0 && d[k] > 0.0) neg_minus += d[k];
    }
    if (neg_minus < neg_plus || (neg_minus == neg_plus && d.sum() < 0.0)) d = -d;
    return d;
}

// du*/dtheta from the differentiated stationarity and active-constraint equations.
inline Matrix sensitivity_dtheta(const ThetaLinearProblem& tp, const KktPoint& point) {
    tp.check();
    ActiveSets a = active_sets(tp, point);
    if (a.S.size() != a.Sprime.size())
        throw Error(ErrorCode::ActiveSetDegenerate, "strict complementarity fails: a binding constraint has zero multiplier");
    NlpProblem p = tp.instantiate();
    const Vector& x = point.x;
    const Index n = x.size(), m = static_cast<Index>(a.S.size());
    Matrix H = Matrix::Zero(n, n);
    if (!p.objective.add_hessian) throw Error(ErrorCode::SingularKktJacobian, "objective has no Hessian");
    p.objective.add_hessian(x, 1.0, H);
    for (std::size_t j = 0; j < a.S.size(); ++j) {
        const ConstraintRef& c = a.S[j];
        const ScalarFunction* f = nullptr;
        if (c.kind == ConstraintRef::Kind::ineq) f = &p.ineq_constraints[static_cast<std::size_t>(c.index)];
        if (c.kind == ConstraintRef::Kind::eq) f = &p.eq_constraints[static_cast<std::size_t>(c.index)];
        if (f) {
            if (!f->add_hessian) throw Error(ErrorCode::SingularKktJacobian, "constraint has no Hessian");
            f->add_hessian(x, a.lambda_S[static_cast<Index>(j)], H);
        }
    }
    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = H;
    K.topRightCorner(n, m) = a.T;
    K.bottomLeftCorner(m, n) = a.T.transpose();
    Matrix rhs = Matrix::Zero(n + m, a.R.cols());
    rhs.topRows(n) = -a.R;
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularKktJacobian, "KKT Jacobian is singular");
    return lu.solve(rhs).topRows(n);
}

struct ConeProbeReport {
    std::vector<Vector> members;
    std::vector<Vector> non_members;
    int scalings_checked = 0;
    int blends_checked = 0;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

inline bool theta_member(const ThetaLinearProblem& tp, const Vector& x_ref, const Vector& theta_hat, std::uint64_t seed = 1) {
    try {
        return same_argmin(resolve_argmin(tp, theta_hat, x_ref, seed), x_ref);
    } catch (const Error&) {
        return false;
    }
}

// Samples of the set of theta with the same argmin: positive scalings, random candidates around theta,
// and blends of verified members.
inline ConeProbeReport theta_cone_probe(const ThetaLinearProblem& tp, const KktPoint& point, int samples,
                                        std::uint64_t seed = 7, std::vector<Vector> extra_candidates = {}) {
    tp.check();
    ConeProbeReport rep;
    const Vector& th = tp.theta;
    std::uint64_t s = seed;
    for (double c : {0.1, 1.0, 10.0, 100.0}) {
        ++rep.scalings_checked;
        Vector t = c * th;
        if (theta_member(tp, point.x, t, ++s))
            rep.members.push_back(t);
        else
            rep.failures.push_back("scaling " + std::to_string(c) + " changed the argmin");
    }
    std::optional<double> r = robustness_radius(tp, point);
    double rad = r ? *r : 0.1 * std::max(th.norm(), 1e-3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::vector<Vector> candidates = std::move(extra_candidates);
    for (int i = 0; i < samples; ++i) {
        Vector d(th.size());
        for (Index k = 0; k < d.size(); ++k) d[k] = nd(rng);
        d *= rad * std::pow(ud(rng), 1.0 / static_cast<double>(d.size())) / std::max(d.norm(), 1e-300);
        candidates.push_back((th + d).cwiseMax(0.0));
    }
    for (const Vector& t : candidates) {
        if (theta_member(tp, point.x, t, ++s))
            rep.members.push_back(t);
        else
            rep.non_members.push_back(t);
    }
    const std::size_t nm = std::min<std::size_t>(rep.members.size(), 8);
    for (std::size_t i = 0; i < nm; ++i)
        for (std::size_t j = i + 1; j < nm; ++j)
            for (double al : {0.25, 0.5, 0.75}) {
                ++rep.blends_checked;
                Vector t = al * rep.members[i] + (1.0 - al) * rep.members[j];
                if (!theta_member(tp, point.x, t, ++s))
                    rep.failures.push_back("blend of members " + std::to_string(i) + "," + std::to_string(j) + " left the set");
            }
    return rep;
}

}  // namespace hypergame

#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "nlp.hpp"

namespace hypergame {

struct RelaxationSchedule {
    double eps0 = 1.0;
    double shrink = 0.2;
    double penalty0 = 10.0;
    double growth = 10.0;
    int max_rounds = 12;
    double final_comp_tol = 1e-8;
    double nlp_tol = 1e-9;
    NlpOptions nlp = [] {
        NlpOptions o;
        o.n_starts = 1;
        return o;
    }();

    void validate() const {
        if (!(eps0 > final_comp_tol && final_comp_tol > 0.0 && growth > 1.0 && shrink > 0.0 && shrink < 1.0 &&
              max_rounds > 0 && nlp_tol > 0.0))
            throw Error(ErrorCode::DimensionMismatch, "invalid relaxation schedule");
    }
};

namespace detail {

// Layout of the relaxed problem: x followed by one slack per non-simple nonnegative expression.
struct RelaxedLayout {
    Index n = 0;
    std::vector<Index> slack_of;  // -1 when the expression is a single bounded variable
    Index n_slacks = 0;
};

inline double pair_side(const NlpProblem& p, const RelaxedLayout& lay, std::size_t i, const Vector& z) {
    if (lay.slack_of[i] < 0) {
        const auto& sv = *p.nonneg_exprs[i].single_variable;
        return sv.sign * z[sv.index] + sv.offset;
    }
    return z[lay.slack_of[i]];
}

inline void pair_side_grad(const NlpProblem& p, const RelaxedLayout& lay, std::size_t i, double factor, Vector& g) {
    if (lay.slack_of[i] < 0) {
        const auto& sv = *p.nonneg_exprs[i].single_variable;
        g[sv.index] += factor * sv.sign;
    } else {
        g[lay.slack_of[i]] += factor;
    }
}

inline std::pair<Index, double> pair_index(const NlpProblem& p, const RelaxedLayout& lay, std::size_t i) {
    if (lay.slack_of[i] < 0) return {p.nonneg_exprs[i].single_variable->index, p.nonneg_exprs[i].single_variable->sign};
    return {lay.slack_of[i], 1.0};
}

inline NlpProblem relaxed_problem(std::shared_ptr<const NlpProblem> p, const RelaxedLayout& lay, double eps,
                                  double rho) {
    const Index nz = lay.n + lay.n_slacks;
    NlpProblem r(nz);
    r.lower.head(lay.n) = p->lower;
    r.upper.head(lay.n) = p->upper;
    r.lower.tail(lay.n_slacks).setZero();
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i) {
        if (lay.slack_of[i] >= 0) continue;
        const auto& sv = *p->nonneg_exprs[i].single_variable;
        if (sv.sign > 0)
            r.lower[sv.index] = std::max(r.lower[sv.index], -sv.offset / sv.sign);
        else
            r.upper[sv.index] = std::min(r.upper[sv.index], -sv.offset / sv.sign);
    }
    auto product = [p, lay](std::size_t i, std::size_t j) {
        ScalarFunction f;
        f.value = [p, lay, i, j](const Vector& z) { return pair_side(*p, lay, i, z) * pair_side(*p, lay, j, z); };
        f.add_gradient = [p, lay, i, j](const Vector& z, double factor, Vector& g) {
            double a = pair_side(*p, lay, i, z), b = pair_side(*p, lay, j, z);
            pair_side_grad(*p, lay, i, factor * b, g);
            pair_side_grad(*p, lay, j, factor * a, g);
        };
        f.add_hessian = [p, lay, i, j](const Vector&, double factor, Matrix& h) {
            auto [a, sa] = pair_index(*p, lay, i);
            auto [b, sb] = pair_index(*p, lay, j);
            h(a, b) += factor * sa * sb;
            h(b, a) += factor * sa * sb;
        };
        return f;
    };
    std::vector<ScalarFunction> obj{p->objective};
    for (const auto& [i, j] : p->comp_pairs) obj.push_back(scaled(product(i, j), rho));
    r.objective = sum_of(std::move(obj));
    r.eq_constraints = p->eq_constraints;
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i) {
        Index s = lay.slack_of[i];
        if (s < 0) continue;
        ScalarFunction f;
        f.value = [p, i, s](const Vector& z) { return z[s] - p->nonneg_exprs[i].value(z); };
        f.add_gradient = [p, i, s](const Vector& z, double factor, Vector& g) {
            g[s] += factor;
            p->nonneg_exprs[i].add_gradient(z, -factor, g);
        };
        if (p->nonneg_exprs[i].add_hessian)
            f.add_hessian = [p, i](const Vector& z, double factor, Matrix& h) {
                p->nonneg_exprs[i].add_hessian(z, -factor, h);
            };
        r.eq_constraints.push_back(std::move(f));
    }
    r.ineq_constraints = p->ineq_constraints;
    for (const auto& [i, j] : p->comp_pairs) {
        ScalarFunction prod = product(i, j);
        ScalarFunction f;
        f.value = [prod, eps](const Vector& z) { return prod.value(z) - eps; };
        f.add_gradient = prod.add_gradient;
        f.add_hessian = prod.add_hessian;
        r.ineq_constraints.push_back(std::move(f));
    }
    return r;
}

}  // namespace detail

// Sequential complementarity relaxation: products <= eps_k plus penalty rho_k * sum of products.
inline KktPoint solve_mpec(const NlpProblem& problem, const Vector& x0, const RelaxationSchedule& schedule = {}) {
    schedule.validate();
    detail::validate(problem, x0);
    if (problem.comp_pairs.empty()) throw Error(ErrorCode::DimensionMismatch, "solve_mpec needs complementarity pairs");
    auto p = std::make_shared<const NlpProblem>(problem);
    detail::RelaxedLayout lay;
    lay.n = p->n_vars;
    lay.slack_of.assign(p->nonneg_exprs.size(), -1);
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i)
        if (!p->nonneg_exprs[i].single_variable) lay.slack_of[i] = lay.n + lay.n_slacks++;

    Vector z(lay.n + lay.n_slacks);
    z.head(lay.n) = x0;
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i)
        if (lay.slack_of[i] >= 0) z[lay.slack_of[i]] = std::max(0.0, p->nonneg_exprs[i].value(z));

    double prev = kInf, comp = kInf;
    KktPoint rp;
    for (int k = 0; k < schedule.max_rounds; ++k) {
        double eps = schedule.eps0 * std::pow(schedule.shrink, k);
        double rho = schedule.penalty0 * std::pow(schedule.growth, k);
        NlpProblem relaxed = detail::relaxed_problem(p, lay, eps, rho);
        NlpOptions nopt = schedule.nlp;
        if (k > 0) {
            nopt.lambda_eq0 = rp.lambda_eq;
            nopt.lambda_ineq0 = rp.lambda_ineq;
        }
        rp = solve_nlp(relaxed, z, schedule.nlp_tol, nopt);
        z = rp.x;
        comp = 0.0;
        for (const auto& [i, j] : p->comp_pairs)
            comp = std::max(comp, std::abs(detail::pair_side(*p, lay, i, z) * detail::pair_side(*p, lay, j, z)));
        log(LogLevel::debug, "mpec round ", k, " eps=", eps, " rho=", rho, " comp=", comp, " obj=", rp.objective);
        if (comp > prev * (1.0 + 1e-6) + 1e-14 && comp > schedule.final_comp_tol)
            throw Error(ErrorCode::RelaxationStalled, "complementarity residual increased between rounds");
        prev = comp;
        if (comp <= schedule.final_comp_tol) break;
    }
    if (comp > schedule.final_comp_tol)
        throw Error(ErrorCode::RelaxationStalled, "complementarity tolerance not reached within max_rounds");

    const std::size_t me = p->eq_constraints.size(), mi = p->ineq_constraints.size();
    KktPoint out;
    out.x = z.head(lay.n);
    out.lambda_eq = rp.lambda_eq.head(me);
    out.lambda_ineq = rp.lambda_ineq.head(mi);
    out.lambda_nonneg = Vector::Zero(p->nonneg_exprs.size());
    std::size_t slack_row = me;
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i)
        if (lay.slack_of[i] >= 0) out.lambda_nonneg[i] = rp.lambda_eq[slack_row++];
    // Multipliers of single-variable expressions absorb the remaining gradient on their variable.
    Vector grad = Vector::Zero(lay.n);
    p->objective.add_gradient(out.x, 1.0, grad);
    for (std::size_t j = 0; j < me; ++j) p->eq_constraints[j].add_gradient(out.x, out.lambda_eq[j], grad);
    for (std::size_t i = 0; i < mi; ++i) p->ineq_constraints[i].add_gradient(out.x, out.lambda_ineq[i], grad);
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i)
        if (lay.slack_of[i] >= 0) p->nonneg_exprs[i].add_gradient(out.x, -out.lambda_nonneg[i], grad);
    for (std::size_t i = 0; i < p->nonneg_exprs.size(); ++i) {
        if (lay.slack_of[i] >= 0) continue;
        const auto& sv = *p->nonneg_exprs[i].single_variable;
        double e = sv.sign * out.x[sv.index] + sv.offset;
        if (std::abs(e) <= 1e-12 * (1.0 + std::abs(sv.offset))) {
            out.lambda_nonneg[i] = grad[sv.index] * sv.sign;
            grad[sv.index] = 0.0;
        }
    }
    out.objective = p->objective.value(out.x);
    KktReport rep = kkt_residual(*p, out);
    out.stationarity_residual = rep.stationarity;
    out.feas_residual = rep.feasibility;
    out.comp_residual = rep.complementarity;
    out.iterations = rp.iterations;
    return out;
}

}  // namespace hypergame

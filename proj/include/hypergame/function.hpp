#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "autodiff.hpp"

namespace hypergame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// expr(x) = sign * x[index] + offset
struct SingleVariable {
    Index index;
    double sign;
    double offset;
};

struct ScalarFunction {
    std::function<double(const Vector&)> value;
    std::function<void(const Vector&, double, Vector&)> add_gradient;  // grad += factor * df/dx
    std::function<void(const Vector&, double, Matrix&)> add_hessian;   // may be empty
    std::optional<SingleVariable> single_variable;

    double operator()(const Vector& x) const { return value(x); }

    Vector gradient(const Vector& x) const {
        Vector g = Vector::Zero(x.size());
        add_gradient(x, 1.0, g);
        return g;
    }

    Matrix hessian(const Vector& x) const {
        Matrix h = Matrix::Zero(x.size(), x.size());
        add_hessian(x, 1.0, h);
        return h;
    }
};

// Wrap a generic lambda f(const std::array<S, N>&) -> S over the variables idx.
template <std::size_t N, typename F>
ScalarFunction local_function(std::array<Index, N> idx, F f) {
    auto fn = std::make_shared<F>(std::move(f));
    ScalarFunction out;
    out.value = [idx, fn](const Vector& x) {
        std::array<double, N> v;
        for (std::size_t i = 0; i < N; ++i) v[i] = x[idx[i]];
        return (*fn)(v);
    };
    out.add_gradient = [idx, fn](const Vector& x, double factor, Vector& g) {
        using D = Dual<double, N>;
        std::array<D, N> v;
        for (std::size_t i = 0; i < N; ++i) {
            v[i].v = x[idx[i]];
            v[i].d[i] = 1.0;
        }
        D r = (*fn)(v);
        for (std::size_t i = 0; i < N; ++i) g[idx[i]] += factor * r.d[i];
    };
    out.add_hessian = [idx, fn](const Vector& x, double factor, Matrix& h) {
        using D1 = Dual<double, N>;
        using D2 = Dual<D1, N>;
        std::array<D2, N> v;
        for (std::size_t i = 0; i < N; ++i) {
            v[i].v.v = x[idx[i]];
            v[i].v.d[i] = 1.0;
            v[i].d[i].v = 1.0;
        }
        D2 r = (*fn)(v);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) h(idx[i], idx[j]) += factor * r.d[i].d[j];
    };
    return out;
}

// sign * x[index] + offset, flagged so relaxations can reuse the variable as its own slack.
inline ScalarFunction variable_expr(Index index, double sign, double offset) {
    auto f = local_function<1>({index}, [sign, offset](const auto& v) { return sign * v[0] + offset; });
    f.single_variable = SingleVariable{index, sign, offset};
    return f;
}

inline ScalarFunction constant_function(double c) {
    ScalarFunction out;
    out.value = [c](const Vector&) { return c; };
    out.add_gradient = [](const Vector&, double, Vector&) {};
    out.add_hessian = [](const Vector&, double, Matrix&) {};
    return out;
}

inline ScalarFunction sum_of(std::vector<ScalarFunction> terms) {
    auto parts = std::make_shared<std::vector<ScalarFunction>>(std::move(terms));
    ScalarFunction out;
    out.value = [parts](const Vector& x) {
        double s = 0.0;
        for (const auto& p : *parts) s += p.value(x);
        return s;
    };
    out.add_gradient = [parts](const Vector& x, double factor, Vector& g) {
        for (const auto& p : *parts) p.add_gradient(x, factor, g);
    };
    bool hess = true;
    for (const auto& p : *parts) hess = hess && static_cast<bool>(p.add_hessian);
    if (hess) {
        out.add_hessian = [parts](const Vector& x, double factor, Matrix& h) {
            for (const auto& p : *parts) p.add_hessian(x, factor, h);
        };
    }
    return out;
}

inline ScalarFunction scaled(ScalarFunction f, double a) {
    ScalarFunction out;
    auto base = std::make_shared<ScalarFunction>(std::move(f));
    out.value = [base, a](const Vector& x) { return a * base->value(x); };
    out.add_gradient = [base, a](const Vector& x, double factor, Vector& g) { base->add_gradient(x, a * factor, g); };
    if (base->add_hessian)
        out.add_hessian = [base, a](const Vector& x, double factor, Matrix& h) { base->add_hessian(x, a * factor, h); };
    return out;
}

// Re-index f so that it reads its variables from x[offset + i].
inline ScalarFunction shifted(ScalarFunction f, Index offset, Index inner_size) {
    auto base = std::make_shared<ScalarFunction>(std::move(f));
    ScalarFunction out;
    out.value = [base, offset, inner_size](const Vector& x) { return base->value(x.segment(offset, inner_size)); };
    out.add_gradient = [base, offset, inner_size](const Vector& x, double factor, Vector& g) {
        Vector gi = Vector::Zero(inner_size);
        base->add_gradient(x.segment(offset, inner_size), factor, gi);
        g.segment(offset, inner_size) += gi;
    };
    if (base->add_hessian) {
        out.add_hessian = [base, offset, inner_size](const Vector& x, double factor, Matrix& h) {
            Matrix hi = Matrix::Zero(inner_size, inner_size);
            base->add_hessian(x.segment(offset, inner_size), factor, hi);
            h.block(offset, offset, inner_size, inner_size) += hi;
        };
    }
    if (base->single_variable) {
        auto sv = *base->single_variable;
        sv.index += offset;
        out.single_variable = sv;
    }
    return out;
}

}  // namespace hypergame

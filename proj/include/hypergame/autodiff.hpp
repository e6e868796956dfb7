#pragma once

// Forward-mode dual numbers over a fixed, small set of local variables.
// Nesting Dual<Dual<double, N>, N> yields exact second derivatives.

#include <array>
#include <cmath>
#include <cstddef>

namespace hypergame {

template <typename T, std::size_t N>
struct Dual {
    T v{};
    std::array<T, N> d{};

    Dual() = default;
    Dual(double c) : v(c) {}
    Dual(const T& value, const std::array<T, N>& grad) : v(value), d(grad) {}

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }
};

template <typename T, std::size_t N>
Dual<T, N> operator+(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    r.v = a.v + b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}

template <typename T, std::size_t N>
Dual<T, N> operator-(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    r.v = a.v - b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}

template <typename T, std::size_t N>
Dual<T, N> operator-(const Dual<T, N>& a) {
    Dual<T, N> r;
    r.v = -a.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}

template <typename T, std::size_t N>
Dual<T, N> operator*(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    r.v = a.v * b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}

template <typename T, std::size_t N>
Dual<T, N> operator/(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    r.v = a.v / b.v;
    T inv = T(1.0) / b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
}

template <typename T, std::size_t N>
Dual<T, N> operator+(const Dual<T, N>& a, double c) {
    Dual<T, N> r = a;
    r.v = r.v + c;
    return r;
}
template <typename T, std::size_t N>
Dual<T, N> operator+(double c, const Dual<T, N>& a) { return a + c; }

template <typename T, std::size_t N>
Dual<T, N> operator-(const Dual<T, N>& a, double c) { return a + (-c); }
template <typename T, std::size_t N>
Dual<T, N> operator-(double c, const Dual<T, N>& a) { return (-a) + c; }

template <typename T, std::size_t N>
Dual<T, N> operator*(const Dual<T, N>& a, double c) {
    Dual<T, N> r;
    r.v = a.v * c;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * c;
    return r;
}
template <typename T, std::size_t N>
Dual<T, N> operator*(double c, const Dual<T, N>& a) { return a * c; }

template <typename T, std::size_t N>
Dual<T, N> operator/(const Dual<T, N>& a, double c) { return a * (1.0 / c); }
template <typename T, std::size_t N>
Dual<T, N> operator/(double c, const Dual<T, N>& a) { return Dual<T, N>(c) / a; }

template <typename T, std::size_t N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
    using std::sqrt;
    Dual<T, N> r;
    r.v = sqrt(a.v);
    T inv = T(0.5) / r.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
    return r;
}

inline double value_of(double x) { return x; }

template <typename T, std::size_t N>
double value_of(const Dual<T, N>& a) { return value_of(a.v); }

}  // namespace hypergame

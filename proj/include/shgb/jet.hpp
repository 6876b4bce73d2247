#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace shgb {

/// Truncated Taylor series in one variable: c[k] = f^(k)(x0) / k!.
/// Enough arithmetic for closed-form potentials (rational functions, sqrt,
/// atan); used to get exact higher derivatives without hand expansion.
template <std::size_t Order>
struct Jet {
    std::array<double, Order + 1> c{};

    static Jet variable(double x0)
    {
        Jet j;
        j.c[0] = x0;
        if constexpr (Order >= 1)
            j.c[1] = 1.0;
        return j;
    }
    static Jet constant(double v)
    {
        Jet j;
        j.c[0] = v;
        return j;
    }

    /// k-th derivative at the expansion point.
    [[nodiscard]] double d(std::size_t k) const
    {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i)
            f *= static_cast<double>(i);
        return c[k] * f;
    }
    [[nodiscard]] double value() const { return c[0]; }

    Jet operator-() const
    {
        Jet r;
        for (std::size_t k = 0; k <= Order; ++k)
            r.c[k] = -c[k];
        return r;
    }
    Jet& operator+=(const Jet& o)
    {
        for (std::size_t k = 0; k <= Order; ++k)
            c[k] += o.c[k];
        return *this;
    }
    Jet& operator-=(const Jet& o)
    {
        for (std::size_t k = 0; k <= Order; ++k)
            c[k] -= o.c[k];
        return *this;
    }
    Jet& operator*=(double s)
    {
        for (auto& v : c)
            v *= s;
        return *this;
    }
};

template <std::size_t N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) { return a += b; }
template <std::size_t N>
Jet<N> operator-(Jet<N> a, const Jet<N>& b) { return a -= b; }
template <std::size_t N>
Jet<N> operator*(Jet<N> a, double s) { return a *= s; }
template <std::size_t N>
Jet<N> operator*(double s, Jet<N> a) { return a *= s; }
template <std::size_t N>
Jet<N> operator+(Jet<N> a, double s) { a.c[0] += s; return a; }
template <std::size_t N>
Jet<N> operator+(double s, Jet<N> a) { a.c[0] += s; return a; }
template <std::size_t N>
Jet<N> operator-(Jet<N> a, double s) { a.c[0] -= s; return a; }
template <std::size_t N>
Jet<N> operator-(double s, const Jet<N>& a) { return Jet<N>::constant(s) - a; }

template <std::size_t N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b)
{
    Jet<N> r;
    for (std::size_t k = 0; k <= N; ++k)
        for (std::size_t i = 0; i <= k; ++i)
            r.c[k] += a.c[i] * b.c[k - i];
    return r;
}

template <std::size_t N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b)
{
    Jet<N> q;
    for (std::size_t k = 0; k <= N; ++k) {
        double s = a.c[k];
        for (std::size_t i = 0; i < k; ++i)
            s -= q.c[i] * b.c[k - i];
        q.c[k] = s / b.c[0];
    }
    return q;
}

template <std::size_t N>
Jet<N> operator/(double s, const Jet<N>& b) { return Jet<N>::constant(s) / b; }
template <std::size_t N>
Jet<N> operator/(Jet<N> a, double s) { return a *= (1.0 / s); }

template <std::size_t N>
Jet<N> sqrt(const Jet<N>& a)
{
    Jet<N> s;
    s.c[0] = std::sqrt(a.c[0]);
    for (std::size_t k = 1; k <= N; ++k) {
        double acc = a.c[k];
        for (std::size_t i = 1; i < k; ++i)
            acc -= s.c[i] * s.c[k - i];
        s.c[k] = acc / (2.0 * s.c[0]);
    }
    return s;
}

/// atan via g' = a' / (1 + a^2).
template <std::size_t N>
Jet<N> atan(const Jet<N>& a)
{
    const Jet<N> w = 1.0 / (1.0 + a * a);
    Jet<N> g;
    g.c[0] = std::atan(a.c[0]);
    for (std::size_t k = 1; k <= N; ++k) {
        double acc = 0.0;
        for (std::size_t i = 1; i <= k; ++i)
            acc += static_cast<double>(i) * a.c[i] * w.c[k - i];
        g.c[k] = acc / static_cast<double>(k);
    }
    return g;
}

} // namespace shgb

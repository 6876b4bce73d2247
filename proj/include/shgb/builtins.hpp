#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>

#include "coefficients.hpp"
#include "jet.hpp"

namespace shgb {

// Sign convention: the systems are written with transport on the left,
// d_t u + alpha . grad u = ...; a displayed right-hand side term
// "+ c(x) d_{x_k} u" therefore becomes alpha[k] = -c(x).
//
//   problem          displayed RHS transport              alpha
//   ex1, u1          (x1+x2+1) d1 + (2x1-x2-1) d2         -(x1+x2+1), -(2x1-x2-1)
//   ex1, u2          (x1/2+x2-1) d1 + (x1-x2/2+1) d2      -(x1/2+x2-1), -(x1-x2/2+1)
//   ex2, u1          sin(x1+x2) d1 + cos(x1-x2) d2        -sin(x1+x2), -cos(x1-x2)
//   ex2, u2          sin(x1-x2) d1 + cos(x1+x2) d2        -sin(x1-x2), -cos(x1+x2)
//   QCLE, surface s  -p d_r + W_s'(r) d_p                 p, -W_s'(r)
//
// In ex1 the second equation's "d u1/d x2" is read as "d u2/d x2", and in
// the QCLE the u22 equation's "grad_p u11" as "grad_p u22"; otherwise the
// systems are not of the transport form above.

namespace detail {

inline Mat zeros2() { return Mat::Zero(2, 2); }

inline void check_surface(int i, int n, const char* who)
{
    if (i < 0 || i >= n)
        throw std::out_of_range(std::string(who) + ": surface index out of range");
}

} // namespace detail

/// Linear alpha, quadratic beta, constant gamma.
inline CoefficientBundle builtin_ex1(double epsilon)
{
    CoefficientBundle s;
    s.name = "ex1";
    s.m = 2;
    s.n = 2;
    s.epsilon = epsilon;
    s.alpha = [](int i, double, const Vec& x) -> Vec {
        detail::check_surface(i, 2, "ex1");
        Vec a(2);
        if (i == 0)
            a << -(x[0] + x[1] + 1.0), -(2.0 * x[0] - x[1] - 1.0);
        else
            a << -(0.5 * x[0] + x[1] - 1.0), -(x[0] - 0.5 * x[1] + 1.0);
        return a;
    };
    s.grad_alpha = [](int i, double, const Vec&) -> Mat {
        Mat g(2, 2);
        if (i == 0)
            g << -1.0, -1.0, -2.0, 1.0;
        else
            g << -0.5, -1.0, -1.0, 0.5;
        return g;
    };
    s.hess_p_dot_alpha = [](int, double, const Vec&, const Vec&) { return detail::zeros2(); };
    s.beta = [](int i, double, const Vec& x) {
        return i == 0 ? x.squaredNorm() : (x[0] + x[1]) * (x[0] + x[1]);
    };
    s.grad_beta = [](int i, double, const Vec& x) -> Vec {
        if (i == 0)
            return 2.0 * x;
        const double s2 = 2.0 * (x[0] + x[1]);
        return Vec::Constant(2, s2);
    };
    s.hess_beta = [](int i, double, const Vec&) -> Mat {
        if (i == 0)
            return 2.0 * Mat::Identity(2, 2);
        return Mat::Constant(2, 2, 2.0);
    };
    s.gamma = [](int i, int j, double, const Vec&) -> cplx {
        static constexpr double g[2][2] = {{-1.0, 0.5}, {2.0 / 3.0, -2.0}};
        return g[i][j];
    };
    return s;
}

/// Trigonometric alpha and beta, gamma proportional to |x|^2.
inline CoefficientBundle builtin_ex2(double epsilon)
{
    CoefficientBundle s;
    s.name = "ex2";
    s.m = 2;
    s.n = 2;
    s.epsilon = epsilon;
    s.alpha = [](int i, double, const Vec& x) -> Vec {
        detail::check_surface(i, 2, "ex2");
        const double sp = x[0] + x[1];
        const double sm = x[0] - x[1];
        Vec a(2);
        if (i == 0)
            a << -std::sin(sp), -std::cos(sm);
        else
            a << -std::sin(sm), -std::cos(sp);
        return a;
    };
    s.grad_alpha = [](int i, double, const Vec& x) -> Mat {
        const double sp = x[0] + x[1];
        const double sm = x[0] - x[1];
        Mat g(2, 2);
        if (i == 0) {
            const double c = -std::cos(sp);
            const double d = std::sin(sm);
            g << c, c, d, -d;
        } else {
            const double c = -std::cos(sm);
            const double d = std::sin(sp);
            g << c, -c, d, d;
        }
        return g;
    };
    s.hess_p_dot_alpha = [](int i, double, const Vec& x, const Vec& P) -> Mat {
        const double sp = x[0] + x[1];
        const double sm = x[0] - x[1];
        Mat plus(2, 2);
        Mat minus(2, 2);
        plus << 1.0, 1.0, 1.0, 1.0;
        minus << 1.0, -1.0, -1.0, 1.0;
        if (i == 0) // -sin(x1+x2), -cos(x1-x2)
            return P[0] * std::sin(sp) * plus + P[1] * std::cos(sm) * minus;
        // -sin(x1-x2), -cos(x1+x2)
        return P[0] * std::sin(sm) * minus + P[1] * std::cos(sp) * plus;
    };
    s.beta = [](int i, double, const Vec& x) {
        const double r2 = x.squaredNorm();
        return i == 0 ? std::sin(r2) : std::cos(r2);
    };
    s.grad_beta = [](int i, double, const Vec& x) -> Vec {
        const double r2 = x.squaredNorm();
        return (i == 0 ? std::cos(r2) : -std::sin(r2)) * 2.0 * x;
    };
    s.hess_beta = [](int i, double, const Vec& x) -> Mat {
        const double r2 = x.squaredNorm();
        const Mat xx = x * x.transpose();
        const Mat I = Mat::Identity(2, 2);
        if (i == 0)
            return -4.0 * std::sin(r2) * xx + 2.0 * std::cos(r2) * I;
        return -4.0 * std::cos(r2) * xx - 2.0 * std::sin(r2) * I;
    };
    s.gamma = [](int i, int j, double, const Vec& x) -> cplx {
        static constexpr double g[2][2] = {{-1.0, 5.0}, {-5.0, -0.5}};
        return g[i][j] * x.squaredNorm();
    };
    return s;
}

// ---- quantum-classical Liouville systems ------------------------------------

/// Components of the QCLE bundles, phase space x = (r, p).
enum QcleSurface : int { kU11 = 0, kU22 = 1, kU21 = 2 };

/// Adiabatic data derived from a real symmetric 2x2 potential V(r).
struct AdiabaticData {
    Jet<3> E1;    // upper eigenvalue
    Jet<3> E2;    // lower eigenvalue
    Jet<3> mean;  // (E1 + E2) / 2 = trace / 2
    double d21 = 0.0;
};

/// Diabatic potential entries as jets in r.
struct DiabaticPotential {
    Jet<3> v11, v12, v22;
};

template <class PotentialFn>
AdiabaticData adiabatic_from_potential(PotentialFn&& V, double r)
{
    const DiabaticPotential v = V(Jet<3>::variable(r));
    const Jet<3> half_tr = (v.v11 + v.v22) * 0.5;
    const Jet<3> diff = v.v11 - v.v22;
    const Jet<3> disc = diff * diff + 4.0 * (v.v12 * v.v12);
    const Jet<3> half_root = sqrt(disc) * 0.5;
    AdiabaticData a;
    // the eigenvalue of smaller magnitude comes from det / (larger one)
    const Jet<3> det = v.v11 * v.v22 - v.v12 * v.v12;
    if (half_tr.value() >= 0.0) {
        a.E1 = half_tr + half_root;
        a.E2 = a.E1.value() != 0.0 ? det / a.E1 : half_tr - half_root;
    } else {
        a.E2 = half_tr - half_root;
        a.E1 = det / a.E2;
    }
    a.mean = half_tr;
    a.d21 = (diff.c[0] * v.v12.c[1] - v.v12.c[0] * diff.c[1]) / disc.c[0];
    return a;
}

/// Three-component QCLE bundle (u11, u22, u21) over (r, p), m = 2, with
/// conjugate couplings.  `V` maps a Jet<3> r to the diabatic entries.
template <class PotentialFn>
CoefficientBundle make_qcle_bundle(std::string name, double epsilon, PotentialFn V)
{
    auto pot = std::make_shared<PotentialFn>(std::move(V));
    auto adiabatic = [pot](double r) { return adiabatic_from_potential(*pot, r); };
    // W_s: energy surface driving the momentum on component s
    auto surface_jet = [](const AdiabaticData& a, int s) -> const Jet<3>& {
        return s == kU11 ? a.E1 : (s == kU22 ? a.E2 : a.mean);
    };

    CoefficientBundle b;
    b.name = std::move(name);
    b.m = 2;
    b.n = 3;
    b.epsilon = epsilon;
    b.alpha = [adiabatic, surface_jet](int s, double, const Vec& x) -> Vec {
        detail::check_surface(s, 3, "qcle");
        const auto a = adiabatic(x[0]);
        Vec v(2);
        v << x[1], -surface_jet(a, s).d(1);
        return v;
    };
    b.grad_alpha = [adiabatic, surface_jet](int s, double, const Vec& x) -> Mat {
        const auto a = adiabatic(x[0]);
        Mat g(2, 2);
        g << 0.0, 1.0, -surface_jet(a, s).d(2), 0.0;
        return g;
    };
    b.hess_p_dot_alpha = [adiabatic, surface_jet](int s, double, const Vec& x, const Vec& P) -> Mat {
        const auto a = adiabatic(x[0]);
        Mat h = Mat::Zero(2, 2);
        h(0, 0) = -P[1] * surface_jet(a, s).d(3);
        return h;
    };
    b.beta = [adiabatic](int s, double, const Vec& x) -> double {
        if (s != kU21)
            return 0.0;
        const auto a = adiabatic(x[0]);
        return -(a.E2.value() - a.E1.value());
    };
    b.grad_beta = [adiabatic](int s, double, const Vec& x) -> Vec {
        Vec g = Vec::Zero(2);
        if (s == kU21) {
            const auto a = adiabatic(x[0]);
            g[0] = -(a.E2.d(1) - a.E1.d(1));
        }
        return g;
    };
    b.hess_beta = [adiabatic](int s, double, const Vec& x) -> Mat {
        Mat h = Mat::Zero(2, 2);
        if (s == kU21) {
            const auto a = adiabatic(x[0]);
            h(0, 0) = -(a.E2.d(2) - a.E1.d(2));
        }
        return h;
    };
    // d11 = d22 = 0 and V real, so d21 is real; conj() kept for the general form.
    b.gamma = [adiabatic](int i, int j, double, const Vec& x) -> cplx {
        detail::check_surface(i, 3, "qcle");
        detail::check_surface(j, 3, "qcle");
        if (i == kU21 && j == kU21)
            return 0.0; // p . (d11 - d22)
        if (i != kU21 && j != kU21)
            return 0.0;
        const cplx pd = x[1] * cplx(adiabatic(x[0]).d21, 0.0);
        if (i == kU11)
            return std::conj(pd);
        if (i == kU22)
            return -std::conj(pd);
        return j == kU11 ? -pd : pd;
    };
    b.nu = [adiabatic](int i, int j, double, const Vec& x) -> cplx {
        if (j != kU21 || i == kU21)
            return 0.0;
        const cplx pd = x[1] * cplx(adiabatic(x[0]).d21, 0.0);
        return i == kU11 ? pd : -pd;
    };
    return b;
}

/// Diabatic entries of the extended-coupling-with-reflection potential.
inline DiabaticPotential tully_ecr_potential(const Jet<3>& r, double delta)
{
    const Jet<3> F = (atan(100.0 * r) + (kPi / 2.0 + delta)) * (1.0 / kPi);
    const Jet<3> off = (atan(2.0 * r) + kPi / 2.0) * 0.1;
    return {F * (1.0 / 20.0), F * off, F * (-1.0 / 20.0)};
}

/// Tully's extended coupling with reflection; the usual choice is delta = 5 eps.
inline CoefficientBundle builtin_tully_ecr(double epsilon, double delta)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("tully_ecr: epsilon must be positive");
    return make_qcle_bundle("tully_ecr", epsilon,
                            [delta](const Jet<3>& r) { return tully_ecr_potential(r, delta); });
}

inline DiabaticPotential single_crossing_potential(const Jet<3>& r)
{
    if (r.value() == 0.0)
        throw std::domain_error("single_crossing: potential is singular at r = 0");
    return {r * r, Jet<3>::constant(0.1), 1.0 / r};
}

inline CoefficientBundle builtin_single_crossing(double epsilon)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("single_crossing: epsilon must be positive");
    return make_qcle_bundle("single_crossing", epsilon,
                            [](const Jet<3>& r) { return single_crossing_potential(r); });
}

} // namespace shgb

#pragma once

#include <compare>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "linalg.hpp"

namespace shgb {

/// Evaluable coefficients of the transport system
///
///   d_t u_i + alpha_i . grad u_i = (i/eps) beta_i u_i + sum_j gamma_ij u_j + sum_j nu_ij conj(u_j)
///
/// on R^m with n components.  Surface indices are 0-based.  The derivative
/// evaluators are supplied by the user (no symbolic differentiation);
/// grad_alpha(i,t,x)(a,b) = d alpha_i[a] / d x[b].
struct CoefficientBundle {
    std::string name;
    int m = 1;
    int n = 1;
    double epsilon = 1.0;
    /// coefficients do not depend on t (lets grid solvers cache them)
    bool time_independent = true;

    std::function<Vec(int, double, const Vec&)> alpha;
    std::function<Mat(int, double, const Vec&)> grad_alpha;
    /// Hessian in x of P . alpha_i(t, x); linear in P
    std::function<Mat(int, double, const Vec&, const Vec&)> hess_p_dot_alpha;
    std::function<double(int, double, const Vec&)> beta;
    std::function<Vec(int, double, const Vec&)> grad_beta;
    std::function<Mat(int, double, const Vec&)> hess_beta;
    std::function<cplx(int, int, double, const Vec&)> gamma;
    /// conjugate couplings; empty for the plain system
    std::function<cplx(int, int, double, const Vec&)> nu;

    [[nodiscard]] bool conjugate_coupled() const { return static_cast<bool>(nu); }

    void validate() const
    {
        if (m < 1 || n < 1)
            throw std::invalid_argument("CoefficientBundle '" + name + "': m and n must be >= 1");
        if (!(epsilon > 0.0))
            throw std::invalid_argument("CoefficientBundle '" + name + "': epsilon must be positive");
        if (!alpha || !grad_alpha || !hess_p_dot_alpha || !beta || !grad_beta || !hess_beta || !gamma)
            throw std::invalid_argument("CoefficientBundle '" + name + "': missing evaluator");
    }
};

/// A component of the conjugate-doubled system: u_i (plain) or w_i = conj(u_i).
struct ExtendedIndex {
    int surface = 0;
    bool conjugated = false;

    auto operator<=>(const ExtendedIndex&) const = default;

    /// position in the doubled ordering u_0..u_{n-1}, w_0..w_{n-1}
    [[nodiscard]] int flat(int n) const { return surface + (conjugated ? n : 0); }
    static ExtendedIndex from_flat(int k, int n) { return {k % n, k >= n}; }
};

/// Entry (row, col) of the doubled coupling matrix [[gamma, nu], [conj nu, conj gamma]]:
/// the coefficient of component `col` in the equation of component `row`.
/// A hop i -> j has rate |effective_gamma(j, i)|.
inline cplx effective_gamma(const CoefficientBundle& sys, ExtendedIndex row, ExtendedIndex col,
                            double t, const Vec& x)
{
    if (row.surface < 0 || row.surface >= sys.n || col.surface < 0 || col.surface >= sys.n)
        throw std::out_of_range("effective_gamma: surface index out of range");
    if (row.conjugated == col.conjugated) {
        const cplx g = sys.gamma(row.surface, col.surface, t, x);
        return row.conjugated ? std::conj(g) : g;
    }
    if (!sys.nu)
        return {0.0, 0.0};
    const cplx v = sys.nu(row.surface, col.surface, t, x);
    return row.conjugated ? std::conj(v) : v;
}

/// The conjugate-coupled system written out as an ordinary 2n-component
/// system (u_0..u_{n-1}, w_0..w_{n-1}) with no nu term.  The w equations
/// are the complex conjugates of the u equations, so beta flips sign.
inline CoefficientBundle make_doubled(const CoefficientBundle& base)
{
    base.validate();
    const int n = base.n;
    CoefficientBundle d = base;
    d.name = base.name + "[doubled]";
    d.n = 2 * n;
    d.nu = nullptr;
    auto b = std::make_shared<CoefficientBundle>(base);
    d.alpha = [b, n](int i, double t, const Vec& x) { return b->alpha(i % n, t, x); };
    d.grad_alpha = [b, n](int i, double t, const Vec& x) { return b->grad_alpha(i % n, t, x); };
    d.hess_p_dot_alpha = [b, n](int i, double t, const Vec& x, const Vec& P) {
        return b->hess_p_dot_alpha(i % n, t, x, P);
    };
    d.beta = [b, n](int i, double t, const Vec& x) {
        const double v = b->beta(i % n, t, x);
        return i < n ? v : -v;
    };
    d.grad_beta = [b, n](int i, double t, const Vec& x) -> Vec {
        Vec g = b->grad_beta(i % n, t, x);
        if (i >= n)
            g = -g;
        return g;
    };
    d.hess_beta = [b, n](int i, double t, const Vec& x) -> Mat {
        Mat h = b->hess_beta(i % n, t, x);
        if (i >= n)
            h = -h;
        return h;
    };
    d.gamma = [b, n](int i, int j, double t, const Vec& x) {
        return effective_gamma(*b, ExtendedIndex::from_flat(i, n), ExtendedIndex::from_flat(j, n), t, x);
    };
    return d;
}

} // namespace shgb

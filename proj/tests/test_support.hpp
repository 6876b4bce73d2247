#pragma once

#include <functional>

#include "shgb/coefficients.hpp"

namespace shgb::testing {

inline Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double d : v)
        out[k++] = d;
    return out;
}

/// n surfaces on R^m with alpha = a_i + B x, beta = b_i + g.x + x'Hx/2 and a
/// user coupling; all derivatives are exact.
struct AffineSpec {
    int m = 1;
    int n = 1;
    double epsilon = 1.0;
    std::vector<Vec> a;    // per surface drift offsets
    Mat B;                 // shared drift Jacobian
    std::vector<double> b; // per surface
    std::vector<Vec> g;
    std::vector<Mat> H;
    std::function<cplx(int, int, double, const Vec&)> gamma;
    std::function<cplx(int, int, double, const Vec&)> nu;
};

inline CoefficientBundle affine_bundle(AffineSpec s)
{
    const int m = s.m;
    if (s.a.empty())
        s.a.assign(static_cast<std::size_t>(s.n), Vec::Zero(m));
    if (s.B.size() == 0)
        s.B = Mat::Zero(m, m);
    if (s.b.empty())
        s.b.assign(static_cast<std::size_t>(s.n), 0.0);
    if (s.g.empty())
        s.g.assign(static_cast<std::size_t>(s.n), Vec::Zero(m));
    if (s.H.empty())
        s.H.assign(static_cast<std::size_t>(s.n), Mat::Zero(m, m));
    if (!s.gamma)
        s.gamma = [](int, int, double, const Vec&) { return cplx(0.0, 0.0); };
    auto sp = std::make_shared<AffineSpec>(s);
    CoefficientBundle c;
    c.name = "affine";
    c.m = m;
    c.n = s.n;
    c.epsilon = s.epsilon;
    c.alpha = [sp](int i, double, const Vec& x) -> Vec { return sp->a[static_cast<std::size_t>(i)] + sp->B * x; };
    c.grad_alpha = [sp](int, double, const Vec&) -> Mat { return sp->B; };
    c.hess_p_dot_alpha = [sp](int, double, const Vec&, const Vec&) -> Mat { return Mat::Zero(sp->m, sp->m); };
    c.beta = [sp](int i, double, const Vec& x) {
        const auto k = static_cast<std::size_t>(i);
        return sp->b[k] + sp->g[k].dot(x) + 0.5 * x.dot(sp->H[k] * x);
    };
    c.grad_beta = [sp](int i, double, const Vec& x) -> Vec {
        const auto k = static_cast<std::size_t>(i);
        return sp->g[k] + sp->H[k] * x;
    };
    c.hess_beta = [sp](int i, double, const Vec&) -> Mat { return sp->H[static_cast<std::size_t>(i)]; };
    c.gamma = s.gamma;
    c.nu = s.nu;
    return c;
}

} // namespace shgb::testing

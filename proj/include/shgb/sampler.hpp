#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "beam.hpp"
#include "rng.hpp"

namespace shgb {

/// Initial data as an expectation over beam parameters:
///
///   u_i(0, x) = sum_{i in I} E_{theta ~ f_i}[ G(theta; x) ],
///
/// where `draw(i, rng)` returns a beam whose amplitude already carries the
/// normalization constant C_i and the phase of the raw density.  The
/// trajectory driver multiplies A by |I| after choosing i uniformly.
struct InitialSampler {
    std::string name;
    int m = 0;
    std::vector<int> surfaces;
    std::function<GaussianBeam(int surface, RandomSource& rng)> draw;

    void validate(int n_surfaces) const
    {
        if (surfaces.empty())
            throw std::invalid_argument("InitialSampler '" + name + "': empty surface set");
        for (int s : surfaces)
            if (s < 0 || s >= n_surfaces)
                throw std::invalid_argument("InitialSampler '" + name + "': surface out of range");
        if (!draw)
            throw std::invalid_argument("InitialSampler '" + name + "': missing draw function");
    }
};

/// Deterministic single beam on one surface.
inline InitialSampler make_point_sampler(std::string name, int surface, GaussianBeam beam)
{
    beam.validate();
    InitialSampler s;
    s.name = std::move(name);
    s.m = static_cast<int>(beam.dim());
    s.surfaces = {surface};
    s.draw = [beam](int, RandomSource&) { return beam; };
    return s;
}

/// X ~ Normal(0, (1-eps) I_2), M = I, amplitude 1/eps; reproduces
/// u_1(0, x) = exp(-|x|^2 / 2).
inline InitialSampler make_sampler_ex1(double epsilon)
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("make_sampler_ex1: epsilon must lie in (0, 1)");
    InitialSampler s;
    s.name = "ex1";
    s.m = 2;
    s.surfaces = {0};
    const double sd = std::sqrt(1.0 - epsilon);
    const cplx A(1.0 / epsilon, 0.0);
    s.draw = [sd, A](int, RandomSource& rng) {
        Vec X(2);
        X[0] = rng.normal(0.0, sd);
        X[1] = rng.normal(0.0, sd);
        GaussianBeam b;
        b.M = Mat::Identity(2, 2);
        b.N = Mat::Zero(2, 2);
        b.X = std::move(X);
        b.P = Vec::Zero(2);
        b.S = 0.0;
        b.A = A;
        return b;
    };
    return s;
}

/// u_1(0, x) = exp(-|x|^2 / (2 eps)): a single beam at the origin.
inline InitialSampler make_sampler_ex2(double epsilon)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("make_sampler_ex2: epsilon must be positive");
    return make_point_sampler("ex2", 0, GaussianBeam::isotropic(Vec::Zero(2), 1.0, 1.0));
}

/// u22(0, r, p) = exp(-((r-r0)^2 + (p-p0)^2)/eps) / (sqrt(32 pi) eps).
inline InitialSampler make_sampler_tully_ecr(double epsilon, double r0 = -1.5, double p0 = 1.5)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("make_sampler_tully_ecr: epsilon must be positive");
    Vec X(2);
    X << r0, p0;
    const cplx A(1.0 / (std::sqrt(32.0 * kPi) * epsilon), 0.0);
    return make_point_sampler("tully_ecr", 1, GaussianBeam::isotropic(X, 2.0, A));
}

/// Wigner-type initial data on u11 for the single-crossing problem,
///
///   u11(0, r, p) = sqrt(2/(pi eps)) exp(-(r-r0)^2/(2 eps) - 2 (p-p0)^2/eps),
///
/// written as a superposition of cross terms between two coherent states
/// centred at (r1, p1), (r2, p2).  With r_k ~ N(r0, 3 eps), p_k ~ N(p0, 3 eps/2):
///   X = ((r1+r2)/2, (p1+p2)/2),  M = 2I,  N = 0,
///   P = (p1-p2, -(r1-r2)),        S = -(r1-r2) (p1+p2)/2,
///   A = 6/sqrt(pi eps) exp(i [((p1-p0)(r1-r0) - (p2-p0)(r2-r0))/3 + p0 (r1-r2)] / eps).
/// Centres are drawn conditioned on X_r > r_min (the potential is singular at
/// r = 0) and A is scaled by the acceptance probability, so the estimate is
/// unbiased for the superposition restricted to X_r > r_min.
inline InitialSampler make_sampler_single_crossing(double epsilon, double r0 = 0.4, double p0 = 1.0,
                                                   double r_min = 0.05)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("make_sampler_single_crossing: epsilon must be positive");
    if (!(r0 > r_min))
        throw std::invalid_argument("make_sampler_single_crossing: r0 must exceed r_min");
    InitialSampler s;
    s.name = "single_crossing";
    s.m = 2;
    s.surfaces = {0};
    const double sr = std::sqrt(3.0 * epsilon);
    const double sp = std::sqrt(1.5 * epsilon);
    // (r1 + r2)/2 ~ N(r0, sr^2/2)
    const double accept = 0.5 * std::erfc(-(r0 - r_min) / sr);
    const double a0 = 6.0 / std::sqrt(kPi * epsilon) * accept;
    s.draw = [=](int, RandomSource& rng) {
        double r1 = 0.0, r2 = 0.0;
        do {
            r1 = rng.normal(r0, sr);
            r2 = rng.normal(r0, sr);
        } while (0.5 * (r1 + r2) <= r_min);
        const double p1 = rng.normal(p0, sp);
        const double p2 = rng.normal(p0, sp);
        const double pbar = 0.5 * (p1 + p2);
        GaussianBeam b;
        b.M = 2.0 * Mat::Identity(2, 2);
        b.N = Mat::Zero(2, 2);
        b.X = Vec(2);
        b.X << 0.5 * (r1 + r2), pbar;
        b.P = Vec(2);
        b.P << p1 - p2, -(r1 - r2);
        b.S = -(r1 - r2) * pbar;
        const double phase = (((p1 - p0) * (r1 - r0) - (p2 - p0) * (r2 - r0)) / 3.0 + p0 * (r1 - r2)) / epsilon;
        b.A = std::polar(a0, phase);
        return b;
    };
    return s;
}

/// Result of renormalizing a signed/complex parameter density.
struct NormalizedDensity {
    std::function<double(const Vec&)> f; // nonnegative, integrates to one
    std::function<cplx(const Vec&)> A;   // amplitude absorbing C and the phase of raw_f
    double C = 0.0;
};

/// Given raw_f, raw_A with raw_f * raw_A the integrand of the initial data,
/// returns f = |raw_f|/C and A = C raw_A raw_f/|raw_f| so that f*A = raw_f*raw_A.
inline NormalizedDensity normalize_density(std::function<cplx(const Vec&)> raw_f,
                                           std::function<cplx(const Vec&)> raw_A, double C)
{
    if (!(C > 0.0) || !std::isfinite(C))
        throw std::invalid_argument("normalize_density: normalization constant must be positive");
    NormalizedDensity d;
    d.C = C;
    d.f = [raw_f, C](const Vec& th) { return std::abs(raw_f(th)) / C; };
    d.A = [raw_f, raw_A, C](const Vec& th) -> cplx {
        const cplx v = raw_f(th);
        const double mag = std::abs(v);
        if (mag == 0.0)
            return 0.0;
        return C * raw_A(th) * (v / mag);
    };
    return d;
}

namespace detail {

inline double integrate_box(const std::function<double(const Vec&)>& g, const Vec& lo, const Vec& hi,
                            Vec& point, Eigen::Index axis)
{
    using boost::math::quadrature::gauss_kronrod;
    if (axis == lo.size())
        return g(point);
    auto inner = [&](double v) {
        point[axis] = v;
        return integrate_box(g, lo, hi, point, axis + 1);
    };
    return gauss_kronrod<double, 21>::integrate(inner, lo[axis], hi[axis], 8, 1e-11);
}

} // namespace detail

/// As above, with C = integral of |raw_f| over the box [lo, hi] computed by
/// nested adaptive Gauss-Kronrod quadrature (meant for low dimensions).
inline NormalizedDensity normalize_density(std::function<cplx(const Vec&)> raw_f,
                                           std::function<cplx(const Vec&)> raw_A, const Vec& lo,
                                           const Vec& hi)
{
    if (lo.size() != hi.size() || lo.size() == 0)
        throw std::invalid_argument("normalize_density: bad integration box");
    Vec point = lo;
    const double C = detail::integrate_box([&](const Vec& th) { return std::abs(raw_f(th)); }, lo, hi,
                                           point, 0);
    if (C == 0.0)
        throw std::invalid_argument("normalize_density: density vanishes identically");
    return normalize_density(std::move(raw_f), std::move(raw_A), C);
}

} // namespace shgb

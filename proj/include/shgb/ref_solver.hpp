#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "field_grid.hpp"

namespace shgb {

/// Upwind-biased third-order derivative from point values.  Stencil is
/// u[-2..2] around the node; `positive` selects the upwind side for a
/// positive drift (information coming from the left).
struct LinearUpwind3 {
    static cplx derivative(const cplx* u, bool positive, double inv_h)
    {
        if (positive)
            return (u[-2] - 6.0 * u[-1] + 3.0 * u[0] + 2.0 * u[1]) * (inv_h / 6.0);
        return (-2.0 * u[-1] - 3.0 * u[0] + 6.0 * u[1] - u[2]) * (inv_h / 6.0);
    }
};

/// Third-order WENO blend of the one-sided and central second-order
/// differences; reduces to LinearUpwind3 on smooth data.
struct Weno3 {
    static cplx derivative(const cplx* u, bool positive, double inv_h)
    {
        constexpr double tiny = 1e-12;
        const cplx central = (u[1] - u[-1]) * (0.5 * inv_h);
        cplx side;
        double s0;
        if (positive) {
            side = (u[-2] - 4.0 * u[-1] + 3.0 * u[0]) * (0.5 * inv_h);
            s0 = std::norm(u[0] - 2.0 * u[-1] + u[-2]);
        } else {
            side = -(u[2] - 4.0 * u[1] + 3.0 * u[0]) * (0.5 * inv_h);
            s0 = std::norm(u[0] - 2.0 * u[1] + u[2]);
        }
        const double s1 = std::norm(u[1] - 2.0 * u[0] + u[-1]);
        const double a0 = (1.0 / 3.0) / ((tiny + s0) * (tiny + s0));
        const double a1 = (2.0 / 3.0) / ((tiny + s1) * (tiny + s1));
        return (a0 * side + a1 * central) / (a0 + a1);
    }
};

struct RefSolveOptions {
    double cfl = 0.8;
    /// ceiling on the step from the phase term, as a multiple of eps
    double eps_step_factor = 0.5;
};

struct RefSolveResult {
    FieldGrid field;
    std::size_t steps = 0;
    double dt = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// Per-node coefficients of the whole system on the grid at one time.
struct GridCoefficients {
    int n = 0;
    std::size_t nodes = 0;
    std::vector<double> a0, a1;     // [s * nodes + k]
    std::vector<double> phase;      // beta / eps
    std::vector<cplx> gamma, nu;    // [(s * n + j) * nodes + k]
    bool has_nu = false;
    double max_rate = 0.0;          // sum_d max|alpha_d| / dx_d
    double max_source = 0.0;        // max |beta|/eps + sum |gamma| + sum |nu|
};

inline GridCoefficients evaluate_coefficients(const CoefficientBundle& sys, const FieldGrid& g, double t)
{
    GridCoefficients c;
    c.n = sys.n;
    c.nodes = g.n_nodes();
    c.has_nu = sys.conjugate_coupled();
    const std::size_t N = c.nodes;
    const auto n = static_cast<std::size_t>(sys.n);
    c.a0.resize(n * N);
    c.a1.resize(n * N);
    c.phase.resize(n * N);
    c.gamma.resize(n * n * N);
    if (c.has_nu)
        c.nu.resize(n * n * N);
    const double inv_h0 = 1.0 / g.axis(0).spacing();
    const double inv_h1 = 1.0 / g.axis(1).spacing();
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const Vec x = g.coordinates(k);
        for (std::size_t s = 0; s < n; ++s) {
            const int si = static_cast<int>(s);
            const Vec a = sys.alpha(si, t, x);
            c.a0[s * N + k] = a[0];
            c.a1[s * N + k] = a[1];
            m0 = std::max(m0, std::abs(a[0]));
            m1 = std::max(m1, std::abs(a[1]));
            const double ph = sys.beta(si, t, x) / sys.epsilon;
            c.phase[s * N + k] = ph;
            double src = std::abs(ph);
            for (std::size_t j = 0; j < n; ++j) {
                const cplx gv = sys.gamma(si, static_cast<int>(j), t, x);
                c.gamma[(s * n + j) * N + k] = gv;
                src += std::abs(gv);
                if (c.has_nu) {
                    const cplx nv = sys.nu(si, static_cast<int>(j), t, x);
                    c.nu[(s * n + j) * N + k] = nv;
                    src += std::abs(nv);
                }
            }
            c.max_source = std::max(c.max_source, src);
        }
    }
    c.max_rate = m0 * inv_h0 + m1 * inv_h1;
    return c;
}

// Zero-padded copy with two ghost nodes on each side.
struct Padded {
    int n0 = 0, n1 = 0;
    int w = 0; // padded row width
    std::vector<cplx> v;

    Padded(int n0_, int n1_, int n_surfaces) : n0(n0_), n1(n1_), w(n1_ + 4)
    {
        v.assign(static_cast<std::size_t>(n_surfaces) * static_cast<std::size_t>((n0 + 4) * w), cplx(0.0, 0.0));
    }
    cplx* at(int s, int i, int j)
    {
        return v.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>((n0 + 4) * w) +
               static_cast<std::size_t>((i + 2) * w + (j + 2));
    }
};

template <class Recon>
void transport_source_rhs(const GridCoefficients& c, const FieldGrid& g, const std::vector<cplx>& u,
                          Padded& pad, std::vector<cplx>& du)
{
    const int n0 = g.axis(0).count;
    const int n1 = g.axis(1).count;
    const double inv_h0 = 1.0 / g.axis(0).spacing();
    const double inv_h1 = 1.0 / g.axis(1).spacing();
    const std::size_t N = c.nodes;
    const auto n = static_cast<std::size_t>(c.n);
    for (int s = 0; s < c.n; ++s)
        for (int i = 0; i < n0; ++i)
            std::copy_n(u.data() + static_cast<std::size_t>(s) * N + static_cast<std::size_t>(i) * n1, n1,
                        pad.at(s, i, 0));
    const std::ptrdiff_t col_stride = pad.w;
    for (std::size_t s = 0; s < n; ++s) {
        for (int i = 0; i < n0; ++i) {
            for (int j = 0; j < n1; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * n1 + j;
                const std::size_t sk = s * N + k;
                const cplx* p = pad.at(static_cast<int>(s), i, j);
                // column stencil along axis 0 (stride = padded row width)
                const cplx col[5] = {p[-2 * col_stride], p[-col_stride], p[0], p[col_stride], p[2 * col_stride]};
                const double a0 = c.a0[sk];
                const double a1 = c.a1[sk];
                cplx r = 0.0;
                if (a0 != 0.0)
                    r -= a0 * Recon::derivative(col + 2, a0 > 0.0, inv_h0);
                if (a1 != 0.0)
                    r -= a1 * Recon::derivative(p, a1 > 0.0, inv_h1);
                r += cplx(0.0, c.phase[sk]) * u[sk];
                for (std::size_t jj = 0; jj < n; ++jj) {
                    const cplx uj = u[jj * N + k];
                    r += c.gamma[(s * n + jj) * N + k] * uj;
                    if (c.has_nu)
                        r += c.nu[(s * n + jj) * N + k] * std::conj(uj);
                }
                du[sk] = r;
            }
        }
    }
}

} // namespace detail

/// Method-of-lines reference solution of a two-dimensional system on the
/// node grid of `initial`: upwind-biased third-order differences of the
/// advective term, pointwise sources, SSP-RK3 in time, zero data outside
/// the box.  Recon selects the derivative reconstruction.
template <class Recon = LinearUpwind3>
RefSolveResult reference_solve(const CoefficientBundle& sys, const FieldGrid& initial, double T,
                               const RefSolveOptions& opt = {})
{
    sys.validate();
    if (sys.m != 2 || initial.dim() != 2)
        throw std::invalid_argument("reference_solve: two-dimensional problems only");
    if (initial.n_surfaces() != sys.n)
        throw std::invalid_argument("reference_solve: initial data has wrong number of components");
    if (!(opt.cfl > 0.0) || opt.cfl > 1.0)
        throw std::invalid_argument("reference_solve: cfl must lie in (0, 1]");
    if (!(T > 0.0))
        throw std::invalid_argument("reference_solve: T must be positive");

    RefSolveResult res;
    const double hmax = std::max(initial.axis(0).spacing(), initial.axis(1).spacing());
    if (sys.epsilon * kPi / hmax < 3.0) {
        std::ostringstream os;
        os << "reference_solve: grid spacing " << hmax << " gives fewer than 3 points per half-wavelength at eps = "
           << sys.epsilon;
        res.warnings.push_back(os.str());
    }

    detail::GridCoefficients coef = detail::evaluate_coefficients(sys, initial, 0.0);
    double dt = opt.cfl / std::max(coef.max_rate, 1e-300);
    dt = std::min(dt, opt.eps_step_factor * sys.epsilon);
    if (coef.max_source > 0.0)
        dt = std::min(dt, 1.0 / coef.max_source);
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt));
    dt = T / static_cast<double>(steps);
    res.dt = dt;
    res.steps = steps;

    const std::size_t total = initial.values().size();
    std::vector<cplx> u(initial.values().begin(), initial.values().end());
    std::vector<cplx> u1(total), u2(total), k(total);
    detail::Padded pad(initial.axis(0).count, initial.axis(1).count, sys.n);

    auto eval = [&](double t, const std::vector<cplx>& v, std::vector<cplx>& out) {
        if (!sys.time_independent)
            coef = detail::evaluate_coefficients(sys, initial, t);
        detail::transport_source_rhs<Recon>(coef, initial, v, pad, out);
    };

    for (std::size_t step = 0; step < steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        eval(t, u, k);
        for (std::size_t i = 0; i < total; ++i)
            u1[i] = u[i] + dt * k[i];
        eval(t + dt, u1, k);
        for (std::size_t i = 0; i < total; ++i)
            u2[i] = 0.75 * u[i] + 0.25 * (u1[i] + dt * k[i]);
        eval(t + 0.5 * dt, u2, k);
        for (std::size_t i = 0; i < total; ++i)
            u[i] = (1.0 / 3.0) * u[i] + (2.0 / 3.0) * (u2[i] + dt * k[i]);
    }

    res.field = FieldGrid(initial.axes(), initial.n_surfaces());
    std::copy(u.begin(), u.end(), res.field.values().begin());
    for (const auto& v : u)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericalError("reference_solve: solution became non-finite");
    return res;
}

/// Every `stride`-th node of each axis.  Axis counts must satisfy
/// (count - 1) % stride == 0.
inline FieldGrid subsample(const FieldGrid& g, int stride)
{
    if (stride < 1)
        throw std::invalid_argument("subsample: stride must be >= 1");
    std::vector<Axis> axes;
    for (const auto& a : g.axes()) {
        if ((a.count - 1) % stride != 0)
            throw std::invalid_argument("subsample: axis count incompatible with stride");
        axes.push_back({a.min, a.max, (a.count - 1) / stride + 1});
    }
    FieldGrid out(axes, g.n_surfaces());
    for (int s = 0; s < g.n_surfaces(); ++s)
        for (std::size_t k = 0; k < out.n_nodes(); ++k) {
            auto idx = out.multi_index(k);
            for (auto& v : idx)
                v *= stride;
            out.at(s, k) = g.at(s, g.flat_index(idx));
        }
    return out;
}

} // namespace shgb

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "beam.hpp"
#include "coefficients.hpp"

namespace shgb {

/// Beam parameters plus the complex log-weight omega at time t.
struct DynamicState {
    GaussianBeam beam;
    cplx omega{0.0, 0.0};
    double t = 0.0;
};

/// Time derivative of a DynamicState; d_im_omega is always zero.
struct StateDerivative {
    Vec dX;
    Vec dP;
    double dS = 0.0;
    cplx dA{0.0, 0.0};
    Mat dM;
    Mat dN;
    double d_re_omega = 0.0;
};

/// Number of extended components a trajectory can visit.
inline int extended_count(const CoefficientBundle& sys)
{
    return sys.conjugate_coupled() ? 2 * sys.n : sys.n;
}

/// Total rate of leaving component l: sum over k != l of |coupling(k, l)|,
/// in the flat order of the (possibly doubled) index set.
inline double leave_rate(const CoefficientBundle& sys, ExtendedIndex l, double t, const Vec& x)
{
    const int total = extended_count(sys);
    const int lf = l.flat(sys.n);
    double r = 0.0;
    for (int k = 0; k < total; ++k) {
        if (k == lf)
            continue;
        r += std::abs(effective_gamma(sys, ExtendedIndex::from_flat(k, sys.n), l, t, x));
    }
    return r;
}

/// Right-hand side of the beam ODEs on component `surface`.
///
/// A state on a conjugated component is stored as the complex conjugate of
/// the w-beam (A, S, P, N, omega conjugated), which then obeys the ODEs of
/// the plain base surface; only the leave rate sees the doubled index set.
inline StateDerivative rhs(const CoefficientBundle& sys, ExtendedIndex surface, double t,
                           const DynamicState& s)
{
    const int l = surface.surface;
    const GaussianBeam& b = s.beam;
    const Mat G = sys.grad_alpha(l, t, b.X);
    const Mat Gt = G.transpose();

    StateDerivative d;
    d.dX = sys.alpha(l, t, b.X);
    d.dS = sys.beta(l, t, b.X);
    d.dP = sys.grad_beta(l, t, b.X) - Gt * b.P;
    d.dA = sys.gamma(l, l, t, b.X) * b.A;
    d.dM = -(b.M * G) - Gt * b.M;
    d.dN = sys.hess_p_dot_alpha(l, t, b.X, b.P) - sys.hess_beta(l, t, b.X) - b.N * G - Gt * b.N;
    d.d_re_omega = leave_rate(sys, surface, t, b.X);
    return d;
}

namespace detail {

// a*x + c*(y + h*dy), the shape of every SSP-RK3 stage
inline DynamicState rk_combine(double a, const DynamicState& x, double c, const DynamicState& y,
                               double h, const StateDerivative& dy, double t)
{
    DynamicState r;
    const GaussianBeam& bx = x.beam;
    const GaussianBeam& by = y.beam;
    r.beam.X = a * bx.X + c * (by.X + h * dy.dX);
    r.beam.P = a * bx.P + c * (by.P + h * dy.dP);
    r.beam.S = a * bx.S + c * (by.S + h * dy.dS);
    r.beam.A = a * bx.A + c * (by.A + h * dy.dA);
    r.beam.M = a * bx.M + c * (by.M + h * dy.dM);
    r.beam.N = a * bx.N + c * (by.N + h * dy.dN);
    r.omega = cplx(a * x.omega.real() + c * (y.omega.real() + h * dy.d_re_omega), x.omega.imag());
    r.t = t;
    return r;
}

inline DynamicState euler(const DynamicState& y, double h, const StateDerivative& dy, double t)
{
    return rk_combine(0.0, y, 1.0, y, h, dy, t);
}

} // namespace detail

/// One Shu-Osher SSP-RK3 step.  M and N are re-symmetrized and M is
/// checked for positive definiteness; failure throws NumericalError.
inline DynamicState rk3_step(const CoefficientBundle& sys, ExtendedIndex surface,
                             const DynamicState& s, double dt)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("rk3_step: dt must be positive");
    const double t = s.t;
    const DynamicState s1 = detail::euler(s, dt, rhs(sys, surface, t, s), t + dt);
    const DynamicState s2 =
        detail::rk_combine(0.75, s, 0.25, s1, dt, rhs(sys, surface, t + dt, s1), t + 0.5 * dt);
    DynamicState out = detail::rk_combine(1.0 / 3.0, s, 2.0 / 3.0, s2, dt,
                                          rhs(sys, surface, t + 0.5 * dt, s2), t + dt);
    symmetrize_upper(out.beam.M);
    symmetrize_upper(out.beam.N);
    try {
        out.beam.validate();
    } catch (const NumericalError& e) {
        std::ostringstream os;
        os << e.what() << "\n  after RK3 step t=" << t << " -> " << t + dt << " on surface "
           << surface.surface << (surface.conjugated ? " (conjugated)" : "");
        throw NumericalError(os.str());
    }
    return out;
}

/// -ln(1 - Y): the rise of Re(omega) after the last hop that triggers the next hop.
inline double hop_threshold(double Y)
{
    if (!(Y > 0.0 && Y < 1.0))
        throw std::invalid_argument("hop_threshold: Y must lie in (0, 1)");
    return -std::log1p(-Y);
}

struct HopBracket {
    double t_lo;
    double t_hi;
    double target; // value of Re(omega) at the hop
};

/// Detects whether exp(omega_tilde - Re omega) fell to 1 - Y within the step.
inline std::optional<HopBracket> survival_bracket(const DynamicState& before, const DynamicState& after,
                                                  double omega_tilde, double Y)
{
    const double target = omega_tilde + hop_threshold(Y);
    if (after.omega.real() >= target)
        return HopBracket{before.t, after.t, target};
    return std::nullopt;
}

namespace detail {

// Cubic Hermite through (0, y0, d0), (h, y1, d1) with Fritsch-Carlson slope
// limiting; returns s in [0, h] where it equals `target`.
inline double monotone_hermite_root(double h, double y0, double y1, double d0, double d1,
                                    double target)
{
    const double delta = (y1 - y0) / h;
    if (delta <= 0.0)
        return h;
    d0 = std::max(d0, 0.0);
    d1 = std::max(d1, 0.0);
    const double a = d0 / delta;
    const double b = d1 / delta;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
        const double tau = 3.0 / std::sqrt(r2);
        d0 = tau * a * delta;
        d1 = tau * b * delta;
    }
    auto H = [&](double s) {
        const double u = s / h;
        const double u2 = u * u;
        const double u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0 + (-2 * u3 + 3 * u2) * y1 +
               (u3 - u2) * h * d1;
    };
    auto dH = [&](double s) {
        const double u = s / h;
        const double u2 = u * u;
        return ((6 * u2 - 6 * u) * y0 + (-6 * u2 + 6 * u) * y1) / h + (3 * u2 - 4 * u + 1) * d0 +
               (3 * u2 - 2 * u) * d1;
    };
    double lo = 0.0;
    double hi = h;
    double s = h * (target - y0) / (y1 - y0);
    for (int it = 0; it < 60; ++it) {
        const double f = H(s) - target;
        if (f < 0.0)
            lo = s;
        else
            hi = s;
        if (std::abs(f) <= 1e-15 * std::max(1.0, std::abs(target)) || hi - lo <= 1e-16 * h)
            break;
        const double df = dH(s);
        double next = df > 0.0 ? s - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        s = next;
    }
    return std::clamp(s, 0.0, h);
}

} // namespace detail

inline constexpr double kHopRootTolerance = 1e-12;

/// Locates the hop time inside [t, t+dt] and re-integrates the full state
/// from t with a single RK3 step of the shortened length.  `after` must be
/// rk3_step(sys, surface, s, dt) and must satisfy the hop condition.
inline std::pair<double, DynamicState> refine_hop_time(const CoefficientBundle& sys, ExtendedIndex surface,
                                                       const DynamicState& s, const DynamicState& after,
                                                       double dt, double omega_tilde, double Y)
{
    const double target = omega_tilde + hop_threshold(Y);
    const double y0 = s.omega.real();
    const double y1 = after.omega.real();
    if (y0 >= target)
        return {s.t, s};
    if (!(y1 >= target))
        throw std::logic_error("refine_hop_time: no crossing inside the step");
    if (y1 - target < kHopRootTolerance)
        return {after.t, after};

    auto phi_state = [&](double h) { return rk3_step(sys, surface, s, h); };
    auto phi = [&](double h) { return h <= 0.0 ? y0 - target : phi_state(h).omega.real() - target; };

    const double d0 = leave_rate(sys, surface, s.t, s.beam.X);
    const double d1 = leave_rate(sys, surface, after.t, after.beam.X);
    double guess = detail::monotone_hermite_root(dt, y0, y1, d0, d1, target);

    double lo = 0.0;
    double hi = dt;
    double flo = y0 - target;
    double fhi = y1 - target;
    if (guess > 0.0 && guess < dt) {
        const double fg = phi(guess);
        if (std::abs(fg) < kHopRootTolerance)
            return {s.t + guess, phi_state(guess)};
        if (fg < 0.0) {
            lo = guess;
            flo = fg;
        } else {
            hi = guess;
            fhi = fg;
        }
    }

    double best = std::abs(flo) < std::abs(fhi) ? lo : hi;
    double best_f = std::min(std::abs(flo), std::abs(fhi));
    auto tracked = [&](double h) {
        const double f = phi(h);
        if (std::abs(f) < best_f) {
            best_f = std::abs(f);
            best = h;
        }
        return f;
    };
    auto stop = [&](double a, double b) {
        return best_f < kHopRootTolerance || std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * dt;
    };
    std::uintmax_t iters = 100;
    boost::math::tools::toms748_solve(tracked, lo, hi, flo, fhi, stop, iters);

    if (dt - best < kHopRootTolerance)
        return {after.t, after};
    if (best <= 0.0)
        return {s.t, s};
    return {s.t + best, phi_state(best)};
}

inline std::pair<double, DynamicState> refine_hop_time(const CoefficientBundle& sys, ExtendedIndex surface,
                                                       const DynamicState& s, double dt,
                                                       double omega_tilde, double Y)
{
    return refine_hop_time(sys, surface, s, rk3_step(sys, surface, s, dt), dt, omega_tilde, Y);
}

/// Default time step min(0.01, eps/4).
inline double default_dt(double epsilon) { return std::min(0.01, epsilon / 4.0); }

} // namespace shgb

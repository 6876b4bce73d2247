#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace shgb {

struct HopEvent {
    double t = 0.0;
    ExtendedIndex from;
    ExtendedIndex to;
    double phase = 0.0; // increment added to Im(omega) before any switch
    Vec X;              // beam centre at the hop
};

struct JumpRecord {
    ExtendedIndex initial_surface;
    std::vector<HopEvent> hops;

    [[nodiscard]] std::size_t count() const { return hops.size(); }
};

struct TrajectoryResult {
    DynamicState final_state;
    ExtendedIndex final_surface;
    JumpRecord record;
};

/// Optional callbacks during run_trajectory.  on_step sees every accepted
/// integration segment (including the shortened segment ending at a hop).
struct TrajectoryObserver {
    std::function<void(ExtendedIndex surface, const DynamicState& before, const DynamicState& after)> on_step;
    std::function<void(const HopEvent&, const DynamicState& after_hop)> on_hop;
};

/// Chooses j != from with probability |coupling(j, from)| / sum, by inverting
/// the cumulative sum at u (u in (0,1)) over the flat extended order.
/// Zero entries are never selected.
inline ExtendedIndex sample_hop_target(const CoefficientBundle& sys, ExtendedIndex from, double t,
                                       const Vec& x, double u)
{
    const int total = extended_count(sys);
    const int ff = from.flat(sys.n);
    std::vector<double> w(static_cast<std::size_t>(total), 0.0);
    double sum = 0.0;
    for (int k = 0; k < total; ++k) {
        if (k == ff)
            continue;
        w[static_cast<std::size_t>(k)] = std::abs(effective_gamma(sys, ExtendedIndex::from_flat(k, sys.n), from, t, x));
        sum += w[static_cast<std::size_t>(k)];
    }
    if (!(sum > 0.0))
        throw std::logic_error("sample_hop_target: total leave rate is zero");
    const double level = u * sum;
    double acc = 0.0;
    int last = -1;
    for (int k = 0; k < total; ++k) {
        if (w[static_cast<std::size_t>(k)] == 0.0)
            continue;
        last = k;
        acc += w[static_cast<std::size_t>(k)];
        if (level <= acc)
            return ExtendedIndex::from_flat(k, sys.n);
    }
    return ExtendedIndex::from_flat(last, sys.n);
}

/// Coupling whose argument is added to Im(omega) on a hop from -> to, in the
/// conjugate-flag frame: the doubled-matrix entry, conjugated when the
/// source state is stored conjugated.
inline cplx hop_coupling(const CoefficientBundle& sys, ExtendedIndex from, ExtendedIndex to, double t,
                         const Vec& x)
{
    const cplx g = effective_gamma(sys, to, from, t, x);
    return from.conjugated ? std::conj(g) : g;
}

/// Im(omega) += arg(gamma_val); then, if the conjugation flag changes,
/// A -> conj A, S -> -S, P -> -P, N -> -N, omega -> conj omega.
inline DynamicState apply_hop(DynamicState s, ExtendedIndex from, ExtendedIndex to, cplx gamma_val)
{
    if (gamma_val == cplx(0.0, 0.0))
        throw std::invalid_argument("apply_hop: zero coupling");
    s.omega += cplx(0.0, std::arg(gamma_val));
    if (from.conjugated != to.conjugated) {
        s.beam.A = std::conj(s.beam.A);
        s.beam.S = -s.beam.S;
        s.beam.P = -s.beam.P;
        s.beam.N = -s.beam.N;
        s.omega = std::conj(s.omega);
    }
    return s;
}

struct TrajectoryOptions {
    double T = 1.0;
    double dt = 0.01;
    std::uint64_t master_seed = 0;
};

namespace detail {

[[noreturn]] inline void rethrow_with_seed(const std::exception& e, std::uint64_t seed, std::uint64_t index)
{
    std::ostringstream os;
    os << e.what() << "\n  [trajectory " << index << ", master seed " << seed << "]";
    throw NumericalError(os.str());
}

} // namespace detail

/// Runs one trajectory to time T.  Stream `index` of the master seed drives
/// the initial surface, the initial parameters, the hop thresholds Y and
/// the hop targets, in that order of first use.
inline TrajectoryResult run_trajectory(const CoefficientBundle& sys, const InitialSampler& sampler,
                                       const TrajectoryOptions& opt, std::uint64_t index,
                                       const TrajectoryObserver* observer = nullptr)
{
    if (!(opt.T > 0.0))
        throw std::invalid_argument("run_trajectory: T must be positive");
    if (!(opt.dt > 0.0))
        throw std::invalid_argument("run_trajectory: dt must be positive");

    RandomSource rng(opt.master_seed, index);
    TrajectoryResult res;
    try {
        const auto n_init = sampler.surfaces.size();
        std::size_t pick = 0;
        if (n_init > 1)
            pick = std::min(n_init - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_init)));
        ExtendedIndex surface{sampler.surfaces[pick], false};

        DynamicState state;
        state.beam = sampler.draw(surface.surface, rng);
        state.beam.A *= static_cast<double>(n_init);
        state.beam.validate();
        state.t = 0.0;

        res.record.initial_surface = surface;
        double omega_tilde = 0.0;
        double Y = rng.uniform();
        const double T = opt.T;

        while (state.t < T) {
            const double remaining = T - state.t;
            const bool last = remaining <= opt.dt * (1.0 + 1e-9);
            const double h = last ? remaining : opt.dt;
            DynamicState after = rk3_step(sys, surface, state, h);
            if (last)
                after.t = T;

            if (!survival_bracket(state, after, omega_tilde, Y)) {
                if (observer && observer->on_step)
                    observer->on_step(surface, state, after);
                state = std::move(after);
                continue;
            }

            auto [t_hop, at_hop] = refine_hop_time(sys, surface, state, after, h, omega_tilde, Y);
            if (at_hop.t >= T)
                at_hop.t = T;
            if (observer && observer->on_step && at_hop.t > state.t)
                observer->on_step(surface, state, at_hop);

            const double u = rng.uniform();
            const ExtendedIndex to = sample_hop_target(sys, surface, at_hop.t, at_hop.beam.X, u);
            const cplx g = hop_coupling(sys, surface, to, at_hop.t, at_hop.beam.X);
            HopEvent ev{at_hop.t, surface, to, std::arg(g), at_hop.beam.X};
            state = apply_hop(std::move(at_hop), surface, to, g);
            surface = to;
            res.record.hops.push_back(ev);
            if (observer && observer->on_hop)
                observer->on_hop(ev, state);

            omega_tilde = state.omega.real();
            Y = rng.uniform();
        }
        res.final_state = std::move(state);
        res.final_surface = surface;
    } catch (const NumericalError& e) {
        detail::rethrow_with_seed(e, opt.master_seed, index);
    } catch (const std::domain_error& e) {
        detail::rethrow_with_seed(e, opt.master_seed, index);
    }
    return res;
}

} // namespace shgb

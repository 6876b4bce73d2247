#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "field_grid.hpp"
#include "hopping.hpp"

namespace shgb {

struct EstimatorConfig {
    std::size_t n_traj = 1000;
    double T = 1.0;
    double dt = 0.01;
    std::vector<Axis> axes;
    std::uint64_t master_seed = 0;
    double cutoff = kDefaultCutoff;
    unsigned workers = 1;
    /// trajectories are split into this many contiguous blocks whatever the
    /// worker count; block sums are merged in block order
    std::size_t blocks = 16;

    void validate() const
    {
        if (n_traj < 1)
            throw std::invalid_argument("EstimatorConfig: n_traj must be >= 1");
        if (!(T > 0.0))
            throw std::invalid_argument("EstimatorConfig: T must be positive");
        if (!(dt > 0.0))
            throw std::invalid_argument("EstimatorConfig: dt must be positive");
        if (axes.empty())
            throw std::invalid_argument("EstimatorConfig: grid axes missing");
        if (!(cutoff > 0.0))
            throw std::invalid_argument("EstimatorConfig: cutoff must be positive");
        if (blocks < 1)
            throw std::invalid_argument("EstimatorConfig: blocks must be >= 1");
    }
};

namespace detail {

/// Runs body(b) for b in [0, n) on `workers` threads; the first exception
/// (lowest block index) is rethrown after all threads finish.
template <class Body>
void parallel_blocks(std::size_t n, unsigned workers, Body&& body)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t b = 0; b < n; ++b)
            body(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n || failed.load())
                return;
            try {
                body(b);
            } catch (...) {
                errors[b] = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace detail

/// Monte Carlo field estimate: the mean over trajectories of exp(omega(T)) G(T; x)
/// deposited on the base component of the final surface.
inline FieldGrid estimate(const CoefficientBundle& sys, const InitialSampler& sampler, const EstimatorConfig& cfg)
{
    sys.validate();
    cfg.validate();
    sampler.validate(sys.n);
    if (static_cast<int>(cfg.axes.size()) != sys.m)
        throw std::invalid_argument("estimate: grid dimension differs from problem dimension");

    const std::size_t nb = std::min(cfg.blocks, cfg.n_traj);
    std::vector<FieldGrid> partial(nb);
    const TrajectoryOptions opt{cfg.T, cfg.dt, cfg.master_seed};

    detail::parallel_blocks(nb, cfg.workers, [&](std::size_t b) {
        FieldGrid g(cfg.axes, sys.n);
        const std::size_t lo = b * cfg.n_traj / nb;
        const std::size_t hi = (b + 1) * cfg.n_traj / nb;
        for (std::size_t k = lo; k < hi; ++k) {
            const TrajectoryResult r = run_trajectory(sys, sampler, opt, k);
            accumulate_beam(g, r.final_surface.surface, std::exp(r.final_state.omega), r.final_state.beam,
                            sys.epsilon, cfg.cutoff);
        }
        partial[b] = std::move(g);
    });

    FieldGrid total = std::move(partial[0]);
    for (std::size_t b = 1; b < nb; ++b)
        total += partial[b];
    total *= 1.0 / static_cast<double>(cfg.n_traj);
    return total;
}

/// Folds a grid of the explicit 2n-component system (u_0..u_{n-1},
/// w_0..w_{n-1}) into n components, u_k + conj(w_k).
inline FieldGrid fold_doubled(const FieldGrid& g)
{
    if (g.n_surfaces() % 2 != 0)
        throw std::invalid_argument("fold_doubled: odd number of layers");
    const int n = g.n_surfaces() / 2;
    FieldGrid out(g.axes(), n);
    for (int s = 0; s < n; ++s)
        for (std::size_t k = 0; k < g.n_nodes(); ++k)
            out.at(s, k) = g.at(s, k) + std::conj(g.at(s + n, k));
    return out;
}

/// Discrete L2 norm of one layer, weighted by the cell volume.
inline double l2_norm(const FieldGrid& g, int surface)
{
    double s = 0.0;
    for (std::size_t k = 0; k < g.n_nodes(); ++k)
        s += std::norm(g.at(surface, k));
    return std::sqrt(s * g.cell_volume());
}

/// Per-surface discrete L2 norm of estimate - reference.
inline std::vector<double> l2_error(const FieldGrid& est, const FieldGrid& ref)
{
    if (!est.same_layout(ref))
        throw std::invalid_argument("l2_error: grids differ in layout");
    std::vector<double> e(static_cast<std::size_t>(est.n_surfaces()));
    for (int s = 0; s < est.n_surfaces(); ++s) {
        double acc = 0.0;
        for (std::size_t k = 0; k < est.n_nodes(); ++k)
            acc += std::norm(est.at(s, k) - ref.at(s, k));
        e[static_cast<std::size_t>(s)] = std::sqrt(acc * est.cell_volume());
    }
    return e;
}

/// Absolute and relative L2 errors of one surface, also split into real
/// and imaginary parts (each relative to the matching part of the reference).
struct ErrorBreakdown {
    double abs = 0.0;
    double rel = 0.0;
    double re_rel = 0.0;
    double im_rel = 0.0;
    double ref_norm = 0.0;
};

inline std::vector<ErrorBreakdown> error_breakdown(const FieldGrid& est, const FieldGrid& ref)
{
    if (!est.same_layout(ref))
        throw std::invalid_argument("error_breakdown: grids differ in layout");
    std::vector<ErrorBreakdown> out(static_cast<std::size_t>(est.n_surfaces()));
    const double w = est.cell_volume();
    for (int s = 0; s < est.n_surfaces(); ++s) {
        double d2 = 0, r2 = 0, dre = 0, rre = 0, dim = 0, rim = 0;
        for (std::size_t k = 0; k < est.n_nodes(); ++k) {
            const cplx d = est.at(s, k) - ref.at(s, k);
            const cplx r = ref.at(s, k);
            d2 += std::norm(d);
            r2 += std::norm(r);
            dre += d.real() * d.real();
            rre += r.real() * r.real();
            dim += d.imag() * d.imag();
            rim += r.imag() * r.imag();
        }
        auto ratio = [](double a, double b) { return b > 0.0 ? std::sqrt(a / b) : (a > 0.0 ? INFINITY : 0.0); };
        ErrorBreakdown& e = out[static_cast<std::size_t>(s)];
        e.abs = std::sqrt(d2 * w);
        e.ref_norm = std::sqrt(r2 * w);
        e.rel = ratio(d2, r2);
        e.re_rel = ratio(dre, rre);
        e.im_rel = ratio(dim, rim);
    }
    return out;
}

// ---- convergence study ------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Least squares y = a + b x with the usual standard error of b.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        throw std::invalid_argument("fit_line: need at least two matching points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

struct ErrorRow {
    std::size_t n_traj = 0;
    int surface = 0;
    double mean_err = 0.0;
    double std_err = 0.0; // standard deviation across repeats
};

struct SurfaceSlope {
    int surface = 0;
    LineFit mean_fit;        // log mean error vs log N
    LineFit std_fit;         // log std of error vs log N
    double slope_sd = 0.0;   // spread of per-repeat slopes
};

struct ErrorReport {
    std::vector<ErrorRow> rows;
    std::vector<SurfaceSlope> slopes;
    std::size_t repeats = 0;
    /// errors[surface][i][r]: repeat r at n_list[i]
    std::vector<std::vector<std::vector<double>>> errors;
};

/// For each N in n_list runs `repeats` independent estimates (seeds derived
/// from cfg.master_seed, N and the repeat index) and records the L2 error
/// against `reference`.
inline ErrorReport convergence_study(const CoefficientBundle& sys, const InitialSampler& sampler,
                                     const EstimatorConfig& cfg, const FieldGrid& reference,
                                     const std::vector<std::size_t>& n_list, std::size_t repeats)
{
    if (n_list.size() < 2 || !std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("convergence_study: n_list must be increasing with >= 2 entries");
    if (repeats < 2)
        throw std::invalid_argument("convergence_study: repeats must be >= 2");
    if (std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
        throw std::invalid_argument("convergence_study: n_list must be strictly increasing");

    const int ns = reference.n_surfaces();
    ErrorReport rep;
    rep.repeats = repeats;
    rep.errors.assign(static_cast<std::size_t>(ns),
                      std::vector<std::vector<double>>(n_list.size(), std::vector<double>(repeats)));
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        for (std::size_t r = 0; r < repeats; ++r) {
            EstimatorConfig c = cfg;
            c.n_traj = n_list[i];
            c.master_seed = derive_seed(cfg.master_seed, n_list[i], r);
            const auto e = l2_error(estimate(sys, sampler, c), reference);
            for (int s = 0; s < ns; ++s)
                rep.errors[static_cast<std::size_t>(s)][i][r] = e[static_cast<std::size_t>(s)];
        }
    }

    std::vector<double> logn;
    for (auto n : n_list)
        logn.push_back(std::log(static_cast<double>(n)));
    for (int s = 0; s < ns; ++s) {
        const auto& es = rep.errors[static_cast<std::size_t>(s)];
        std::vector<double> lmean, lstd;
        for (std::size_t i = 0; i < n_list.size(); ++i) {
            double m = 0;
            for (double v : es[i])
                m += v;
            m /= static_cast<double>(repeats);
            double v2 = 0;
            for (double v : es[i])
                v2 += (v - m) * (v - m);
            const double sd = std::sqrt(v2 / static_cast<double>(repeats - 1));
            rep.rows.push_back({n_list[i], s, m, sd});
            lmean.push_back(std::log(m));
            lstd.push_back(std::log(sd));
        }
        SurfaceSlope sl;
        sl.surface = s;
        sl.mean_fit = fit_line(logn, lmean);
        sl.std_fit = fit_line(logn, lstd);
        std::vector<double> per;
        for (std::size_t r = 0; r < repeats; ++r) {
            std::vector<double> y;
            for (std::size_t i = 0; i < n_list.size(); ++i)
                y.push_back(std::log(es[i][r]));
            per.push_back(fit_line(logn, y).slope);
        }
        double pm = 0;
        for (double v : per)
            pm += v;
        pm /= static_cast<double>(per.size());
        double pv = 0;
        for (double v : per)
            pv += (v - pm) * (v - pm);
        sl.slope_sd = std::sqrt(pv / static_cast<double>(per.size() - 1));
        rep.slopes.push_back(sl);
    }
    return rep;
}

inline void write_csv(std::ostream& os, const ErrorReport& rep)
{
    char buf[256];
    os << "N_traj,surface,mean_err,std_err\n";
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.10g,%.10g\n", r.n_traj, r.surface, r.mean_err, r.std_err);
        os << buf;
    }
    for (const auto& s : rep.slopes) {
        std::snprintf(buf, sizeof buf, "slope,%d,%.6f,%.6f\n", s.surface, s.mean_fit.slope, s.slope_sd);
        os << buf;
        std::snprintf(buf, sizeof buf, "std_slope,%d,%.6f,%.6f\n", s.surface, s.std_fit.slope,
                      s.std_fit.slope_stderr);
        os << buf;
    }
}

} // namespace shgb

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "builtins.hpp"
#include "dynamics.hpp"
#include "field_grid.hpp"
#include "sampler.hpp"

namespace shgb {

/// Problem parameters; NaN means "use the problem's default".
struct ProblemParams {
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double r0 = std::numeric_limits<double>::quiet_NaN();
    double p0 = std::numeric_limits<double>::quiet_NaN();
};

/// A built-in problem: coefficients, initial sampler and the same initial
/// data as grid values (for the reference solver), with default T and box.
struct Problem {
    std::string id;
    ProblemParams params; // resolved
    CoefficientBundle system;
    InitialSampler sampler;
    std::function<cplx(int surface, const Vec& x)> initial_value;
    double default_T = 1.0;
    /// min(0.01, eps/4), smaller where the potential has features narrower than eps
    double default_dt = 0.01;
    std::vector<Axis> default_axes;
};

inline const std::vector<std::string>& builtin_problem_ids()
{
    static const std::vector<std::string> ids{"ex1", "ex2", "tully_ecr", "single_crossing"};
    return ids;
}

namespace detail {
inline double or_default(double v, double d) { return std::isnan(v) ? d : v; }
} // namespace detail

inline Problem make_problem(const std::string& id, ProblemParams p)
{
    Problem pr;
    pr.id = id;
    if (id == "ex1") {
        p.epsilon = detail::or_default(p.epsilon, 0.1);
        pr.system = builtin_ex1(p.epsilon);
        pr.sampler = make_sampler_ex1(p.epsilon);
        pr.initial_value = [](int s, const Vec& x) -> cplx { return s == 0 ? std::exp(-0.5 * x.squaredNorm()) : 0.0; };
        pr.default_T = 0.5;
        pr.default_axes = {{-4.0, 4.0, 401}, {-4.0, 4.0, 401}};
    } else if (id == "ex2") {
        p.epsilon = detail::or_default(p.epsilon, 0.04);
        const double eps = p.epsilon;
        pr.system = builtin_ex2(eps);
        pr.sampler = make_sampler_ex2(eps);
        pr.initial_value = [eps](int s, const Vec& x) -> cplx {
            return s == 0 ? std::exp(-x.squaredNorm() / (2.0 * eps)) : 0.0;
        };
        pr.default_T = 0.5;
        pr.default_axes = {{-3.0, 3.0, 601}, {-3.0, 3.0, 601}};
    } else if (id == "tully_ecr") {
        p.epsilon = detail::or_default(p.epsilon, 1.0 / 32.0);
        p.delta = detail::or_default(p.delta, 5.0 * p.epsilon);
        p.r0 = detail::or_default(p.r0, -1.5);
        p.p0 = detail::or_default(p.p0, 1.5);
        const double eps = p.epsilon, r0 = p.r0, p0 = p.p0;
        pr.system = builtin_tully_ecr(eps, p.delta);
        pr.sampler = make_sampler_tully_ecr(eps, r0, p0);
        pr.initial_value = [=](int s, const Vec& x) -> cplx {
            if (s != kU22)
                return 0.0;
            const double d2 = (x[0] - r0) * (x[0] - r0) + (x[1] - p0) * (x[1] - p0);
            return std::exp(-d2 / eps) / (std::sqrt(32.0 * kPi) * eps);
        };
        pr.default_T = 2.0;
        // F changes over |r| ~ 0.01 near the crossing; coarser steps break M
        pr.default_dt = std::min(default_dt(eps), 1.0 / 512);
        pr.default_axes = {{-4.0, 4.0, 321}, {-3.0, 3.0, 241}};
    } else if (id == "single_crossing") {
        p.epsilon = detail::or_default(p.epsilon, 0.01);
        p.r0 = detail::or_default(p.r0, 0.4);
        p.p0 = detail::or_default(p.p0, 1.0);
        const double eps = p.epsilon, r0 = p.r0, p0 = p.p0;
        pr.system = builtin_single_crossing(eps);
        pr.sampler = make_sampler_single_crossing(eps, r0, p0);
        pr.initial_value = [=](int s, const Vec& x) -> cplx {
            if (s != kU11)
                return 0.0;
            return std::sqrt(2.0 / (kPi * eps)) *
                   std::exp(-(x[0] - r0) * (x[0] - r0) / (2.0 * eps) - 2.0 * (x[1] - p0) * (x[1] - p0) / eps);
        };
        pr.default_T = 0.5;
        pr.default_dt = std::min(default_dt(eps), 1.0 / 512);
        pr.default_axes = {{0.05, 1.25, 241}, {0.4, 1.6, 241}};
    } else {
        throw std::invalid_argument("unknown problem id '" + id + "'");
    }
    if (pr.id == "ex1" || pr.id == "ex2")
        pr.default_dt = default_dt(p.epsilon);
    pr.params = p;
    return pr;
}

/// Initial data of a problem sampled on grid nodes.
inline FieldGrid initial_field(const Problem& pr, const std::vector<Axis>& axes)
{
    FieldGrid g(axes, pr.system.n);
    for (int s = 0; s < g.n_surfaces(); ++s)
        sample_layer(g, s, [&](const Vec& x) { return pr.initial_value(s, x); });
    return g;
}

} // namespace shgb

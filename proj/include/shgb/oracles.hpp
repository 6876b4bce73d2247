#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "hopping.hpp"

namespace shgb {

/// Coefficients frozen at a point: du/dt = Gamma(t) u with zero diagonal.
struct FrozenSystem {
    CMat gamma;                               // used when gamma_t is empty
    std::function<CMat(double)> gamma_t;      // optional time dependence
    int i0 = 0;

    [[nodiscard]] int n() const { return static_cast<int>(gamma.rows()); }
    [[nodiscard]] CMat at(double t) const { return gamma_t ? gamma_t(t) : gamma; }

    void validate() const
    {
        if (gamma.rows() == 0 || gamma.rows() != gamma.cols())
            throw std::invalid_argument("FrozenSystem: Gamma must be square and non-empty");
        if (i0 < 0 || i0 >= n())
            throw std::invalid_argument("FrozenSystem: initial surface out of range");
        const CMat g0 = at(0.0);
        for (int i = 0; i < n(); ++i)
            if (g0(i, i) != cplx(0.0, 0.0))
                throw std::invalid_argument("FrozenSystem: Gamma must have zero diagonal");
    }
};

/// Dense matrix exponential (scaling and squaring with Pade approximants).
inline CMat expm(const CMat& a)
{
    return a.exp();
}

/// exp( integral_0^t Gamma(s) ds ), entries integrated by adaptive
/// Gauss-Kronrod quadrature when Gamma depends on time.
inline CMat theta_matrix(const FrozenSystem& fs, double t)
{
    fs.validate();
    if (!fs.gamma_t)
        return expm(t * fs.gamma);
    using boost::math::quadrature::gauss_kronrod;
    const int n = fs.n();
    CMat integral(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double re = gauss_kronrod<double, 31>::integrate(
                [&](double s) { return fs.gamma_t(s)(i, j).real(); }, 0.0, t, 10, 1e-13);
            const double im = gauss_kronrod<double, 31>::integrate(
                [&](double s) { return fs.gamma_t(s)(i, j).imag(); }, 0.0, t, 10, 1e-13);
            integral(i, j) = cplx(re, im);
        }
    return expm(integral);
}

/// Partial sum over K <= k_max of the series of nested integrals for a
/// constant Gamma: sum_K t^K/K! Gamma^K e_{i0}.
inline CVec dyson_truncated(const FrozenSystem& fs, double t, int k_max)
{
    fs.validate();
    if (fs.gamma_t)
        throw std::invalid_argument("dyson_truncated: constant Gamma required");
    if (k_max < 0)
        throw std::invalid_argument("dyson_truncated: k_max must be >= 0");
    CVec term = CVec::Zero(fs.n());
    term[fs.i0] = 1.0;
    CVec sum = term;
    for (int k = 1; k <= k_max; ++k) {
        term = (t / k) * (fs.gamma * term);
        sum += term;
    }
    return sum;
}

/// One-point bundle (m = 1, no transport, no phase) whose couplings are the
/// frozen Gamma; trajectories of it realize the bare jump process.
inline CoefficientBundle frozen_bundle(const FrozenSystem& fs)
{
    fs.validate();
    const int n = fs.n();
    auto sys = std::make_shared<FrozenSystem>(fs);
    CoefficientBundle b;
    b.name = "frozen";
    b.m = 1;
    b.n = n;
    b.epsilon = 1.0;
    b.time_independent = !fs.gamma_t;
    b.alpha = [](int, double, const Vec&) -> Vec { return Vec::Zero(1); };
    b.grad_alpha = [](int, double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
    b.hess_p_dot_alpha = [](int, double, const Vec&, const Vec&) -> Mat { return Mat::Zero(1, 1); };
    b.beta = [](int, double, const Vec&) { return 0.0; };
    b.grad_beta = [](int, double, const Vec&) -> Vec { return Vec::Zero(1); };
    b.hess_beta = [](int, double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
    b.gamma = [sys](int i, int j, double t, const Vec&) -> cplx { return i == j ? cplx(0.0) : sys->at(t)(i, j); };
    return b;
}

inline InitialSampler frozen_sampler(const FrozenSystem& fs)
{
    return make_point_sampler("frozen", fs.i0, GaussianBeam::isotropic(Vec::Zero(1), 1.0, 1.0));
}

struct FrozenEstimate {
    CVec mean;
    Vec stderr_re;
    Vec stderr_im;
};

/// Monte Carlo estimate of Theta(t) e_{i0} as the mean of exp(omega(t)) e_{l_t},
/// produced by the ordinary trajectory driver on the frozen bundle.
inline FrozenEstimate mc_frozen_estimate(const FrozenSystem& fs, double t, std::size_t n_traj,
                                         std::uint64_t seed, double dt = 0.0)
{
    if (n_traj < 1)
        throw std::invalid_argument("mc_frozen_estimate: n_traj must be >= 1");
    const CoefficientBundle sys = frozen_bundle(fs);
    const InitialSampler sampler = frozen_sampler(fs);
    const TrajectoryOptions opt{t, dt > 0.0 ? dt : t / 8.0, seed};
    const int n = fs.n();
    CVec sum = CVec::Zero(n);
    Vec sq_re = Vec::Zero(n);
    Vec sq_im = Vec::Zero(n);
    for (std::size_t k = 0; k < n_traj; ++k) {
        const auto r = run_trajectory(sys, sampler, opt, k);
        const cplx w = std::exp(r.final_state.omega) * r.final_state.beam.A;
        const int l = r.final_surface.surface;
        sum[l] += w;
        sq_re[l] += w.real() * w.real();
        sq_im[l] += w.imag() * w.imag();
    }
    const double N = static_cast<double>(n_traj);
    FrozenEstimate e;
    e.mean = sum / N;
    e.stderr_re.resize(n);
    e.stderr_im.resize(n);
    for (int i = 0; i < n; ++i) {
        const double vr = std::max(0.0, sq_re[i] / N - e.mean[i].real() * e.mean[i].real());
        const double vi = std::max(0.0, sq_im[i] / N - e.mean[i].imag() * e.mean[i].imag());
        e.stderr_re[i] = std::sqrt(vr * N / std::max(1.0, N - 1.0) / N);
        e.stderr_im[i] = std::sqrt(vi * N / std::max(1.0, N - 1.0) / N);
    }
    return e;
}

// ---- goodness of fit ----------------------------------------------------------

/// Kolmogorov-Smirnov statistic of `samples` against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty())
        throw std::invalid_argument("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic p-value of the one-sample KS statistic (Kolmogorov series
/// with Stephens' small-sample correction).
inline double ks_pvalue(double d, std::size_t n)
{
    const double sn = std::sqrt(static_cast<double>(n));
    const double lam = (sn + 0.12 + 0.11 / sn) * d;
    if (lam < 0.2)
        return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(p, 0.0, 1.0);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Pearson chi-square of observed counts against expected probabilities;
/// adjacent bins are merged from the tail until each expects >= 5 counts.
inline ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& probs)
{
    if (observed.size() != probs.size() || observed.empty())
        throw std::invalid_argument("chi_square_test: size mismatch");
    double n = 0.0;
    for (double o : observed)
        n += o;
    std::vector<double> o_b, e_b;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += probs[i] * n;
        if (e_acc >= 5.0) {
            o_b.push_back(o_acc);
            e_b.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (e_b.empty()) {
            o_b.push_back(o_acc);
            e_b.push_back(e_acc);
        } else {
            o_b.back() += o_acc;
            e_b.back() += e_acc;
        }
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < o_b.size(); ++i)
        r.statistic += (o_b[i] - e_b[i]) * (o_b[i] - e_b[i]) / e_b[i];
    r.dof = static_cast<int>(o_b.size()) - 1;
    if (r.dof < 1)
        return r;
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

// ---- jump densities with constant rates --------------------------------------

/// P(K = k) for k < k_max and P(K >= k_max) (last entry) for the jump
/// process with rate(i -> j) = rates(j, i) started on i0, from the
/// exponential of the generator on (surface, jump count).
inline std::vector<double> jump_count_distribution(const Mat& rates, int i0, double t, int k_max)
{
    const int n = static_cast<int>(rates.rows());
    const int levels = k_max + 1;
    const int size = n * levels;
    Mat Q = Mat::Zero(size, size); // Q(from, to)
    for (int lv = 0; lv < levels; ++lv) {
        const int next = std::min(lv + 1, k_max);
        for (int i = 0; i < n; ++i) {
            double out = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                Q(lv * n + i, next * n + j) += rates(j, i);
                out += rates(j, i);
            }
            Q(lv * n + i, lv * n + i) -= out;
        }
    }
    const Mat E = Mat(Q * t).exp();
    std::vector<double> p(static_cast<std::size_t>(levels), 0.0);
    for (int lv = 0; lv < levels; ++lv)
        for (int j = 0; j < n; ++j)
            p[static_cast<std::size_t>(lv)] += E(i0, lv * n + j);
    return p;
}

struct JumpDensityReport {
    ChiSquareResult count_test;
    double ks_statistic = 0.0;
    double ks_p_value = 1.0;
    std::size_t ks_samples = 0;
    std::vector<double> observed_counts; // bins 0..k_max-1 and ">= k_max"
    std::vector<double> expected_probs;
};

/// Runs n_traj trajectories of the constant-rate jump process (through the
/// full trajectory driver) and compares the jump count with its exact law,
/// and the first jump time given K >= 1 with the truncated exponential
/// CDF (1 - e^{-lambda s}) / (1 - e^{-lambda t}).
inline JumpDensityReport jump_density_check(const Mat& rates, int i0, double t, int k_max, std::size_t n_traj,
                                            std::uint64_t seed)
{
    const int n = static_cast<int>(rates.rows());
    if (rates.cols() != n || n < 1 || (rates.array() < 0.0).any())
        throw std::invalid_argument("jump_density_check: rates must be a nonnegative square matrix");
    if (k_max < 1)
        throw std::invalid_argument("jump_density_check: k_max must be >= 1");
    FrozenSystem fs;
    fs.gamma = rates.cast<cplx>();
    for (int i = 0; i < n; ++i)
        fs.gamma(i, i) = 0.0;
    fs.i0 = i0;
    const CoefficientBundle sys = frozen_bundle(fs);
    const InitialSampler sampler = frozen_sampler(fs);
    const TrajectoryOptions opt{t, t / 8.0, seed};

    JumpDensityReport rep;
    rep.observed_counts.assign(static_cast<std::size_t>(k_max + 1), 0.0);
    std::vector<double> first;
    for (std::size_t k = 0; k < n_traj; ++k) {
        const auto r = run_trajectory(sys, sampler, opt, k);
        const auto c = std::min<std::size_t>(r.record.count(), static_cast<std::size_t>(k_max));
        rep.observed_counts[c] += 1.0;
        if (!r.record.hops.empty())
            first.push_back(r.record.hops.front().t);
    }
    rep.expected_probs = jump_count_distribution(rates, i0, t, k_max);
    rep.count_test = chi_square_test(rep.observed_counts, rep.expected_probs);

    double lambda = 0.0;
    for (int j = 0; j < n; ++j)
        if (j != i0)
            lambda += rates(j, i0);
    rep.ks_samples = first.size();
    if (!first.empty() && lambda > 0.0) {
        const double norm = -std::expm1(-lambda * t);
        rep.ks_statistic = ks_statistic(first, [&](double s) { return -std::expm1(-lambda * s) / norm; });
        rep.ks_p_value = ks_pvalue(rep.ks_statistic, first.size());
    }
    return rep;
}

/// Random constant Gamma with zero diagonal, size in [2, max_n], scaled so
/// that its spectral norm times t is uniform in [0.25 * norm_t_max, norm_t_max].
inline FrozenSystem random_frozen_system(RandomSource& rng, int max_n, double t, double norm_t_max)
{
    if (max_n < 2)
        throw std::invalid_argument("random_frozen_system: max_n must be >= 2");
    const int n = 2 + std::min(max_n - 2, static_cast<int>(rng.uniform() * (max_n - 1)));
    FrozenSystem fs;
    fs.gamma = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                fs.gamma(i, j) = cplx(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
    const double norm = Eigen::JacobiSVD<CMat>(fs.gamma).singularValues()[0];
    const double target = norm_t_max * (0.25 + 0.75 * rng.uniform());
    fs.gamma *= target / (norm * t);
    fs.i0 = std::min(n - 1, static_cast<int>(rng.uniform() * n));
    return fs;
}

struct OracleCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Worst normalized deviation max |mc - exact| / stderr over real and
/// imaginary parts of all components (zero-variance parts must match to 1e-12).
inline double frozen_deviation(const FrozenEstimate& mc, const CVec& exact)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
        const cplx d = mc.mean[i] - exact[i];
        const double parts[2][2] = {{std::abs(d.real()), mc.stderr_re[i]}, {std::abs(d.imag()), mc.stderr_im[i]}};
        for (const auto& p : parts) {
            if (p[1] > 0.0)
                worst = std::max(worst, p[0] / p[1]);
            else if (p[0] > 1e-12)
                worst = INFINITY;
        }
    }
    return worst;
}

struct OracleSuiteOptions {
    int systems = 20;
    int max_n = 5;
    double t = 1.0;
    double norm_t_max = 2.0;
    std::size_t n_traj = 100000;
    std::uint64_t seed = 1;
};

/// Frozen-system checks on random Gamma (Monte Carlo within 3 standard
/// errors, truncated series within 1e-10) and a jump-law check.
inline std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& o)
{
    std::vector<OracleCheck> out;
    RandomSource rng(o.seed, ~std::uint64_t{0});
    for (int k = 0; k < o.systems; ++k) {
        const FrozenSystem fs = random_frozen_system(rng, o.max_n, o.t, o.norm_t_max);
        const CVec exact = theta_matrix(fs, o.t).col(fs.i0);
        const CVec dyson = dyson_truncated(fs, o.t, 20);
        const double derr = (dyson - exact).cwiseAbs().maxCoeff();
        out.push_back({"dyson_K20_system_" + std::to_string(k), derr, 1e-10, derr < 1e-10});
        const FrozenEstimate mc = mc_frozen_estimate(fs, o.t, o.n_traj, derive_seed(o.seed, 1000 + k));
        const double dev = frozen_deviation(mc, exact);
        out.push_back({"mc_stderr_multiple_system_" + std::to_string(k), dev, 3.0, dev <= 3.0});
    }
    Mat rates(3, 3);
    rates << 0.0, 0.5, 0.2, 0.7, 0.0, 0.9, 0.3, 0.4, 0.0;
    const auto jd = jump_density_check(rates, 0, 2.0, 6, o.n_traj / 4 + 1, derive_seed(o.seed, 7));
    out.push_back({"jump_count_chi2_pvalue", jd.count_test.p_value, 0.01, jd.count_test.p_value > 0.01});
    out.push_back({"first_jump_ks_pvalue", jd.ks_p_value, 0.01, jd.ks_p_value > 0.01});
    return out;
}

} // namespace shgb

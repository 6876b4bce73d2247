#include <cmath>

#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include "shgb/oracles.hpp"

using namespace shgb;

namespace {

FrozenSystem two_level(cplx a, cplx b, int i0 = 0)
{
    FrozenSystem fs;
    fs.gamma = CMat::Zero(2, 2);
    fs.gamma(0, 1) = a;
    fs.gamma(1, 0) = b;
    fs.i0 = i0;
    return fs;
}

} // namespace

TEST(Expm, RotationAndDiagonal)
{
    CMat a = CMat::Zero(2, 2);
    a(0, 1) = -1.3;
    a(1, 0) = 1.3;
    const CMat e = expm(a);
    EXPECT_NEAR(std::abs(e(0, 0) - std::cos(1.3)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(e(1, 0) - std::sin(1.3)), 0.0, 1e-14);
    CMat d = CMat::Zero(3, 3);
    d(0, 0) = cplx(0.0, kPi);
    d(2, 2) = 2.0;
    const CMat ed = expm(d);
    EXPECT_NEAR(std::abs(ed(0, 0) + 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(ed(2, 2) - std::exp(2.0)), 0.0, 1e-13);
}

TEST(ThetaMatrix, TwoLevelClosedForm)
{
    // Gamma = [[0, a], [b, 0]]: Theta = cosh(sqrt(ab) t) I + sinh(sqrt(ab) t)/sqrt(ab) Gamma
    const cplx a(0.4, -0.3), b(-1.1, 0.5);
    const double t = 1.7;
    const auto fs = two_level(a, b);
    const cplx w = std::sqrt(a * b);
    const CMat th = theta_matrix(fs, t);
    EXPECT_NEAR(std::abs(th(0, 0) - std::cosh(w * t)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(th(1, 0) - std::sinh(w * t) / w * b), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(th(0, 1) - std::sinh(w * t) / w * a), 0.0, 1e-13);
}

TEST(ThetaMatrix, CommutingTimeDependence)
{
    auto fs = two_level(cplx(0.5, 0.2), cplx(-0.3, 0.9));
    const CMat g0 = fs.gamma;
    fs.gamma_t = [g0](double s) -> CMat { return (1.0 + s * s) * g0; };
    const double t = 1.2;
    const CMat want = expm((t + t * t * t / 3.0) * g0);
    EXPECT_LE((theta_matrix(fs, t) - want).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(dyson_truncated(fs, t, 5), std::invalid_argument);
}

TEST(DysonTruncated, ConvergesWithRemainderBound)
{
    RandomSource rng(5, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const FrozenSystem fs = random_frozen_system(rng, 5, 1.0, 2.0);
        const CVec exact = theta_matrix(fs, 1.0).col(fs.i0);
        const double g = Eigen::JacobiSVD<CMat>(fs.gamma).singularValues()[0];
        double fact = 1.0;
        for (int K = 0; K <= 25; ++K) {
            fact *= (K + 1);
            const double bound = std::pow(g, K + 1) / fact * std::exp(g) + 1e-14;
            EXPECT_LE((dyson_truncated(fs, 1.0, K) - exact).norm(), bound) << "K " << K;
        }
        EXPECT_LE((dyson_truncated(fs, 1.0, 20) - exact).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(DysonTruncated, NilpotentIsExactAfterNTerms)
{
    FrozenSystem fs;
    fs.gamma = CMat::Zero(4, 4);
    fs.gamma(1, 0) = 2.0;
    fs.gamma(2, 1) = cplx(0.0, 1.0);
    fs.gamma(3, 2) = -3.0;
    fs.i0 = 0;
    const CVec d = dyson_truncated(fs, 0.5, 3);
    EXPECT_EQ(d[0], cplx(1.0, 0.0));
    EXPECT_NEAR(std::abs(d[1] - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d[2] - cplx(0.0, 0.25)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d[3] - cplx(0.0, -0.125)), 0.0, 1e-15);
    EXPECT_LE((dyson_truncated(fs, 0.5, 10) - d).norm(), 0.0);
    EXPECT_LE((theta_matrix(fs, 0.5).col(0) - d).norm(), 1e-14);
}

TEST(FrozenValidation, RejectsBadSystems)
{
    FrozenSystem fs = two_level(1.0, 1.0);
    fs.gamma(0, 0) = 0.1;
    EXPECT_THROW(theta_matrix(fs, 1.0), std::invalid_argument);
    fs = two_level(1.0, 1.0, 2);
    EXPECT_THROW(frozen_bundle(fs), std::invalid_argument);
}

TEST(McFrozen, MatchesThetaWithinStandardErrors)
{
    const auto fs = two_level(cplx(0.6, 0.8), cplx(-0.5, 0.1));
    const double t = 1.5;
    const auto mc = mc_frozen_estimate(fs, t, 40000, 17);
    const CVec exact = theta_matrix(fs, t).col(0);
    EXPECT_LE(frozen_deviation(mc, exact), 4.0);
    EXPECT_GT(mc.stderr_re[0], 0.0);
}

TEST(McFrozen, TimeDependentRates)
{
    auto fs = two_level(cplx(0.3, -0.4), cplx(0.7, 0.2), 1);
    const CMat g0 = fs.gamma;
    fs.gamma_t = [g0](double s) -> CMat { return (1.0 + s) * g0; };
    const double t = 1.0;
    const auto mc = mc_frozen_estimate(fs, t, 40000, 23, t / 64);
    EXPECT_LE(frozen_deviation(mc, theta_matrix(fs, t).col(1)), 4.0);
}

TEST(KolmogorovSmirnov, StatisticAndPValue)
{
    auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    EXPECT_DOUBLE_EQ(ks_statistic({0.5}, uniform), 0.5);
    EXPECT_DOUBLE_EQ(ks_statistic({0.25, 0.75}, uniform), 0.25);
    EXPECT_NEAR(ks_pvalue(0.0, 100), 1.0, 1e-12);
    // asymptotic 5% point 1.358
    const std::size_t n = 100000;
    EXPECT_NEAR(ks_pvalue(1.358 / std::sqrt(static_cast<double>(n)), n), 0.05, 2e-3);
    EXPECT_LT(ks_pvalue(0.2, 1000), 1e-10);
    EXPECT_GT(ks_pvalue(0.01, 100), ks_pvalue(0.05, 100));
}

TEST(ChiSquare, PerfectFitAndMerging)
{
    const auto r = chi_square_test({50, 30, 20}, {0.5, 0.3, 0.2});
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_EQ(r.dof, 2);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
    // tiny expected bins are merged into their neighbours
    const auto m = chi_square_test({98, 1, 1}, {0.98, 0.01, 0.01});
    EXPECT_LT(m.dof, 2);
    const auto bad = chi_square_test({10, 90}, {0.5, 0.5});
    EXPECT_LT(bad.p_value, 1e-10);
}

TEST(JumpCounts, SymmetricTwoStateIsPoisson)
{
    Mat rates(2, 2);
    rates << 0.0, 1.3, 1.3, 0.0;
    const double t = 1.1;
    const auto p = jump_count_distribution(rates, 0, t, 8);
    ASSERT_EQ(p.size(), 9u);
    boost::math::poisson_distribution<double> pois(1.3 * t);
    double sum = 0.0;
    for (int k = 0; k < 8; ++k) {
        EXPECT_NEAR(p[static_cast<std::size_t>(k)], boost::math::pdf(pois, k), 1e-13);
        sum += p[static_cast<std::size_t>(k)];
    }
    EXPECT_NEAR(p[8], boost::math::cdf(boost::math::complement(pois, 7)), 1e-13);
    EXPECT_NEAR(sum + p[8], 1.0, 1e-13);
}

TEST(JumpCounts, SimulationPassesChiSquareAndKs)
{
    Mat rates(3, 3);
    rates << 0.0, 0.5, 0.2, 0.7, 0.0, 0.9, 0.3, 0.4, 0.0;
    const auto rep = jump_density_check(rates, 0, 2.0, 6, 20000, 99);
    EXPECT_GT(rep.count_test.p_value, 0.001);
    EXPECT_GT(rep.ks_p_value, 0.001);
    EXPECT_GT(rep.ks_samples, 10000u);
    Mat neg = rates;
    neg(1, 0) = -1.0;
    EXPECT_THROW(jump_density_check(neg, 0, 1.0, 3, 10, 1), std::invalid_argument);
}

TEST(RandomFrozenSystem, SizeNormAndDiagonal)
{
    RandomSource rng(11, 0);
    std::vector<int> seen(6, 0);
    for (int k = 0; k < 200; ++k) {
        const auto fs = random_frozen_system(rng, 5, 2.0, 2.0);
        ASSERT_GE(fs.n(), 2);
        ASSERT_LE(fs.n(), 5);
        ++seen[static_cast<std::size_t>(fs.n())];
        EXPECT_GE(fs.i0, 0);
        EXPECT_LT(fs.i0, fs.n());
        for (int i = 0; i < fs.n(); ++i)
            EXPECT_EQ(fs.gamma(i, i), cplx(0.0, 0.0));
        const double nt = Eigen::JacobiSVD<CMat>(fs.gamma).singularValues()[0] * 2.0;
        EXPECT_GE(nt, 0.5 - 1e-12);
        EXPECT_LE(nt, 2.0 + 1e-12);
    }
    for (int n = 2; n <= 5; ++n)
        EXPECT_GT(seen[static_cast<std::size_t>(n)], 0) << n;
}

TEST(OracleSuite, SmallRunPasses)
{
    OracleSuiteOptions o;
    o.systems = 3;
    o.n_traj = 4000;
    o.seed = 8;
    const auto checks = run_oracle_suite(o);
    EXPECT_EQ(checks.size(), 8u);
    for (const auto& c : checks)
        EXPECT_TRUE(c.pass) << c.name << " = " << c.value << " (threshold " << c.threshold << ")";
}

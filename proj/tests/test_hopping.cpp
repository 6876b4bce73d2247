#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "shgb/builtins.hpp"
#include "shgb/hopping.hpp"
#include "shgb/problems.hpp"
#include "test_support.hpp"

using namespace shgb;
using shgb::testing::vec;

namespace {

// n surfaces, no transport, constant coupling matrix
CoefficientBundle constant_coupling(Eigen::MatrixXcd g)
{
    shgb::testing::AffineSpec spec;
    spec.n = static_cast<int>(g.rows());
    spec.gamma = [g](int i, int j, double, const Vec&) { return g(i, j); };
    return shgb::testing::affine_bundle(spec);
}

InitialSampler unit_sampler(int surface)
{
    return make_point_sampler("unit", surface, GaussianBeam::isotropic(vec({0.0}), 1.0, 1.0));
}

// exact equality; the sign of a zero is not tracked through conjugation
bool bit_equal(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
bool bit_equal(cplx a, cplx b) { return bit_equal(a.real(), b.real()) && bit_equal(a.imag(), b.imag()); }
bool bit_equal(const Mat& a, const Mat& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return false;
    for (Eigen::Index k = 0; k < a.size(); ++k)
        if (!bit_equal(a.data()[k], b.data()[k]))
            return false;
    return true;
}

} // namespace

TEST(SampleHopTarget, InvertsCumulativeWeights)
{
    // from surface 0 the weights to 1 and 2 are 1 and 3
    Eigen::MatrixXcd g(3, 3);
    g << 0, 0, 0, 1, 0, 0, cplx(0, 3), 0, 0;
    const auto sys = constant_coupling(g);
    const Vec x = vec({0.0});
    EXPECT_EQ(sample_hop_target(sys, {0, false}, 0.0, x, 0.2).surface, 1);
    EXPECT_EQ(sample_hop_target(sys, {0, false}, 0.0, x, 0.25).surface, 1);
    EXPECT_EQ(sample_hop_target(sys, {0, false}, 0.0, x, 0.26).surface, 2);
    EXPECT_EQ(sample_hop_target(sys, {0, false}, 0.0, x, 0.999999).surface, 2);
    EXPECT_THROW(sample_hop_target(sys, {1, false}, 0.0, x, 0.5), std::logic_error);
}

TEST(SampleHopTarget, EqualWeightsMiddleDraw)
{
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Constant(3, 3, 1.0);
    const auto sys = constant_coupling(g);
    // weights to surfaces 1 and 2 are equal; u = 0.5 lands on the first of them
    EXPECT_EQ(sample_hop_target(sys, {0, false}, 0.0, vec({0.0}), 0.5).surface, 1);
    // from the middle surface, u = 0.5 picks the lower index
    EXPECT_EQ(sample_hop_target(sys, {1, false}, 0.0, vec({0.0}), 0.5).surface, 0);
}

TEST(SampleHopTarget, FrequenciesMatchWeights)
{
    const auto q = builtin_tully_ecr(1.0 / 32, 5.0 / 32);
    const Vec x = vec({0.05, 1.2});
    const ExtendedIndex from{kU21, false};
    PhiloxStream bits(99, 0);
    std::map<int, int> count;
    const int n = 200000;
    for (int k = 0; k < n; ++k)
        ++count[sample_hop_target(q, from, 0.0, x, bits.uniform_open()).flat(3)];
    double total = 0.0;
    for (int j = 0; j < 6; ++j)
        if (j != from.flat(3))
            total += std::abs(effective_gamma(q, ExtendedIndex::from_flat(j, 3), from, 0.0, x));
    for (int j = 0; j < 6; ++j) {
        const double p =
            j == from.flat(3) ? 0.0 : std::abs(effective_gamma(q, ExtendedIndex::from_flat(j, 3), from, 0.0, x)) / total;
        const double sd = std::sqrt(n * p * (1 - p)) + 1e-9;
        EXPECT_LE(std::abs(count[j] - n * p), 5 * sd) << "target " << j;
    }
}

TEST(ApplyHop, PhaseAndConjugationSwitch)
{
    DynamicState s;
    s.beam = GaussianBeam::make(Mat{{1.0}}, Mat{{0.3}}, vec({0.5}), vec({2.0}), 1.5, cplx(1.0, 2.0));
    s.omega = cplx(0.7, 0.1);
    const auto same = apply_hop(s, {0, false}, {1, false}, cplx(0.0, -2.0));
    EXPECT_DOUBLE_EQ(same.omega.imag(), 0.1 - kPi / 2);
    EXPECT_EQ(same.omega.real(), 0.7);
    EXPECT_EQ(same.beam.A, s.beam.A);

    const auto flip = apply_hop(s, {0, false}, {1, true}, cplx(-1.0, 0.0));
    EXPECT_EQ(flip.beam.A, cplx(1.0, -2.0));
    EXPECT_EQ(flip.beam.S, -1.5);
    EXPECT_EQ(flip.beam.P[0], -2.0);
    EXPECT_EQ(flip.beam.N(0, 0), -0.3);
    EXPECT_EQ(flip.beam.X[0], 0.5);
    EXPECT_EQ(flip.beam.M(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(flip.omega.imag(), -(0.1 + kPi));
    EXPECT_THROW(apply_hop(s, {0, false}, {1, false}, 0.0), std::invalid_argument);

    // the flipped beam is the complex conjugate of the original one
    const double eps = 0.3;
    for (double x : {-0.4, 0.5, 1.3}) {
        const cplx a = eval_beam(s.beam, eps, vec({x}));
        const cplx b = eval_beam(apply_hop(s, {0, false}, {0, true}, 1.0).beam, eps, vec({x}));
        EXPECT_NEAR(std::abs(b - std::conj(a)), 0.0, 1e-14);
    }
}

TEST(HopCoupling, ConjugatedSourceUsesConjugateEntry)
{
    const auto q = builtin_tully_ecr(1.0 / 32, 5.0 / 32);
    const Vec x = vec({0.2, 1.0});
    const cplx plain = hop_coupling(q, {kU21, false}, {kU11, true}, 0.0, x);
    EXPECT_EQ(plain, effective_gamma(q, {kU11, true}, {kU21, false}, 0.0, x));
    const cplx fromc = hop_coupling(q, {kU21, true}, {kU11, false}, 0.0, x);
    EXPECT_EQ(fromc, std::conj(effective_gamma(q, {kU11, false}, {kU21, true}, 0.0, x)));
}

TEST(RunTrajectory, DeterministicPerIndexAndSeed)
{
    const auto pr = make_problem("ex1", {0.1});
    const TrajectoryOptions opt{0.5, 0.01, 7};
    const auto a = run_trajectory(pr.system, pr.sampler, opt, 3);
    const auto b = run_trajectory(pr.system, pr.sampler, opt, 3);
    const auto c = run_trajectory(pr.system, pr.sampler, opt, 4);
    EXPECT_TRUE(bit_equal(a.final_state.beam.X, b.final_state.beam.X));
    EXPECT_TRUE(bit_equal(a.final_state.omega, b.final_state.omega));
    EXPECT_EQ(a.record.count(), b.record.count());
    EXPECT_FALSE(bit_equal(a.final_state.beam.X, c.final_state.beam.X));
    EXPECT_DOUBLE_EQ(a.final_state.t, 0.5);
}

TEST(RunTrajectory, ObserverSeesContiguousSteps)
{
    const auto pr = make_problem("ex1", {0.1});
    const TrajectoryOptions opt{0.5, 0.013, 11};
    for (std::uint64_t idx = 0; idx < 20; ++idx) {
        double t_last = 0.0;
        int hops = 0;
        int steps = 0;
        TrajectoryObserver obs;
        obs.on_step = [&](ExtendedIndex, const DynamicState& before, const DynamicState& after) {
            EXPECT_DOUBLE_EQ(before.t, t_last);
            EXPECT_GT(after.t, before.t);
            t_last = after.t;
            ++steps;
        };
        obs.on_hop = [&](const HopEvent& ev, const DynamicState& s) {
            EXPECT_DOUBLE_EQ(ev.t, t_last);
            EXPECT_EQ(s.t, ev.t);
            ++hops;
        };
        const auto r = run_trajectory(pr.system, pr.sampler, opt, idx, &obs);
        EXPECT_DOUBLE_EQ(t_last, 0.5);
        EXPECT_EQ(hops, static_cast<int>(r.record.count()));
        EXPECT_GE(steps, 39);
    }
}

TEST(RunTrajectory, ConstantRateHopCountIsPoisson)
{
    // alternating between two surfaces with rates 2 and 2: hop count ~ Poisson(2T)
    Eigen::MatrixXcd g(2, 2);
    g << 0, 2, 2, 0;
    const auto sys = constant_coupling(g);
    const TrajectoryOptions opt{1.5, 0.05, 5};
    const int n = 20000;
    double mean = 0.0, mean_sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto r = run_trajectory(sys, unit_sampler(0), opt, static_cast<std::uint64_t>(k));
        const double c = static_cast<double>(r.record.count());
        mean += c;
        mean_sq += c * c;
        // weight exp(omega) = exp(Re) carries the survival compensation
        EXPECT_NEAR(r.final_state.omega.real(), 2.0 * 1.5, 1e-12);
    }
    mean /= n;
    mean_sq /= n;
    EXPECT_NEAR(mean, 3.0, 5 * std::sqrt(3.0 / n));
    EXPECT_NEAR(mean_sq - mean * mean, 3.0, 0.15);
}

TEST(RunTrajectory, FlagFrameMatchesDoubledSystemBitForBit)
{
    const auto base = builtin_tully_ecr(1.0 / 32, 5.0 / 32);
    const auto doubled = make_doubled(base);
    const auto sampler = make_sampler_tully_ecr(1.0 / 32);
    const TrajectoryOptions opt{2.0, 1.0 / 512, 2718};
    int conj_visits = 0;
    for (std::uint64_t idx = 0; idx < 100; ++idx) {
        const auto a = run_trajectory(base, sampler, opt, idx);
        const auto b = run_trajectory(doubled, sampler, opt, idx);
        ASSERT_EQ(a.record.count(), b.record.count()) << idx;
        for (std::size_t h = 0; h < a.record.count(); ++h) {
            EXPECT_EQ(a.record.hops[h].to.flat(3), b.record.hops[h].to.surface);
            EXPECT_TRUE(bit_equal(a.record.hops[h].t, b.record.hops[h].t));
        }
        const auto& fa = a.final_state;
        const auto& fb = b.final_state;
        EXPECT_EQ(a.final_surface.flat(3), b.final_surface.surface);
        EXPECT_TRUE(bit_equal(fa.beam.X, fb.beam.X));
        EXPECT_TRUE(bit_equal(fa.beam.M, fb.beam.M));
        if (a.final_surface.conjugated) {
            ++conj_visits;
            EXPECT_TRUE(bit_equal(fa.beam.A, std::conj(fb.beam.A)));
            EXPECT_TRUE(bit_equal(fa.beam.S, -fb.beam.S));
            EXPECT_TRUE(bit_equal(fa.beam.P, Mat(-fb.beam.P)));
            EXPECT_TRUE(bit_equal(fa.beam.N, Mat(-fb.beam.N)));
            EXPECT_TRUE(bit_equal(fa.omega, std::conj(fb.omega)));
        } else {
            EXPECT_TRUE(bit_equal(fa.beam.A, fb.beam.A));
            EXPECT_TRUE(bit_equal(fa.beam.S, fb.beam.S));
            EXPECT_TRUE(bit_equal(fa.beam.P, fb.beam.P));
            EXPECT_TRUE(bit_equal(fa.omega, fb.omega));
        }
    }
    EXPECT_GT(conj_visits, 0);
}

TEST(RunTrajectory, BadOptionsAndSeedInErrors)
{
    const auto pr = make_problem("ex1", {0.1});
    EXPECT_THROW(run_trajectory(pr.system, pr.sampler, {0.0, 0.01, 1}, 0), std::invalid_argument);
    EXPECT_THROW(run_trajectory(pr.system, pr.sampler, {1.0, -0.01, 1}, 0), std::invalid_argument);

    shgb::testing::AffineSpec spec;
    spec.B = Mat::Constant(1, 1, 400.0);
    const auto stiff = shgb::testing::affine_bundle(spec);
    try {
        run_trajectory(stiff, unit_sampler(0), {1.0, 0.1, 424242}, 17);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("424242"), std::string::npos) << msg;
        EXPECT_NE(msg.find("trajectory 17"), std::string::npos) << msg;
    }
}

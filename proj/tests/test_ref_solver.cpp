#include <cmath>

#include <gtest/gtest.h>

#include "shgb/estimator.hpp"
#include "shgb/ref_solver.hpp"
#include "test_support.hpp"

using namespace shgb;
using shgb::testing::vec;

namespace {

FieldGrid gaussian_field(const std::vector<Axis>& axes, int n_surfaces, const Vec& c, double w, int surface = 0)
{
    FieldGrid g(axes, n_surfaces);
    sample_layer(g, surface, [&](const Vec& x) { return std::exp(-(x - c).squaredNorm() / (2 * w * w)); });
    return g;
}

std::vector<Axis> box(double half, int n) { return {{-half, half, n}, {-half, half, n}}; }

double max_abs_diff(const FieldGrid& a, const FieldGrid& b, int s)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.n_nodes(); ++k)
        m = std::max(m, std::abs(a.at(s, k) - b.at(s, k)));
    return m;
}

CoefficientBundle rotation_system()
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.B = Mat{{0.0, -1.0}, {1.0, 0.0}};
    return shgb::testing::affine_bundle(spec);
}

double rotation_error(int n, double T)
{
    const auto sys = rotation_system();
    const auto axes = box(4.0, n);
    const auto init = gaussian_field(axes, 1, vec({1.0, 0.0}), 0.6);
    const auto res = reference_solve(sys, init, T);
    const auto exact = gaussian_field(axes, 1, vec({std::cos(T), std::sin(T)}), 0.6);
    return l2_error(res.field, exact)[0];
}

// SSP-RK3 applied to u' = lambda u over `steps` steps of size dt
cplx rk3_factor(cplx lambda, double dt, std::size_t steps)
{
    const cplx z = lambda * dt;
    return std::pow(1.0 + z + z * z / 2.0 + z * z * z / 6.0, static_cast<double>(steps));
}

} // namespace

TEST(RefSolve, ZeroDataStaysZero)
{
    const auto sys = rotation_system();
    const FieldGrid init(box(2.0, 21), 1);
    const auto res = reference_solve(sys, init, 0.3);
    EXPECT_EQ(l2_norm(res.field, 0), 0.0);
    EXPECT_NEAR(res.dt * static_cast<double>(res.steps), 0.3, 1e-14);
}

TEST(RefSolve, DecoupledDecayAndPhase)
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.n = 2;
    spec.epsilon = 0.2;
    spec.b = {0.3, 0.0};
    spec.gamma = [](int i, int j, double, const Vec&) { return i == j ? cplx(i == 0 ? 0.0 : -1.0, 0.0) : 0.0; };
    const auto sys = shgb::testing::affine_bundle(spec);
    FieldGrid init(box(1.0, 11), 2);
    sample_layer(init, 0, [](const Vec&) { return cplx(1.0); });
    sample_layer(init, 1, [](const Vec&) { return cplx(cplx(0.0, 2.0)); });
    const double T = 0.7;
    const auto res = reference_solve(sys, init, T);
    const cplx f0 = rk3_factor(cplx(0.0, 0.3 / 0.2), res.dt, res.steps);
    const cplx f1 = rk3_factor(-1.0, res.dt, res.steps);
    for (std::size_t k = 0; k < init.n_nodes(); ++k) {
        EXPECT_NEAR(std::abs(res.field.at(0, k) - f0), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(res.field.at(1, k) - cplx(0.0, 2.0) * f1), 0.0, 1e-13);
    }
    EXPECT_NEAR(std::abs(f0 - std::exp(cplx(0.0, 0.3 * T / 0.2))), 0.0, 1e-3);
    EXPECT_NEAR(std::abs(f1 - std::exp(-T)), 0.0, 1e-3);
}

TEST(RefSolve, ConjugateCouplingKeepsRealDataReal)
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.nu = [](int, int, double, const Vec&) { return cplx(0.5, 0.0); };
    const auto sys = shgb::testing::affine_bundle(spec);
    FieldGrid init(box(1.0, 5), 1);
    sample_layer(init, 0, [](const Vec&) { return cplx(1.5); });
    const auto res = reference_solve(sys, init, 1.0);
    for (std::size_t k = 0; k < init.n_nodes(); ++k) {
        EXPECT_EQ(res.field.at(0, k).imag(), 0.0);
        EXPECT_NEAR(res.field.at(0, k).real(), 1.5 * rk3_factor(0.5, res.dt, res.steps).real(), 1e-13);
        EXPECT_NEAR(res.field.at(0, k).real(), 1.5 * std::exp(0.5), 1e-3);
    }
    // imaginary data decays instead: d(i v)/dt = 0.5 conj(i v) = -0.5 i v
    sample_layer(init, 0, [](const Vec&) { return cplx(cplx(0.0, 1.0)); });
    const auto r2 = reference_solve(sys, init, 1.0);
    EXPECT_NEAR(r2.field.at(0, 12).imag(), rk3_factor(-0.5, r2.dt, r2.steps).real(), 1e-13);
}

TEST(RefSolve, TimeDependentPhase)
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.epsilon = 0.5;
    auto sys = shgb::testing::affine_bundle(spec);
    sys.time_independent = false;
    sys.beta = [](int, double t, const Vec&) { return t; };
    FieldGrid init(box(1.0, 5), 1);
    sample_layer(init, 0, [](const Vec&) { return cplx(1.0); });
    const double T = 1.3;
    const auto res = reference_solve(sys, init, T);
    EXPECT_NEAR(std::abs(res.field.at(0, 7) - std::exp(cplx(0.0, T * T / 2 / 0.5))), 0.0, 5e-3);
    // halving the cap on dt cuts the error by about 2^3
    RefSolveOptions fine;
    fine.eps_step_factor = 0.125;
    const auto res2 = reference_solve(sys, init, T, fine);
    const double e1 = std::abs(res.field.at(0, 7) - std::exp(cplx(0.0, T * T)));
    const double e2 = std::abs(res2.field.at(0, 7) - std::exp(cplx(0.0, T * T)));
    EXPECT_GT(std::log2(e1 / e2) / std::log2(static_cast<double>(res2.steps) / res.steps), 2.7);
}

TEST(RefSolve, TranslationMatchesShiftedGaussian)
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.a = {vec({1.0, -0.5})};
    const auto sys = shgb::testing::affine_bundle(spec);
    const auto axes = box(3.0, 121);
    const auto res = reference_solve(sys, gaussian_field(axes, 1, vec({-0.5, 0.5}), 0.5), 1.0);
    const auto exact = gaussian_field(axes, 1, vec({0.5, 0.0}), 0.5);
    EXPECT_LT(l2_error(res.field, exact)[0] / l2_norm(exact, 0), 0.01);
    // backward drift exercises the other stencil
    spec.a = {vec({-1.0, 0.5})};
    const auto back = reference_solve(shgb::testing::affine_bundle(spec), res.field, 1.0);
    const auto orig = gaussian_field(axes, 1, vec({-0.5, 0.5}), 0.5);
    EXPECT_LT(l2_error(back.field, orig)[0] / l2_norm(orig, 0), 0.02);
}

TEST(RefSolve, RigidRotationThirdOrder)
{
    const double T = kPi / 4;
    const double e1 = rotation_error(41, T);
    const double e2 = rotation_error(81, T);
    const double e3 = rotation_error(161, T);
    EXPECT_GT(std::log2(e1 / e2), 2.5);
    EXPECT_GT(std::log2(e2 / e3), 2.7);
}

TEST(RefSolve, WenoAgreesWithLinearSchemeOnSmoothData)
{
    const auto sys = rotation_system();
    const auto axes = box(4.0, 81);
    const auto init = gaussian_field(axes, 1, vec({1.0, 0.0}), 0.6);
    const auto a = reference_solve<LinearUpwind3>(sys, init, 0.5);
    const auto b = reference_solve<Weno3>(sys, init, 0.5);
    const auto exact = gaussian_field(axes, 1, vec({std::cos(0.5), std::sin(0.5)}), 0.6);
    const double ea = l2_error(a.field, exact)[0];
    const double eb = l2_error(b.field, exact)[0];
    const double norm = l2_norm(exact, 0);
    EXPECT_LT(ea / norm, 0.005);
    EXPECT_LT(eb / norm, 0.02);
    EXPECT_LT(max_abs_diff(a.field, b.field, 0), 0.05);
}

TEST(RefSolve, LinearStencilsAreExactOnCubics)
{
    const cplx u[5] = {-8.0, -1.0, 0.0, 1.0, 8.0}; // x^3 at -2..2
    EXPECT_NEAR(std::abs(LinearUpwind3::derivative(u + 2, true, 1.0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(LinearUpwind3::derivative(u + 2, false, 1.0)), 0.0, 1e-14);
    const cplx q[5] = {4.0, 1.0, 0.0, 1.0, 4.0}; // x^2
    EXPECT_NEAR(std::abs(LinearUpwind3::derivative(q + 2, true, 1.0)), 0.0, 1e-14);
    const cplx l[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    EXPECT_NEAR(std::abs(LinearUpwind3::derivative(l + 2, true, 2.0) - 2.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(Weno3::derivative(l + 2, false, 1.0) - 1.0), 0.0, 1e-12);
}

TEST(RefSolve, WarningsAndValidation)
{
    shgb::testing::AffineSpec spec;
    spec.m = 2;
    spec.epsilon = 0.01;
    const auto sys = shgb::testing::affine_bundle(spec);
    FieldGrid init(box(1.0, 11), 1);
    const auto res = reference_solve(sys, init, 0.01);
    ASSERT_EQ(res.warnings.size(), 1u);
    EXPECT_LE(res.dt, 0.5 * 0.01 + 1e-15);
    RefSolveOptions o;
    o.cfl = 1.5;
    EXPECT_THROW(reference_solve(sys, init, 0.1, o), std::invalid_argument);
    o.cfl = 0.0;
    EXPECT_THROW(reference_solve(sys, init, 0.1, o), std::invalid_argument);
    EXPECT_THROW(reference_solve(sys, init, 0.0), std::invalid_argument);
    EXPECT_THROW(reference_solve(sys, FieldGrid({{0, 1, 5}}, 1), 0.1), std::invalid_argument);
}

TEST(Subsample, TakesEveryStrideNode)
{
    FieldGrid g({{0.0, 4.0, 9}, {0.0, 2.0, 5}}, 2);
    sample_layer(g, 1, [](const Vec& x) { return cplx(x[0], x[1]); });
    const auto s = subsample(g, 2);
    EXPECT_EQ(s.axis(0).count, 5);
    EXPECT_EQ(s.axis(1).count, 3);
    for (std::size_t k = 0; k < s.n_nodes(); ++k) {
        const Vec x = s.coordinates(k);
        EXPECT_EQ(s.at(1, k), cplx(x[0], x[1]));
    }
    EXPECT_THROW(subsample(g, 3), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "resilience/dynamics.hpp"
#include "resilience/envelope.hpp"

using namespace resilience;

namespace {

const Matrix kDcMotor{{-2.0, -0.02}, {1.0, -10.0}};

EnvelopeFamily dc_motor_family(const TimeGrid& grid) {
    const SpectralDecomposition dec = decompose(kDcMotor);
    return EnvelopeFamily(nominal_trajectory(kDcMotor, {0.4, 0.4}, grid),
                          jordan_gain(dec, grid));
}

}  // namespace

TEST(NominalTest, ScalarDecay) {
    const Signal sig = nominal_trajectory(Matrix{{-1.0}}, {1.0}, make_grid(1.0, 0.01));
    EXPECT_NEAR(sig.samples.back()[0], 0.367879, 1e-6);
    EXPECT_DOUBLE_EQ(sig.samples.front()[0], 1.0);
}

TEST(NominalTest, StartsAtInitialState) {
    const Signal sig = nominal_trajectory(kDcMotor, {0.4, 0.4}, make_grid(20.0, 0.1));
    EXPECT_DOUBLE_EQ(sig.samples[0][0], 0.4);
    EXPECT_DOUBLE_EQ(sig.samples[0][1], 0.4);
}

TEST(NominalTest, HurwitzDecayTowardOrigin) {
    const Signal sig = nominal_trajectory(kDcMotor, {0.4, 0.4}, make_grid(20.0, 0.01));
    EXPECT_LT(norm_two(sig.samples.back()), norm_two(sig.samples.front()));
    // cross-check against the integration oracle
    const DisturbanceSignal zero(DisturbanceKind::Zero, 2, 0.0, 0.1, 1);
    const Signal rk = integrate(linear_field(kDcMotor), {0.4, 0.4}, zero, make_grid(20.0, 0.01));
    for (std::size_t k = 0; k < sig.size(); k += 100) {
        EXPECT_NEAR(sig.samples[k][0], rk.samples[k][0], 1e-6);
        EXPECT_NEAR(sig.samples[k][1], rk.samples[k][1], 1e-6);
    }
}

TEST(NominalTest, RepeatedStepMatchesDirectExponential) {
    const TimeGrid grid = make_grid(20.0, 0.01);
    const Signal sig = nominal_trajectory(kDcMotor, {0.4, 0.4}, grid);
    const Vector direct = expm(kDcMotor * grid.end()) * Vector{0.4, 0.4};
    const double scale = std::max(norm_two(direct), 1e-12);
    EXPECT_LT(norm_two(vec_sub(sig.samples.back(), direct)) / scale, 1e-8);
}

TEST(EnvelopeTest, ZeroOmegaIsNominalExactly) {
    const EnvelopeFamily fam = dc_motor_family(make_grid(20.0, 0.1));
    const Signal sig = fam.evaluate({0.0, 0.0});
    for (std::size_t k = 0; k < sig.size(); ++k) {
        EXPECT_DOUBLE_EQ(sig.samples[k][0], fam.nominal().samples[k][0]);
        EXPECT_DOUBLE_EQ(sig.samples[k][1], fam.nominal().samples[k][1]);
    }
}

TEST(EnvelopeTest, ScalarClosedForm) {
    const Matrix a{{-1.0}};
    const TimeGrid grid = make_grid(1.0, 0.01);
    const EnvelopeFamily fam(nominal_trajectory(a, {1.0}, grid),
                             jordan_gain(decompose(a), grid));
    const Signal sig = fam.evaluate({0.1});
    EXPECT_NEAR(sig.samples.back()[0], 0.431091, 1e-6);
}

TEST(EnvelopeTest, AffineInOmega) {
    const EnvelopeFamily fam = dc_motor_family(make_grid(5.0, 0.1));
    const Vector w1{0.3, -0.2};
    const Vector w2{-0.1, 0.4};
    const double alpha = 0.375;
    Vector mix(2);
    for (int i = 0; i < 2; ++i) mix[i] = alpha * w1[i] + (1.0 - alpha) * w2[i];
    const Signal s1 = fam.evaluate(w1);
    const Signal s2 = fam.evaluate(w2);
    const Signal sm = fam.evaluate(mix);
    for (std::size_t k = 0; k < sm.size(); ++k) {
        for (int i = 0; i < 2; ++i) {
            EXPECT_NEAR(sm.samples[k][i],
                        alpha * s1.samples[k][i] + (1.0 - alpha) * s2.samples[k][i], 1e-12);
        }
    }
}

TEST(EnvelopeTest, OrderedInOmega) {
    const EnvelopeFamily fam = dc_motor_family(make_grid(5.0, 0.1));
    const Signal lo = fam.evaluate({-0.2, -0.1});
    const Signal hi = fam.evaluate({0.1, 0.3});
    for (std::size_t k = 0; k < lo.size(); ++k) {
        EXPECT_LE(lo.samples[k][0], hi.samples[k][0] + 1e-12);
        EXPECT_LE(lo.samples[k][1], hi.samples[k][1] + 1e-12);
    }
}

TEST(EnvelopeTest, InputMapRoutesChannels) {
    const Matrix a{{-1.0}};
    const TimeGrid grid = make_grid(1.0, 0.5);
    Matrix bw(1, 1);
    bw(0, 0) = -0.5;  // magnitude matters, not sign
    const EnvelopeFamily fam(nominal_trajectory(a, {0.0}, grid), jordan_gain(decompose(a), grid),
                             bw);
    const Signal sig = fam.evaluate({1.0});
    const double gain_at_end = 1.0 - std::exp(-1.0);
    EXPECT_NEAR(sig.samples.back()[0], 0.5 * gain_at_end, 1e-12);
}

// Containment guarantee: integrated trajectories under |d| <= eps stay
// within [nominal - A_J eps 1, nominal + A_J eps 1] at every grid point.
TEST(EnvelopeTest, ContainsIntegratedTrajectories) {
    const TimeGrid grid = make_grid(10.0, 0.01);
    const SpectralDecomposition dec = decompose(kDcMotor);
    const GainCurve gain = jordan_gain(dec, grid);
    const Signal nominal = nominal_trajectory(kDcMotor, {0.4, 0.4}, grid);
    const double eps = 0.15;

    const Signal lo = EnvelopeFamily(nominal, gain).evaluate({-eps, -eps});
    const Signal hi = EnvelopeFamily(nominal, gain).evaluate({eps, eps});

    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const DisturbanceKind kind = seed % 2 == 0 ? DisturbanceKind::PiecewiseConstantRandom
                                                   : DisturbanceKind::BangBangCorner;
        const DisturbanceSignal d(kind, 2, eps, 0.1, seed);
        const Signal traj = integrate(linear_field(kDcMotor), {0.4, 0.4}, d, grid);
        for (std::size_t k = 0; k < grid.count; ++k) {
            for (int i = 0; i < 2; ++i) {
                EXPECT_GE(traj.samples[k][i], lo.samples[k][i] - 2e-6);
                EXPECT_LE(traj.samples[k][i], hi.samples[k][i] + 2e-6);
            }
        }
    }
}

TEST(LipschitzOmegaTest, ScalarLimit) {
    const Matrix a{{-1.0}};
    const GainCurve gain = jordan_gain(decompose(a), make_grid(60.0, 0.5));
    EXPECT_NEAR(lipschitz_omega(1.0, gain), 1.0, 1e-9);
}

TEST(LipschitzOmegaTest, ZeroFormulaConstant) {
    const Matrix a{{-1.0}};
    const GainCurve gain = jordan_gain(decompose(a), make_grid(10.0, 0.5));
    EXPECT_DOUBLE_EQ(lipschitz_omega(0.0, gain), 0.0);
}

TEST(LipschitzOmegaTest, BoundsRobustnessDifferences) {
    const TimeGrid grid = make_grid(20.0, 0.05);
    const EnvelopeFamily fam = dc_motor_family(grid);
    const StlPtr phi = parse(
        "G[0,20](1*x1 >= -1 && 1*x1 <= 0.5 && 1*x2 >= -1 && 1*x2 <= 0.5 && "
        "-1*x1 + 1*x2 <= 0.2 && 1*x1 - 1*x2 <= 0.2)");
    const double l_omega = lipschitz_omega(lipschitz(phi), fam.gain(), fam.input_map());

    std::mt19937 gen(61);
    std::uniform_real_distribution<double> w(-0.2, 0.2);
    for (int trial = 0; trial < 500; ++trial) {
        const Vector w1{w(gen), w(gen)};
        const Vector w2{w(gen), w(gen)};
        const double r1 = robustness(phi, fam.evaluate(w1), 0.0);
        const double r2 = robustness(phi, fam.evaluate(w2), 0.0);
        EXPECT_LE(std::abs(r1 - r2), l_omega * norm_two(vec_sub(w1, w2)) + 1e-12);
    }
}

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "resilience/linalg.hpp"

using namespace resilience;

namespace {

Matrix random_matrix(std::mt19937& gen, std::size_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = dist(gen);
    return m;
}

}  // namespace

TEST(MatrixTest, ArithmeticBasics) {
    Matrix a{{1.0, 2.0}, {3.0, 4.0}};
    Matrix b{{0.0, 1.0}, {1.0, 0.0}};
    Matrix sum = a + b;
    EXPECT_DOUBLE_EQ(sum(0, 1), 3.0);
    Matrix prod = a * b;
    EXPECT_DOUBLE_EQ(prod(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(prod(1, 0), 4.0);
    Vector v = a * Vector{1.0, 1.0};
    EXPECT_DOUBLE_EQ(v[0], 3.0);
    EXPECT_DOUBLE_EQ(v[1], 7.0);
    EXPECT_THROW(a * Vector{1.0}, ShapeMismatch);
}

TEST(MatrixTest, ElementwiseComparison) {
    Matrix a{{1.0, 2.0}};
    Matrix b{{1.0, 3.0}};
    EXPECT_TRUE(elementwise_leq(a, b));
    EXPECT_FALSE(elementwise_leq(b, a));
    EXPECT_THROW(elementwise_leq(a, Matrix{{1.0}, {2.0}}), ShapeMismatch);
}

TEST(MatrixTest, InverseRoundTrip) {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Matrix a = random_matrix(gen, n);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += 3.0;  // keep well conditioned
        Matrix id = a * inverse(a);
        EXPECT_LT(norm_fro(id - Matrix::identity(n)), 1e-10);
    }
    EXPECT_THROW(inverse(Matrix{{1.0, 2.0}, {2.0, 4.0}}), SingularMatrix);
}

TEST(MatrixTest, SpectralNormAgainstSvd) {
    EXPECT_NEAR(spectral_norm(Matrix{{3.0}}), 3.0, 1e-12);
    EXPECT_NEAR(spectral_norm(Matrix::diagonal({1.0, -5.0, 2.0})), 5.0, 1e-10);
    std::mt19937 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Matrix a = random_matrix(gen, n);
        Eigen::MatrixXd ea(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ea(i, j) = a(i, j);
        const double ref = Eigen::JacobiSVD<Eigen::MatrixXd>(ea).singularValues()(0);
        EXPECT_NEAR(spectral_norm(a), ref, 1e-8 * std::max(1.0, ref));
    }
}

TEST(ExpmTest, ZeroMatrixGivesIdentity) {
    Matrix e = expm(Matrix::zeros(3, 3));
    EXPECT_LT(norm_fro(e - Matrix::identity(3)), 1e-14);
}

TEST(ExpmTest, ScalarDecay) {
    Matrix e = expm(Matrix{{-1.0}});
    EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-12);
}

TEST(ExpmTest, NilpotentSeriesTruncates) {
    Matrix e = expm(Matrix{{0.0, 1.0}, {0.0, 0.0}});
    EXPECT_NEAR(e(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(e(0, 1), 1.0, 1e-14);
    EXPECT_NEAR(e(1, 0), 0.0, 1e-14);
    EXPECT_NEAR(e(1, 1), 1.0, 1e-14);
}

// Reference route: eigendecompose with Eigen and exponentiate the eigenvalues.
TEST(ExpmTest, MatchesEigendecompositionReference) {
    std::mt19937 gen(23);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Matrix a = random_matrix(gen, n);
        Eigen::MatrixXd ea(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ea(i, j) = a(i, j);
        Eigen::EigenSolver<Eigen::MatrixXd> solver(ea);
        ASSERT_EQ(solver.info(), Eigen::Success);
        const Eigen::MatrixXcd v = solver.eigenvectors();
        if (std::abs(v.determinant()) < 1e-6) continue;  // skip near-defective draws
        const Eigen::MatrixXcd ref =
            v * solver.eigenvalues().array().exp().matrix().asDiagonal() * v.inverse();

        Matrix e = expm(a);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                err += std::pow(e(i, j) - ref(i, j).real(), 2);
                scale += std::pow(ref(i, j).real(), 2);
            }
        }
        EXPECT_LT(std::sqrt(err), 1e-9 * std::max(1.0, std::sqrt(scale)));
    }
}

TEST(ExpmTest, LargeNormUsesScaling) {
    Matrix a{{0.0, 40.0}, {-40.0, 0.0}};  // rotation, norm far above 1
    Matrix e = expm(a);
    EXPECT_NEAR(e(0, 0), std::cos(40.0), 1e-9);
    EXPECT_NEAR(e(0, 1), std::sin(40.0), 1e-9);
}

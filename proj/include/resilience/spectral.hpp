#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "resilience/errors.hpp"
#include "resilience/linalg.hpp"

namespace resilience {

/// Uniform time grid t_k = k * dt, k = 0 .. count-1.
struct TimeGrid {
    double dt = 0.0;
    std::size_t count = 0;

    double time(std::size_t k) const { return dt * static_cast<double>(k); }
    double end() const { return count == 0 ? 0.0 : time(count - 1); }
};

inline TimeGrid make_grid(double t_end, double dt) {
    if (dt <= 0.0) throw ShapeMismatch("grid step must be positive");
    const auto count = static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
    return TimeGrid{dt, count};
}

/**
 * Real block-diagonal spectral form A = P * J * P⁻¹.
 *
 * P is real: a real eigenvalue contributes its eigenvector as one column and
 * a complex-conjugate pair a ± bi contributes the real and imaginary parts of
 * one eigenvector as two columns, giving the 2x2 block [[a, b], [-b, a]] in J.
 * J_R keeps only the real parts on the diagonal, which is the form whose
 * exponential is elementwise nonnegative for t >= 0.
 *
 * Only diagonalizable matrices are handled; a numerically rank-deficient
 * eigenvector basis is rejected as DefectiveMatrix.
 */
struct SpectralDecomposition {
    Matrix P;
    Matrix Pinv;
    Matrix J_R;       ///< diagonal of eigenvalue real parts
    Matrix J_block;   ///< real modal form (2x2 rotation blocks for pairs)
    /// Elementwise moduli of the complex eigenvector matrix and its inverse.
    /// These, not |P| of the real transform, enter the envelope gains: the
    /// modulus keeps the rotational mixing of conjugate pairs that the real
    /// block form would drop.
    Matrix P_mod;
    Matrix Pinv_mod;
    std::vector<std::complex<double>> eigenvalues;  ///< aligned with P's columns
    double cond_P = 0.0;
    bool hurwitz = false;

    std::size_t dim() const { return P.rows(); }

    /// Real parts aligned with P's columns (the diagonal of J_R).
    Vector real_parts() const {
        Vector r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = J_R(i, i);
        return r;
    }

    /// Eigenvalue moduli aligned with P's columns (the diagonal of |J|).
    Vector moduli() const {
        Vector r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = std::abs(eigenvalues[i]);
        return r;
    }
};

namespace detail {

constexpr double kCondLimit = 1e10;
constexpr double kResidualLimit = 1e-8;
constexpr double kRealPartMin = 1e-10;

/// Rotate a complex eigenvector so its largest-magnitude entry is real
/// positive. Removes the phase ambiguity so decompositions are reproducible.
inline void canonicalize_phase(Eigen::VectorXcd& v) {
    std::size_t k = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        if (m > best) {
            best = m;
            k = static_cast<std::size_t>(i);
        }
    }
    if (best <= 0.0) return;
    const std::complex<double> phase = std::conj(v[static_cast<Eigen::Index>(k)]) / best;
    v *= phase;
}

}  // namespace detail

inline SpectralDecomposition decompose(const Matrix& a) {
    if (!a.square()) throw ShapeMismatch("decompose expects a square matrix");
    const std::size_t n = a.rows();

    Eigen::MatrixXd ea(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ea(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(ea, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) {
        throw DefectiveMatrix("eigendecomposition did not converge");
    }

    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    const double imag_tol = 1e-12 * scale;

    SpectralDecomposition dec;
    dec.P = Matrix(n, n);
    dec.J_R = Matrix(n, n);
    dec.J_block = Matrix(n, n);
    dec.eigenvalues.resize(n);

    std::vector<bool> used(n, false);
    std::size_t col = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        const std::complex<double> lam = values[static_cast<Eigen::Index>(i)];
        if (std::abs(lam.imag()) <= imag_tol) {
            used[i] = true;
            Eigen::VectorXcd v = vectors.col(static_cast<Eigen::Index>(i));
            detail::canonicalize_phase(v);
            const Eigen::VectorXd vr = v.real();
            const double nv = vr.norm();
            if (nv == 0.0) throw DefectiveMatrix("zero eigenvector");
            for (std::size_t r = 0; r < n; ++r) dec.P(r, col) = vr[static_cast<Eigen::Index>(r)] / nv;
            dec.J_R(col, col) = lam.real();
            dec.J_block(col, col) = lam.real();
            dec.eigenvalues[col] = std::complex<double>(lam.real(), 0.0);
            ++col;
            continue;
        }

        // Locate the conjugate partner.
        std::size_t partner = n;
        double best = std::numeric_limits<double>::max();
        for (std::size_t j = i + 1; j < n; ++j) {
            if (used[j]) continue;
            const double d = std::abs(values[static_cast<Eigen::Index>(j)] - std::conj(lam));
            if (d < best) {
                best = d;
                partner = j;
            }
        }
        if (partner == n || best > 1e-6 * scale) {
            throw DefectiveMatrix("unpaired complex eigenvalue");
        }
        used[i] = true;
        used[partner] = true;

        // Use the member with positive imaginary part; columns are Re v, Im v.
        std::complex<double> lam_pos = lam;
        Eigen::VectorXcd v = vectors.col(static_cast<Eigen::Index>(i));
        if (lam_pos.imag() < 0.0) {
            lam_pos = std::conj(lam_pos);
            v = v.conjugate();
        }
        detail::canonicalize_phase(v);
        Eigen::VectorXd u = v.real();
        Eigen::VectorXd w = v.imag();
        const double nv = std::sqrt(u.squaredNorm() + w.squaredNorm());
        if (nv == 0.0) throw DefectiveMatrix("zero eigenvector");
        u /= nv;
        w /= nv;

        const double re = lam_pos.real();
        const double im = lam_pos.imag();
        for (std::size_t r = 0; r < n; ++r) {
            dec.P(r, col) = u[static_cast<Eigen::Index>(r)];
            dec.P(r, col + 1) = w[static_cast<Eigen::Index>(r)];
        }
        dec.J_R(col, col) = re;
        dec.J_R(col + 1, col + 1) = re;
        dec.J_block(col, col) = re;
        dec.J_block(col, col + 1) = im;
        dec.J_block(col + 1, col) = -im;
        dec.J_block(col + 1, col + 1) = re;
        dec.eigenvalues[col] = lam_pos;
        dec.eigenvalues[col + 1] = std::conj(lam_pos);
        col += 2;
    }

    try {
        dec.Pinv = inverse(dec.P);
    } catch (const SingularMatrix&) {
        throw DefectiveMatrix("eigenvector basis is singular");
    }

    // Moduli of the complex eigenvector matrix: a pair's columns u, w give
    // |u + iw| twice; the matching complex inverse rows are (r1 -+ i r2)/2.
    dec.P_mod = Matrix(n, n);
    dec.Pinv_mod = Matrix(n, n);
    for (std::size_t c = 0; c < n;) {
        if (dec.eigenvalues[c].imag() == 0.0) {
            for (std::size_t r = 0; r < n; ++r) {
                dec.P_mod(r, c) = std::abs(dec.P(r, c));
                dec.Pinv_mod(c, r) = std::abs(dec.Pinv(c, r));
            }
            ++c;
        } else {
            for (std::size_t r = 0; r < n; ++r) {
                const double col_mod = std::hypot(dec.P(r, c), dec.P(r, c + 1));
                dec.P_mod(r, c) = col_mod;
                dec.P_mod(r, c + 1) = col_mod;
                const double row_mod = 0.5 * std::hypot(dec.Pinv(c, r), dec.Pinv(c + 1, r));
                dec.Pinv_mod(c, r) = row_mod;
                dec.Pinv_mod(c + 1, r) = row_mod;
            }
            c += 2;
        }
    }

    dec.cond_P = spectral_norm(dec.P) * spectral_norm(dec.Pinv);
    if (!(dec.cond_P <= detail::kCondLimit)) {
        throw DefectiveMatrix("eigenvector basis is numerically rank-deficient (cond = " +
                              std::to_string(dec.cond_P) + ")");
    }

    const Matrix recon = dec.P * dec.J_block * dec.Pinv;
    const double denom = std::max(norm_fro(a), 1e-300);
    const double residual = norm_fro(recon - a) / denom;
    if (residual > detail::kResidualLimit) {
        throw DefectiveMatrix("block-form reconstruction residual " + std::to_string(residual));
    }

    dec.hurwitz = true;
    for (const auto& lam : dec.eigenvalues) {
        if (std::abs(lam.real()) < detail::kRealPartMin) {
            throw SingularRealPart("eigenvalue real part below 1e-10");
        }
        if (lam.real() >= 0.0) dec.hurwitz = false;
    }
    return dec;
}

enum class GainKind { Jordan, Absolute, Gronwall };

inline std::string to_string(GainKind kind) {
    switch (kind) {
        case GainKind::Jordan: return "jordan";
        case GainKind::Absolute: return "absolute";
        case GainKind::Gronwall: return "gronwall";
    }
    return "?";
}

/**
 * Per-grid-point deviation gain matrices. Disturbances bounded by epsilon in
 * every coordinate displace the trajectory at time t_k by at most
 * gains[k] * (epsilon * ones) in every coordinate.
 */
struct GainCurve {
    TimeGrid grid;
    std::vector<Matrix> gains;
    GainKind kind = GainKind::Jordan;

    const Matrix& at(std::size_t k) const { return gains[k]; }

    /// max over the grid of the induced 2-norm of the gain matrix
    double max_spectral_norm() const {
        // Gains are elementwise nondecreasing in t, so the last one dominates.
        return gains.empty() ? 0.0 : spectral_norm(gains.back());
    }
};

/// gains[k] = |P| (J_R^{-1}(e^{J_R t_k} - I)) |P^{-1}| with diagonal J_R and
/// the complex-eigenvector moduli for |P|, |P^{-1}|.
inline GainCurve jordan_gain(const SpectralDecomposition& dec, const TimeGrid& grid) {
    const std::size_t n = dec.dim();
    const Vector re = dec.real_parts();
    const Matrix& pa = dec.P_mod;
    const Matrix& pia = dec.Pinv_mod;

    GainCurve curve;
    curve.grid = grid;
    curve.kind = GainKind::Jordan;
    curve.gains.reserve(grid.count);
    Vector g(n);
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double t = grid.time(k);
        for (std::size_t i = 0; i < n; ++i) {
            // (e^{a t} - 1)/a, nonnegative for every real a != 0 and t >= 0
            g[i] = std::expm1(re[i] * t) / re[i];
        }
        curve.gains.push_back(pa * Matrix::diagonal(g) * pia);
    }
    return curve;
}

/**
 * gains[k] = Ã^{-1}(e^{Ã t_k} - I) with Ã = |P| |J| |P^{-1}|, evaluated as
 * the running integral of e^{Ã s}. One augmented exponential gives both the
 * per-step propagator and the per-step integral, so the accumulation only
 * multiplies and adds nonnegative matrices; the explicit-inverse form mixes
 * signs and cancels catastrophically once e^{Ã t} is large.
 */
inline GainCurve absolute_gain(const Matrix& a, const SpectralDecomposition& dec,
                               const TimeGrid& grid) {
    if (a.rows() != dec.dim() || a.cols() != dec.dim()) {
        throw ShapeMismatch("absolute_gain: matrix/decomposition mismatch");
    }
    const std::size_t n = dec.dim();
    const Matrix abs_a = dec.P_mod * Matrix::diagonal(dec.moduli()) * dec.Pinv_mod;

    try {
        inverse(abs_a);
    } catch (const SingularMatrix&) {
        throw SingularAbsoluteMatrix("|P||J||P^-1| is numerically singular");
    }

    // exp([[A, I], [0, 0]] dt) = [[e^{A dt}, int_0^dt e^{A s} ds], [0, I]]
    Matrix augmented(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) augmented(i, j) = abs_a(i, j) * grid.dt;
        augmented(i, n + i) = grid.dt;
    }
    const Matrix aug_exp = expm(augmented);
    Matrix step(n, n), step_integral(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            step(i, j) = aug_exp(i, j);
            step_integral(i, j) = aug_exp(i, n + j);
        }
    }

    GainCurve curve;
    curve.grid = grid;
    curve.kind = GainKind::Absolute;
    curve.gains.reserve(grid.count);
    Matrix integral = Matrix::zeros(n, n);
    Matrix propagator = Matrix::identity(n);
    for (std::size_t k = 0; k < grid.count; ++k) {
        curve.gains.push_back(integral);
        if (k + 1 < grid.count) {
            integral += propagator * step_integral;
            propagator = propagator * step;
        }
    }
    return curve;
}

/**
 * Grönwall baseline: the deviation norm is bounded by (e^{Lt} - 1)/L with
 * L the induced 2-norm of A, and the all-ones gain matrix is scaled so the
 * product with the epsilon-ones vector dominates that norm in every
 * coordinate.
 */
inline GainCurve gronwall_gain(const Matrix& a, const TimeGrid& grid) {
    if (!a.square()) throw ShapeMismatch("gronwall_gain expects a square matrix");
    const std::size_t n = a.rows();
    const double lip = spectral_norm(a);
    const double root_n = std::sqrt(static_cast<double>(n));

    GainCurve curve;
    curve.grid = grid;
    curve.kind = GainKind::Gronwall;
    curve.gains.reserve(grid.count);
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double t = grid.time(k);
        const double growth = lip > 0.0 ? std::expm1(lip * t) / lip : t;
        // row sum times eps must reach the norm bound sqrt(n) * growth * eps
        curve.gains.push_back(Matrix::constant(n, n, growth / root_n));
    }
    return curve;
}

}  // namespace resilience

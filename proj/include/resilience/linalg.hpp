#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "resilience/errors.hpp"

namespace resilience {

using Vector = std::vector<double>;

/**
 * Dense real matrix with row-major storage. Sized at run time; all systems
 * handled here are small (a handful of states), so no blocking or sparsity.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) {
                throw ShapeMismatch("ragged initializer for Matrix");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix constant(std::size_t rows, std::size_t cols, double value) {
        Matrix m(rows, cols);
        std::fill(m.data_.begin(), m.data_.end(), value);
        return m;
    }

    static Matrix diagonal(const Vector& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other, "operator+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other, "operator-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
        return *this;
    }

    Matrix& operator*=(double scalar) {
        for (double& v : data_) v *= scalar;
        return *this;
    }

    Matrix operator+(const Matrix& other) const {
        Matrix r = *this;
        r += other;
        return r;
    }

    Matrix operator-(const Matrix& other) const {
        Matrix r = *this;
        r -= other;
        return r;
    }

    Matrix operator*(double scalar) const {
        Matrix r = *this;
        r *= scalar;
        return r;
    }

    Matrix operator*(const Matrix& rhs) const {
        if (cols_ != rhs.rows_) throw ShapeMismatch("matrix product shape mismatch");
        Matrix r(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) {
                    r(i, j) += a * rhs(k, j);
                }
            }
        }
        return r;
    }

    Vector operator*(const Vector& v) const {
        if (cols_ != v.size()) throw ShapeMismatch("matrix-vector shape mismatch");
        Vector r(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
            r[i] = acc;
        }
        return r;
    }

    Matrix transpose() const {
        Matrix r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    /// Elementwise magnitude |A|.
    Matrix cwise_abs() const {
        Matrix r = *this;
        for (double& v : r.data_) v = std::abs(v);
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    void require_same_shape(const Matrix& other, const char* what) const {
        if (rows_ != other.rows_ || cols_ != other.cols_) {
            throw ShapeMismatch(std::string(what) + ": shape mismatch");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(double scalar, const Matrix& m) { return m * scalar; }

/// A <= B in every entry, within `tol`.
inline bool elementwise_leq(const Matrix& a, const Matrix& b, double tol = 0.0) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeMismatch("elementwise comparison of unequal shapes");
    }
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) > b(i, j) + tol) return false;
    return true;
}

inline bool elementwise_nonneg(const Matrix& a, double tol = 0.0) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) < -tol) return false;
    return true;
}

// ---- vector helpers ----

inline Vector vec_add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeMismatch("vector sum shape mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector vec_sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeMismatch("vector difference shape mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector vec_scale(const Vector& a, double s) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return r;
}

inline double dot(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_two(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double norm_one(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

// ---- matrix norms ----

/// Induced infinity norm (max absolute row sum).
inline double norm_inf(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
        m = std::max(m, row);
    }
    return m;
}

inline double norm_fro(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

/**
 * Induced 2-norm via power iteration on AᵀA. Deterministic start vector;
 * adequate for the small, well-scaled matrices this library works with.
 */
inline double spectral_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    const Matrix ata = a.transpose() * a;
    const std::size_t n = ata.rows();
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
    double lambda = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
        Vector w = ata * v;
        const double nw = norm_two(w);
        if (nw == 0.0) return 0.0;
        for (double& x : w) x /= nw;
        const double next = dot(w, ata * w);
        v = std::move(w);
        if (std::abs(next - lambda) <= 1e-14 * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(std::max(0.0, lambda));
}

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(const Matrix& a) {
    if (!a.square()) throw ShapeMismatch("inverse of non-square matrix");
    const std::size_t n = a.rows();
    Matrix aug = a;
    Matrix inv = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pivot = i;
        double best = std::abs(aug(i, i));
        for (std::size_t r = i + 1; r < n; ++r) {
            const double v = std::abs(aug(r, i));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-300) throw SingularMatrix("matrix is numerically singular");
        if (pivot != i) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(aug(i, c), aug(pivot, c));
                std::swap(inv(i, c), inv(pivot, c));
            }
        }
        const double diag = aug(i, i);
        for (std::size_t c = 0; c < n; ++c) {
            aug(i, c) /= diag;
            inv(i, c) /= diag;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == i) continue;
            const double f = aug(r, i);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                aug(r, c) -= f * aug(i, c);
                inv(r, c) -= f * inv(i, c);
            }
        }
    }
    return inv;
}

/**
 * Matrix exponential by scaling and squaring with a (6,6) Padé approximant.
 * The argument is scaled so its infinity norm is below 1/2, which keeps the
 * approximant well inside its accuracy region for double precision.
 */
inline Matrix expm(const Matrix& a) {
    if (!a.square()) throw ShapeMismatch("expm of non-square matrix");
    const std::size_t n = a.rows();
    if (n == 0) return a;

    int squarings = 0;
    double nrm = norm_inf(a);
    while (nrm > 0.5) {
        nrm *= 0.5;
        ++squarings;
    }
    Matrix s = a * std::ldexp(1.0, -squarings);

    // Padé(6,6) coefficients.
    static constexpr double c[7] = {1.0,
                                    1.0 / 2.0,
                                    5.0 / 44.0,
                                    1.0 / 66.0,
                                    1.0 / 792.0,
                                    1.0 / 15840.0,
                                    1.0 / 665280.0};

    const Matrix ident = Matrix::identity(n);
    const Matrix s2 = s * s;
    const Matrix s4 = s2 * s2;
    const Matrix s6 = s4 * s2;

    const Matrix u = s * (ident * c[1] + s2 * c[3] + s4 * c[5]);
    const Matrix v = ident * c[0] + s2 * c[2] + s4 * c[4] + s6 * c[6];

    // (v - u) X = (v + u)
    Matrix result = inverse(v - u) * (v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

}  // namespace resilience

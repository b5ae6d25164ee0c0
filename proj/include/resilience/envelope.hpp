#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "resilience/errors.hpp"
#include "resilience/linalg.hpp"
#include "resilience/spectral.hpp"
#include "resilience/stl.hpp"

namespace resilience {

/// Undisturbed trajectory e^{A t_k} x0 on the grid, built from one per-step
/// exponential and repeated multiplication.
inline Signal nominal_trajectory(const Matrix& a, const Vector& x0, const TimeGrid& grid) {
    if (!a.square() || a.rows() != x0.size()) {
        throw ShapeMismatch("nominal_trajectory: dimension mismatch");
    }
    const Matrix step = expm(a * grid.dt);
    Signal sig;
    sig.t0 = 0.0;
    sig.dt = grid.dt;
    sig.samples.reserve(grid.count);
    Vector x = x0;
    for (std::size_t k = 0; k < grid.count; ++k) {
        sig.samples.push_back(x);
        if (k + 1 < grid.count) x = step * x;
    }
    return sig;
}

/**
 * Family of envelope signals xbar_w(t_k) = nominal(t_k) + gain(t_k) |B_w| w.
 * Sweeping w over the box B_inf(eps) reproduces the trajectory bound; w = 0
 * returns the nominal signal exactly. Immutable and safe to share across
 * worker threads.
 */
class EnvelopeFamily {
public:
    EnvelopeFamily(Signal nominal, GainCurve gain) {
        Matrix id = Matrix::identity(gain_dim_of(gain));
        init(std::move(nominal), std::move(gain), std::move(id));
    }

    EnvelopeFamily(Signal nominal, GainCurve gain, Matrix input_map) {
        init(std::move(nominal), std::move(gain), std::move(input_map));
    }
    const Signal& nominal() const { return nominal_; }
    const GainCurve& gain() const { return gain_; }
    const Matrix& input_map() const { return input_map_; }
    std::size_t omega_dim() const { return omega_dim_; }
    std::size_t state_dim() const { return nominal_.state_dim(); }

    Signal evaluate(const Vector& omega) const {
        Signal out;
        evaluate_into(omega, out);
        return out;
    }

    void evaluate_into(const Vector& omega, Signal& out) const {
        if (omega.size() != omega_dim_) {
            throw ShapeMismatch("omega dimension mismatch");
        }
        out.t0 = nominal_.t0;
        out.dt = nominal_.dt;
        out.samples.resize(nominal_.size());
        const std::size_t n = state_dim();
        for (std::size_t k = 0; k < nominal_.size(); ++k) {
            const Matrix& g = channel_gains_[k];
            Vector& dst = out.samples[k];
            dst.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = nominal_.samples[k][i];
                for (std::size_t j = 0; j < omega_dim_; ++j) acc += g(i, j) * omega[j];
                dst[i] = acc;
            }
        }
    }

private:
    static std::size_t gain_dim_of(const GainCurve& gain) {
        return gain.gains.empty() ? 0 : gain.gains.front().cols();
    }

    void init(Signal nominal, GainCurve gain, Matrix input_map) {
        nominal_ = std::move(nominal);
        gain_ = std::move(gain);
        input_map_ = std::move(input_map);
        if (nominal_.size() != gain_.gains.size()) {
            throw ShapeMismatch("nominal and gain curve use different grids");
        }
        if (!gain_.gains.empty() && gain_.gains.front().cols() != input_map_.rows()) {
            throw ShapeMismatch("input map rows must match the state dimension");
        }
        omega_dim_ = input_map_.cols();
        const Matrix abs_map = input_map_.cwise_abs();
        channel_gains_.reserve(gain_.gains.size());
        for (const Matrix& g : gain_.gains) channel_gains_.push_back(g * abs_map);
    }

    Signal nominal_;
    GainCurve gain_;
    Matrix input_map_;
    std::size_t omega_dim_ = 0;
    std::vector<Matrix> channel_gains_;  // gain(t_k) * |B_w|
};

/**
 * Lipschitz constant of w -> rho(xbar_w): the formula constant times the
 * largest gain-matrix 2-norm over the grid, times the input-map norm when a
 * channel matrix is present.
 */
inline double lipschitz_omega(double l_psi, const GainCurve& gain, const Matrix& input_map) {
    const double map_norm = spectral_norm(input_map.cwise_abs());
    return l_psi * gain.max_spectral_norm() * map_norm;
}

inline double lipschitz_omega(double l_psi, const GainCurve& gain) {
    return l_psi * gain.max_spectral_norm();
}

}  // namespace resilience

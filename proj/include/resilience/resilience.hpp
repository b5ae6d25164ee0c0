#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "resilience/dynamics.hpp"
#include "resilience/envelope.hpp"
#include "resilience/errors.hpp"
#include "resilience/linalg.hpp"
#include "resilience/parallel.hpp"
#include "resilience/spectral.hpp"
#include "resilience/stl.hpp"

namespace resilience {

struct ScenarioConfig {
    double delta = 0.0;        ///< cover radius (2-norm); 0 = choose automatically
    double eps_hi = 1.0;       ///< bisection upper bracket
    double eps_tol = 1e-4;     ///< bisection width tolerance
    std::size_t max_samples = 200000;

    void validate() const {
        if (delta < 0.0) throw ConfigError("cover radius must be nonnegative", "scenario.delta");
        if (eps_hi <= 0.0) throw ConfigError("bisection bracket must be positive", "scenario.eps_hi");
        if (eps_tol <= 0.0) throw ConfigError("bisection tolerance must be positive", "scenario.eps_tol");
        if (max_samples == 0) throw ConfigError("sample budget must be positive", "scenario.max_samples");
    }
};

enum class CertificateStatus { Certified, NominalViolation, NotCertifiable, ProvisoFailed };

inline std::string to_string(CertificateStatus s) {
    switch (s) {
        case CertificateStatus::Certified: return "certified";
        case CertificateStatus::NominalViolation: return "nominal_violation";
        case CertificateStatus::NotCertifiable: return "not_certifiable";
        case CertificateStatus::ProvisoFailed: return "proviso_failed";
    }
    return "?";
}

struct BisectionStep {
    double eps = 0.0;
    bool certified = false;
};

struct ResilienceCertificate {
    double eps_star = 0.0;       ///< certified disturbance bound (omega units)
    double eta_star = 0.0;       ///< worst negated robustness over the final sample set
    double l_omega = 0.0;
    double delta = 0.0;
    std::size_t samples_used = 0;
    std::vector<BisectionStep> trace;
    GainKind method = GainKind::Jordan;
    CertificateStatus status = CertificateStatus::NotCertifiable;
    double rho_nominal = 0.0;
    double eps_star_linear = 0.0;  ///< before the linearization correction
    double delta_bar = 0.0;        ///< linearization correction (0 for linear systems)
    std::vector<std::string> warnings;
};

/**
 * Regular grid over the box [-eps, eps]^m whose per-axis spacing s satisfies
 * s * sqrt(m) / 2 <= delta, so every point of the box lies within 2-norm
 * delta of some sample.
 */
inline std::vector<Vector> cover_samples(double eps, double delta, std::size_t m,
                                         std::size_t max_samples = 200000) {
    if (delta <= 0.0) throw ConfigError("cover radius must be positive", "delta");
    if (m == 0) throw ShapeMismatch("cover dimension must be at least 1");
    if (eps < 0.0) throw ConfigError("eps must be nonnegative", "eps");

    if (eps == 0.0) return {Vector(m, 0.0)};

    const double s_max = 2.0 * delta / std::sqrt(static_cast<double>(m));
    const auto intervals =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * eps / s_max - 1e-12)));
    const std::size_t per_axis = intervals + 1;

    double total = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        total *= static_cast<double>(per_axis);
        if (total > static_cast<double>(max_samples)) {
            throw SampleBudgetExceeded(
                "cover needs " + std::to_string(per_axis) + "^" + std::to_string(m) +
                " samples (budget " + std::to_string(max_samples) +
                "); coarsen delta or reduce the disturbance dimension");
        }
    }

    const double spacing = 2.0 * eps / static_cast<double>(intervals);
    std::vector<Vector> samples;
    samples.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> idx(m, 0);
    for (;;) {
        Vector w(m);
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = -eps + spacing * static_cast<double>(idx[i]);
        }
        samples.push_back(std::move(w));
        std::size_t axis = 0;
        while (axis < m) {
            if (++idx[axis] < per_axis) break;
            idx[axis] = 0;
            ++axis;
        }
        if (axis == m) break;
    }
    return samples;
}

/// eta* = max over samples of -rho(phi, xbar_w). Samples evaluate in parallel.
inline double scenario_eta(const StlPtr& phi, const EnvelopeFamily& fam,
                           const std::vector<Vector>& samples) {
    if (samples.empty()) throw ShapeMismatch("scenario_eta needs at least one sample");
    std::vector<double> neg_rho(samples.size());
    detail::parallel_for(samples.size(), [&](std::size_t i) {
        thread_local Signal scratch;
        fam.evaluate_into(samples[i], scratch);
        neg_rho[i] = -robustness(phi, scratch, 0.0);
    });
    double eta = neg_rho[0];
    for (double v : neg_rho) eta = std::max(eta, v);
    return eta;
}

/// Certificate condition eta* + L_omega * delta <= 0.
inline bool certify(double eta_star, double l_omega, double delta) {
    return eta_star + l_omega * delta <= 0.0;
}

/// Largest delta whose cover of [-eps_hi, eps_hi]^m fits the sample budget.
inline double budget_feasible_delta(double eps_hi, std::size_t m, std::size_t max_samples) {
    const auto per_axis_max = static_cast<std::size_t>(
        std::floor(std::pow(static_cast<double>(max_samples), 1.0 / static_cast<double>(m))));
    const std::size_t intervals = per_axis_max > 1 ? per_axis_max - 1 : 1;
    const double spacing = 2.0 * eps_hi / static_cast<double>(intervals);
    return spacing * std::sqrt(static_cast<double>(m)) / 2.0;
}

namespace detail {

/// Bisection over eps with the Lipschitz certificate as the feasibility test.
inline ResilienceCertificate certified_bound(const StlPtr& phi, const EnvelopeFamily& fam,
                                             double l_omega, const ScenarioConfig& cfg,
                                             GainKind method) {
    cfg.validate();
    ResilienceCertificate cert;
    cert.method = method;
    cert.l_omega = l_omega;

    double delta = cfg.delta;
    if (delta <= 0.0) {
        // default radius, coarsened when its cover would blow the budget
        delta = std::max(0.05 * cfg.eps_hi,
                         budget_feasible_delta(cfg.eps_hi, fam.omega_dim(), cfg.max_samples));
    }
    cert.delta = delta;

    cert.rho_nominal = robustness(phi, fam.nominal(), 0.0);
    if (cert.rho_nominal <= 0.0) {
        cert.status = CertificateStatus::NominalViolation;
        cert.eps_star = 0.0;
        cert.warnings.push_back("nominal trajectory violates the formula (rho = " +
                                std::to_string(cert.rho_nominal) + ")");
        return cert;
    }

    std::size_t last_samples = 0;
    double last_eta = 0.0;
    auto feasible = [&](double eps) {
        const std::vector<Vector> samples =
            cover_samples(eps, delta, fam.omega_dim(), cfg.max_samples);
        last_eta = scenario_eta(phi, fam, samples);
        last_samples = samples.size();
        const bool ok = certify(last_eta, l_omega, delta);
        cert.trace.push_back({eps, ok});
        return ok;
    };

    if (!feasible(0.0)) {
        cert.status = CertificateStatus::NotCertifiable;
        cert.eps_star = 0.0;
        cert.eta_star = last_eta;
        cert.samples_used = last_samples;
        cert.warnings.push_back(
            "no disturbance level certifies: the nominal margin does not exceed the "
            "Lipschitz term L_omega * delta; reduce delta or the grid step");
        return cert;
    }

    double lo = 0.0;
    double lo_eta = last_eta;
    std::size_t lo_samples = last_samples;
    if (feasible(cfg.eps_hi)) {
        cert.status = CertificateStatus::Certified;
        cert.eps_star = cfg.eps_hi;
        cert.eta_star = last_eta;
        cert.samples_used = last_samples;
        cert.warnings.push_back("bisection bracket saturated: the certified bound equals eps_hi");
        return cert;
    }

    double hi = cfg.eps_hi;
    while (hi - lo > cfg.eps_tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
            lo_eta = last_eta;
            lo_samples = last_samples;
        } else {
            hi = mid;
        }
    }

    cert.eps_star = lo;
    cert.eta_star = lo_eta;
    cert.samples_used = lo_samples;
    cert.status = lo > 0.0 ? CertificateStatus::Certified : CertificateStatus::NotCertifiable;
    if (cert.status == CertificateStatus::NotCertifiable) {
        cert.warnings.push_back("only eps = 0 certifies at this delta and grid");
    }
    return cert;
}

}  // namespace detail

/**
 * Certified lower bound on the resilience of the linear system
 * dx/dt = A x + B_w w(t), |w| <= eps, from initial state x0.
 */
inline ResilienceCertificate resilience_lower_bound(const StlPtr& phi, const Matrix& a,
                                                    const Vector& x0, const Matrix& input_map,
                                                    const TimeGrid& grid,
                                                    const ScenarioConfig& cfg,
                                                    GainKind method = GainKind::Jordan) {
    const SpectralDecomposition dec = decompose(a);
    const GainCurve gain = method == GainKind::Absolute ? absolute_gain(a, dec, grid)
                                                        : jordan_gain(dec, grid);
    EnvelopeFamily fam(nominal_trajectory(a, x0, grid), gain, input_map);
    const double l_omega = lipschitz_omega(lipschitz(phi), fam.gain(), fam.input_map());
    ResilienceCertificate cert = detail::certified_bound(phi, fam, l_omega, cfg, method);
    cert.eps_star_linear = cert.eps_star;
    if (!dec.hurwitz) {
        cert.warnings.push_back("system matrix is not Hurwitz: envelope gains grow without bound");
    }
    return cert;
}

inline ResilienceCertificate resilience_lower_bound(const StlPtr& phi, const Matrix& a,
                                                    const Vector& x0, const TimeGrid& grid,
                                                    const ScenarioConfig& cfg,
                                                    GainKind method = GainKind::Jordan) {
    return resilience_lower_bound(phi, a, x0, Matrix::identity(a.rows()), grid, cfg, method);
}

// ---- nonlinear extension ----

/// Axis-aligned box, one (lo, hi) interval per state dimension.
using Box = std::vector<std::pair<double, double>>;

struct NonlinearCorrection {
    Vector equilibrium;
    Box region;
    double hessian_bound = -1.0;  ///< L_H; negative = estimate numerically
};

/// delta_bar = 1/2 * L_H * (largest 2-norm distance from x_e to a region vertex)^2
inline double delta_bar(double l_h, const Box& region, const Vector& x_e) {
    if (region.size() != x_e.size()) throw ShapeMismatch("region/equilibrium dimension mismatch");
    double worst_sq = 0.0;
    for (std::size_t i = 0; i < region.size(); ++i) {
        const auto [lo, hi] = region[i];
        if (lo > hi) throw ConfigError("region interval is empty", "region");
        if (x_e[i] < lo || x_e[i] > hi) {
            throw RegionExcludesEquilibrium("equilibrium lies outside the region box");
        }
        const double d = std::max(x_e[i] - lo, hi - x_e[i]);
        worst_sq += d * d;
    }
    return 0.5 * l_h * worst_sq;
}

namespace detail {

constexpr double kFdStep = 1e-5;

inline double fd_step(double at) { return kFdStep * std::max(1.0, std::abs(at)); }

// Second differences divide by h^2; a larger step keeps them above rounding.
inline double fd_step2(double at) { return 1e-3 * std::max(1.0, std::abs(at)); }

/// Central-difference Jacobian of f at x.
inline Matrix numeric_jacobian(const DynamicsExpr& f, const Vector& x) {
    const std::size_t n = x.size();
    Matrix jac(n, n);
    Vector xp = x, xm = x, fp(n), fm(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = fd_step(x[j]);
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        f.eval(xp, fp);
        f.eval(xm, fm);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return jac;
}

/// Frobenius bound on each component Hessian at x (central second differences).
inline double numeric_hessian_bound(const DynamicsExpr& f, const Vector& x) {
    const std::size_t n = x.size();
    Vector base(n), work(n);
    f.eval(x, base);
    double worst = 0.0;
    for (std::size_t comp = 0; comp < n; ++comp) {
        double fro_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double hi = fd_step2(x[i]);
                const double hj = fd_step2(x[j]);
                double second;
                Vector p = x;
                if (i == j) {
                    p[i] = x[i] + hi;
                    f.eval(p, work);
                    const double fpp = work[comp];
                    p[i] = x[i] - hi;
                    f.eval(p, work);
                    const double fmm = work[comp];
                    second = (fpp - 2.0 * base[comp] + fmm) / (hi * hi);
                } else {
                    p[i] = x[i] + hi;
                    p[j] = x[j] + hj;
                    f.eval(p, work);
                    const double fpp = work[comp];
                    p[j] = x[j] - hj;
                    f.eval(p, work);
                    const double fpm = work[comp];
                    p[i] = x[i] - hi;
                    p[j] = x[j] + hj;
                    f.eval(p, work);
                    const double fmp = work[comp];
                    p[j] = x[j] - hj;
                    f.eval(p, work);
                    const double fmm = work[comp];
                    second = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
                }
                fro_sq += second * second;
            }
        }
        worst = std::max(worst, std::sqrt(fro_sq));
    }
    return worst;
}

/// Sample points of a box: center, vertices, and edge midpoints per axis.
inline std::vector<Vector> region_probe_points(const Box& region) {
    const std::size_t n = region.size();
    std::vector<Vector> pts;
    Vector center(n);
    for (std::size_t i = 0; i < n; ++i) center[i] = 0.5 * (region[i].first + region[i].second);
    pts.push_back(center);
    const std::size_t vertex_count = std::size_t{1} << std::min<std::size_t>(n, 16);
    for (std::size_t mask = 0; mask < vertex_count; ++mask) {
        Vector v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = (mask >> i) & 1 ? region[i].second : region[i].first;
        }
        pts.push_back(std::move(v));
    }
    return pts;
}

}  // namespace detail

/**
 * Resilience bound for nonlinear dynamics via linearization at an
 * equilibrium: the Jordan envelope of the Jacobian system bounds the
 * linearized trajectories, and the Taylor-remainder budget delta_bar is
 * subtracted from the linear certificate. The region of validity is the
 * caller's modeling assumption; trajectories are not confined to it here.
 */
inline ResilienceCertificate nonlinear_lower_bound(const StlPtr& phi, const DynamicsExpr& f,
                                                   const NonlinearCorrection& corr,
                                                   const Vector& x0, const TimeGrid& grid,
                                                   const ScenarioConfig& cfg,
                                                   GainKind method = GainKind::Jordan) {
    const Vector& x_e = corr.equilibrium;
    if (x_e.size() != f.dim() || x0.size() != f.dim()) {
        throw ShapeMismatch("nonlinear_lower_bound: dimension mismatch");
    }
    const Vector f_eq = f.eval(x_e);
    if (norm_two(f_eq) > 1e-6) {
        throw NotEquilibrium("f(x_e) has norm " + std::to_string(norm_two(f_eq)));
    }

    const Matrix a = detail::numeric_jacobian(f, x_e);
    double l_h = corr.hessian_bound;
    if (l_h < 0.0) {
        l_h = 0.0;
        for (const Vector& p : detail::region_probe_points(corr.region)) {
            l_h = std::max(l_h, detail::numeric_hessian_bound(f, p));
        }
        // Second differences of smooth fields carry O(h) noise.
        if (l_h < 1e-7) l_h = 0.0;
    }
    const double dbar = delta_bar(l_h, corr.region, x_e);

    const SpectralDecomposition dec = decompose(a);
    const GainCurve gain = method == GainKind::Absolute ? absolute_gain(a, dec, grid)
                                                        : jordan_gain(dec, grid);

    // Linearized trajectories in deviation coordinates, shifted back so the
    // formula is evaluated on the state itself.
    Signal nominal = nominal_trajectory(a, vec_sub(x0, x_e), grid);
    for (Vector& sample : nominal.samples) {
        for (std::size_t i = 0; i < sample.size(); ++i) sample[i] += x_e[i];
    }

    EnvelopeFamily fam(std::move(nominal), gain);
    const double l_omega = lipschitz_omega(lipschitz(phi), fam.gain(), fam.input_map());
    ResilienceCertificate cert = detail::certified_bound(phi, fam, l_omega, cfg, method);
    cert.eps_star_linear = cert.eps_star;
    cert.delta_bar = dbar;
    if (!dec.hurwitz) {
        cert.warnings.push_back("linearized system is not Hurwitz: envelope gains grow without bound");
    }
    if (cert.status != CertificateStatus::Certified) return cert;

    if (cert.eps_star_linear < dbar) {
        cert.status = CertificateStatus::ProvisoFailed;
        cert.eps_star = 0.0;
        cert.warnings.push_back("linearized bound " + std::to_string(cert.eps_star_linear) +
                                " does not exceed the linearization budget " +
                                std::to_string(dbar));
        return cert;
    }
    cert.eps_star = cert.eps_star_linear - dbar;
    return cert;
}

}  // namespace resilience

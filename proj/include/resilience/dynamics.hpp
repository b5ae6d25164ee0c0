#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "resilience/errors.hpp"
#include "resilience/linalg.hpp"
#include "resilience/parallel.hpp"
#include "resilience/spectral.hpp"
#include "resilience/stl.hpp"

namespace resilience {

namespace expr {

enum class NodeKind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;      // Constant
    std::size_t index = 0;   // Variable (0-based)
    NodePtr lhs;
    NodePtr rhs;

    double eval(const Vector& x) const {
        switch (kind) {
            case NodeKind::Constant: return value;
            case NodeKind::Variable: return x[index];
            case NodeKind::Add: return lhs->eval(x) + rhs->eval(x);
            case NodeKind::Sub: return lhs->eval(x) - rhs->eval(x);
            case NodeKind::Mul: return lhs->eval(x) * rhs->eval(x);
            case NodeKind::Div: return lhs->eval(x) / rhs->eval(x);
            case NodeKind::Pow: return std::pow(lhs->eval(x), rhs->eval(x));
            case NodeKind::Neg: return -lhs->eval(x);
            case NodeKind::Sin: return std::sin(lhs->eval(x));
            case NodeKind::Cos: return std::cos(lhs->eval(x));
            case NodeKind::Exp: return std::exp(lhs->eval(x));
        }
        return 0.0;
    }
};

inline NodePtr make(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

inline NodePtr constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

inline NodePtr variable(std::size_t idx) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->index = idx;
    return n;
}

struct Parser {
    const std::string& text;
    std::size_t dim;
    std::size_t pos = 0;

    Parser(const std::string& s, std::size_t n) : text(s), dim(n) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool try_consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    NodePtr parse() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos != text.size()) throw SyntaxError("trailing input in expression", pos);
        return e;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (try_consume('+')) lhs = make(NodeKind::Add, lhs, parse_product());
            else if (try_consume('-')) lhs = make(NodeKind::Sub, lhs, parse_product());
            else return lhs;
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (try_consume('*')) lhs = make(NodeKind::Mul, lhs, parse_unary());
            else if (try_consume('/')) lhs = make(NodeKind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        if (try_consume('-')) return make(NodeKind::Neg, parse_unary());
        if (try_consume('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (try_consume('^')) return make(NodeKind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos >= text.size()) throw SyntaxError("unexpected end of expression", pos);
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            NodePtr e = parse_sum();
            skip_ws();
            if (!try_consume(')')) throw SyntaxError("expected ')'", pos);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text.c_str() + pos;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) throw SyntaxError("malformed number", pos);
            pos += static_cast<std::size_t>(end - start);
            return constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t at = pos;
            std::string name;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
                name += text[pos++];
            }
            if (name == "sin" || name == "cos" || name == "exp") {
                if (!try_consume('(')) throw SyntaxError("expected '(' after " + name, pos);
                NodePtr arg = parse_sum();
                if (!try_consume(')')) throw SyntaxError("expected ')'", pos);
                const NodeKind kind = name == "sin"   ? NodeKind::Sin
                                      : name == "cos" ? NodeKind::Cos
                                                      : NodeKind::Exp;
                return make(kind, arg);
            }
            if (name.size() >= 2 && name[0] == 'x') {
                std::size_t idx = 0;
                for (std::size_t i = 1; i < name.size(); ++i) {
                    if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
                        throw SyntaxError("malformed state variable '" + name + "'", at);
                    }
                    idx = idx * 10 + static_cast<std::size_t>(name[i] - '0');
                }
                if (idx == 0 || idx > dim) {
                    throw UnknownVariable("state variable '" + name + "' exceeds dimension " +
                                              std::to_string(dim),
                                          at);
                }
                return variable(idx - 1);
            }
            throw SyntaxError("unknown identifier '" + name + "'", at);
        }
        throw SyntaxError("unexpected character in expression", pos);
    }
};

inline void print(std::ostringstream& out, const Node& n, int parent_prec);

inline void print_child(std::ostringstream& out, const Node& n, int prec) {
    print(out, n, prec);
}

inline void print(std::ostringstream& out, const Node& n, int parent_prec) {
    // precedence: sum 1, product 2, unary 3, power 4, atom 5
    switch (n.kind) {
        case NodeKind::Constant: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            out << tmp.str();
            return;
        }
        case NodeKind::Variable: out << "x" << (n.index + 1); return;
        case NodeKind::Add:
        case NodeKind::Sub: {
            if (parent_prec > 1) out << "(";
            print_child(out, *n.lhs, 1);
            out << (n.kind == NodeKind::Add ? " + " : " - ");
            print_child(out, *n.rhs, 2);
            if (parent_prec > 1) out << ")";
            return;
        }
        case NodeKind::Mul:
        case NodeKind::Div: {
            if (parent_prec > 2) out << "(";
            print_child(out, *n.lhs, 2);
            out << (n.kind == NodeKind::Mul ? "*" : "/");
            print_child(out, *n.rhs, 3);
            if (parent_prec > 2) out << ")";
            return;
        }
        case NodeKind::Neg:
            if (parent_prec > 3) out << "(";
            out << "-";
            print_child(out, *n.lhs, 3);
            if (parent_prec > 3) out << ")";
            return;
        case NodeKind::Pow:
            if (parent_prec > 4) out << "(";
            print_child(out, *n.lhs, 5);
            out << "^";
            print_child(out, *n.rhs, 4);
            if (parent_prec > 4) out << ")";
            return;
        case NodeKind::Sin: out << "sin("; print_child(out, *n.lhs, 0); out << ")"; return;
        case NodeKind::Cos: out << "cos("; print_child(out, *n.lhs, 0); out << ")"; return;
        case NodeKind::Exp: out << "exp("; print_child(out, *n.lhs, 0); out << ")"; return;
    }
}

}  // namespace expr

/// Vector field given by one expression per state coordinate.
class DynamicsExpr {
public:
    DynamicsExpr() = default;

    DynamicsExpr(std::vector<expr::NodePtr> components, std::size_t dim)
        : components_(std::move(components)), dim_(dim) {}

    std::size_t dim() const { return dim_; }

    void eval(const Vector& x, Vector& out) const {
        out.resize(components_.size());
        for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i]->eval(x);
    }

    Vector eval(const Vector& x) const {
        Vector out;
        eval(x, out);
        return out;
    }

    std::vector<std::string> to_strings() const {
        std::vector<std::string> out;
        out.reserve(components_.size());
        for (const auto& c : components_) {
            std::ostringstream ss;
            expr::print(ss, *c, 0);
            out.push_back(ss.str());
        }
        return out;
    }

private:
    std::vector<expr::NodePtr> components_;
    std::size_t dim_ = 0;
};

inline DynamicsExpr parse_dynamics(const std::vector<std::string>& texts, std::size_t n) {
    if (texts.size() != n) {
        throw ShapeMismatch("expected " + std::to_string(n) + " expressions, got " +
                            std::to_string(texts.size()));
    }
    std::vector<expr::NodePtr> comps;
    comps.reserve(n);
    for (const auto& text : texts) {
        expr::Parser p(text, n);
        comps.push_back(p.parse());
    }
    return DynamicsExpr(std::move(comps), n);
}

// ---- disturbance signals ----

enum class DisturbanceKind { PiecewiseConstantRandom, Sinusoid, BangBangCorner, Zero };

inline std::string to_string(DisturbanceKind k) {
    switch (k) {
        case DisturbanceKind::PiecewiseConstantRandom: return "piecewise_constant_random";
        case DisturbanceKind::Sinusoid: return "sinusoid";
        case DisturbanceKind::BangBangCorner: return "bang_bang_corner";
        case DisturbanceKind::Zero: return "zero";
    }
    return "?";
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// uniform in [0, 1)
inline double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t h = splitmix64(splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

/**
 * Deterministic disturbance signal bounded by |d_i(t)| <= eps. Values are a
 * pure function of (seed, t), so any slice can be re-evaluated independently.
 *
 * Corner signals hold one random sign pattern at full magnitude for the whole
 * horizon; they are the hardest inputs for an envelope bound.
 */
class DisturbanceSignal {
public:
    DisturbanceSignal(DisturbanceKind kind, std::size_t dim, double eps, double hold_dt,
                      std::uint64_t seed)
        : kind_(kind), dim_(dim), eps_(eps), hold_dt_(hold_dt), seed_(seed) {}

    DisturbanceKind kind() const { return kind_; }
    double eps() const { return eps_; }
    std::size_t dim() const { return dim_; }

    void value(double t, Vector& out) const {
        out.resize(dim_);
        switch (kind_) {
            case DisturbanceKind::Zero:
                std::fill(out.begin(), out.end(), 0.0);
                return;
            case DisturbanceKind::PiecewiseConstantRandom: {
                const auto interval = static_cast<std::uint64_t>(std::floor(t / hold_dt_ + 1e-12));
                for (std::size_t i = 0; i < dim_; ++i) {
                    out[i] = eps_ * (2.0 * detail::hash_unit(seed_, interval, i) - 1.0);
                }
                return;
            }
            case DisturbanceKind::BangBangCorner: {
                for (std::size_t i = 0; i < dim_; ++i) {
                    out[i] = detail::hash_unit(seed_, 7777, i) < 0.5 ? -eps_ : eps_;
                }
                return;
            }
            case DisturbanceKind::Sinusoid: {
                for (std::size_t i = 0; i < dim_; ++i) {
                    const double freq = 0.05 + 2.0 * detail::hash_unit(seed_, 1, i);
                    const double phase = 6.283185307179586 * detail::hash_unit(seed_, 2, i);
                    out[i] = eps_ * std::sin(6.283185307179586 * freq * t + phase);
                }
                return;
            }
        }
    }

    Vector value(double t) const {
        Vector out;
        value(t, out);
        return out;
    }

private:
    DisturbanceKind kind_;
    std::size_t dim_;
    double eps_;
    double hold_dt_;
    std::uint64_t seed_;
};

// ---- integration ----

using VectorField = std::function<void(const Vector&, Vector&)>;

inline VectorField linear_field(const Matrix& a) {
    return [a](const Vector& x, Vector& out) {
        out.resize(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
            out[i] = acc;
        }
    };
}

inline VectorField expr_field(const DynamicsExpr& f) {
    return [f](const Vector& x, Vector& out) { f.eval(x, out); };
}

/**
 * Classical fixed-step RK4 with the disturbance held constant over each step.
 * When a channel matrix is given the additive term is B_w d(t). Throws
 * NonFinite (with the time) if the state leaves the representable range.
 */
inline Signal integrate(const VectorField& f, const Vector& x0, const DisturbanceSignal& d,
                        const TimeGrid& grid, const Matrix* input_map = nullptr) {
    const std::size_t n = x0.size();
    if (input_map != nullptr &&
        (input_map->rows() != n || input_map->cols() != d.dim())) {
        throw ShapeMismatch("integrate: input map shape mismatch");
    }

    Signal sig;
    sig.t0 = 0.0;
    sig.dt = grid.dt;
    sig.samples.reserve(grid.count);

    Vector x = x0;
    Vector raw(d.dim()), dist(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
    const double h = grid.dt;

    for (std::size_t k = 0; k < grid.count; ++k) {
        for (double v : x) {
            if (!std::isfinite(v)) throw NonFinite("state became non-finite", grid.time(k));
        }
        sig.samples.push_back(x);
        if (k + 1 == grid.count) break;

        const double t = grid.time(k);
        d.value(t, raw);
        if (input_map != nullptr) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t c = 0; c < raw.size(); ++c) acc += (*input_map)(i, c) * raw[c];
                dist[i] = acc;
            }
        } else {
            dist = raw;
        }

        auto stage = [&](const Vector& xin, Vector& kout) {
            f(xin, kout);
            for (std::size_t i = 0; i < n; ++i) kout[i] += dist[i];
        };

        stage(x, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        stage(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        stage(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        stage(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    return sig;
}

// ---- Monte-Carlo validation ----

struct ViolationReport {
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst_robustness = 0.0;
    std::uint64_t worst_seed = 0;
    double eps = 0.0;
    std::vector<std::string> kinds;  // disturbance mix used
};

/**
 * Integrate `trials` trajectories under fresh disturbances bounded by eps
 * (alternating piecewise-constant-random and corner signals), evaluate the
 * robustness of each, and count violations. Deterministic given the seed.
 * The optional channel matrix routes an m-dimensional disturbance into the
 * state derivative as B_w d(t).
 */
inline ViolationReport monte_carlo_validate(const VectorField& f, std::size_t state_dim,
                                            const StlPtr& phi, const Vector& x0, double eps,
                                            std::size_t trials, std::uint64_t seed,
                                            const TimeGrid& grid,
                                            const Matrix* input_map = nullptr) {
    if (trials == 0) throw ShapeMismatch("monte_carlo_validate requires at least one trial");
    const std::size_t dist_dim = input_map != nullptr ? input_map->cols() : state_dim;
    ViolationReport report;
    report.trials = trials;
    report.eps = eps;
    report.kinds = {to_string(DisturbanceKind::PiecewiseConstantRandom),
                    to_string(DisturbanceKind::BangBangCorner)};

    std::vector<double> rho(trials);
    std::vector<std::uint64_t> trial_seed(trials);
    for (std::size_t j = 0; j < trials; ++j) {
        trial_seed[j] = detail::splitmix64(seed ^ (j * 0x9e3779b97f4a7c15ULL));
    }

    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    detail::parallel_for(trials, [&](std::size_t j) {
        if (failed.load()) return;
        try {
            const DisturbanceKind kind = (j % 2 == 0) ? DisturbanceKind::PiecewiseConstantRandom
                                                      : DisturbanceKind::BangBangCorner;
            const DisturbanceSignal d(kind, dist_dim, eps, 10.0 * grid.dt, trial_seed[j]);
            const Signal traj = integrate(f, x0, d, grid, input_map);
            rho[j] = robustness(phi, traj, 0.0);
        } catch (const std::exception& e) {
            std::scoped_lock lk(failure_mutex);
            failed.store(true);
            failure = e.what();
        }
    });
    if (failed.load()) throw NonFinite("validation trial failed: " + failure, 0.0);

    report.worst_robustness = rho[0];
    report.worst_seed = trial_seed[0];
    for (std::size_t j = 0; j < trials; ++j) {
        if (rho[j] <= 0.0) ++report.violations;
        if (rho[j] < report.worst_robustness) {
            report.worst_robustness = rho[j];
            report.worst_seed = trial_seed[j];
        }
    }
    return report;
}

}  // namespace resilience

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <deque>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resilience/errors.hpp"
#include "resilience/linalg.hpp"

namespace resilience {

/// Trajectory sampled on a uniform time grid.
struct Signal {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Vector> samples;

    std::size_t size() const { return samples.size(); }
    std::size_t state_dim() const { return samples.empty() ? 0 : samples.front().size(); }
    double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
    double end() const { return samples.empty() ? t0 : time(samples.size() - 1); }

    /// Nearest grid index of t; t must sit within dt/2 of a sample.
    std::size_t index_of(double t) const {
        const double raw = (t - t0) / dt;
        const auto k = static_cast<long long>(std::llround(raw));
        if (k < 0 || static_cast<std::size_t>(k) >= samples.size()) {
            throw HorizonExceeded("time " + std::to_string(t) + " outside the sampled signal");
        }
        return static_cast<std::size_t>(k);
    }
};

enum class StlKind { Predicate, Not, And, Or, Always, Eventually };

enum class PredicateOp { Leq, Geq };

class StlFormula;
using StlPtr = std::shared_ptr<const StlFormula>;

/**
 * Immutable STL formula node. Predicates are affine: written either as
 * c·x <= k (robustness k - c·x) or c·x >= k (robustness c·x - k).
 */
class StlFormula {
public:
    static StlPtr predicate(Vector coeffs, double offset, PredicateOp op) {
        auto f = std::make_shared<StlFormula>(Private{});
        f->kind_ = StlKind::Predicate;
        f->coeffs_ = std::move(coeffs);
        f->offset_ = offset;
        f->op_ = op;
        return f;
    }

    static StlPtr negation(StlPtr child) {
        auto f = std::make_shared<StlFormula>(Private{});
        f->kind_ = StlKind::Not;
        f->children_ = {std::move(child)};
        return f;
    }

    static StlPtr conjunction(std::vector<StlPtr> children) {
        return nary(StlKind::And, std::move(children));
    }

    static StlPtr disjunction(std::vector<StlPtr> children) {
        return nary(StlKind::Or, std::move(children));
    }

    static StlPtr always(double a, double b, StlPtr child) {
        return temporal(StlKind::Always, a, b, std::move(child));
    }

    static StlPtr eventually(double a, double b, StlPtr child) {
        return temporal(StlKind::Eventually, a, b, std::move(child));
    }

    StlKind kind() const { return kind_; }
    const std::vector<StlPtr>& children() const { return children_; }
    const Vector& coeffs() const { return coeffs_; }
    double offset() const { return offset_; }
    PredicateOp op() const { return op_; }
    double window_lo() const { return a_; }
    double window_hi() const { return b_; }

    /// h(x) for a predicate node.
    double predicate_value(const Vector& x) const {
        double cx = 0.0;
        for (std::size_t i = 0; i < coeffs_.size() && i < x.size(); ++i) cx += coeffs_[i] * x[i];
        return op_ == PredicateOp::Leq ? offset_ - cx : cx - offset_;
    }

    /// Total temporal depth: smallest signal length (in seconds past t) needed.
    double horizon() const {
        switch (kind_) {
            case StlKind::Predicate: return 0.0;
            case StlKind::Not: return children_[0]->horizon();
            case StlKind::And:
            case StlKind::Or: {
                double h = 0.0;
                for (const auto& c : children_) h = std::max(h, c->horizon());
                return h;
            }
            case StlKind::Always:
            case StlKind::Eventually: return b_ + children_[0]->horizon();
        }
        return 0.0;
    }

    /// Highest 1-based state index referenced by any predicate.
    std::size_t max_state_index() const {
        if (kind_ == StlKind::Predicate) {
            std::size_t m = 0;
            for (std::size_t i = 0; i < coeffs_.size(); ++i)
                if (coeffs_[i] != 0.0) m = i + 1;
            return m;
        }
        std::size_t m = 0;
        for (const auto& c : children_) m = std::max(m, c->max_state_index());
        return m;
    }

    bool equals(const StlFormula& other) const {
        if (kind_ != other.kind_) return false;
        if (kind_ == StlKind::Predicate) {
            return op_ == other.op_ && offset_ == other.offset_ && coeffs_ == other.coeffs_;
        }
        if (a_ != other.a_ || b_ != other.b_) return false;
        if (children_.size() != other.children_.size()) return false;
        for (std::size_t i = 0; i < children_.size(); ++i) {
            if (!children_[i]->equals(*other.children_[i])) return false;
        }
        return true;
    }

    struct Private {};
    explicit StlFormula(Private) {}

private:
    static StlPtr nary(StlKind kind, std::vector<StlPtr> children) {
        auto f = std::make_shared<StlFormula>(Private{});
        f->kind_ = kind;
        f->children_ = std::move(children);
        return f;
    }

    static StlPtr temporal(StlKind kind, double a, double b, StlPtr child) {
        auto f = std::make_shared<StlFormula>(Private{});
        f->kind_ = kind;
        f->a_ = a;
        f->b_ = b;
        f->children_ = {std::move(child)};
        return f;
    }

    StlKind kind_ = StlKind::Predicate;
    Vector coeffs_;
    double offset_ = 0.0;
    PredicateOp op_ = PredicateOp::Leq;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<StlPtr> children_;
};

/**
 * Structural Lipschitz constant of the robustness w.r.t. the signal sup norm:
 * ||c||_1 at predicates, unchanged through negation and temporal operators,
 * max over the children of a conjunction or disjunction.
 */
inline double lipschitz(const StlFormula& phi) {
    switch (phi.kind()) {
        case StlKind::Predicate: return norm_one(phi.coeffs());
        case StlKind::Not: return lipschitz(*phi.children()[0]);
        case StlKind::And:
        case StlKind::Or: {
            double m = 0.0;
            for (const auto& c : phi.children()) m = std::max(m, lipschitz(*c));
            return m;
        }
        case StlKind::Always:
        case StlKind::Eventually: return lipschitz(*phi.children()[0]);
    }
    return 0.0;
}

inline double lipschitz(const StlPtr& phi) { return lipschitz(*phi); }

namespace detail {

/// Robustness of phi at every valid grid shift, computed bottom-up. The
/// entry at index k is rho(phi, signal, t_k); entries past `valid` would
/// require samples beyond the signal end.
struct RobustnessCurve {
    std::vector<double> values;
    std::size_t valid = 0;
};

/// Sliding-window minimum (or maximum) of v over [k+lo, k+hi] per position k.
inline std::vector<double> sliding_extremum(const std::vector<double>& v, std::size_t n_out,
                                            std::size_t lo, std::size_t hi, bool minimum) {
    std::vector<double> out(n_out);
    std::deque<std::size_t> dq;  // indices with monotone values
    std::size_t next = lo;       // first child index not yet ingested
    for (std::size_t k = 0; k < n_out; ++k) {
        const std::size_t w_lo = k + lo;
        const std::size_t w_hi = k + hi;
        while (next <= w_hi) {
            while (!dq.empty() &&
                   (minimum ? v[dq.back()] >= v[next] : v[dq.back()] <= v[next])) {
                dq.pop_back();
            }
            dq.push_back(next);
            ++next;
        }
        while (!dq.empty() && dq.front() < w_lo) dq.pop_front();
        out[k] = v[dq.front()];
    }
    return out;
}

inline RobustnessCurve robustness_curve(const StlFormula& phi, const Signal& sig) {
    const std::size_t n = sig.size();
    switch (phi.kind()) {
        case StlKind::Predicate: {
            RobustnessCurve c;
            c.values.resize(n);
            for (std::size_t k = 0; k < n; ++k) c.values[k] = phi.predicate_value(sig.samples[k]);
            c.valid = n;
            return c;
        }
        case StlKind::Not: {
            RobustnessCurve c = robustness_curve(*phi.children()[0], sig);
            for (double& v : c.values) v = -v;
            return c;
        }
        case StlKind::And:
        case StlKind::Or: {
            const bool is_and = phi.kind() == StlKind::And;
            RobustnessCurve acc = robustness_curve(*phi.children()[0], sig);
            for (std::size_t i = 1; i < phi.children().size(); ++i) {
                RobustnessCurve c = robustness_curve(*phi.children()[i], sig);
                acc.valid = std::min(acc.valid, c.valid);
                for (std::size_t k = 0; k < acc.valid; ++k) {
                    acc.values[k] = is_and ? std::min(acc.values[k], c.values[k])
                                           : std::max(acc.values[k], c.values[k]);
                }
            }
            acc.values.resize(acc.valid);
            return acc;
        }
        case StlKind::Always:
        case StlKind::Eventually: {
            RobustnessCurve child = robustness_curve(*phi.children()[0], sig);
            // Window endpoints snap outward to grid points.
            const double eps = 1e-9;
            const auto lo =
                static_cast<std::size_t>(std::max(0.0, std::floor(phi.window_lo() / sig.dt + eps)));
            const auto hi =
                static_cast<std::size_t>(std::max(0.0, std::ceil(phi.window_hi() / sig.dt - eps)));
            RobustnessCurve c;
            if (child.valid == 0 || hi >= child.valid) {
                c.valid = 0;
                return c;
            }
            c.valid = child.valid - hi;
            c.values = sliding_extremum(child.values, c.valid, lo, hi,
                                        phi.kind() == StlKind::Always);
            return c;
        }
    }
    return {};
}

}  // namespace detail

/// Quantitative robustness rho(phi, sig, t); positive means satisfaction.
inline double robustness(const StlFormula& phi, const Signal& sig, double t) {
    if (sig.samples.empty()) throw HorizonExceeded("empty signal");
    const std::size_t k = sig.index_of(t);
    const detail::RobustnessCurve curve = detail::robustness_curve(phi, sig);
    if (k >= curve.valid) {
        throw HorizonExceeded("signal too short for the formula horizon at t = " +
                              std::to_string(t));
    }
    return curve.values[k];
}

inline double robustness(const StlPtr& phi, const Signal& sig, double t) {
    return robustness(*phi, sig, t);
}

// ---- concrete syntax ----

namespace detail {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    explicit Parser(const std::string& s) : text(s) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    bool try_consume(const char* token) {
        skip_ws();
        const std::size_t len = std::char_traits<char>::length(token);
        if (text.compare(pos, len, token) == 0) {
            pos += len;
            return true;
        }
        return false;
    }

    void expect(const char* token) {
        if (!try_consume(token)) {
            throw SyntaxError(std::string("expected '") + token + "'", pos);
        }
    }

    double parse_number() {
        skip_ws();
        const char* start = text.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(start, &end);
        if (end == start) throw SyntaxError("expected a number", pos);
        pos += static_cast<std::size_t>(end - start);
        return v;
    }

    /// x<k>, 1-based index
    std::size_t parse_state_index() {
        skip_ws();
        if (pos >= text.size() || text[pos] != 'x') throw SyntaxError("expected a state variable", pos);
        const std::size_t at = pos;
        ++pos;
        std::size_t idx = 0;
        bool any = false;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            idx = idx * 10 + static_cast<std::size_t>(text[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any || idx == 0) throw SyntaxError("malformed state variable", at);
        return idx;
    }

    StlPtr parse_formula() {
        StlPtr lhs = parse_and();
        std::vector<StlPtr> parts{lhs};
        while (try_consume("||")) parts.push_back(parse_and());
        if (parts.size() == 1) return lhs;
        return StlFormula::disjunction(std::move(parts));
    }

    StlPtr parse_and() {
        StlPtr lhs = parse_unary();
        std::vector<StlPtr> parts{lhs};
        while (try_consume("&&")) parts.push_back(parse_unary());
        if (parts.size() == 1) return lhs;
        return StlFormula::conjunction(std::move(parts));
    }

    StlPtr parse_unary() {
        skip_ws();
        if (try_consume("!")) return StlFormula::negation(parse_unary());
        if (peek_temporal('G')) return parse_temporal('G');
        if (peek_temporal('F')) return parse_temporal('F');
        if (try_consume("(")) {
            StlPtr inner = parse_formula();
            expect(")");
            return inner;
        }
        return parse_predicate();
    }

    bool peek_temporal(char op) {
        skip_ws();
        return pos + 1 < text.size() && text[pos] == op && text[pos + 1] == '[';
    }

    StlPtr parse_temporal(char op) {
        skip_ws();
        ++pos;  // G or F
        const std::size_t interval_at = pos;
        expect("[");
        const double a = parse_number();
        expect(",");
        const double b = parse_number();
        expect("]");
        if (a < 0.0 || b < a) {
            throw SyntaxError("temporal interval must satisfy 0 <= a <= b", interval_at);
        }
        expect("(");
        StlPtr child = parse_formula();
        expect(")");
        return op == 'G' ? StlFormula::always(a, b, std::move(child))
                         : StlFormula::eventually(a, b, std::move(child));
    }

    /// linear-term sum, comparator, constant
    StlPtr parse_predicate() {
        skip_ws();
        Vector coeffs;
        bool first = true;
        for (;;) {
            skip_ws();
            double sign = 1.0;
            if (try_consume("+")) {
                sign = 1.0;
            } else if (try_consume("-")) {
                sign = -1.0;
            } else if (!first) {
                break;  // end of the linear expression
            }
            skip_ws();
            double coef = sign;
            if (pos < text.size() && text[pos] != 'x') {
                coef = sign * parse_number();
                expect("*");
            }
            const std::size_t idx = parse_state_index();
            if (coeffs.size() < idx) coeffs.resize(idx, 0.0);
            coeffs[idx - 1] += coef;
            first = false;
        }
        skip_ws();
        PredicateOp op;
        if (try_consume("<=")) {
            op = PredicateOp::Leq;
        } else if (try_consume(">=")) {
            op = PredicateOp::Geq;
        } else {
            throw SyntaxError("expected '<=' or '>='", pos);
        }
        const double offset = parse_number();
        return StlFormula::predicate(std::move(coeffs), offset, op);
    }
};

inline void format_number(std::ostringstream& out, double v) {
    std::ostringstream tmp;
    tmp.precision(17);  // full round-trip precision
    tmp << v;
    out << tmp.str();
}

inline void print_formula(std::ostringstream& out, const StlFormula& phi, int parent_prec) {
    // precedence: atoms 3, ! 2, && 1, || 0
    switch (phi.kind()) {
        case StlKind::Predicate: {
            bool first = true;
            for (std::size_t i = 0; i < phi.coeffs().size(); ++i) {
                const double c = phi.coeffs()[i];
                if (c == 0.0) continue;
                if (!first) out << (c < 0.0 ? " - " : " + ");
                else if (c < 0.0) out << "-";
                format_number(out, std::abs(c));
                out << "*x" << (i + 1);
                first = false;
            }
            if (first) out << "0*x1";
            out << (phi.op() == PredicateOp::Leq ? " <= " : " >= ");
            format_number(out, phi.offset());
            return;
        }
        case StlKind::Not:
            out << "!";
            if (phi.children()[0]->kind() == StlKind::Predicate) {
                out << "(";
                print_formula(out, *phi.children()[0], 3);
                out << ")";
            } else {
                print_formula(out, *phi.children()[0], 2);
            }
            return;
        case StlKind::And:
        case StlKind::Or: {
            const bool is_and = phi.kind() == StlKind::And;
            const int prec = is_and ? 1 : 0;
            if (prec < parent_prec) out << "(";
            for (std::size_t i = 0; i < phi.children().size(); ++i) {
                if (i) out << (is_and ? " && " : " || ");
                print_formula(out, *phi.children()[i], prec + 1);
            }
            if (prec < parent_prec) out << ")";
            return;
        }
        case StlKind::Always:
        case StlKind::Eventually:
            out << (phi.kind() == StlKind::Always ? "G[" : "F[");
            format_number(out, phi.window_lo());
            out << ",";
            format_number(out, phi.window_hi());
            out << "](";
            print_formula(out, *phi.children()[0], 0);
            out << ")";
            return;
    }
}

}  // namespace detail

inline StlPtr parse(const std::string& text) {
    detail::Parser p(text);
    StlPtr phi = p.parse_formula();
    if (!p.eof()) throw SyntaxError("trailing input after formula", p.pos);
    return phi;
}

/// Parse and check state indices against a declared dimension.
inline StlPtr parse(const std::string& text, std::size_t state_dim) {
    StlPtr phi = parse(text);
    if (phi->max_state_index() > state_dim) {
        throw IndexError("formula references x" + std::to_string(phi->max_state_index()) +
                         " but the state dimension is " + std::to_string(state_dim));
    }
    return phi;
}

inline std::string to_string(const StlFormula& phi) {
    std::ostringstream out;
    detail::print_formula(out, phi, 0);
    return out.str();
}

inline std::string to_string(const StlPtr& phi) { return to_string(*phi); }

// ---- JSON AST form ----

inline nlohmann::json formula_to_json(const StlFormula& phi) {
    using nlohmann::json;
    switch (phi.kind()) {
        case StlKind::Predicate:
            return json{{"kind", "predicate"},
                        {"coeffs", phi.coeffs()},
                        {"offset", phi.offset()},
                        {"op", phi.op() == PredicateOp::Leq ? "<=" : ">="}};
        case StlKind::Not:
            return json{{"kind", "not"}, {"child", formula_to_json(*phi.children()[0])}};
        case StlKind::And:
        case StlKind::Or: {
            json kids = json::array();
            for (const auto& c : phi.children()) kids.push_back(formula_to_json(*c));
            return json{{"kind", phi.kind() == StlKind::And ? "and" : "or"},
                        {"children", std::move(kids)}};
        }
        case StlKind::Always:
        case StlKind::Eventually:
            return json{{"kind", phi.kind() == StlKind::Always ? "always" : "eventually"},
                        {"a", phi.window_lo()},
                        {"b", phi.window_hi()},
                        {"child", formula_to_json(*phi.children()[0])}};
    }
    return {};
}

inline StlPtr formula_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "predicate") {
        const std::string op = j.at("op").get<std::string>();
        if (op != "<=" && op != ">=") throw ConfigError("predicate op must be <= or >=", "op");
        return StlFormula::predicate(j.at("coeffs").get<Vector>(), j.at("offset").get<double>(),
                                     op == "<=" ? PredicateOp::Leq : PredicateOp::Geq);
    }
    if (kind == "not") return StlFormula::negation(formula_from_json(j.at("child")));
    if (kind == "and" || kind == "or") {
        std::vector<StlPtr> kids;
        for (const auto& c : j.at("children")) kids.push_back(formula_from_json(c));
        if (kids.empty()) throw ConfigError("empty boolean node", "children");
        return kind == "and" ? StlFormula::conjunction(std::move(kids))
                             : StlFormula::disjunction(std::move(kids));
    }
    if (kind == "always" || kind == "eventually") {
        const double a = j.at("a").get<double>();
        const double b = j.at("b").get<double>();
        if (a < 0.0 || b < a) throw ConfigError("temporal interval must satisfy 0 <= a <= b", "a");
        StlPtr child = formula_from_json(j.at("child"));
        return kind == "always" ? StlFormula::always(a, b, std::move(child))
                                : StlFormula::eventually(a, b, std::move(child));
    }
    throw ConfigError("unknown formula node kind '" + kind + "'", "kind");
}

}  // namespace resilience

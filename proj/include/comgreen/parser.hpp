#pragma once

// Expression language for observables and Hamiltonians, e.g.
//   x*cos(w*t) - p*sin(w*t)/(m*w)        p^2/(2*m) - k*t*x
//
// Precedence: ^ (non-negative integer literal exponent) > unary minus > * / > + -,
// binary operators left-associative. Identifiers are phase-space symbols (x, y, p, px,
// py), the time t, a call (sin cos tan exp sqrt), or else parameters.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "comgreen/errors.hpp"

namespace comgreen {

enum class ExprKind { number, parameter, time, phase, neg, add, sub, mul, div, pow, call };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind = ExprKind::number;
    double value = 0.0;       ///< number
    std::string name;         ///< parameter, phase symbol or function name
    ExprPtr lhs, rhs;         ///< operands; unary nodes and calls use lhs
    unsigned exponent = 0;    ///< pow
    std::size_t offset = 0;   ///< byte offset of the node in the source text
    int depth = 1;

    static ExprPtr number(double v, std::size_t at = 0) {
        auto e = std::make_shared<Expr>();
        e->value = v;
        e->offset = at;
        return e;
    }
    static ExprPtr symbol(ExprKind kind, std::string name, std::size_t at = 0) {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->name = std::move(name);
        e->offset = at;
        return e;
    }
    static ExprPtr unary(ExprKind kind, ExprPtr a, std::size_t at = 0, std::string name = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->depth = a->depth + 1;
        e->lhs = std::move(a);
        e->name = std::move(name);
        e->offset = at;
        return e;
    }
    static ExprPtr binary(ExprKind kind, ExprPtr a, ExprPtr b, std::size_t at = 0) {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->depth = std::max(a->depth, b->depth) + 1;
        e->lhs = std::move(a);
        e->rhs = std::move(b);
        e->offset = at;
        return e;
    }
    static ExprPtr power(ExprPtr a, unsigned n, std::size_t at = 0) {
        auto e = unary(ExprKind::pow, std::move(a), at);
        std::const_pointer_cast<Expr>(e)->exponent = n;
        return e;
    }
};

inline const std::set<std::string>& phase_symbols() {
    static const std::set<std::string> s{"x", "y", "p", "px", "py"};
    return s;
}

inline const std::set<std::string>& function_names() {
    static const std::set<std::string> s{"sin", "cos", "tan", "exp", "sqrt"};
    return s;
}

namespace detail {

class Parser {
public:
    static constexpr int max_depth = 256;
    static constexpr unsigned max_exponent = 1024;

    explicit Parser(std::string_view text) : s_(text) {}

    ExprPtr parse() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
        ExprPtr e = expr();
        skip();
        if (pos_ < s_.size()) {
            if (s_[pos_] == ')') throw ParseError("unbalanced ')'", pos_);
            throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
        }
        return e;
    }

private:
    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n')) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprPtr checked(ExprPtr e) {
        if (e->depth > 2 * max_depth) throw ParseError("expression too deeply nested", e->offset);
        return e;
    }

    struct Guard {
        explicit Guard(Parser& p) : p_(p) {
            if (++p_.nesting_ > max_depth) throw ParseError("expression too deeply nested", p_.pos_);
        }
        ~Guard() { --p_.nesting_; }
        Parser& p_;
    };

    ExprPtr expr() {
        Guard g(*this);
        ExprPtr e = term();
        for (;;) {
            skip();
            const std::size_t at = pos_;
            if (accept('+'))
                e = checked(Expr::binary(ExprKind::add, e, term(), at));
            else if (accept('-'))
                e = checked(Expr::binary(ExprKind::sub, e, term(), at));
            else
                return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = unary();
        for (;;) {
            skip();
            const std::size_t at = pos_;
            if (accept('*'))
                e = checked(Expr::binary(ExprKind::mul, e, unary(), at));
            else if (accept('/'))
                e = checked(Expr::binary(ExprKind::div, e, unary(), at));
            else
                return e;
        }
    }

    ExprPtr unary() {
        Guard g(*this);
        skip();
        const std::size_t at = pos_;
        if (accept('-')) return checked(Expr::unary(ExprKind::neg, unary(), at));
        if (accept('+')) return unary();
        return power();
    }

    ExprPtr power() {
        ExprPtr e = primary();
        for (;;) {
            skip();
            const std::size_t at = pos_;
            if (!accept('^')) return e;
            skip();
            const std::size_t num_at = pos_;
            std::size_t end = pos_;
            while (end < s_.size() && s_[end] >= '0' && s_[end] <= '9') ++end;
            if (end == pos_) throw ParseError("exponent must be a non-negative integer literal", num_at);
            if (end < s_.size() && (s_[end] == '.' || s_[end] == 'e' || s_[end] == 'E'))
                throw ParseError("exponent must be a non-negative integer literal", num_at);
            unsigned n = 0;
            const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, n);
            if (ec != std::errc() || n > max_exponent) throw ParseError("exponent too large", num_at);
            pos_ = static_cast<std::size_t>(ptr - s_.data());
            e = checked(Expr::power(e, n, at));
        }
    }

    static bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

    ExprPtr primary() {
        skip();
        const std::size_t at = pos_;
        if (pos_ >= s_.size()) throw ParseError("expected an expression", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = expr();
            if (!accept(')')) throw ParseError(pos_ >= s_.size() ? "unbalanced '('" : "expected ')'", pos_);
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (ident_start(c)) {
            std::size_t end = pos_;
            while (end < s_.size() && ident_char(s_[end])) ++end;
            std::string name(s_.substr(pos_, end - pos_));
            pos_ = end;
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                if (!function_names().count(name)) throw ParseError("unknown function '" + name + "'", at);
                ++pos_;
                ExprPtr arg = expr();
                if (!accept(')')) throw ParseError(pos_ >= s_.size() ? "unbalanced '('" : "expected ')'", pos_);
                return checked(Expr::unary(ExprKind::call, arg, at, name));
            }
            if (function_names().count(name)) throw ParseError("function '" + name + "' needs an argument", pos_);
            if (name == "t") return Expr::symbol(ExprKind::time, name, at);
            if (phase_symbols().count(name)) return Expr::symbol(ExprKind::phase, name, at);
            return Expr::symbol(ExprKind::parameter, name, at);
        }
        throw ParseError("unexpected '" + std::string(1, c) + "'", at);
    }

    ExprPtr number() {
        const std::size_t at = pos_;
        std::size_t end = pos_;
        while (end < s_.size() && ((s_[end] >= '0' && s_[end] <= '9') || s_[end] == '.')) ++end;
        if (end < s_.size() && (s_[end] == 'e' || s_[end] == 'E')) {
            std::size_t k = end + 1;
            if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
            if (k < s_.size() && s_[k] >= '0' && s_[k] <= '9') {
                end = k;
                while (end < s_.size() && s_[end] >= '0' && s_[end] <= '9') ++end;
            }
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, v);
        if (ec != std::errc() || ptr != s_.data() + end || !std::isfinite(v)) throw ParseError("malformed number", at);
        pos_ = end;
        return Expr::number(v, at);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int nesting_ = 0;
};

inline int precedence(const Expr& e) {
    switch (e.kind) {
        case ExprKind::add:
        case ExprKind::sub: return 1;
        case ExprKind::mul:
        case ExprKind::div: return 2;
        case ExprKind::neg: return 3;
        case ExprKind::pow: return 4;
        case ExprKind::number: return e.value < 0.0 ? 3 : 5;
        default: return 5;
    }
}

inline void render_into(const Expr& e, std::string& out) {
    auto child = [&out](const Expr& c, int min_prec) {
        const bool paren = precedence(c) < min_prec;
        if (paren) out += '(';
        render_into(c, out);
        if (paren) out += ')';
    };
    switch (e.kind) {
        case ExprKind::number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", e.value);
            out += buf;
            return;
        }
        case ExprKind::parameter:
        case ExprKind::time:
        case ExprKind::phase: out += e.name; return;
        case ExprKind::neg:
            out += '-';
            child(*e.lhs, 4);
            return;
        case ExprKind::add:
        case ExprKind::sub:
            child(*e.lhs, 1);
            out += e.kind == ExprKind::add ? " + " : " - ";
            child(*e.rhs, 2);
            return;
        case ExprKind::mul:
        case ExprKind::div:
            child(*e.lhs, 2);
            out += e.kind == ExprKind::mul ? "*" : "/";
            child(*e.rhs, 3);
            return;
        case ExprKind::pow:
            child(*e.lhs, 5);
            out += '^';
            out += std::to_string(e.exponent);
            return;
        case ExprKind::call:
            out += e.name;
            out += '(';
            render_into(*e.lhs, out);
            out += ')';
            return;
    }
}

}  // namespace detail

/// Parses one expression; throws ParseError with the byte offset of the problem.
inline ExprPtr parse(std::string_view text) { return detail::Parser(text).parse(); }

/// Canonical text of an expression; parse(render(e)) denotes the same function.
inline std::string render(const Expr& e) {
    std::string out;
    detail::render_into(e, out);
    return out;
}

inline std::string render(const ExprPtr& e) { return render(*e); }

/// Names of parameters referenced by an expression.
inline void collect_parameters(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::parameter) out.insert(e.name);
    if (e.lhs) collect_parameters(*e.lhs, out);
    if (e.rhs) collect_parameters(*e.rhs, out);
}

inline void collect_phase_symbols(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::phase) out.insert(e.name);
    if (e.lhs) collect_phase_symbols(*e.lhs, out);
    if (e.rhs) collect_phase_symbols(*e.rhs, out);
}

}  // namespace comgreen

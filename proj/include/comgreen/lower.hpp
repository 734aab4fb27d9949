#pragma once

// Lowering of parsed expressions to observables and Hamiltonians, and the plain-text
// model file format:
//
//   [params]        name = value
//   [phase_space]   dim = 1 | 2            (optional; detected from the symbols otherwise)
//   [hamiltonian]   H = <expr>
//   [observables]   name = <expr>
//   [run]           grid.n, grid.min, grid.max, dt, t_final, tol, branch_tracking
//
// '#' starts a comment. Expressions are classical: products are collected commutatively
// and read back in Weyl order.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "comgreen/errors.hpp"
#include "comgreen/parser.hpp"
#include "comgreen/phasespace.hpp"

namespace comgreen {

/// Parameter values read when coefficients are evaluated, so a lowered object follows
/// later changes to the record.
using Bindings = std::shared_ptr<std::map<std::string, double>>;

inline Bindings make_bindings(std::map<std::string, double> values = {}) { return std::make_shared<std::map<std::string, double>>(std::move(values)); }

// ---- evaluation and symbolic time derivative ----

inline double evaluate(const Expr& e, double t, const std::map<std::string, double>& params) {
    switch (e.kind) {
        case ExprKind::number: return e.value;
        case ExprKind::time: return t;
        case ExprKind::parameter: {
            const auto it = params.find(e.name);
            if (it != params.end()) return it->second;
            if (e.name == "pi") return std::numbers::pi;
            throw LoweringError("unbound parameter '" + e.name + "'");
        }
        case ExprKind::phase: throw LoweringError("phase-space symbol '" + e.name + "' inside a coefficient");
        case ExprKind::neg: return -evaluate(*e.lhs, t, params);
        case ExprKind::add: return evaluate(*e.lhs, t, params) + evaluate(*e.rhs, t, params);
        case ExprKind::sub: return evaluate(*e.lhs, t, params) - evaluate(*e.rhs, t, params);
        case ExprKind::mul: return evaluate(*e.lhs, t, params) * evaluate(*e.rhs, t, params);
        case ExprKind::div: return evaluate(*e.lhs, t, params) / evaluate(*e.rhs, t, params);
        case ExprKind::pow: return std::pow(evaluate(*e.lhs, t, params), static_cast<double>(e.exponent));
        case ExprKind::call: {
            const double a = evaluate(*e.lhs, t, params);
            if (e.name == "sin") return std::sin(a);
            if (e.name == "cos") return std::cos(a);
            if (e.name == "tan") return std::tan(a);
            if (e.name == "exp") return std::exp(a);
            return std::sqrt(a);
        }
    }
    return 0.0;
}

namespace sym {

inline bool is_number(const ExprPtr& e, double v) { return e->kind == ExprKind::number && e->value == v; }

inline ExprPtr num(double v) { return Expr::number(v); }

inline ExprPtr neg(const ExprPtr& a) {
    if (a->kind == ExprKind::number) return num(-a->value);
    if (a->kind == ExprKind::neg) return a->lhs;
    return Expr::unary(ExprKind::neg, a);
}

inline ExprPtr add(const ExprPtr& a, const ExprPtr& b) {
    if (is_number(a, 0.0)) return b;
    if (is_number(b, 0.0)) return a;
    if (a->kind == ExprKind::number && b->kind == ExprKind::number) return num(a->value + b->value);
    if (b->kind == ExprKind::neg) return Expr::binary(ExprKind::sub, a, b->lhs);
    return Expr::binary(ExprKind::add, a, b);
}

inline ExprPtr sub(const ExprPtr& a, const ExprPtr& b) {
    if (is_number(b, 0.0)) return a;
    if (is_number(a, 0.0)) return neg(b);
    if (a->kind == ExprKind::number && b->kind == ExprKind::number) return num(a->value - b->value);
    return Expr::binary(ExprKind::sub, a, b);
}

inline ExprPtr mul(const ExprPtr& a, const ExprPtr& b) {
    if (is_number(a, 0.0) || is_number(b, 0.0)) return num(0.0);
    if (is_number(a, 1.0)) return b;
    if (is_number(b, 1.0)) return a;
    if (is_number(a, -1.0)) return neg(b);
    if (is_number(b, -1.0)) return neg(a);
    if (a->kind == ExprKind::number && b->kind == ExprKind::number) return num(a->value * b->value);
    if (a->kind == ExprKind::neg) return neg(mul(a->lhs, b));
    if (b->kind == ExprKind::neg) return neg(mul(a, b->lhs));
    return Expr::binary(ExprKind::mul, a, b);
}

inline ExprPtr div(const ExprPtr& a, const ExprPtr& b) {
    if (is_number(a, 0.0)) return num(0.0);
    if (is_number(b, 1.0)) return a;
    if (a->kind == ExprKind::neg) return neg(div(a->lhs, b));
    return Expr::binary(ExprKind::div, a, b);
}

inline ExprPtr pow(const ExprPtr& a, unsigned n) {
    if (n == 0) return num(1.0);
    if (n == 1) return a;
    return Expr::power(a, n);
}

inline ExprPtr call(const std::string& f, const ExprPtr& a) { return Expr::unary(ExprKind::call, a, 0, f); }

}  // namespace sym

/// d/dt of a coefficient expression (free of phase-space symbols).
inline ExprPtr time_derivative(const ExprPtr& e) {
    using namespace sym;
    switch (e->kind) {
        case ExprKind::number:
        case ExprKind::parameter: return num(0.0);
        case ExprKind::time: return num(1.0);
        case ExprKind::phase: throw LoweringError("phase-space symbol '" + e->name + "' inside a coefficient");
        case ExprKind::neg: return neg(time_derivative(e->lhs));
        case ExprKind::add: return add(time_derivative(e->lhs), time_derivative(e->rhs));
        case ExprKind::sub: return sub(time_derivative(e->lhs), time_derivative(e->rhs));
        case ExprKind::mul: return add(mul(time_derivative(e->lhs), e->rhs), mul(e->lhs, time_derivative(e->rhs)));
        case ExprKind::div: {
            const ExprPtr da = time_derivative(e->lhs), db = time_derivative(e->rhs);
            if (is_number(db, 0.0)) return div(da, e->rhs);
            return div(sub(mul(da, e->rhs), mul(e->lhs, db)), sym::pow(e->rhs, 2));
        }
        case ExprKind::pow: {
            const ExprPtr da = time_derivative(e->lhs);
            return mul(mul(num(e->exponent), sym::pow(e->lhs, e->exponent - 1)), da);
        }
        case ExprKind::call: {
            const ExprPtr a = e->lhs, da = time_derivative(e->lhs);
            if (is_number(da, 0.0)) return num(0.0);
            if (e->name == "sin") return mul(call("cos", a), da);
            if (e->name == "cos") return neg(mul(call("sin", a), da));
            if (e->name == "tan") return div(da, sym::pow(call("cos", a), 2));
            if (e->name == "exp") return mul(e, da);
            return div(da, mul(num(2.0), e));
        }
    }
    return num(0.0);
}

// ---- polynomial collection over phase-space symbols ----

/// Exponents of (x1..xn, p1..pn); at most total degree 2 is ever stored.
using Monomial = std::array<unsigned, 4>;
using Polynomial = std::map<Monomial, ExprPtr>;

inline int degree(const Monomial& m) { return static_cast<int>(m[0] + m[1] + m[2] + m[3]); }

/// Names of the phase-space coordinates in z order.
inline std::vector<std::string> phase_names(int dim) {
    return dim == 2 ? std::vector<std::string>{"x", "y", "px", "py"} : std::vector<std::string>{"x", "p"};
}

inline std::string monomial_text(const Monomial& m, int dim) {
    const auto names = phase_names(dim);
    std::string s;
    for (std::size_t a = 0; a < names.size(); ++a) {
        if (!m[a]) continue;
        if (!s.empty()) s += '*';
        s += names[a];
        if (m[a] > 1) s += '^' + std::to_string(m[a]);
    }
    return s.empty() ? "1" : s;
}

namespace detail {

class Collector {
public:
    explicit Collector(int dim) : dim_(dim), names_(phase_names(dim)) {}

    Polynomial collect(const Expr& e) const {
        using namespace sym;
        switch (e.kind) {
            case ExprKind::number:
            case ExprKind::parameter:
            case ExprKind::time: return constant(std::make_shared<Expr>(e));
            case ExprKind::phase: {
                Monomial m{};
                m[index(e)] = 1;
                return {{m, num(1.0)}};
            }
            case ExprKind::neg: {
                Polynomial p = collect(*e.lhs);
                for (auto& [m, c] : p) c = neg(c);
                return p;
            }
            case ExprKind::add:
            case ExprKind::sub: {
                Polynomial p = collect(*e.lhs);
                for (auto& [m, c] : collect(*e.rhs)) {
                    auto it = p.find(m);
                    const ExprPtr base = it == p.end() ? num(0.0) : it->second;
                    p[m] = e.kind == ExprKind::add ? add(base, c) : sub(base, c);
                }
                return p;
            }
            case ExprKind::mul: return multiply(collect(*e.lhs), collect(*e.rhs));
            case ExprKind::div: {
                const Polynomial den = collect(*e.rhs);
                if (den.size() != 1 || den.begin()->first != Monomial{})
                    throw LoweringError("division by an expression containing phase-space symbols (offset " + std::to_string(e.offset) + ")");
                Polynomial p = collect(*e.lhs);
                for (auto& [m, c] : p) c = div(c, den.begin()->second);
                return p;
            }
            case ExprKind::pow: {
                const Polynomial base = collect(*e.lhs);
                if (base.size() == 1 && base.begin()->first == Monomial{}) return constant(sym::pow(base.begin()->second, e.exponent));
                Polynomial p = constant(num(1.0));
                for (unsigned k = 0; k < e.exponent; ++k) p = multiply(p, base);
                return p;
            }
            case ExprKind::call: {
                const Polynomial arg = collect(*e.lhs);
                for (const auto& [m, c] : arg)
                    if (m != Monomial{}) throw LoweringError("phase-space symbol inside " + e.name + "(): the expression is not polynomial");
                return constant(call(e.name, arg.empty() ? num(0.0) : arg.begin()->second));
            }
        }
        return {};
    }

private:
    static Polynomial constant(ExprPtr c) { return {{Monomial{}, std::move(c)}}; }

    std::size_t index(const Expr& e) const {
        for (std::size_t a = 0; a < names_.size(); ++a)
            if (names_[a] == e.name) return a;
        throw LoweringError("'" + e.name + "' is not a phase-space symbol in " + std::to_string(dim_) + "D (offset " + std::to_string(e.offset) + ")");
    }

    Polynomial multiply(const Polynomial& a, const Polynomial& b) const {
        Polynomial out;
        for (const auto& [ma, ca] : a) {
            for (const auto& [mb, cb] : b) {
                Monomial m{};
                for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
                if (degree(m) > 2) throw LoweringError("unsupported degree " + std::to_string(degree(m)) + " monomial " + monomial_text(m, dim_));
                auto it = out.find(m);
                const ExprPtr term = sym::mul(ca, cb);
                out[m] = it == out.end() ? term : sym::add(it->second, term);
            }
        }
        return out;
    }

    int dim_;
    std::vector<std::string> names_;
};

}  // namespace detail

/// Phase-space dimension implied by the symbols used: 2 if y, px or py appear.
inline int detect_dimension(const std::vector<ExprPtr>& exprs) {
    std::set<std::string> used;
    for (const auto& e : exprs) collect_phase_symbols(*e, used);
    const bool two = used.count("y") || used.count("px") || used.count("py");
    if (two && used.count("p")) throw LoweringError("'p' is ambiguous next to 2D symbols; use px and py");
    return two ? 2 : 1;
}

inline Polynomial collect_polynomial(const Expr& e, int dim) {
    if (dim != 1 && dim != 2) throw DimensionMismatch("phase-space dimension must be 1 or 2");
    return detail::Collector(dim).collect(e);
}

/// TimeScalar evaluating `e` against `bindings`, with its symbolic derivative.
/// Missing parameters are added to the bindings with value 1 (pi defaults to pi) and
/// reported through `defaulted`.
inline TimeScalar coefficient(const ExprPtr& e, const Bindings& bindings, std::set<std::string>* defaulted = nullptr) {
    std::set<std::string> names;
    collect_parameters(*e, names);
    for (const auto& n : names) {
        if (bindings->count(n)) continue;
        (*bindings)[n] = n == "pi" ? std::numbers::pi : 1.0;
        if (defaulted && n != "pi") defaulted->insert(n);
    }
    const ExprPtr de = time_derivative(e);
    return TimeScalar([e, bindings](double t) { return evaluate(*e, t, *bindings); },
                      [de, bindings](double t) { return evaluate(*de, t, *bindings); }, render(*e));
}

struct LoweredHamiltonian {
    QuadraticHamiltonian hamiltonian;
    std::set<std::string> defaulted;
};

struct LoweredObservable {
    LinearObservable observable;
    std::set<std::string> defaulted;
};

inline LoweredObservable lower_observable(const ExprPtr& e, int dim, const Bindings& bindings, const std::string& label = {}) {
    const Polynomial poly = collect_polynomial(*e, dim);
    std::set<std::string> defaulted;
    std::vector<TimeScalar> alpha;
    TimeScalar gamma = TimeScalar::constant(0.0, "0");
    for (int a = 0; a < 2 * dim; ++a) alpha.push_back(TimeScalar::constant(0.0, "0"));
    for (const auto& [m, c] : poly) {
        if (degree(m) > 1) throw LoweringError("observable '" + label + "' is not linear: contains " + monomial_text(m, dim));
        if (degree(m) == 0) {
            gamma = coefficient(c, bindings, &defaulted);
            continue;
        }
        for (int a = 0; a < 2 * dim; ++a)
            if (m[static_cast<std::size_t>(a)]) alpha[static_cast<std::size_t>(a)] = coefficient(c, bindings, &defaulted);
    }
    return {LinearObservable(dim, std::move(alpha), std::move(gamma), label), std::move(defaulted)};
}

inline LoweredHamiltonian lower_hamiltonian(const ExprPtr& e, int dim, const Bindings& bindings, const std::string& label = {}) {
    const Polynomial poly = collect_polynomial(*e, dim);
    std::set<std::string> defaulted;
    const int n2 = 2 * dim;
    std::vector<TimeScalar> mm(static_cast<std::size_t>(n2 * n2), TimeScalar::constant(0.0, "0"));
    std::vector<TimeScalar> v(static_cast<std::size_t>(n2), TimeScalar::constant(0.0, "0"));
    TimeScalar c = TimeScalar::constant(0.0, "0");
    for (const auto& [m, k] : poly) {
        std::vector<int> idx;
        for (int a = 0; a < n2; ++a)
            for (unsigned r = 0; r < m[static_cast<std::size_t>(a)]; ++r) idx.push_back(a);
        if (idx.empty()) {
            c = coefficient(k, bindings, &defaulted);
        } else if (idx.size() == 1) {
            v[static_cast<std::size_t>(idx[0])] = coefficient(k, bindings, &defaulted);
        } else if (idx[0] == idx[1]) {
            mm[static_cast<std::size_t>(idx[0] * n2 + idx[0])] = coefficient(sym::mul(sym::num(2.0), k), bindings, &defaulted);
        } else {
            const TimeScalar s = coefficient(k, bindings, &defaulted);
            mm[static_cast<std::size_t>(idx[0] * n2 + idx[1])] = s;
            mm[static_cast<std::size_t>(idx[1] * n2 + idx[0])] = s;
        }
    }
    return {QuadraticHamiltonian(dim, std::move(mm), std::move(v), std::move(c), label), std::move(defaulted)};
}

// ---- canonical printing of lowered objects ----

inline std::string render(const LinearObservable& a) {
    const auto names = phase_names(a.dim());
    std::string out;
    auto term = [&out](const std::string& coeff, const std::string& sym) {
        if (coeff == "0") return;
        if (!out.empty()) out += " + ";
        out += "(" + coeff + ")";
        if (!sym.empty()) out += "*" + sym;
    };
    for (int k = 0; k < 2 * a.dim(); ++k) term(a.alpha()[static_cast<std::size_t>(k)].description(), names[static_cast<std::size_t>(k)]);
    term(a.gamma().description(), "");
    return out.empty() ? "0" : out;
}

inline std::string render(const QuadraticHamiltonian& h) {
    const auto names = phase_names(h.dim());
    const int n2 = 2 * h.dim();
    std::string out;
    auto term = [&out](const std::string& coeff, const std::string& sym) {
        if (coeff == "0") return;
        if (!out.empty()) out += " + ";
        out += coeff;
        if (!sym.empty()) out += "*" + sym;
    };
    for (int a = 0; a < n2; ++a) {
        for (int b = a; b < n2; ++b) {
            const std::string& d = h.entry(a, b).description();
            if (d == "0") continue;
            if (a == b)
                term("((" + d + ")/2)", names[static_cast<std::size_t>(a)] + "^2");
            else
                term("(" + d + ")", names[static_cast<std::size_t>(a)] + "*" + names[static_cast<std::size_t>(b)]);
        }
    }
    for (int a = 0; a < n2; ++a) {
        const std::string& d = h.linear()[static_cast<std::size_t>(a)].description();
        if (d != "0") term("(" + d + ")", names[static_cast<std::size_t>(a)]);
    }
    if (h.scalar().description() != "0") term("(" + h.scalar().description() + ")", "");
    return out.empty() ? "0" : out;
}

// ---- model files ----

struct RunConfig {
    std::optional<std::size_t> grid_n;
    std::optional<double> grid_min, grid_max, dt, t_final, tol;
    std::optional<bool> branch_tracking;
};

struct ModelSource {
    std::string text;
    std::size_t offset = 0;  ///< byte offset of the text within the file
};

struct ModelFile {
    std::map<std::string, double> params;
    int dim = 0;  ///< 0: detect
    std::optional<ModelSource> hamiltonian;
    std::vector<std::pair<std::string, ModelSource>> observables;
    RunConfig run;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& text, std::size_t offset) {
    try {
        const ExprPtr e = parse(text);
        std::set<std::string> used;
        collect_parameters(*e, used);
        collect_phase_symbols(*e, used);
        for (const auto& n : used)
            if (n != "pi") throw ParseError("expected a number", offset);
        return evaluate(*e, 0.0, {});
    } catch (const ParseError& err) {
        throw ParseError(err.message(), offset + (err.offset() < text.size() ? err.offset() : 0));
    }
}

}  // namespace detail

/// Parses the section structure of a model file. Expressions are kept as text and parsed
/// by lower_model so that errors carry file offsets.
inline ModelFile parse_model_file(const std::string& content) {
    ModelFile mf;
    std::string section;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string line = content.substr(pos, eol - pos);
        const std::size_t line_start = pos;
        pos = eol + 1;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const std::size_t body_at = line_start + line.find(body.front());
        if (body.front() == '[') {
            if (body.back() != ']') throw ParseError("malformed section header", body_at);
            section = detail::trim(body.substr(1, body.size() - 2));
            if (section != "params" && section != "hamiltonian" && section != "observables" && section != "run" && section != "phase_space")
                throw ParseError("unknown section [" + section + "]", body_at);
            continue;
        }
        const auto eq = body.find('=');
        std::string key = eq == std::string::npos ? std::string() : detail::trim(body.substr(0, eq));
        std::string value = eq == std::string::npos ? body : body.substr(eq + 1);
        std::size_t value_at = body_at + (eq == std::string::npos ? 0 : eq + 1);
        if (section == "hamiltonian") {
            if (mf.hamiltonian) throw ParseError("more than one hamiltonian", body_at);
            mf.hamiltonian = ModelSource{value, value_at};
            continue;
        }
        if (eq == std::string::npos || key.empty()) throw ParseError("expected 'name = value'", body_at);
        if (section == "params") {
            mf.params[key] = detail::parse_double(value, value_at);
        } else if (section == "observables") {
            mf.observables.emplace_back(key, ModelSource{value, value_at});
        } else if (section == "phase_space") {
            if (key != "dim") throw ParseError("unknown phase_space key '" + key + "'", body_at);
            const double d = detail::parse_double(value, value_at);
            if (d != 1.0 && d != 2.0) throw ParseError("dim must be 1 or 2", value_at);
            mf.dim = static_cast<int>(d);
        } else if (section == "run") {
            const std::string v = detail::trim(value);
            if (key == "branch_tracking") {
                if (v != "true" && v != "false") throw ParseError("branch_tracking must be true or false", value_at);
                mf.run.branch_tracking = v == "true";
            } else {
                const double d = detail::parse_double(value, value_at);
                if (key == "grid.n") {
                    if (!(d >= 2.0 && d <= 1e8) || d != std::floor(d)) throw ParseError("grid.n must be a positive integer", value_at);
                    mf.run.grid_n = static_cast<std::size_t>(d);
                } else if (key == "grid.min") mf.run.grid_min = d;
                else if (key == "grid.max") mf.run.grid_max = d;
                else if (key == "dt") mf.run.dt = d;
                else if (key == "t_final") mf.run.t_final = d;
                else if (key == "tol") mf.run.tol = d;
                else throw ParseError("unknown run key '" + key + "'", body_at);
            }
        } else {
            throw ParseError("content outside a section", body_at);
        }
    }
    return mf;
}

struct Model {
    int dim = 1;
    Bindings bindings;
    std::optional<QuadraticHamiltonian> hamiltonian;
    std::vector<LinearObservable> observables;
    std::set<std::string> defaulted;
    RunConfig run;
};

/// Parses and lowers every expression of a model file; `overrides` replace [params] values.
inline Model lower_model(const ModelFile& mf, const std::map<std::string, double>& overrides = {}) {
    Model model;
    model.run = mf.run;
    auto values = mf.params;
    for (const auto& [k, v] : overrides) values[k] = v;
    model.bindings = make_bindings(values);

    auto parse_at = [](const ModelSource& src) {
        try {
            return parse(src.text);
        } catch (const ParseError& e) {
            throw ParseError(e.message(), src.offset + e.offset());
        }
    };
    std::optional<ExprPtr> h_expr;
    std::vector<ExprPtr> all;
    if (mf.hamiltonian) {
        h_expr = parse_at(*mf.hamiltonian);
        all.push_back(*h_expr);
    }
    std::vector<ExprPtr> obs;
    for (const auto& [name, src] : mf.observables) {
        obs.push_back(parse_at(src));
        all.push_back(obs.back());
    }
    model.dim = mf.dim ? mf.dim : detect_dimension(all);
    if (h_expr) {
        auto lh = lower_hamiltonian(*h_expr, model.dim, model.bindings, "H");
        model.hamiltonian = std::move(lh.hamiltonian);
        model.defaulted.insert(lh.defaulted.begin(), lh.defaulted.end());
    }
    for (std::size_t k = 0; k < obs.size(); ++k) {
        auto lo = lower_observable(obs[k], model.dim, model.bindings, mf.observables[k].first);
        model.observables.push_back(std::move(lo.observable));
        model.defaulted.insert(lo.defaulted.begin(), lo.defaulted.end());
    }
    return model;
}

}  // namespace comgreen

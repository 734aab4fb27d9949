#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace comgreen;

namespace {

std::vector<double> sample_times(int n, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.05, hi);
    std::vector<double> ts;
    for (int k = 0; k < n; ++k) ts.push_back(U(rng));
    return ts;
}

double max_gap(const LinearObservable& a, const LinearObservable& b, const std::vector<double>& ts) {
    double worst = 0.0;
    for (double t : ts) {
        const LinearForm fa = a.at(t), fb = b.at(t);
        worst = std::max({worst, (fa.alpha - fb.alpha).cwiseAbs().maxCoeff(), std::abs(fa.gamma - fb.gamma)});
        for (std::size_t k = 0; k < a.alpha().size(); ++k)
            worst = std::max(worst, std::abs(a.alpha()[k].derivative(t) - b.alpha()[k].derivative(t)));
        worst = std::max(worst, std::abs(a.gamma().derivative(t) - b.gamma().derivative(t)));
    }
    return worst;
}

double max_gap(const QuadraticHamiltonian& a, const QuadraticHamiltonian& b, const std::vector<double>& ts) {
    double worst = 0.0;
    for (double t : ts) {
        worst = std::max(worst, (a.matrix(t) - b.matrix(t)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.vector(t) - b.vector(t)).cwiseAbs().maxCoeff());
        worst = std::max(worst, std::abs(a.scalar_at(t) - b.scalar_at(t)));
        for (std::size_t k = 0; k < a.linear().size(); ++k)
            worst = std::max(worst, std::abs(a.linear()[k].derivative(t) - b.linear()[k].derivative(t)));
    }
    return worst;
}

LinearObservable obs(const std::string& text, int dim, const std::map<std::string, double>& params) {
    return lower_observable(parse(text), dim, make_bindings(params), text).observable;
}

QuadraticHamiltonian ham(const std::string& text, int dim, const std::map<std::string, double>& params) {
    return lower_hamiltonian(parse(text), dim, make_bindings(params), text).hamiltonian;
}

std::map<std::string, double> bindings_of(const PhysicalParams& p) { return {{"m", p.m}, {"w", p.omega}, {"k", p.k}, {"eE", p.eE}}; }

}  // namespace

// ---- parse ----

TEST(Parse, OscillatorObservableHasTwoTopLevelTerms) {
    const ExprPtr e = parse("x*cos(w*t) - p*sin(w*t)/(m*w)");
    ASSERT_EQ(e->kind, ExprKind::sub);
    EXPECT_EQ(e->lhs->kind, ExprKind::mul);
    EXPECT_EQ(e->rhs->kind, ExprKind::div);
    EXPECT_EQ(e->rhs->lhs->kind, ExprKind::mul);
    EXPECT_EQ(e->rhs->lhs->rhs->kind, ExprKind::call);
    EXPECT_EQ(e->rhs->lhs->rhs->name, "sin");
}

TEST(Parse, RampHamiltonian) {
    const ExprPtr e = parse("p^2/(2*m) - k*t*x");
    ASSERT_EQ(e->kind, ExprKind::sub);
    ASSERT_EQ(e->lhs->kind, ExprKind::div);
    EXPECT_EQ(e->lhs->lhs->kind, ExprKind::pow);
    EXPECT_EQ(e->lhs->lhs->exponent, 2u);
    EXPECT_EQ(e->lhs->lhs->lhs->kind, ExprKind::phase);
    // k*t*x is (k*t)*x
    ASSERT_EQ(e->rhs->kind, ExprKind::mul);
    EXPECT_EQ(e->rhs->rhs->kind, ExprKind::phase);
    EXPECT_EQ(e->rhs->lhs->lhs->kind, ExprKind::parameter);
    EXPECT_EQ(e->rhs->lhs->rhs->kind, ExprKind::time);
}

TEST(Parse, PrecedenceAndAssociativity) {
    auto value = [](const std::string& s) { return evaluate(*parse(s), 0.0, {}); };
    EXPECT_EQ(value("8-3-2"), 3.0);
    EXPECT_EQ(value("8/4/2"), 1.0);
    EXPECT_EQ(value("-2^2"), -4.0);
    EXPECT_EQ(value("2*3^2"), 18.0);
    EXPECT_EQ(value("1+2*3"), 7.0);
    EXPECT_EQ(value("(1+2)*3"), 9.0);
    EXPECT_EQ(value("--3"), 3.0);
    EXPECT_EQ(value(" 1.5e1 +\t2 "), 17.0);
    EXPECT_DOUBLE_EQ(evaluate(*parse("a*t^2"), 3.0, {{"a", 0.5}}), 4.5);
}

TEST(Parse, Errors) {
    try {
        parse("x*(");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 3u);
    }
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("   "), ParseError);
    EXPECT_THROW(parse("(x"), ParseError);
    try {
        parse("x+1)");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 3u);
    }
    EXPECT_THROW(parse("x^y"), ParseError);
    EXPECT_THROW(parse("x^1.5"), ParseError);
    EXPECT_THROW(parse("x^-1"), ParseError);
    EXPECT_THROW(parse("log(x)"), ParseError);
    EXPECT_THROW(parse("2 3"), ParseError);
    EXPECT_THROW(parse("x $ p"), ParseError);
    EXPECT_THROW(parse(std::string(100000, '(') + "x" + std::string(100000, ')')), ParseError);
}

TEST(Parse, RenderIsReparseable) {
    for (const std::string s : {"x*cos(w*t) - p*sin(w*t)/(m*w)", "p^2/(2*m) - k*t*x", "a-(b-c)", "a/(b/c)", "(-a)^2", "-(a+b)*c", "2^3^1"}) {
        const ExprPtr e = parse(s);
        const std::string r = render(e);
        EXPECT_EQ(render(parse(r)), r) << s;
        const std::map<std::string, double> vals{{"a", 1.3}, {"b", 0.7}, {"c", 2.1}, {"w", 0.9}, {"m", 1.7}, {"k", 0.4}, {"x", 0.0}, {"p", 0.0}};
        std::set<std::string> phase;
        collect_phase_symbols(*e, phase);
        if (phase.empty()) {
            EXPECT_DOUBLE_EQ(evaluate(*parse(r), 0.8, vals), evaluate(*e, 0.8, vals)) << s;
        }
    }
}

// ---- lowering against the catalog ----

TEST(Lower, CatalogObservables) {
    for (const auto& p : {PhysicalParams{}, PhysicalParams{1.0, 1.7, 0.8, 0.6, 1.3}}) {
        const auto b = bindings_of(p);
        const auto ts = sample_times(20, 3.0, 7);
        EXPECT_LE(max_gap(obs("x*cos(w*t) - p*sin(w*t)/(m*w)", 1, b), catalog::observable("ho_x0", p), ts), 1e-12);
        EXPECT_LE(max_gap(obs("x - t*p/m + k*t^3/(3*m)", 1, b), catalog::observable("ramp_x0", p), ts), 1e-12);
        EXPECT_LE(max_gap(obs("x - t*p/m + eE*t^2/(2*m)", 1, b), catalog::observable("uniform_x0", p), ts), 1e-12);
        EXPECT_LE(max_gap(obs("x*(1 + cos(w*t))/2 - y*sin(w*t)/2 - px*sin(w*t)/(m*w) + py*(1 - cos(w*t))/(m*w)", 2, b),
                          catalog::observable("magnetic_x0", p), ts),
                  1e-12);
        EXPECT_LE(max_gap(obs("x*sin(w*t)/2 + y*(1 + cos(w*t))/2 - px*(1 - cos(w*t))/(m*w) - py*sin(w*t)/(m*w)", 2, b),
                          catalog::observable("magnetic_y0", p), ts),
                  1e-12);
    }
}

TEST(Lower, UniformFieldWithSeparateCharge) {
    const auto o = obs("x - t*p/m + e*E*t^2/(2*m)", 1, {{"e", 2.0}, {"E", 0.35}, {"m", 1.4}});
    PhysicalParams p;
    p.eE = 0.7;
    p.m = 1.4;
    EXPECT_LE(max_gap(o, catalog::observable("uniform_x0", p), sample_times(20, 3.0, 11)), 1e-12);
    const LinearForm f = o.at(2.0);
    EXPECT_EQ(f.alpha(0), 1.0);
    EXPECT_NEAR(f.alpha(1), -2.0 / 1.4, 1e-15);
    EXPECT_NEAR(f.gamma, 0.7 * 4.0 / 2.8, 1e-15);
}

TEST(Lower, CatalogHamiltonians) {
    const auto ts = sample_times(20, 3.0, 3);
    const PhysicalParams p{1.0, 1.7, 0.8, 0.6, 1.3};
    const auto b = bindings_of(p);
    EXPECT_LE(max_gap(ham("p^2/(2*m) + m*w^2*x^2/2", 1, b), catalog::hamiltonian("ho", p), ts), 1e-12);
    EXPECT_LE(max_gap(ham("p^2/(2*m) - k*t*x", 1, b), catalog::hamiltonian("ramp", p), ts), 1e-12);
    EXPECT_LE(max_gap(ham("p^2/(2*m) - eE*x", 1, b), catalog::hamiltonian("uniform", p), ts), 1e-12);
    EXPECT_LE(max_gap(ham("p^2/(2*m)", 1, b), catalog::hamiltonian("free", p), ts), 1e-12);
}

TEST(Lower, MagneticHamiltonianFromFieldParameters) {
    // e B / (m c) = 1 reproduces the default catalog model with m = 4
    const std::map<std::string, double> b{{"e", 2.0}, {"B", 3.0}, {"c", 1.5}, {"m", 4.0}};
    const auto h = ham("((px + (e*B/(2*c))*y)^2 + (py - (e*B/(2*c))*x)^2)/(2*m)", 2, b);
    PhysicalParams p;
    p.m = 4.0;
    EXPECT_LE(max_gap(h, catalog::hamiltonian("magnetic", p), sample_times(20, 6.0, 5)), 1e-12);
}

TEST(Lower, Errors) {
    const auto b = make_bindings();
    try {
        lower_hamiltonian(parse("x^3"), 1, b);
        FAIL();
    } catch (const LoweringError& e) {
        EXPECT_NE(std::string(e.what()).find("x^3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(lower_hamiltonian(parse("x*p*y"), 2, b), LoweringError);
    EXPECT_THROW(lower_hamiltonian(parse("cos(x)"), 1, b), LoweringError);
    EXPECT_THROW(lower_hamiltonian(parse("1/x"), 1, b), LoweringError);
    EXPECT_THROW(lower_observable(parse("x^2"), 1, b), LoweringError);
    EXPECT_THROW(lower_observable(parse("y"), 1, b), LoweringError);
    EXPECT_THROW(detect_dimension({parse("p + px")}), LoweringError);
    EXPECT_EQ(detect_dimension({parse("x + p")}), 1);
    EXPECT_EQ(detect_dimension({parse("x + py")}), 2);
    // (x+p)^2 - (x+p)^2 stays quadratic in the intermediate expansion only
    EXPECT_NO_THROW(lower_hamiltonian(parse("(x+p)^2 - x^2"), 1, b));
}

TEST(Lower, WeylOrderingIgnoresTextOrder) {
    const auto b = make_bindings({{"a", 0.3}});
    const auto h1 = ham("a*x*p", 1, *b), h2 = ham("a*p*x", 1, *b), h3 = ham("a*(x*p + p*x)/2", 1, *b);
    const auto ts = sample_times(5, 2.0, 1);
    EXPECT_EQ(max_gap(h1, h2, ts), 0.0);
    EXPECT_LE(max_gap(h1, h3, ts), 1e-15);
    EXPECT_DOUBLE_EQ(h1.matrix(0.0)(0, 1), 0.3);
    EXPECT_DOUBLE_EQ(h1.matrix(0.0)(1, 0), 0.3);
}

TEST(Lower, AnalyticDerivatives) {
    const auto b = bindings_of({});
    const auto o = obs("x*exp(-t^2)*sqrt(1+t) + tan(t)*p", 1, b);
    for (double t : {0.1, 0.7, 1.2}) {
        EXPECT_NEAR(o.alpha()[0].derivative(t), o.alpha()[0].numerical_derivative(t), 1e-8);
        EXPECT_NEAR(o.alpha()[1].derivative(t), 1 / (std::cos(t) * std::cos(t)), 1e-13);
    }
}

TEST(Lower, ParametersAreLateBound) {
    const Bindings b = make_bindings({{"k", 1.0}});
    auto lh = lower_hamiltonian(parse("p^2/2 - k*t*x"), 1, b);
    EXPECT_DOUBLE_EQ(lh.hamiltonian.vector(2.0)(0), -2.0);
    (*b)["k"] = 3.0;
    EXPECT_DOUBLE_EQ(lh.hamiltonian.vector(2.0)(0), -6.0);
    auto defaulted = lower_hamiltonian(parse("p^2/(2*m) - q*x"), 1, make_bindings());
    EXPECT_EQ(defaulted.defaulted, (std::set<std::string>{"m", "q"}));
}

TEST(RoundTrip, EveryCatalogObject) {
    for (const auto& p : {PhysicalParams{}, PhysicalParams{1.0, 1.7, 0.8, 0.6, 1.3}}) {
        const auto ts = sample_times(20, 3.0, 13);
        for (const auto& name : catalog::observable_names()) {
            const auto o = catalog::observable(name, p);
            EXPECT_LE(max_gap(obs(render(o), o.dim(), bindings_of(p)), o, ts), 1e-12) << name << ": " << render(o);
        }
        for (const auto& name : catalog::hamiltonian_names()) {
            const auto h = catalog::hamiltonian(name, p);
            EXPECT_LE(max_gap(ham(render(h), h.dim(), bindings_of(p)), h, ts), 1e-12) << name << ": " << render(h);
        }
    }
}

// ---- fuzzing ----

TEST(Fuzz, ParserIsTotal) {
    std::mt19937_64 rng(20261015);
    const std::string alphabet = "xyp0123456789.e+-*/^() \tabcwmkt,$\n";
    const std::vector<std::string> tokens{"x", "p", "y", "px", "py", "t", "m", "w", "2", "0.5", "1e3", "+", "-", "*", "/", "^", "(", ")", "sin(", "cos(", "exp(", "sqrt(", "tan(", " "};
    std::uniform_int_distribution<int> len(0, 40), byte(0, 255);
    int parsed = 0, lowered = 0;
    for (int k = 0; k < 100000; ++k) {
        std::string s;
        const int n = len(rng);
        const int mode = k % 3;
        for (int i = 0; i < n; ++i) {
            if (mode == 0) s += static_cast<char>(byte(rng));
            else if (mode == 1) s += alphabet[static_cast<std::size_t>(rng() % alphabet.size())];
            else s += tokens[static_cast<std::size_t>(rng() % tokens.size())];
        }
        ExprPtr e;
        try {
            e = parse(s);
        } catch (const ParseError& err) {
            ASSERT_LE(err.offset(), s.size()) << s;
            continue;
        }
        ++parsed;
        ASSERT_TRUE(e);
        EXPECT_EQ(render(parse(render(e))), render(e));
        try {
            std::vector<ExprPtr> all{e};
            const int dim = detect_dimension(all);
            lower_hamiltonian(e, dim, make_bindings());
            ++lowered;
        } catch (const LoweringError&) {
        } catch (const DimensionMismatch&) {
        } catch (const Error&) {
        }
    }
    EXPECT_GT(parsed, 1000);
    EXPECT_GT(lowered, 100);
}

// ---- model files ----

TEST(ModelFile, SectionsRunAndOverrides) {
    const std::string text =
        "# ramp model\n"
        "[params]\n"
        "m = 2\n"
        "k = 0.5   # field slope\n"
        "\n"
        "[hamiltonian]\n"
        "H = p^2/(2*m) - k*t*x\n"
        "[observables]\n"
        "X0 = x - t*p/m + k*t^3/(3*m)\n"
        "[run]\n"
        "grid.n = 1024\n"
        "grid.min = -20\n"
        "grid.max = 20\n"
        "dt = 0.002\n"
        "t_final = 2*pi\n"
        "branch_tracking = true\n";
    const ModelFile mf = parse_model_file(text);
    EXPECT_EQ(mf.params.at("m"), 2.0);
    EXPECT_EQ(mf.run.grid_n, 1024u);
    EXPECT_EQ(mf.run.grid_min, -20.0);
    EXPECT_DOUBLE_EQ(*mf.run.t_final, 2 * oracle::pi);
    EXPECT_EQ(mf.run.branch_tracking, true);
    EXPECT_FALSE(mf.run.tol);
    ASSERT_TRUE(mf.hamiltonian);
    EXPECT_EQ(text.substr(mf.hamiltonian->offset, mf.hamiltonian->text.size()), mf.hamiltonian->text);

    const Model model = lower_model(mf, {{"k", 0.25}});
    EXPECT_EQ(model.dim, 1);
    ASSERT_EQ(model.observables.size(), 1u);
    EXPECT_EQ(model.observables[0].label(), "X0");
    EXPECT_DOUBLE_EQ(model.hamiltonian->vector(2.0)(0), -0.5);
    PhysicalParams p;
    p.m = 2.0;
    p.k = 0.25;
    EXPECT_LE(conservation_residual(model.observables[0], *model.hamiltonian, 1.3).max_abs(), 1e-12);
    EXPECT_LE(max_gap(*model.hamiltonian, catalog::hamiltonian("ramp", p), sample_times(20, 3.0, 2)), 1e-12);
    EXPECT_TRUE(model.defaulted.empty());
}

TEST(ModelFile, DimensionAndDefaults) {
    const Model m = lower_model(parse_model_file("[hamiltonian]\nH = (px^2 + py^2)/(2*m)\n[observables]\nX = x - t*px/m\nY = y - t*py/m\n"));
    EXPECT_EQ(m.dim, 2);
    EXPECT_EQ(m.defaulted, (std::set<std::string>{"m"}));
    const Model forced = lower_model(parse_model_file("[phase_space]\ndim = 2\n[observables]\nX = x\n"));
    EXPECT_EQ(forced.dim, 2);
}

TEST(ModelFile, ErrorsCarryFileOffsets) {
    const std::string text = "[params]\nm = 1\n[hamiltonian]\nH = p^2/(2*m\n";
    try {
        lower_model(parse_model_file(text));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), text.size() - 1);
    }
    EXPECT_THROW(parse_model_file("[nonsense]\n"), ParseError);
    EXPECT_THROW(parse_model_file("[params]\nm\n"), ParseError);
    EXPECT_THROW(parse_model_file("[params]\nm = x\n"), ParseError);
    EXPECT_THROW(parse_model_file("m = 1\n"), ParseError);
    EXPECT_THROW(parse_model_file("[run]\ngrid.n = 10.5\n"), ParseError);
    EXPECT_THROW(parse_model_file("[run]\nbranch_tracking = maybe\n"), ParseError);
    EXPECT_THROW(parse_model_file("[run]\nspeed = 3\n"), ParseError);
    EXPECT_THROW(parse_model_file("[hamiltonian]\nH = p^2\nH = x^2\n"), ParseError);
    EXPECT_THROW(parse_model_file("[phase_space]\ndim = 3\n"), ParseError);
}

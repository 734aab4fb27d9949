// comgreen: command-line front end.
//
//   comgreen list
//   comgreen verify    --system ho | --config model.cg [--observable EXPR]... [--t-min A --t-max B] [--samples N] [--tol T]
//   comgreen derive    --system ramp | --config model.cg [--csv FILE] [--window-max T]
//   comgreen kernel    --system ho --t 1.2 --x 0.3 --x0 -0.5 [--branch-tracking] [--derived]
//   comgreen propagate --system ho [--center C] [--momentum K] [--sigma S] [--t-final T] [--dt D] [--n N] [--min A] [--max B]
//   comgreen spectrum  --system ho [--tau-min A --tau-max B]
//   comgreen parse     --expr TEXT | --config model.cg
//
// Every command prints one JSON document on stdout. Exit status: 0 pass, 1 fail, 2 invalid input.
// Options given as flags override the [params] and [run] sections of --config.

#include <CLI11.hpp>
#include <cmath>
#include <comgreen/comgreen.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

using namespace comgreen;
using nlohmann::json;

namespace {

// ---- output ----

std::string number_text(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(std::ostream& os, const json& j, int level = 0) {
    const std::string pad(static_cast<std::size_t>(2 * level + 2), ' '), close(static_cast<std::size_t>(2 * level), ' ');
    switch (j.type()) {
        case json::value_t::number_float: os << number_text(j.get<double>()); return;
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(key).dump() << ": ";
                write_json(os, value, level + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            os << (flat ? "[" : "[\n");
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) os << (flat ? ", " : ",\n");
                if (!flat) os << pad;
                write_json(os, j[k], level + 1);
            }
            os << (flat ? "]" : "\n" + close + "]");
            return;
        }
        default: os << j.dump();
    }
}

void emit(const json& j) {
    write_json(std::cout, j);
    std::cout << "\n";
}

json complex_json(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
}

std::string linear_form_text(const LinearForm& f) {
    const auto names = phase_names(f.dim());
    std::string s;
    auto term = [&s](double c, const std::string& sym) {
        if (c == 0.0) return;
        if (!s.empty()) s += " + ";
        s += number_text(c);
        if (!sym.empty()) s += "*" + sym;
    };
    for (int k = 0; k < 2 * f.dim(); ++k) term(f.alpha(k), names[static_cast<std::size_t>(k)]);
    term(f.gamma, "");
    return s.empty() ? "0" : s;
}

// ---- errors and exit codes ----

class UsageError : public Error {
public:
    using Error::Error;
};

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const QuadratureError*>(&e) || dynamic_cast<const MatchingError*>(&e)) return 1;
    return 2;
}

// ---- configuration: --config file, then flags ----

struct Common {
    std::string system;
    std::string config;
    std::vector<std::string> params;
};

struct Setup {
    std::optional<Model> model;  ///< set when the config file defines a hamiltonian
    PhysicalParams physical;
    RunConfig run;
    std::string source;
};

void set_physical(PhysicalParams& p, const std::string& name, double v) {
    if (name == "hbar") p.hbar = v;
    else if (name == "m") p.m = v;
    else if (name == "omega" || name == "w") p.omega = v;
    else if (name == "k") p.k = v;
    else if (name == "eE") p.eE = v;
    else throw UsageError("catalog systems have no parameter '" + name + "' (use hbar, m, omega, k, eE)");
}

std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects NAME=VALUE, got '" + item + "'");
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty()) throw UsageError("--param value '" + value + "' is not a number");
        out[item.substr(0, eq)] = v;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Setup load(const Common& c, bool need_source = true) {
    Setup s;
    const auto overrides = parse_assignments(c.params);
    ModelFile mf;
    if (!c.config.empty()) mf = parse_model_file(read_file(c.config));
    s.run = mf.run;
    if (!c.system.empty()) {
        if (std::find(catalog::hamiltonian_names().begin(), catalog::hamiltonian_names().end(), c.system) == catalog::hamiltonian_names().end())
            throw UsageError("unknown catalog system '" + c.system + "'");
        if (mf.hamiltonian) throw UsageError("--system and a config file with a [hamiltonian] section are exclusive");
        for (const auto& [k, v] : mf.params) set_physical(s.physical, k, v);
        for (const auto& [k, v] : overrides) set_physical(s.physical, k, v);
        s.source = "catalog:" + c.system;
    } else if (mf.hamiltonian) {
        s.model = lower_model(mf, overrides);
        if (auto it = s.model->bindings->find("hbar"); it != s.model->bindings->end()) s.physical.hbar = it->second;
        s.source = "config:" + c.config;
    } else if (need_source) {
        throw UsageError("give --system NAME or a --config file with a [hamiltonian] section");
    }
    return s;
}

QuadraticHamiltonian hamiltonian_of(const Setup& s, const Common& c) {
    return s.model ? *s.model->hamiltonian : catalog::hamiltonian(c.system, s.physical);
}

std::vector<LinearObservable> observables_of(const Setup& s, const Common& c) {
    if (s.model) return s.model->observables;
    return catalog::system(c.system, s.physical).initial_position;
}

template <typename T>
T pick(const CLI::Option* flag, const T& flag_value, const std::optional<T>& file_value, const T& fallback) {
    if (flag->count()) return flag_value;
    if (file_value) return *file_value;
    return fallback;
}

/// Kernel of a catalog system, or assembled from the model's constants of motion.
KernelSpec kernel_of(const Setup& s, const Common& c, bool derived, bool tracked, double window_max) {
    if (s.model) {
        if (!s.model->hamiltonian) throw UsageError("config file has no hamiltonian");
        AssembleOptions opt;
        opt.system = s.source;
        opt.hbar = s.physical.hbar;
        opt.params = *s.model->bindings;
        if (tracked) throw UsageError("branch tracking is available for catalog kernels only");
        return assemble_kernel(s.model->observables, *s.model->hamiltonian, {0.0, window_max}, opt);
    }
    const BranchMode branch = tracked ? BranchMode::tracked : BranchMode::first_window;
    if (!derived) return catalog::kernel(c.system, s.physical, branch);
    if (tracked) throw UsageError("branch tracking is available for catalog kernels only");
    const auto sys = catalog::system(c.system, s.physical);
    AssembleOptions opt;
    opt.system = c.system;
    opt.hbar = s.physical.hbar;
    opt.params = s.physical.to_json();
    opt.gauge = catalog::gauge(c.system, s.physical);
    return assemble_kernel(sys.initial_position, sys.hamiltonian, catalog::kernel(c.system, s.physical).window, opt);
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--system", c.system, "catalog system: free, ho, ramp, uniform, magnetic");
    cmd->add_option("--config", c.config, "model file with [params], [hamiltonian], [observables], [run]");
    cmd->add_option("--param", c.params, "NAME=VALUE, overrides the config file; repeatable");
}

// ---- list ----

int cmd_list() {
    json kernels = json::array();
    for (const auto& name : catalog::kernel_names()) kernels.push_back(to_json(catalog::kernel(name)));
    emit({{"command", "list"},
          {"observables", catalog::observable_names()},
          {"hamiltonians", catalog::hamiltonian_names()},
          {"kernels", kernels}});
    return 0;
}

// ---- verify ----

struct VerifyArgs {
    Common c;
    std::vector<std::string> observables;
    double t_min = 0.0, t_max = 0.0, tol = 1e-10;
    int samples = 50;
    CLI::Option *t_max_flag = nullptr, *tol_flag = nullptr;
};

int cmd_verify(const VerifyArgs& a) {
    const Setup s = load(a.c);
    const QuadraticHamiltonian h = hamiltonian_of(s, a.c);
    std::vector<LinearObservable> set;
    if (!a.observables.empty()) {
        const auto bindings = s.model ? s.model->bindings : make_bindings(s.physical.symbols());
        for (const auto& text : a.observables) set.push_back(lower_observable(parse(text), h.dim(), bindings, text).observable);
    } else {
        set = observables_of(s, a.c);
    }
    if (set.empty()) throw UsageError("no observables to verify");
    if (a.samples < 1) throw UsageError("--samples must be positive");

    double hi = 1.0;
    if (a.t_max_flag->count()) hi = a.t_max;
    else if (s.run.t_final) hi = *s.run.t_final;
    else if (!s.model) {
        const Interval w = catalog::kernel(a.c.system, s.physical).window;
        hi = std::isfinite(w.hi) ? w.hi : 4.0;
    }
    if (!(hi > a.t_min)) throw UsageError("empty time window");
    const double tol = pick(a.tol_flag, a.tol, s.run.tol, 1e-10);
    const auto times = chebyshev_times(a.t_min, hi, a.samples);

    json per = json::array();
    for (const auto& obs : set) {
        double worst = -1.0, worst_t = times.front();
        LinearForm worst_r = conservation_residual(obs, h, worst_t);
        for (double t : times) {
            const LinearForm r = conservation_residual(obs, h, t);
            if (r.max_abs() > worst) {
                worst = r.max_abs();
                worst_t = t;
                worst_r = r;
            }
        }
        per.push_back({{"label", obs.label()},
                       {"max_residual", worst},
                       {"worst_t", worst_t},
                       {"residual", {{"alpha", vector_json(worst_r.alpha)}, {"gamma", worst_r.gamma}, {"text", linear_form_text(worst_r)}}},
                       {"pass", worst <= tol}});
    }
    const auto report = check_commuting_complete_set(set, h, times, tol);
    emit({{"command", "verify"},
          {"source", s.source},
          {"hamiltonian", h.label()},
          {"window", {a.t_min, hi}},
          {"samples", a.samples},
          {"tol", tol},
          {"observables", per},
          {"commuting_set", report.to_json()},
          {"pass", report.pass}});
    return report.pass ? 0 : 1;
}

// ---- derive ----

struct DeriveArgs {
    Common c;
    std::string csv;
    double window_max = std::numeric_limits<double>::infinity(), tol = 1e-10, range = 2.0;
    int points = 21, times = 10;
    CLI::Option *tol_flag = nullptr, *window_flag = nullptr;
};

int cmd_derive(const DeriveArgs& a) {
    const Setup s = load(a.c);
    if (a.points < 2 || a.times < 1) throw UsageError("--points must be at least 2 and --times at least 1");
    const double wmax = pick(a.window_flag, a.window_max, s.run.t_final, std::numeric_limits<double>::infinity());
    const KernelSpec k = kernel_of(s, a.c, true, false, wmax);
    const double tol = pick(a.tol_flag, a.tol, s.run.tol, 1e-10);
    const double hi = std::isfinite(k.window.hi) ? k.window.hi : 4.0;
    std::optional<KernelSpec> ref;
    if (!s.model) ref = catalog::kernel(a.c.system, s.physical);

    std::ofstream csv;
    if (!a.csv.empty()) {
        csv.open(a.csv);
        if (!csv) throw UsageError("cannot write '" + a.csv + "'");
        csv << (k.dim == 1 ? "x,x0,t,re,im\n" : "x,y,x0,y0,t,re,im\n");
    }
    // 1D lines in x and x0, tilted lines through the plane in 2D
    auto point = [&](int i, bool source) {
        const double u = -a.range + 2.0 * a.range * i / (a.points - 1);
        if (k.dim == 1) return std::vector<double>{u};
        return source ? std::vector<double>{u, -0.2 + 0.4 * u} : std::vector<double>{u, 0.5 - 0.7 * u};
    };
    double worst = 0.0;
    for (int it = 1; it <= a.times; ++it) {
        const double t = hi * it / (a.times + 1.0);
        const auto slice = k.at(t);
        const auto ref_slice = ref ? std::optional<KernelSlice>(ref->at(t)) : std::nullopt;
        for (int i = 0; i < a.points; ++i)
            for (int j = 0; j < a.points; ++j) {
                const auto x = point(i, false), x0 = point(j, true);
                const cplx v = slice(x, x0);
                if (ref_slice) {
                    const cplx r = (*ref_slice)(x, x0);
                    worst = std::max(worst, std::abs(v - r) / std::abs(r));
                }
                if (csv.is_open()) {
                    for (double q : x) csv << number_text(q) << ",";
                    for (double q : x0) csv << number_text(q) << ",";
                    csv << number_text(t) << "," << number_text(v.real()) << "," << number_text(v.imag()) << "\n";
                }
            }
    }
    const bool pass = !ref || worst <= tol;
    emit({{"command", "derive"},
          {"source", s.source},
          {"kernel", to_json(k)},
          {"catalog_max_deviation", ref ? json(worst) : json(nullptr)},
          {"tol", tol},
          {"sample_grid", {{"points", a.points}, {"times", a.times}, {"range", a.range}}},
          {"csv", a.csv.empty() ? json(nullptr) : json(a.csv)},
          {"pass", pass}});
    return pass ? 0 : 1;
}

// ---- kernel ----

struct KernelArgs {
    Common c;
    std::vector<double> x, x0;
    double t = 0.0;
    bool derived = false, tracked = false;
    double window_max = std::numeric_limits<double>::infinity();
    CLI::Option *t_flag = nullptr, *tracked_flag = nullptr, *window_flag = nullptr;
};

int cmd_kernel(const KernelArgs& a) {
    const Setup s = load(a.c);
    const bool tracked = a.tracked_flag->count() ? a.tracked : s.run.branch_tracking.value_or(false);
    const double wmax = pick(a.window_flag, a.window_max, s.run.t_final, std::numeric_limits<double>::infinity());
    const KernelSpec k = kernel_of(s, a.c, a.derived, tracked, wmax);
    json out{{"command", "kernel"}, {"source", s.source}, {"kernel", to_json(k)}};
    if (a.t_flag->count()) {
        const std::vector<double> x = a.x.empty() ? std::vector<double>(static_cast<std::size_t>(k.dim), 0.0) : a.x;
        const std::vector<double> x0 = a.x0.empty() ? std::vector<double>(static_cast<std::size_t>(k.dim), 0.0) : a.x0;
        out["t"] = a.t;
        out["x"] = x;
        out["x0"] = x0;
        out["value"] = complex_json(kernel_evaluate(k, x, a.t, x0));
    }
    emit(out);
    return 0;
}

// ---- propagate ----

struct PropagateArgs {
    Common c;
    std::vector<double> center, momentum;
    double sigma = std::numbers::sqrt2 / 2.0, t_final = 1.0, dt = 0.0, lo = 0.0, hi = 0.0, tol = 0.0;
    std::size_t n = 0;
    int frames = 0;
    std::string out, format = "csv";
    bool derived = false;
    double window_max = std::numeric_limits<double>::infinity();
    CLI::Option *t_flag = nullptr, *dt_flag = nullptr, *n_flag = nullptr, *lo_flag = nullptr, *hi_flag = nullptr, *tol_flag = nullptr;
};

void write_frame(const GridState& g, const std::string& path, const std::string& format) {
    if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream os(path, format == "bin" ? std::ios::binary : std::ios::out);
    if (!os) throw UsageError("cannot write '" + path + "'");
    if (format == "bin") write_binary(os, g);
    else write_csv(os, g);
}

int cmd_propagate(const PropagateArgs& a) {
    const Setup s = load(a.c);
    const QuadraticHamiltonian h = hamiltonian_of(s, a.c);
    const int dim = h.dim();
    const std::size_t n = pick<std::size_t>(a.n_flag, a.n, s.run.grid_n, dim == 1 ? 1024 : 128);
    const double lo = pick(a.lo_flag, a.lo, s.run.grid_min, dim == 1 ? -20.0 : -12.0);
    const double hi = pick(a.hi_flag, a.hi, s.run.grid_max, dim == 1 ? 20.0 : 12.0);
    const double t_final = pick(a.t_flag, a.t_final, s.run.t_final, 1.0);
    const double dt = pick(a.dt_flag, a.dt, s.run.dt, dim == 1 ? 0.002 : 0.005);
    const double tol = pick(a.tol_flag, a.tol, s.run.tol, dim == 1 ? 1e-3 : 1e-2);
    if (!(a.sigma > 0.0)) throw UsageError("--sigma must be positive");
    if (a.frames < 0) throw UsageError("--frames must be non-negative");
    if (a.format != "csv" && a.format != "bin") throw UsageError("--format is csv or bin");
    auto component = [dim](const std::vector<double>& v, int axis, const char* what) {
        if (v.empty()) return 0.0;
        if (static_cast<int>(v.size()) != dim) throw UsageError(std::string(what) + " needs " + std::to_string(dim) + " components");
        return v[static_cast<std::size_t>(axis)];
    };
    const double cx = component(a.center, 0, "--center"), kx = component(a.momentum, 0, "--momentum");
    const double cy = dim == 2 ? component(a.center, 1, "--center") : 0.0, ky = dim == 2 ? component(a.momentum, 1, "--momentum") : 0.0;

    std::vector<Axis> axes(static_cast<std::size_t>(dim), Axis{lo, hi, n});
    for (const auto& ax : axes) ax.validate();
    const double sg = a.sigma;
    auto gauss = [sg](double q, double c, double k) {
        return std::pow(2.0 * std::numbers::pi * sg * sg, -0.25) * std::exp(-(q - c) * (q - c) / (4.0 * sg * sg) + cplx(0.0, k * (q - c)));
    };
    const GridState psi0 = GridState::sample(axes, [&](std::span<const double> x) {
        cplx v = gauss(x[0], cx, kx);
        if (x.size() == 2) v *= gauss(x[1], cy, ky);
        return v;
    });

    const KernelSpec k = kernel_of(s, a.c, a.derived, false, a.window_max);
    EvolveOptions eo;
    eo.hbar = s.physical.hbar;
    json frames = json::array();
    // quadrature first: it rejects packets that reach the grid edge
    const GridState quad = kernel_convolve(k, psi0, t_final);
    GridState evolved = psi0;
    std::vector<std::string> warnings;
    double drift = 0.0;
    std::size_t steps = 0;
    const int segments = std::max(1, a.frames);
    for (int f = 1; f <= segments; ++f) {
        const double tf = t_final * f / segments;
        auto r = evolve(h, evolved, tf, dt, eo);
        evolved = std::move(r.state);
        steps += r.steps;
        for (auto& w : r.warnings) warnings.push_back(std::move(w));
        drift = std::abs(norm(evolved) - norm(psi0)) / norm(psi0);
        if (a.frames > 0 && !a.out.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "_evolve_%04d.", f);
            const std::string path = a.out + name + a.format;
            write_frame(evolved, path, a.format);
            frames.push_back({{"t", tf}, {"path", path}});
        }
    }
    if (!a.out.empty()) {
        write_frame(quad, a.out + "_kernel." + a.format, a.format);
        if (a.frames == 0) write_frame(evolved, a.out + "_evolve." + a.format, a.format);
    }
    const double d = l2_distance(evolved, quad) / norm(psi0);
    const bool pass = d <= tol;
    json grid = json::array();
    for (const auto& ax : axes) grid.push_back({{"min", ax.min}, {"max", ax.max}, {"n", ax.n}});
    emit({{"command", "propagate"},
          {"source", s.source},
          {"kernel", to_json(k)},
          {"grid", grid},
          {"packet", {{"center", dim == 1 ? json{cx} : json{cx, cy}}, {"momentum", dim == 1 ? json{kx} : json{kx, ky}}, {"sigma", sg}}},
          {"t_final", t_final},
          {"dt", dt},
          {"steps", steps},
          {"norm_drift", drift},
          {"l2_disagreement", d},
          {"tol", tol},
          {"warnings", warnings},
          {"frames", frames},
          {"pass", pass}});
    return pass ? 0 : 1;
}

// ---- spectrum ----

struct SpectrumArgs {
    Common c;
    double tau_min = 10.0, tau_max = 30.0, odd_min = 5.0, odd_max = 15.0;
    std::string profile;
};

json estimate_json(const SpectralEstimate& e) {
    return {{"energy", e.continuous ? json(nullptr) : json(e.energy)}, {"spread", e.spread}, {"continuous", e.continuous}, {"tau", {e.tau_lo, e.tau_hi}}};
}

int cmd_spectrum(const SpectrumArgs& a) {
    const Setup s = load(a.c);
    if (s.model) throw UsageError("spectrum needs a catalog kernel, which carries the complex-time evaluator");
    const KernelSpec k = catalog::kernel(a.c.system, s.physical);
    SpectralOptions even;
    even.hbar = s.physical.hbar;
    if (!a.profile.empty()) {
        if (k.dim != 1) throw UsageError("--profile is available for 1D systems");
        const double L = 8.0 * std::sqrt(s.physical.hbar / (s.physical.m * std::max(s.physical.omega, 1e-300)));
        even.profile_axes = {{-std::min(L, 50.0), std::min(L, 50.0), 1024}};
    }
    const SpectralEstimate e0 = imaginary_time_ground_state(k, a.tau_min, a.tau_max, even);
    json out{{"command", "spectrum"}, {"source", s.source}, {"hbar", s.physical.hbar}, {"E0", estimate_json(e0)}, {"continuous", e0.continuous}};
    if (a.c.system == "ho") {
        SpectralOptions odd;
        odd.hbar = s.physical.hbar;
        odd.parity = Parity::odd;
        out["E1"] = estimate_json(imaginary_time_ground_state(k, a.odd_min, a.odd_max, odd));
    }
    if (!e0.profile.empty()) {
        std::ofstream os(a.profile);
        if (!os) throw UsageError("cannot write '" + a.profile + "'");
        write_csv(os, e0.profile.front());
        out["profile"] = a.profile;
    }
    emit(out);
    return 0;
}

// ---- parse ----

struct ParseArgs {
    Common c;
    std::string expr, kind = "auto";
    double t = 0.0;
};

json observable_json(const LinearObservable& o, double t) {
    const LinearForm f = o.at(t);
    return {{"kind", "observable"}, {"label", o.label()}, {"dim", o.dim()}, {"canonical", render(o)}, {"at", {{"t", t}, {"alpha", vector_json(f.alpha)}, {"gamma", f.gamma}}}};
}

json hamiltonian_json(const QuadraticHamiltonian& h, double t) {
    const Eigen::MatrixXd m = h.matrix(t);
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
    return {{"kind", "hamiltonian"},
            {"label", h.label()},
            {"dim", h.dim()},
            {"canonical", render(h)},
            {"at", {{"t", t}, {"M", rows}, {"v", vector_json(h.vector(t))}, {"c", h.scalar_at(t)}}}};
}

int cmd_parse(const ParseArgs& a) {
    if (!a.expr.empty() == !a.c.config.empty()) throw UsageError("give exactly one of --expr and --config");
    const auto overrides = parse_assignments(a.c.params);
    if (!a.expr.empty()) {
        const ExprPtr e = parse(a.expr);
        const int dim = detect_dimension({e});
        int degree_max = 0;
        for (const auto& [m, coeff] : collect_polynomial(*e, dim)) degree_max = std::max(degree_max, degree(m));
        std::string kind = a.kind;
        if (kind == "auto") kind = degree_max <= 1 ? "observable" : "hamiltonian";
        if (kind != "observable" && kind != "hamiltonian") throw UsageError("--kind is auto, observable or hamiltonian");
        const Bindings b = make_bindings(overrides);
        json lowered;
        std::set<std::string> defaulted;
        if (kind == "observable") {
            auto lo = lower_observable(e, dim, b, a.expr);
            lowered = observable_json(lo.observable, a.t);
            defaulted = lo.defaulted;
        } else {
            auto lh = lower_hamiltonian(e, dim, b, a.expr);
            lowered = hamiltonian_json(lh.hamiltonian, a.t);
            defaulted = lh.defaulted;
        }
        emit({{"command", "parse"}, {"input", a.expr}, {"ast", render(e)}, {"lowered", lowered}, {"defaulted", defaulted}});
        return 0;
    }
    const ModelFile mf = parse_model_file(read_file(a.c.config));
    const Model m = lower_model(mf, overrides);
    json obs = json::array();
    for (const auto& o : m.observables) obs.push_back(observable_json(o, a.t));
    json run = json::object();
    if (m.run.grid_n) run["grid.n"] = *m.run.grid_n;
    if (m.run.grid_min) run["grid.min"] = *m.run.grid_min;
    if (m.run.grid_max) run["grid.max"] = *m.run.grid_max;
    if (m.run.dt) run["dt"] = *m.run.dt;
    if (m.run.t_final) run["t_final"] = *m.run.t_final;
    if (m.run.tol) run["tol"] = *m.run.tol;
    if (m.run.branch_tracking) run["branch_tracking"] = *m.run.branch_tracking;
    emit({{"command", "parse"},
          {"input", a.c.config},
          {"dim", m.dim},
          {"params", *m.bindings},
          {"hamiltonian", m.hamiltonian ? hamiltonian_json(*m.hamiltonian, a.t) : json(nullptr)},
          {"observables", obs},
          {"run", run},
          {"defaulted", m.defaulted}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green functions of quadratic Hamiltonians from constants of motion"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto* list = app.add_subcommand("list", "catalog observables, hamiltonians and kernels");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "conservation and commuting-set checks");
    add_common(verify, va.c);
    verify->add_option("--observable", va.observables, "observable expression replacing the default set; repeatable");
    verify->add_option("--t-min", va.t_min, "start of the sampled window");
    va.t_max_flag = verify->add_option("--t-max", va.t_max, "end of the sampled window");
    verify->add_option("--samples", va.samples, "number of Chebyshev sample times")->capture_default_str();
    va.tol_flag = verify->add_option("--tol", va.tol, "residual tolerance")->capture_default_str();

    DeriveArgs da;
    auto* derive = app.add_subcommand("derive", "derive the kernel from constants of motion");
    add_common(derive, da.c);
    derive->add_option("--csv", da.csv, "write the (x, x0, t) sample table here");
    da.window_flag = derive->add_option("--window-max", da.window_max, "first caustic of a config model, if any");
    da.tol_flag = derive->add_option("--tol", da.tol, "allowed relative deviation from the catalog")->capture_default_str();
    derive->add_option("--points", da.points, "sample points per axis")->capture_default_str();
    derive->add_option("--times", da.times, "sample times across the window")->capture_default_str();
    derive->add_option("--range", da.range, "half-width of the sampled positions")->capture_default_str();

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "kernel metadata and point values");
    add_common(kernel, ka.c);
    ka.t_flag = kernel->add_option("--t", ka.t, "evaluation time");
    kernel->add_option("--x", ka.x, "final point, comma separated in 2D")->delimiter(',');
    kernel->add_option("--x0", ka.x0, "initial point, comma separated in 2D")->delimiter(',');
    kernel->add_flag("--derived", ka.derived, "use the pipeline kernel instead of the closed form");
    ka.tracked_flag = kernel->add_flag("--branch-tracking", ka.tracked, "continue past caustics with the Maslov phase");
    ka.window_flag = kernel->add_option("--window-max", ka.window_max, "first caustic of a config model, if any");

    PropagateArgs pa;
    auto* propagate = app.add_subcommand("propagate", "grid evolution against kernel quadrature");
    add_common(propagate, pa.c);
    propagate->add_option("--center", pa.center, "packet center")->delimiter(',');
    propagate->add_option("--momentum", pa.momentum, "packet mean momentum")->delimiter(',');
    propagate->add_option("--sigma", pa.sigma, "packet position spread (default 1/sqrt 2)");
    pa.t_flag = propagate->add_option("--t-final", pa.t_final, "final time (default 1)");
    pa.dt_flag = propagate->add_option("--dt", pa.dt, "time step");
    pa.n_flag = propagate->add_option("--n", pa.n, "grid points per axis");
    pa.lo_flag = propagate->add_option("--min", pa.lo, "grid lower edge");
    pa.hi_flag = propagate->add_option("--max", pa.hi, "grid upper edge");
    pa.tol_flag = propagate->add_option("--tol", pa.tol, "allowed relative L2 disagreement");
    propagate->add_option("--frames", pa.frames, "number of evolution frames to write");
    propagate->add_option("--out", pa.out, "output path prefix for frames");
    propagate->add_option("--format", pa.format, "frame format: csv or bin")->capture_default_str();
    propagate->add_flag("--derived", pa.derived, "use the pipeline kernel instead of the closed form");
    propagate->add_option("--window-max", pa.window_max, "first caustic of a config model, if any");

    SpectrumArgs sa;
    auto* spectrum = app.add_subcommand("spectrum", "energies from the imaginary-time kernel");
    add_common(spectrum, sa.c);
    spectrum->add_option("--tau-min", sa.tau_min, "start of the imaginary-time range")->capture_default_str();
    spectrum->add_option("--tau-max", sa.tau_max, "end of the imaginary-time range")->capture_default_str();
    spectrum->add_option("--odd-tau-min", sa.odd_min, "start of the odd-sector range")->capture_default_str();
    spectrum->add_option("--odd-tau-max", sa.odd_max, "end of the odd-sector range")->capture_default_str();
    spectrum->add_option("--profile", sa.profile, "write the normalized ground profile (CSV)");

    ParseArgs ra;
    auto* parse_cmd = app.add_subcommand("parse", "parse and lower an expression or model file");
    parse_cmd->add_option("--expr", ra.expr, "expression text");
    parse_cmd->add_option("--config", ra.c.config, "model file");
    parse_cmd->add_option("--param", ra.c.params, "NAME=VALUE; repeatable");
    parse_cmd->add_option("--kind", ra.kind, "auto, observable or hamiltonian")->capture_default_str();
    parse_cmd->add_option("--t", ra.t, "time at which coefficients are reported")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*list) return cmd_list();
        if (*verify) return cmd_verify(va);
        if (*derive) return cmd_derive(da);
        if (*kernel) return cmd_kernel(ka);
        if (*propagate) return cmd_propagate(pa);
        if (*spectrum) return cmd_spectrum(sa);
        if (*parse_cmd) return cmd_parse(ra);
    } catch (const std::exception& e) {
        json err{{"command", command}, {"error", e.what()}};
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["offset"] = pe->offset();
        if (const auto* ce = dynamic_cast<const CausticError*>(&e)) err["t"] = ce->time();
        emit(err);
        std::cerr << "comgreen " << command << ": " << e.what() << "\n";
        return exit_code(e);
    }
    return 2;
}

#include "nclosure/experiment/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ncm {

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Exp1Rom: return "exp1_rom";
        case ExperimentKind::Exp2Subgrid: return "exp2_subgrid";
        case ExperimentKind::Exp3aBio0d: return "exp3a_bio0d";
        case ExperimentKind::Exp3bBio1d: return "exp3b_bio1d";
        case ExperimentKind::Toy: return "toy";
    }
    return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    for (ExperimentKind k : {ExperimentKind::Exp1Rom, ExperimentKind::Exp2Subgrid, ExperimentKind::Exp3aBio0d,
                             ExperimentKind::Exp3bBio1d, ExperimentKind::Toy})
        if (name == to_string(k)) return k;
    throw ConfigError("unknown experiment '" + name + "'");
}

StepperSpec SolverConfig::spec() const {
    if (method == "dopri5") return DormandPrince54{rtol, atol, 0.0, max_steps};
    if (method == "rk4") return Rk4Fixed{dt};
    if (method == "trapezoid") return ImplicitTrapezoid{dt, 1e-10, 20};
    throw ConfigError("unknown solver method '" + method + "'");
}

namespace {

Vec linspace_delays(double step, std::size_t k) {
    Vec d;
    for (std::size_t i = 1; i <= k; ++i) d.push_back(step * static_cast<double>(i));
    return d;
}

SolverConfig dopri(double rtol, double atol) {
    SolverConfig s;
    s.rtol = rtol;
    s.atol = atol;
    return s;
}

}  // namespace

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    c.sweep_tau2 = {0.0, 0.0375, 0.075, 0.15};
    switch (kind) {
        case ExperimentKind::Toy:
            c.delays = {0.1, 0.2};
            c.tau1 = 0.0;
            c.tau2 = 0.2;
            c.epochs = 30;
            c.batch = {6, 2, 2};
            c.schedule = {0.005, 0.9, 10, false};
            c.data_dt = 0.1;
            c.train_end = 2.0, c.val_end = 4.0, c.predict_end = 6.0;
            c.truth_solver = dopri(1e-11, 1e-11);
            c.forward_solver = c.adjoint_solver = dopri(1e-8, 1e-8);
            c.sweep_tau2 = {0.0, 0.1, 0.2};
            break;
        case ExperimentKind::Exp1Rom:
            c.delays = linspace_delays(0.025, 6);
            c.tau1 = 0.0;
            c.tau2 = 0.075;
            c.epochs = 200;
            c.batch = {6, 2, 2};
            c.schedule = {0.075, 0.97, 18, false};
            c.data_dt = 0.01;
            c.train_end = 2.0, c.val_end = 4.0, c.predict_end = 6.0;
            c.truth_solver = dopri(1e-9, 1e-11);
            c.forward_solver = c.adjoint_solver = dopri(1e-6, 1e-8);
            break;
        case ExperimentKind::Exp2Subgrid:
            c.delays = linspace_delays(0.025, 6);
            c.tau1 = 0.0;
            c.tau2 = 0.075;
            c.epochs = 250;
            c.batch = {6, 2, 8};
            c.schedule = {0.075, 0.97, 4, false};
            c.data_dt = 0.01;
            c.train_end = 1.25, c.val_end = 2.5, c.predict_end = 5.0;
            c.truth_solver = dopri(1e-9, 1e-11);
            c.forward_solver = c.adjoint_solver = dopri(1e-5, 1e-7);
            break;
        case ExperimentKind::Exp3aBio0d:
            c.delays = linspace_delays(0.75, 6);
            c.tau1 = 0.0;
            c.tau2 = 2.5;
            c.epochs = 350;
            c.batch = {6, 2, 4};
            c.schedule = {0.05, 0.97, 26, false};
            c.positivity_weight = 1.0;
            c.data_dt = 0.05;
            c.train_end = 30.0, c.val_end = 60.0, c.predict_end = 330.0;
            c.truth_solver = dopri(1e-10, 1e-12);
            c.forward_solver = c.adjoint_solver = dopri(1e-6, 1e-8);
            c.sweep_tau2 = {0.0, 1.25, 2.5, 5.0};
            break;
        case ExperimentKind::Exp3bBio1d:
            c.delays = {0.5, 1.0, 1.5, 2.0};
            c.tau1 = 0.0;
            c.tau2 = 2.0;
            c.epochs = 200;
            c.batch = {6, 2, 8};
            c.schedule = {0.05, 0.97, 8, false};
            c.positivity_weight = 1.0;
            c.data_dt = 0.1;
            c.train_end = 30.0, c.val_end = 60.0, c.predict_end = 364.0;
            c.truth_solver = dopri(1e-9, 1e-11);
            c.forward_solver = c.adjoint_solver = dopri(1e-5, 1e-7);
            c.sweep_tau2 = {0.0, 1.0, 2.0, 4.0};
            break;
    }
    return c;
}

namespace {

bool is_multiple(double t, double dt) {
    const double r = t / dt;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(data_dt > 0)) fail("data.dt must be positive");
    if (!(0 < train_end && train_end < val_end && val_end < predict_end))
        fail("spans must satisfy 0 < train_end < val_end < predict_end");
    for (double t : {train_end, val_end, predict_end})
        if (!is_multiple(t, data_dt)) fail("span boundaries must be multiples of data.dt");
    switch (closure) {
        case ClosureKind::Discrete:
            for (std::size_t i = 0; i < delays.size(); ++i) {
                if (!(delays[i] > 0)) fail("closure.delays must be positive");
                if (i > 0 && !(delays[i] > delays[i - 1])) fail("closure.delays must be strictly increasing");
            }
            break;
        case ClosureKind::Distributed:
            if (!(0 <= tau1 && tau1 <= tau2)) fail("closure window needs 0 <= tau1 <= tau2");
            if (history_panels == 0) fail("closure.history_panels must be positive");
            break;
        default: break;
    }
    if (batch.batch_size == 0 || batch.window_steps == 0 || batch.stride == 0)
        fail("train.batch_size, window_steps and stride must be positive");
    if (batch.stride > batch.window_steps) fail("train.stride exceeds train.window_steps");
    if (!(schedule.lr0 > 0) || !(schedule.decay_rate > 0) || !(schedule.decay_steps > 0))
        fail("learning-rate schedule entries must be positive");
    if (!(rho >= 0 && rho < 1)) fail("train.rho must lie in [0, 1)");
    if (!(epsilon > 0)) fail("train.epsilon must be positive");
    if (positivity_weight < 0) fail("train.positivity_weight must be nonnegative");
    if (threads == 0) fail("train.threads must be positive");
    for (const SolverConfig* s : {&truth_solver, &forward_solver, &adjoint_solver}) {
        try {
            ncm::validate(s->spec());
        } catch (const InvalidArgument& e) {
            fail(std::string("solver: ") + e.what());
        }
    }
    if (sweep_repeats == 0 || sweep_tail == 0) fail("sweep.repeats and sweep.tail must be positive");
    for (double t : sweep_tau2)
        if (!(t >= tau1)) fail("sweep.tau2 entries must be >= closure.tau1");
    if (!(verify_tol > 0 && verify_eps > 0 && verify_threshold > 0)) fail("verify entries must be positive");
    try {
        burgers.validate();
        bio.validate();
        column.validate();
    } catch (const InvalidArgument& e) {
        fail(e.what());
    }
    if (nx_coarse < 3) fail("burgers.nx_coarse must be at least 3");
    if (pod_modes == 0) fail("burgers.pod_modes must be positive");
    if (smagorinsky_cs < 0) fail("burgers.smagorinsky_cs must be nonnegative");
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(d)) throw ConfigError("expected a finite number, got '" + v + "'");
    return d;
}

std::uint64_t parse_u64(const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("expected a nonnegative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("integer out of range: '" + v + "'");
    }
}

bool parse_bool(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("expected true or false, got '" + v + "'");
}

Vec parse_list(const std::string& v) {
    Vec out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    return out;
}

std::string fmt_list(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
    return s;
}

struct Field {
    std::string section, key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
    bool hashed = true;
};

template <class Get>
Field dbl(std::string sec, std::string key, Get g) {
    return {sec, key, [g](ExperimentConfig& c, const std::string& v) { g(c) = parse_double(v); },
            [g](const ExperimentConfig& c) { return fmt_double(g(const_cast<ExperimentConfig&>(c))); }};
}

template <class Get>
Field size(std::string sec, std::string key, Get g) {
    return {sec, key,
            [g](ExperimentConfig& c, const std::string& v) { g(c) = static_cast<std::size_t>(parse_u64(v)); },
            [g](const ExperimentConfig& c) { return std::to_string(g(const_cast<ExperimentConfig&>(c))); }};
}

template <class Get>
Field flag(std::string sec, std::string key, Get g) {
    return {sec, key, [g](ExperimentConfig& c, const std::string& v) { g(c) = parse_bool(v); },
            [g](const ExperimentConfig& c) { return std::string(g(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); }};
}

template <class Get>
Field list(std::string sec, std::string key, Get g) {
    return {sec, key, [g](ExperimentConfig& c, const std::string& v) { g(c) = parse_list(v); },
            [g](const ExperimentConfig& c) { return fmt_list(g(const_cast<ExperimentConfig&>(c))); }};
}

Field unhashed(Field f) {
    f.hashed = false;
    return f;
}

void add_solver(std::vector<Field>& fs, const std::string& sec, SolverConfig ExperimentConfig::*m) {
    fs.push_back({sec, "method", [m](ExperimentConfig& c, const std::string& v) {
                      if (v != "dopri5" && v != "rk4" && v != "trapezoid")
                          throw ConfigError("unknown solver method '" + v + "'");
                      (c.*m).method = v;
                  },
                  [m](const ExperimentConfig& c) { return (c.*m).method; }});
    fs.push_back(dbl(sec, "rtol", [m](ExperimentConfig& c) -> double& { return (c.*m).rtol; }));
    fs.push_back(dbl(sec, "atol", [m](ExperimentConfig& c) -> double& { return (c.*m).atol; }));
    fs.push_back(dbl(sec, "dt", [m](ExperimentConfig& c) -> double& { return (c.*m).dt; }));
    fs.push_back(size(sec, "max_steps", [m](ExperimentConfig& c) -> std::size_t& { return (c.*m).max_steps; }));
}

#define NCM_REF(type, expr) [](ExperimentConfig& c) -> type& { return c.expr; }

const std::vector<Field>& fields() {
    static const std::vector<Field> fs = [] {
        std::vector<Field> f;
        f.push_back({"experiment", "name", [](ExperimentConfig&, const std::string&) {},
                     [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); }});
        f.push_back({"experiment", "seed",
                     [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64(v); },
                     [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
        f.push_back(unhashed({"experiment", "out", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                              [](const ExperimentConfig& c) { return c.out_dir; }}));

        f.push_back({"closure", "kind",
                     [](ExperimentConfig& c, const std::string& v) {
                         try {
                             c.closure = parse_closure_kind(v);
                         } catch (const InvalidArgument& e) {
                             throw ConfigError(e.what());
                         }
                     },
                     [](const ExperimentConfig& c) { return std::string(to_string(c.closure)); }});
        f.push_back(list("closure", "delays", NCM_REF(Vec, delays)));
        f.push_back(dbl("closure", "tau1", NCM_REF(double, tau1)));
        f.push_back(dbl("closure", "tau2", NCM_REF(double, tau2)));
        f.push_back(size("closure", "history_panels", NCM_REF(std::size_t, history_panels)));

        f.push_back(unhashed(size("train", "epochs", NCM_REF(std::size_t, epochs))));
        f.push_back(size("train", "batch_size", NCM_REF(std::size_t, batch.batch_size)));
        f.push_back(size("train", "window_steps", NCM_REF(std::size_t, batch.window_steps)));
        f.push_back(size("train", "stride", NCM_REF(std::size_t, batch.stride)));
        f.push_back(dbl("train", "lr0", NCM_REF(double, schedule.lr0)));
        f.push_back(dbl("train", "decay_rate", NCM_REF(double, schedule.decay_rate)));
        f.push_back(dbl("train", "decay_steps", NCM_REF(double, schedule.decay_steps)));
        f.push_back(flag("train", "staircase", NCM_REF(bool, schedule.staircase)));
        f.push_back(dbl("train", "rho", NCM_REF(double, rho)));
        f.push_back(dbl("train", "epsilon", NCM_REF(double, epsilon)));
        f.push_back({"train", "gradient",
                     [](ExperimentConfig& c, const std::string& v) {
                         if (v != "sum" && v != "mean") throw ConfigError("train.gradient must be sum or mean");
                         c.mean_gradient = v == "mean";
                     },
                     [](const ExperimentConfig& c) { return std::string(c.mean_gradient ? "mean" : "sum"); }});
        f.push_back(dbl("train", "positivity_weight", NCM_REF(double, positivity_weight)));
        f.push_back(size("train", "iterations_per_epoch", NCM_REF(std::size_t, iterations_per_epoch)));
        f.push_back(unhashed(size("train", "checkpoint_every", NCM_REF(std::size_t, checkpoint_every))));
        f.push_back(unhashed(size("train", "threads", NCM_REF(std::size_t, threads))));

        f.push_back(dbl("data", "dt", NCM_REF(double, data_dt)));
        f.push_back(dbl("data", "train_end", NCM_REF(double, train_end)));
        f.push_back(dbl("data", "val_end", NCM_REF(double, val_end)));
        f.push_back(unhashed(dbl("data", "predict_end", NCM_REF(double, predict_end))));

        add_solver(f, "solver.truth", &ExperimentConfig::truth_solver);
        add_solver(f, "solver.forward", &ExperimentConfig::forward_solver);
        add_solver(f, "solver.adjoint", &ExperimentConfig::adjoint_solver);

        f.push_back(dbl("burgers", "re", NCM_REF(double, burgers.Re)));
        f.push_back(dbl("burgers", "length", NCM_REF(double, burgers.L)));
        f.push_back(size("burgers", "nx", NCM_REF(std::size_t, burgers.nx)));
        f.push_back(dbl("burgers", "pod_end", NCM_REF(double, burgers.T)));
        f.push_back(size("burgers", "nx_coarse", NCM_REF(std::size_t, nx_coarse)));
        f.push_back(size("burgers", "pod_modes", NCM_REF(std::size_t, pod_modes)));
        f.push_back(dbl("burgers", "smagorinsky_cs", NCM_REF(double, smagorinsky_cs)));

        f.push_back(dbl("bio", "k_w", NCM_REF(double, bio.k_w)));
        f.push_back(dbl("bio", "alpha", NCM_REF(double, bio.alpha_pi)));
        f.push_back(dbl("bio", "i0", NCM_REF(double, bio.i0_surface)));
        f.push_back(dbl("bio", "v_m", NCM_REF(double, bio.v_m)));
        f.push_back(dbl("bio", "k_u", NCM_REF(double, bio.k_u)));
        f.push_back(dbl("bio", "xi", NCM_REF(double, bio.xi)));
        f.push_back(dbl("bio", "r_m", NCM_REF(double, bio.r_m)));
        f.push_back(dbl("bio", "lambda", NCM_REF(double, bio.lambda)));
        f.push_back(dbl("bio", "gamma", NCM_REF(double, bio.gamma_egest)));
        f.push_back(dbl("bio", "g", NCM_REF(double, bio.gamma_z)));
        f.push_back(dbl("bio", "t_bio", NCM_REF(double, bio.t_bio)));
        f.push_back(dbl("bio", "psi", NCM_REF(double, bio.psi)));
        f.push_back(dbl("bio", "phi", NCM_REF(double, bio.phi_d)));
        f.push_back(dbl("bio", "omega", NCM_REF(double, bio.omega)));
        f.push_back(dbl("bio", "z", NCM_REF(double, bio.z_eval)));
        f.push_back(dbl("bio", "p0", NCM_REF(double, bio.p0)));
        f.push_back(dbl("bio", "z0", NCM_REF(double, bio.z0)));

        f.push_back(size("column", "nz", NCM_REF(std::size_t, column.nz)));
        f.push_back(dbl("column", "depth", NCM_REF(double, column.d_total)));
        f.push_back(dbl("column", "kz_b", NCM_REF(double, column.kz_b)));
        f.push_back(dbl("column", "kz_0", NCM_REF(double, column.kz_0)));
        f.push_back(dbl("column", "gamma", NCM_REF(double, column.gamma_thermo)));
        f.push_back(dbl("column", "m_mean", NCM_REF(double, column.m_mean)));
        f.push_back(dbl("column", "m_amp", NCM_REF(double, column.m_amp)));
        f.push_back(dbl("column", "i0_mean", NCM_REF(double, column.i0_mean)));
        f.push_back(dbl("column", "i0_amp", NCM_REF(double, column.i0_amp)));
        f.push_back(dbl("column", "period", NCM_REF(double, column.period)));
        f.push_back(dbl("column", "tbio_surface", NCM_REF(double, column.tbio_surface)));
        f.push_back(dbl("column", "tbio_bottom", NCM_REF(double, column.tbio_bottom)));
        f.push_back(flag("column", "biology", NCM_REF(bool, column.biology)));
        f.push_back(flag("column", "mixing", NCM_REF(bool, column.mixing)));

        f.push_back(unhashed(list("sweep", "tau2", NCM_REF(Vec, sweep_tau2))));
        f.push_back(unhashed(size("sweep", "repeats", NCM_REF(std::size_t, sweep_repeats))));
        f.push_back(unhashed(size("sweep", "tail", NCM_REF(std::size_t, sweep_tail))));

        f.push_back(unhashed(dbl("verify", "tol", NCM_REF(double, verify_tol))));
        f.push_back(unhashed(dbl("verify", "eps", NCM_REF(double, verify_eps))));
        f.push_back(unhashed(dbl("verify", "threshold", NCM_REF(double, verify_threshold))));
        return f;
    }();
    return fs;
}

#undef NCM_REF

struct Entry {
    std::string value;
    std::size_t line = 0;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    std::map<std::pair<std::string, std::string>, Entry> entries;
    std::vector<std::pair<std::string, std::string>> order;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t lineno = 0;
    auto where = [&](std::size_t l) { return origin + ":" + std::to_string(l) + ": "; };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where(lineno) + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const Field& f : fields()) known = known || f.section == section;
            if (!known) throw ConfigError(where(lineno) + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where(lineno) + "expected key = value");
        if (section.empty()) throw ConfigError(where(lineno) + "key outside any section");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        bool known = false;
        for (const Field& f : fields()) known = known || (f.section == section && f.key == key);
        if (!known) throw ConfigError(where(lineno) + "unknown key '" + key + "' in [" + section + "]");
        const auto id = std::make_pair(section, key);
        if (entries.count(id)) throw ConfigError(where(lineno) + "duplicate key '" + key + "'");
        entries[id] = {value, lineno};
        order.push_back(id);
    }
    const auto name = entries.find({"experiment", "name"});
    if (name == entries.end()) throw ConfigError(origin + ": missing [experiment] name");
    ExperimentConfig cfg;
    try {
        cfg = default_config(parse_experiment_kind(name->second.value));
    } catch (const ConfigError& e) {
        throw ConfigError(where(name->second.line) + e.what());
    }
    for (const auto& id : order) {
        const Entry& e = entries[id];
        for (const Field& f : fields()) {
            if (f.section != id.first || f.key != id.second) continue;
            try {
                f.set(cfg, e.value);
            } catch (const ConfigError& err) {
                throw ConfigError(where(e.line) + id.first + "." + id.second + ": " + err.what());
            }
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

std::string render(const ExperimentConfig& cfg, bool hashed_only) {
    std::string out, section;
    for (const Field& f : fields()) {
        if (hashed_only && !f.hashed) continue;
        if (f.section != section) {
            section = f.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace

std::string to_text(const ExperimentConfig& cfg) { return render(cfg, false); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : render(cfg, true)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ncm

#include "nclosure/experiment/setup.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "nclosure/models/bio.hpp"
#include "nclosure/models/burgers.hpp"
#include "nclosure/models/column.hpp"
#include "nclosure/toy.hpp"

namespace ncm {

std::vector<double> snapshot_times(double t_end, double dt) {
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * dt;
    return t;
}

namespace {

std::size_t index_at(double t, double dt) { return static_cast<std::size_t>(std::llround(t / dt)); }

std::vector<std::string> indexed_names(const std::string& prefix, std::size_t n, std::size_t first = 0) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + first));
    return out;
}

void build_toy(Experiment& e, const std::vector<double>& times) {
    e.base = toy_base();
    e.state_names = {"u1", "u2"};
    // Hidden delayed coupling missing from the base model.
    const BaseModel b = e.base;
    DdeProblem prob;
    prob.delays = {0.2};
    prob.history = [](double) { return Vec{1.0, -0.5}; };
    prob.rhs = [b](double t, const Vec& u, const std::vector<Vec>& d) {
        Vec f = b.rhs(t, u);
        f[0] += 0.4 * d[0][1];
        f[1] += 0.3 * std::sin(t);
        return f;
    };
    const DenseTrajectory traj = integrate_dde(prob, {0.0, times.back()}, e.cfg.truth_solver.spec());
    std::vector<Vec> s;
    for (double t : times) s.push_back(traj.query(t));
    e.data = SnapshotDataset(times, s);
}

void build_exp1(Experiment& e, const std::vector<double>& times) {
    const ExperimentConfig& c = e.cfg;
    const BurgersConfig bc = c.burgers;
    const OdeRhs fom = [bc](double, const Vec& u) { return burgers_rhs(u, bc); };
    const Vec u0 = burgers_ic_field(bc);
    const std::vector<Vec> pod_snaps = solve_at(fom, u0, snapshot_times(bc.T, c.data_dt), c.truth_solver.spec());
    e.pod = compute_pod(pod_snaps, c.pod_modes);
    const auto g = std::make_shared<GalerkinTensors>(galerkin_tensors(*e.pod, bc));

    e.base.dim = g->m;
    e.base.rhs = [g](double, const Vec& a) { return rom_rhs(a, *g); };
    e.base.vjp = [g](double, const Vec& a, const Vec& w) { return rom_vjp(a, w, *g); };
    e.state_names = indexed_names("a", g->m, 1);

    // High-fidelity reference: the full-order model from the projected initial field, projected back.
    const Vec start = e.pod->reconstruct(e.pod->project(u0));
    const std::vector<Vec> full = solve_at(fom, start, times, c.truth_solver.spec());
    std::vector<Vec> coeffs;
    for (const Vec& u : full) coeffs.push_back(e.pod->project(u));
    e.data = SnapshotDataset(times, coeffs);
}

void build_exp2(Experiment& e, const std::vector<double>& times) {
    const ExperimentConfig& c = e.cfg;
    const BurgersConfig fine = c.burgers;
    BurgersConfig coarse = c.burgers;
    coarse.nx = c.nx_coarse;
    e.fine_x = burgers_grid(fine);
    e.coarse_x = burgers_grid(coarse);
    const OdeRhs fom = [fine](double, const Vec& u) { return burgers_rhs(u, fine); };
    e.fine_states = solve_at(fom, burgers_ic_field(fine), times, c.truth_solver.spec());
    std::vector<Vec> s;
    for (const Vec& u : e.fine_states) s.push_back(restrict_to_coarse(u, e.fine_x, e.coarse_x));
    e.data = SnapshotDataset(times, s);

    e.base.dim = coarse.nx;
    e.base.rhs = [coarse](double, const Vec& u) { return burgers_rhs(u, coarse); };
    e.base.vjp = [coarse](double, const Vec& u, const Vec& w) { return burgers_vjp(u, w, coarse); };
    BaseModel smag;
    smag.dim = coarse.nx;
    const double cs = c.smagorinsky_cs;
    smag.rhs = [coarse, cs](double, const Vec& u) { return smagorinsky_rhs(u, coarse, cs); };
    smag.vjp = [](double, const Vec&, const Vec&) -> Vec {
        throw std::logic_error("the Smagorinsky model is evaluation-only");
    };
    e.smagorinsky = smag;

    e.positions = coarse.nx;
    e.output_mask.assign(coarse.nx, 1.0);
    e.output_mask.front() = e.output_mask.back() = 0.0;
    e.state_names = indexed_names("u", coarse.nx);
}

void build_exp3a(Experiment& e, const std::vector<double>& times) {
    const ExperimentConfig& c = e.cfg;
    const BioParams bio = c.bio;
    const double G = growth_G(bio.z_eval, bio.i0_surface, bio);
    const OdeRhs hi = [bio, G](double, const Vec& s) { return nnpzd_rhs(s, bio, G); };
    const std::vector<Vec> full = solve_at(hi, nnpzd_initial(bio, bio.t_bio), times, c.truth_solver.spec());
    std::vector<Vec> agg;
    for (const Vec& s : full) agg.push_back(aggregate_nnpzd(s));
    e.data = SnapshotDataset(times, agg);

    e.base.dim = 3;
    e.base.rhs = [bio, G](double, const Vec& s) { return npz_rhs(s, bio, G); };
    e.base.vjp = [bio, G](double, const Vec& s, const Vec& w) { return npz_vjp(s, w, bio, G); };
    e.state_names = {"N", "P", "Z"};
    e.loss.positivity_weight = c.positivity_weight;
}

void build_exp3b(Experiment& e, const std::vector<double>& times) {
    const ExperimentConfig& c = e.cfg;
    const BioParams bio = c.bio;
    const ColumnConfig col = c.column;
    const OdeRhs hi = [col, bio](double t, const Vec& f) { return column_nnpzd_rhs(f, t, col, bio); };
    const std::vector<Vec> full = solve_at(hi, column_nnpzd_initial(col, bio), times, c.truth_solver.spec());
    std::vector<Vec> agg;
    for (const Vec& f : full) agg.push_back(column_aggregate(f, col.nz));
    e.data = SnapshotDataset(times, agg);

    e.base.dim = 3 * col.nz;
    e.base.rhs = [col, bio](double t, const Vec& f) { return column_npz_rhs(f, t, col, bio); };
    e.base.vjp = [col, bio](double t, const Vec& f, const Vec& w) { return column_npz_vjp(f, w, t, col, bio); };
    const Vec depth = column_depth_channel(col);
    e.base.context = [col, bio, depth](double t) { return ContextData{depth, column_light_channel(t, col, bio)}; };

    e.positions = col.nz;
    for (std::size_t k = 0; k < col.nz; ++k)
        for (const char* sp : {"N", "P", "Z"}) e.state_names.push_back(std::string(sp) + std::to_string(k));
    e.loss.kind = LossKind::DepthAvgL2;
    e.loss.species = 3;
    e.loss.positivity_weight = c.positivity_weight;
}

const char* table_prefix(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Exp1Rom: return "exp1";
        case ExperimentKind::Exp2Subgrid: return "exp2";
        case ExperimentKind::Exp3aBio0d: return "exp3a";
        case ExperimentKind::Exp3bBio1d: return "exp3b";
        case ExperimentKind::Toy: break;
    }
    return "";
}

}  // namespace

ClosureSpec Experiment::closure_spec(ClosureKind kind) const {
    ClosureSpec s;
    s.kind = kind;
    s.positions = positions;
    s.output_mask = output_mask;
    s.history_panels = cfg.history_panels;
    if (kind == ClosureKind::None) return s;
    const auto T = Activation::Tanh, L = Activation::Linear;
    if (cfg.experiment == ExperimentKind::Toy) {
        switch (kind) {
            case ClosureKind::Markovian: s.f = Network({1, 2}, {Dense{2, 6, T}, Dense{6, 2, L}}); break;
            case ClosureKind::Discrete: s.f = Network({1, 2}, {SimpleRnnCell{2, 4, T}, Dense{4, 2, L}}); break;
            case ClosureKind::Distributed:
                s.f = Network({1, 3}, {Dense{3, 5, T}, Dense{5, 2, L}});
                s.g = Network({1, 2}, {Dense{2, 3, T}, Dense{3, 1, L}});
                break;
            case ClosureKind::None: break;
        }
    } else {
        const std::string p = table_prefix(cfg.experiment);
        switch (kind) {
            case ClosureKind::Markovian: s.f = table_architecture(p + "/node/f"); break;
            case ClosureKind::Discrete: s.f = table_architecture(p + "/discrete/f"); break;
            case ClosureKind::Distributed:
                s.f = table_architecture(p + "/distributed/f");
                s.g = table_architecture(p + "/distributed/g");
                break;
            case ClosureKind::None: break;
        }
    }
    if (kind == ClosureKind::Discrete) s.delays = cfg.delays;
    if (kind == ClosureKind::Distributed) {
        s.tau1 = cfg.tau1;
        s.tau2 = cfg.tau2;
    }
    return s;
}

AugmentedSystem Experiment::system() const { return AugmentedSystem(base, closure_spec(cfg.closure)); }

AugmentedSystem Experiment::baseline() const { return AugmentedSystem(base, closure_spec(ClosureKind::None)); }

TrainConfig Experiment::train_config() const {
    TrainConfig t;
    t.batch = cfg.batch;
    t.loss = loss;
    t.schedule = cfg.schedule;
    t.rho = cfg.rho;
    t.epsilon = cfg.epsilon;
    t.mean_batch_gradient = cfg.mean_gradient;
    t.forward_stepper = cfg.forward_solver.spec();
    t.adjoint_stepper = cfg.adjoint_solver.spec();
    t.train_span = train_span;
    t.val_span = val_span;
    t.iterations_per_epoch = cfg.iterations_per_epoch;
    t.threads = cfg.threads;
    return t;
}

HistoryFn Experiment::truth_history() const {
    auto d = std::make_shared<const SnapshotDataset>(data);
    return [d](double t) { return d->interpolate(t); };
}

Experiment build_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Experiment e;
    e.cfg = cfg;
    const std::vector<double> times = snapshot_times(cfg.predict_end, cfg.data_dt);
    switch (cfg.experiment) {
        case ExperimentKind::Toy: build_toy(e, times); break;
        case ExperimentKind::Exp1Rom: build_exp1(e, times); break;
        case ExperimentKind::Exp2Subgrid: build_exp2(e, times); break;
        case ExperimentKind::Exp3aBio0d: build_exp3a(e, times); break;
        case ExperimentKind::Exp3bBio1d: build_exp3b(e, times); break;
    }
    e.train_span = {0, index_at(cfg.train_end, cfg.data_dt)};
    e.val_span = {e.train_span.last, index_at(cfg.val_end, cfg.data_dt)};
    e.predict_span = {e.val_span.last, index_at(cfg.predict_end, cfg.data_dt)};
    return e;
}

}  // namespace ncm

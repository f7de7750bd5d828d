#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nclosure/experiment/commands.hpp"
#include "nclosure/experiment/csv.hpp"
#include "nclosure/models/bio.hpp"
#include "nclosure/models/burgers.hpp"
#include "nclosure/models/column.hpp"
#include "nclosure/models/pod.hpp"
#include "nclosure/toy.hpp"

using namespace ncm;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const DormandPrince54 tight{1e-10, 1e-10, 0.0, 1000000};

std::string work_dir;

Verdict adjoint_discrete() {
    const ToyProblem toy = make_toy(ClosureKind::Discrete, {0.3, 0.7}, 0.0, 0.0, 11);
    const GradientCheck g = check_toy_gradient("discrete", toy, 1e-10, 1e-5);
    const bool small = toy.sys.param_count() <= 60 && toy.sys.closure().delays.size() == 2;
    return {small && g.rel_err < 1e-4,
            std::to_string(g.n_params) + " params, rel err " + fmt(g.rel_err) + ", " + fmt(g.seconds) + " s"};
}

Verdict adjoint_distributed() {
    bool ok = true;
    std::string d;
    for (auto [t1, t2] : {std::pair{0.0, 0.5}, std::pair{0.2, 0.7}}) {
        const ToyProblem toy = make_toy(ClosureKind::Distributed, {}, t1, t2, 12);
        const GradientCheck g = check_toy_gradient("distributed", toy, 1e-10, 1e-5);
        ok = ok && g.rel_err_theta < 1e-4 && g.rel_err_phi < 1e-4;
        d += "(" + fmt(t1) + "," + fmt(t2) + "): theta " + fmt(g.rel_err_theta) + ", phi " + fmt(g.rel_err_phi) + "; ";
    }
    return {ok, d};
}

Verdict markovian_reduction() {
    const ToyProblem toy = make_toy(ClosureKind::Discrete, {}, 0.0, 0.0, 13);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, tight);
    std::vector<Vec> states;
    for (double t : toy.data_times) states.push_back(fwd.state(t));
    const auto grads = toy.loss_grads(states);
    const Vec a = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, tight).gradient;
    const Vec b = toy.sys.adjoint_markovian(toy.params, fwd, toy.data_times, grads, tight).gradient;
    const double e = relative_l2(a, b);
    return {e < 1e-10, "rel diff " + fmt(e)};
}

Verdict dde_analytic() {
    const DdeProblem prob{[](double, const Vec&, const std::vector<Vec>& d) { return Vec{-d[0][0]}; },
                          {1.0},
                          [](double) { return Vec{1.0}; }};
    const DenseTrajectory tr = integrate_dde(prob, {0.0, 2.0}, DormandPrince54{1e-10, 1e-10, 0.0, 1000000});
    const double u1 = tr.query(1.0)[0], u2 = tr.query(2.0)[0];
    return {std::abs(u1) < 1e-8 && std::abs(u2 + 0.5) < 1e-7, "u(1) = " + fmt(u1) + ", u(2) + 0.5 = " + fmt(u2 + 0.5)};
}

Verdict pod_energy() {
    const BurgersConfig cfg;
    std::vector<double> times;
    for (int i = 0; i <= 400; ++i) times.push_back(0.01 * i);
    const auto snaps = solve_at([&](double, const Vec& u) { return burgers_rhs(u, cfg); }, burgers_ic_field(cfg), times,
                                DormandPrince54{1e-8, 1e-10, 0, 1000000});
    const PodBasis p = compute_pod(snaps, 3);
    const double share = p.singular_value_fraction(3);
    return {std::abs(share - 0.608) <= 0.02,
            "3-mode share " + fmt(100 * share) + "% (squared-singular-value share " + fmt(100 * p.energy_fraction(3)) +
                "%)"};
}

Verdict conservation() {
    const BioParams p;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0.0, 40.0);
    const double G = growth_G(p.z_eval, p.i0_surface, p);
    double w3 = 0, w5 = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec s3{U(rng), U(rng), U(rng)}, s5{U(rng), U(rng), U(rng), U(rng), U(rng)};
        const Vec r3 = npz_rhs(s3, p, G), r5 = nnpzd_rhs(s5, p, G);
        w3 = std::max(w3, std::abs(r3[0] + r3[1] + r3[2]) / norm2(s3));
        w5 = std::max(w5, std::abs(r5[0] + r5[1] + r5[2] + r5[3] + r5[4]) / norm2(s5));
    }
    const DenseTrajectory tr = integrate_ode([&](double, const Vec& s) { return nnpzd_rhs(s, p, G); },
                                             nnpzd_initial(p, p.t_bio), {0, 330}, tight);
    double total = 0;
    for (double v : tr.query(330)) total += v;
    const double drift = std::abs(total - p.t_bio) / p.t_bio;

    ColumnConfig c;
    c.biology = false;
    double col = 0;
    for (std::size_t species : {3, 5}) {
        const Vec f0 = species == 3 ? column_npz_initial(c, p) : column_nnpzd_initial(c, p);
        const OdeRhs rhs = [&](double t, const Vec& s) {
            return species == 3 ? column_npz_rhs(s, t, c, p) : column_nnpzd_rhs(s, t, c, p);
        };
        const Vec i0 = column_inventory(f0, species, c);
        const Vec i1 = column_inventory(integrate_ode(rhs, f0, {0, 30}, DormandPrince54{1e-8, 1e-8, 0, 1000000}).query(30),
                                        species, c);
        for (std::size_t s = 0; s < species; ++s)
            if (i0[s] > 0) col = std::max(col, std::abs(i1[s] - i0[s]) / i0[s]);
    }
    return {w3 < 1e-12 && w5 < 1e-12 && drift < 1e-6 && col < 1e-8,
            "rhs sums " + fmt(w3) + " / " + fmt(w5) + ", 330-day drift " + fmt(drift) + ", column drift " + fmt(col)};
}

Verdict architecture() {
    const std::vector<std::pair<std::string, std::size_t>> expect = {
        {"exp1/node/f", 158}, {"exp1/discrete/f", 63}, {"exp1/distributed", 110},
        {"exp2/node/f", 424}, {"exp2/discrete/f", 110}, {"exp2/distributed", 361}};
    bool ok = true;
    std::string d;
    for (const auto& [key, n] : expect) {
        std::size_t got = 0;
        if (key.ends_with("distributed"))
            got = table_architecture(key + "/f").param_count() + table_architecture(key + "/g").param_count();
        else
            got = table_architecture(key).param_count();
        ok = ok && got == n;
        d += key + " " + std::to_string(got) + (got == n ? "" : " (table " + std::to_string(n) + ")") + "; ";
    }
    const std::vector<std::pair<ExperimentKind, std::size_t>> ipe = {{ExperimentKind::Exp1Rom, 18},
                                                                       {ExperimentKind::Exp2Subgrid, 4},
                                                                       {ExperimentKind::Exp3aBio0d, 26},
                                                                       {ExperimentKind::Exp3bBio1d, 8}};
    d += "iterations/epoch";
    for (const auto& [k, n] : ipe) {
        const ExperimentConfig c = default_config(k);
        const auto steps = static_cast<std::size_t>(std::llround(c.train_end / c.data_dt));
        const std::size_t got = iterations_per_epoch(steps, c.batch.batch_size, c.batch.window_steps);
        ok = ok && got == n;
        d += " " + std::to_string(got);
    }
    return {ok, d};
}

Verdict exp2_efficacy() {
    ExperimentConfig c = default_config(ExperimentKind::Exp2Subgrid);
    c.closure = ClosureKind::Discrete;
    c.seed = 1;
    c.epochs = 100;
    c.train_end = 1.25, c.val_end = 2.5, c.predict_end = 3.0;
    const Experiment e = build_experiment(c);
    const AugmentedSystem sys = e.system();
    const TrainOutcome t = train_closure(e, sys, c.seed, c.epochs, "", "", nullptr);
    const EvaluationReport r = evaluate_params(e, sys, t.checkpoint.state.params);
    const double base = r.find("baseline", "train_val").l2_error, cl = r.find("closure", "train_val").l2_error,
                 sm = r.find("smagorinsky", "train_val").l2_error;
    return {cl <= 0.5 * base && sm < base, "closure/baseline " + fmt(cl / base) + ", Smagorinsky/baseline " +
                                               fmt(sm / base) + " (baseline L2 " + fmt(base) + ")"};
}

Verdict exp1_efficacy() {
    ExperimentConfig c = default_config(ExperimentKind::Exp1Rom);
    c.closure = ClosureKind::Discrete;
    c.seed = 1;
    c.epochs = 200;
    const Experiment e = build_experiment(c);
    const AugmentedSystem sys = e.system();
    const TrainOutcome t = train_closure(e, sys, c.seed, c.epochs, "", "", nullptr);
    const EvaluationReport r = evaluate_params(e, sys, t.checkpoint.state.params);
    const double base = r.find("baseline", "val").mean_rmse, cl = r.find("closure", "val").mean_rmse;
    return {cl < base, "validation RMSE closure " + fmt(cl) + " vs POD-GP " + fmt(base)};
}

Verdict neutrality() {
    double worst = 0;
    std::string d;
    for (ExperimentKind k : {ExperimentKind::Exp1Rom, ExperimentKind::Exp2Subgrid, ExperimentKind::Exp3aBio0d,
                             ExperimentKind::Exp3bBio1d}) {
        ExperimentConfig c = default_config(k);
        const Experiment base = build_experiment(c);
        double w = 0;
        for (ClosureKind kind : {ClosureKind::Markovian, ClosureKind::Discrete, ClosureKind::Distributed}) {
            Experiment e = base;
            e.cfg.closure = kind;
            const AugmentedSystem sys = e.system();
            const Trainer tr(sys, e.data, e.train_config());
            const EvaluationReport r = evaluate_params(e, sys, tr.initial_state(c.seed).params);
            for (std::size_t i = 0; i < r.times.size(); ++i)
                for (std::size_t j = 0; j < r.closure[i].size(); ++j)
                    w = std::max(w, std::abs(r.closure[i][j] - r.baseline[i][j]));
        }
        worst = std::max(worst, w);
        d += std::string(to_string(k)) + " " + fmt(w) + "; ";
    }
    return {worst <= 1e-8, "max |closure - baseline|: " + d};
}

Verdict delay_sweep() {
    ExperimentConfig c = default_config(ExperimentKind::Exp2Subgrid);
    c.seed = 3;
    c.epochs = 100;
    c.train_end = 1.25, c.val_end = 2.5, c.predict_end = 3.0;
    c.tau1 = 0.0;
    c.sweep_tau2 = {0.0, 0.0375, 0.075, 0.15};
    c.sweep_repeats = 3;
    c.sweep_tail = 50;
    c.out_dir = work_dir + "/sweep";
    const SweepReport r = cmd_sweep_delay(c, nullptr);
    const CsvTable runs = read_csv(c.out_dir + "/sweep_runs.csv");
    const CsvTable sum = read_csv(c.out_dir + "/sweep_summary.csv");
    bool ok = runs.rows.size() == 12 && sum.rows.size() == 4;
    std::string d;
    std::size_t diverged = 0;
    for (const SweepRun& run : r.runs) diverged += run.diverged ? 1 : 0;
    for (const auto& [tau, f] : r.summary) {
        ok = ok && f.count > 0 && f.min <= f.q1 && f.q1 <= f.median && f.median <= f.q3 && f.q3 <= f.max;
        d += "tau2 " + fmt(tau) + ": median " + fmt(f.median) + " (n=" + std::to_string(f.count) + "); ";
    }
    return {ok, d + std::to_string(diverged) + " diverged"};
}

}  // namespace

int main(int argc, char** argv) {
    work_dir = argc > 1 ? argv[1] : (std::filesystem::temp_directory_path() / "nclosure_acceptance").string();
    std::filesystem::create_directories(work_dir);
    const std::vector<std::tuple<int, std::string, double, std::function<Verdict()>>> criteria = {
        {1, "adjoint gradient, discrete delays", 60, adjoint_discrete},
        {2, "adjoint gradient, distributed delays", 120, adjoint_distributed},
        {3, "markovian reduction of the discrete adjoint", 0, markovian_reduction},
        {4, "DDE analytic solution", 0, dde_analytic},
        {5, "POD energy anchor", 120, pod_energy},
        {6, "conservation suite", 0, conservation},
        {7, "architecture fidelity", 0, architecture},
        {8, "desk-scale closure efficacy, subgrid Burgers", 1800, exp2_efficacy},
        {9, "desk-scale closure efficacy, POD-GP ROM", 1200, exp1_efficacy},
        {10, "zero-closure neutrality", 0, neutrality},
        {11, "delay-sweep harness", 0, delay_sweep},
    };
    int failed = 0;
    for (const auto& [id, name, budget, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (budget > 0 && secs > budget) {
            v.pass = false;
            v.detail += " over the " + fmt(budget) + " s budget";
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %2d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 2;
}

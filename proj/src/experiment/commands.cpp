#include "nclosure/experiment/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>

#include "nclosure/experiment/csv.hpp"

namespace fs = std::filesystem;

namespace ncm {

namespace {

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

std::vector<std::string> with_prefix(const std::string& prefix, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const std::string& n : names) out.push_back(prefix + n);
    return out;
}

void write_states(const std::string& path, const std::vector<double>& times, const std::vector<Vec>& states,
                  const std::vector<std::string>& names) {
    std::vector<std::string> header{"t"};
    header.insert(header.end(), names.begin(), names.end());
    CsvWriter w(path, header);
    for (std::size_t i = 0; i < times.size(); ++i) {
        w << times[i];
        for (double v : states[i]) w << v;
        w.end_row();
    }
    w.close();
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream* log) {
    const Experiment e = build_experiment(cfg);
    ensure_dir(cfg.out_dir);
    write_states(join(cfg.out_dir, "truth.csv"), e.data.times(), e.data.states(), e.state_names);
    if (e.pod) {
        const PodBasis& b = *e.pod;
        std::vector<std::string> header{"x", "mean"};
        for (std::size_t k = 0; k < b.m; ++k) header.push_back("mode" + std::to_string(k + 1));
        const Vec x = burgers_grid(cfg.burgers);
        CsvWriter w(join(cfg.out_dir, "pod_basis.csv"), header);
        for (std::size_t i = 0; i < x.size(); ++i) {
            w << x[i] << b.mean[i];
            for (std::size_t k = 0; k < b.m; ++k) w << b.modes(i, k);
            w.end_row();
        }
        w.close();
        CsvWriter s(join(cfg.out_dir, "pod_spectrum.csv"), {"k", "sigma", "energy_fraction", "sigma_fraction"});
        for (std::size_t k = 0; k < b.sigma.size(); ++k)
            (s << (k + 1) << b.sigma[k] << b.energy_fraction(k + 1) << b.singular_value_fraction(k + 1)).end_row();
        s.close();
    }
    if (!e.fine_states.empty()) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < e.fine_x.size(); ++i) names.push_back("u" + std::to_string(i));
        write_states(join(cfg.out_dir, "fine.csv"), e.data.times(), e.fine_states, names);
    }
    if (log)
        *log << "gen-data: " << to_string(cfg.experiment) << ", " << e.data.size() << " snapshots of dimension "
             << e.data.dim() << " in " << cfg.out_dir << "\n";
}

TrainOutcome train_closure(const Experiment& exp, const AugmentedSystem& sys, std::uint64_t seed,
                           std::size_t epochs, const std::string& out_dir, const std::string& checkpoint,
                           std::ostream* log) {
    const Trainer trainer(sys, exp.data, exp.train_config());
    TrainOutcome out;
    const std::uint64_t hash = config_hash(exp.cfg);
    out.checkpoint_path = checkpoint.empty() && !out_dir.empty() ? join(out_dir, "checkpoint.json") : checkpoint;

    Checkpoint& ck = out.checkpoint;
    if (!checkpoint.empty() && fs::exists(checkpoint)) {
        ck = load_checkpoint(checkpoint);
        check_compatible(ck, sys);
        if (ck.config_hash != hash) throw CheckpointError("checkpoint was written under a different configuration");
        if (log) *log << "resuming from epoch " << ck.state.epoch << "\n";
    } else {
        ck.experiment = to_string(exp.cfg.experiment);
        ck.fingerprint = system_fingerprint(sys);
        ck.config_hash = hash;
        ck.theta_count = sys.theta_count();
        ck.state = trainer.initial_state(seed);
        ck.history.push_back(trainer.evaluate(ck.state));
    }
    auto save = [&] {
        if (!out.checkpoint_path.empty()) save_checkpoint(out.checkpoint_path, ck);
    };
    auto report = [&](const EpochRecord& r) {
        if (log)
            *log << "epoch " << r.epoch << "  train " << format_double(r.train_loss) << "  val "
                 << format_double(r.val_loss) << "  lr " << format_double(r.lr) << "\n";
    };
    if (ck.state.epoch == 0) report(ck.history.front());
    if (!out_dir.empty()) ensure_dir(out_dir);
    while (ck.state.epoch < epochs) {
        const EpochRecord r = trainer.run_epoch(ck.state);
        ck.history.push_back(r);
        report(r);
        if (exp.cfg.checkpoint_every > 0 && ck.state.epoch % exp.cfg.checkpoint_every == 0) save();
    }
    save();
    out.history = ck.history;
    if (!out_dir.empty()) {
        CsvWriter w(join(out_dir, "loss_history.csv"), {"epoch", "train_loss", "val_loss", "lr"});
        for (const EpochRecord& r : out.history) (w << r.epoch << r.train_loss << r.val_loss << r.lr).end_row();
        w.close();
    }
    return out;
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::string& checkpoint, std::ostream* log) {
    const Experiment e = build_experiment(cfg);
    const AugmentedSystem sys = e.system();
    ensure_dir(cfg.out_dir);
    if (log)
        *log << "train: " << to_string(cfg.experiment) << ", " << to_string(cfg.closure) << " closure with "
             << sys.param_count() << " parameters\n";
    return train_closure(e, sys, cfg.seed, cfg.epochs, cfg.out_dir, checkpoint, log);
}

const WindowMetrics& EvaluationReport::find(const std::string& model, const std::string& window) const {
    for (const WindowMetrics& m : summary)
        if (m.model == model && m.window == window) return m;
    throw std::runtime_error("no metrics for " + model + "/" + window);
}

namespace {

std::vector<Vec> rollout_states(const AugmentedSystem& sys, std::span<const double> params, const Experiment& e,
                                const Vec& grid_delays) {
    const std::vector<double>& t = e.data.times();
    const Rollout r = sys.forward(params, e.truth_history(), t.front(), t.back(), t,
                                  e.cfg.forward_solver.spec(), grid_delays);
    std::vector<Vec> out;
    out.reserve(t.size());
    for (double ti : t) out.push_back(r.state(ti));
    return out;
}

template <class T>
std::vector<T> slice(const std::vector<T>& v, std::size_t first, std::size_t last) {
    return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(first), v.begin() + static_cast<std::ptrdiff_t>(last) + 1);
}

}  // namespace

EvaluationReport evaluate_params(const Experiment& e, const AugmentedSystem& sys, std::span<const double> params) {
    EvaluationReport rep;
    rep.times = e.data.times();
    rep.truth = e.data.states();
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        rep.windows.push_back(i <= e.train_span.last ? "train" : i <= e.val_span.last ? "val" : "predict");

    rep.closure = rollout_states(sys, params, e, {});
    rep.baseline = rollout_states(e.baseline(), {}, e, sys.forward_delays());
    rep.rmse_closure = rmse_series(rep.closure, rep.truth);
    rep.rmse_baseline = rmse_series(rep.baseline, rep.truth);
    if (e.smagorinsky) {
        const AugmentedSystem smag(*e.smagorinsky, ClosureSpec{});
        rep.smagorinsky = rollout_states(smag, {}, e, {});
        rep.rmse_smagorinsky = rmse_series(rep.smagorinsky, rep.truth);
    }

    LossSpec metric = e.loss;
    metric.positivity_weight = 0.0;
    const std::vector<std::pair<std::string, IndexRange>> windows = {
        {"train", e.train_span}, {"val", e.val_span}, {"predict", e.predict_span},
        {"train_val", {e.train_span.first, e.val_span.last}}, {"all", {e.train_span.first, e.predict_span.last}}};
    auto add = [&](const std::string& model, const std::vector<Vec>& pred, const Vec& rmse) {
        for (const auto& [name, span] : windows) {
            WindowMetrics m;
            m.model = model;
            m.window = name;
            const std::size_t a = span.first + 1, b = span.last;
            m.l2_error = evaluate_loss(metric, slice(pred, a, b), slice(rep.truth, a, b)).value;
            double s = 0.0;
            for (std::size_t i = a; i <= b; ++i) s += rmse[i];
            m.mean_rmse = s / static_cast<double>(b - a + 1);
            m.crosscorr = avg_crosscorr(slice(pred, a, b), slice(rep.truth, a, b));
            rep.summary.push_back(m);
        }
    };
    add("baseline", rep.baseline, rep.rmse_baseline);
    add("closure", rep.closure, rep.rmse_closure);
    if (e.smagorinsky) add("smagorinsky", rep.smagorinsky, rep.rmse_smagorinsky);
    return rep;
}

EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint, std::ostream* log) {
    const std::string path = checkpoint.empty() ? join(cfg.out_dir, "checkpoint.json") : checkpoint;
    const Checkpoint ck = load_checkpoint(path);
    const Experiment e = build_experiment(cfg);
    const AugmentedSystem sys = e.system();
    check_compatible(ck, sys);
    if (ck.config_hash != config_hash(cfg))
        throw CheckpointError("checkpoint '" + path + "' was written under a different configuration");
    const EvaluationReport rep = evaluate_params(e, sys, ck.state.params);

    ensure_dir(cfg.out_dir);
    const bool smag = !rep.smagorinsky.empty();
    std::vector<std::string> header{"t", "window"};
    for (const char* p : {"truth_", "baseline_", "closure_"}) {
        const auto cols = with_prefix(p, e.state_names);
        header.insert(header.end(), cols.begin(), cols.end());
    }
    if (smag) {
        const auto cols = with_prefix("smagorinsky_", e.state_names);
        header.insert(header.end(), cols.begin(), cols.end());
    }
    CsvWriter traj(join(cfg.out_dir, "trajectories.csv"), header);
    std::vector<std::string> mh{"t", "window", "rmse_baseline", "rmse_closure"};
    if (smag) mh.push_back("rmse_smagorinsky");
    CsvWriter metrics(join(cfg.out_dir, "metrics.csv"), mh);
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        traj << rep.times[i] << rep.windows[i];
        for (double v : rep.truth[i]) traj << v;
        for (double v : rep.baseline[i]) traj << v;
        for (double v : rep.closure[i]) traj << v;
        if (smag)
            for (double v : rep.smagorinsky[i]) traj << v;
        traj.end_row();
        metrics << rep.times[i] << rep.windows[i] << rep.rmse_baseline[i] << rep.rmse_closure[i];
        if (smag) metrics << rep.rmse_smagorinsky[i];
        metrics.end_row();
    }
    traj.close();
    metrics.close();
    CsvWriter sum(join(cfg.out_dir, "summary.csv"), {"model", "window", "l2_error", "mean_rmse", "crosscorr"});
    for (const WindowMetrics& m : rep.summary) {
        sum << m.model << m.window << m.l2_error << m.mean_rmse
            << (m.crosscorr ? *m.crosscorr : std::numeric_limits<double>::quiet_NaN());
        sum.end_row();
    }
    sum.close();
    if (log)
        for (const WindowMetrics& m : rep.summary)
            if (m.window != "all")
                *log << m.model << " " << m.window << ": l2 " << format_double(m.l2_error) << ", rmse "
                     << format_double(m.mean_rmse) << "\n";
    return rep;
}

VerifyReport cmd_verify_gradients(const ExperimentConfig& cfg, std::ostream* log) {
    struct Case {
        std::string name;
        ClosureKind kind;
        Vec delays;
        double tau1, tau2;
    };
    const std::vector<Case> cases = {
        {"markovian", ClosureKind::Markovian, {}, 0.0, 0.0},
        {"discrete", ClosureKind::Discrete, {0.3, 0.7}, 0.0, 0.0},
        {"distributed_0_0.5", ClosureKind::Distributed, {}, 0.0, 0.5},
        {"distributed_0.2_0.7", ClosureKind::Distributed, {}, 0.2, 0.7},
    };
    VerifyReport rep;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& c = cases[i];
        const ToyProblem toy = make_toy(c.kind, c.delays, c.tau1, c.tau2, cfg.seed + i);
        GradientCheck g = check_toy_gradient(c.name, toy, cfg.verify_tol, cfg.verify_eps);
        rep.max_rel_err = std::max({rep.max_rel_err, g.rel_err, g.rel_err_theta, g.rel_err_phi});
        if (log)
            *log << c.name << ": " << g.n_params << " parameters, relative error " << format_double(g.rel_err)
                 << " (" << g.seconds << " s)\n";
        rep.checks.push_back(std::move(g));
    }
    rep.passed = rep.max_rel_err < cfg.verify_threshold;
    ensure_dir(cfg.out_dir);
    CsvWriter w(join(cfg.out_dir, "gradients.csv"),
                {"case", "n_params", "rel_err", "rel_err_theta", "rel_err_phi", "seconds"});
    for (const GradientCheck& g : rep.checks)
        (w << g.name << g.n_params << g.rel_err << g.rel_err_theta << g.rel_err_phi << g.seconds).end_row();
    w.close();
    if (log)
        *log << "max relative error " << format_double(rep.max_rel_err) << (rep.passed ? " (pass)" : " (FAIL)")
             << "\n";
    return rep;
}

FiveNumber five_number(std::vector<double> v) {
    FiveNumber f;
    f.count = v.size();
    if (v.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        f.min = f.q1 = f.median = f.q3 = f.max = nan;
        return f;
    }
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    f.min = v.front();
    f.q1 = q(0.25);
    f.median = q(0.5);
    f.q3 = q(0.75);
    f.max = v.back();
    return f;
}

std::uint64_t sweep_seed(std::uint64_t seed, std::size_t tau_index, std::size_t repeat) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (1 + 1000 * tau_index + repeat);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SweepReport cmd_sweep_delay(const ExperimentConfig& cfg, std::ostream* log) {
    if (cfg.sweep_tau2.empty()) throw ConfigError("sweep.tau2 is empty");
    ExperimentConfig base = cfg;
    base.closure = ClosureKind::Distributed;
    base.validate();
    const Experiment exp = build_experiment(base);
    ensure_dir(cfg.out_dir);
    SweepReport rep;
    for (std::size_t i = 0; i < cfg.sweep_tau2.size(); ++i) {
        Experiment e = exp;
        e.cfg.tau2 = cfg.sweep_tau2[i];
        const AugmentedSystem sys = e.system();
        std::vector<double> finals;
        for (std::size_t r = 0; r < cfg.sweep_repeats; ++r) {
            SweepRun run;
            run.tau2 = cfg.sweep_tau2[i];
            run.repeat = r;
            run.seed = sweep_seed(cfg.seed, i, r);
            const std::string dir = join(cfg.out_dir, "sweep/tau2_" + std::to_string(i) + "/rep_" + std::to_string(r));
            if (log) *log << "sweep: tau2 " << format_double(run.tau2) << ", repeat " << r << "\n";
            try {
                ensure_dir(dir);
                const TrainOutcome t = train_closure(e, sys, run.seed, cfg.epochs, dir, "", nullptr);
                const std::size_t n = t.history.size() - 1, tail = std::min(cfg.sweep_tail, n);
                double s = 0.0;
                for (std::size_t k = t.history.size() - tail; k < t.history.size(); ++k) s += t.history[k].val_loss;
                run.final_val = tail > 0 ? s / static_cast<double>(tail) : t.history.back().val_loss;
                if (std::isfinite(run.final_val)) {
                    finals.push_back(run.final_val);
                } else {
                    run.diverged = true;
                    run.message = "validation rollout failed";
                }
            } catch (const TrainingDiverged& ex) {
                run.diverged = true;
                run.message = ex.what();
            } catch (const IntegrationError& ex) {
                run.diverged = true;
                run.message = ex.what();
            }
            if (log)
                *log << "  " << (run.diverged ? "diverged: " + run.message : "final val " + format_double(run.final_val))
                     << "\n";
            rep.runs.push_back(run);
        }
        rep.summary.emplace_back(cfg.sweep_tau2[i], five_number(finals));
    }
    CsvWriter runs(join(cfg.out_dir, "sweep_runs.csv"), {"tau2", "repeat", "seed", "status", "final_val_loss"});
    for (const SweepRun& r : rep.runs)
        (runs << r.tau2 << r.repeat << std::to_string(r.seed) << std::string(r.diverged ? "diverged" : "ok")
              << (r.diverged ? std::numeric_limits<double>::quiet_NaN() : r.final_val))
            .end_row();
    runs.close();
    CsvWriter sum(join(cfg.out_dir, "sweep_summary.csv"), {"tau2", "runs", "min", "q1", "median", "q3", "max"});
    for (const auto& [tau, f] : rep.summary)
        (sum << tau << f.count << f.min << f.q1 << f.median << f.q3 << f.max).end_row();
    sum.close();
    return rep;
}

}  // namespace ncm

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nclosure/experiment/commands.hpp"
#include "nclosure/experiment/csv.hpp"

using namespace ncm;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "nclosure_test_experiment" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig toy_cfg(const std::string& out, std::size_t epochs = 4) {
    ExperimentConfig c = default_config(ExperimentKind::Toy);
    c.out_dir = out;
    c.epochs = epochs;
    c.checkpoint_every = 2;
    return c;
}

void check_increasing_times(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::vector<double> ts = t.numbers("t");
    for (std::size_t i = 1; i < ts.size(); ++i) REQUIRE(ts[i] > ts[i - 1]);
}

}  // namespace

TEST_CASE("config parsing applies experiment defaults and overrides") {
    const ExperimentConfig c = parse_config(
        "# comment\n[experiment]\nname = exp1_rom\nseed = 42\n\n[closure]\nkind = distributed\ntau2 = 0.1  # window\n"
        "[train]\nlr0 = 0.01\nstaircase = true\ngradient = mean\n");
    CHECK(c.experiment == ExperimentKind::Exp1Rom);
    CHECK(c.seed == 42);
    CHECK(c.closure == ClosureKind::Distributed);
    CHECK(c.tau2 == 0.1);
    CHECK(c.schedule.lr0 == 0.01);
    CHECK(c.schedule.staircase);
    CHECK(c.mean_gradient);
    CHECK(c.schedule.decay_rate == 0.97);
    CHECK(c.schedule.decay_steps == 18);
    REQUIRE(c.delays.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(c.delays[i] == doctest::Approx(0.025 * double(i + 1)).epsilon(1e-14));
    CHECK(c.tau1 == 0.0);
}

TEST_CASE("config defaults per experiment") {
    const ExperimentConfig e2 = default_config(ExperimentKind::Exp2Subgrid);
    CHECK(e2.batch.batch_size == 8);
    CHECK(e2.schedule.decay_steps == 4);
    CHECK(e2.epochs == 250);
    const ExperimentConfig e3 = default_config(ExperimentKind::Exp3aBio0d);
    CHECK(e3.delays.size() == 6);
    CHECK(e3.delays.back() == doctest::Approx(4.5));
    CHECK(e3.tau2 == 2.5);
    const ExperimentConfig e4 = default_config(ExperimentKind::Exp3bBio1d);
    CHECK(e4.delays == Vec{0.5, 1.0, 1.5, 2.0});
    CHECK(e4.predict_end == 364.0);
}

TEST_CASE("config parsing is strict") {
    const std::string head = "[experiment]\nname = toy\n";
    CHECK_THROWS_AS(parse_config(head + "[train]\nepochz = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[nosuch]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[train]\nepochs = 3\nepochs = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[train]\nepochs = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[train]\nlr0 = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[train]\nstaircase = yes\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[closure]\nkind = spectral\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[closure]\ndelays = 0.2, 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[closure]\nkind = distributed\ntau1 = 0.3\ntau2 = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[data]\nval_end = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "[data]\ntrain_end = 1.05\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nname = exp9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\nepochs = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(head + "epochs 3\n"), ConfigError);
    try {
        parse_config(head + "[train]\n\nbatch_size = 0\n", "cfg.ini");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.ini") != std::string::npos);
    }
    try {
        parse_config(head + "[train]\n\nlr0 = x\n", "cfg.ini");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.ini:5") != std::string::npos);
    }
}

TEST_CASE("canonical text round-trips and hashing ignores run-length settings") {
    ExperimentConfig c = default_config(ExperimentKind::Exp3bBio1d);
    c.closure = ClosureKind::Distributed;
    c.seed = 9;
    c.schedule.lr0 = 0.1 / 3.0;
    const ExperimentConfig back = parse_config(to_text(c));
    CHECK(to_text(back) == to_text(c));
    CHECK(back.schedule.lr0 == c.schedule.lr0);
    CHECK(config_hash(back) == config_hash(c));

    ExperimentConfig longer = c;
    longer.epochs += 10;
    longer.out_dir = "elsewhere";
    CHECK(config_hash(longer) == config_hash(c));
    ExperimentConfig other = c;
    other.schedule.lr0 *= 2;
    CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("csv writer formats with 17 significant digits") {
    const std::string dir = scratch("csv");
    const std::string path = dir + "/a.csv";
    {
        CsvWriter w(path, {"t", "name", "v"});
        (w << 0.1 << std::string("x") << 1.0 / 3.0).end_row();
        w << 1.0;
        CHECK_THROWS(w.end_row());
    }
    const CsvTable t = read_csv(path);
    CHECK(t.header == std::vector<std::string>{"t", "name", "v"});
    CHECK(t.rows[0][0] == "0.10000000000000001");
    CHECK(std::stod(t.rows[0][2]) == 1.0 / 3.0);
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("five-number summary") {
    const FiveNumber f = five_number({4, 1, 3, 2, 5});
    CHECK(f.count == 5);
    CHECK(f.min == 1);
    CHECK(f.q1 == 2);
    CHECK(f.median == 3);
    CHECK(f.q3 == 4);
    CHECK(f.max == 5);
    const FiveNumber g = five_number({1, 2});
    CHECK(g.median == 1.5);
    CHECK(g.q1 == 1.25);
    CHECK(std::isnan(five_number({}).median));
}

TEST_CASE("gen-data row counts and determinism") {
    const std::string a = scratch("gen_a"), b = scratch("gen_b");
    ExperimentConfig c = default_config(ExperimentKind::Exp3aBio0d);
    c.out_dir = a;
    cmd_gen_data(c);
    const CsvTable t = read_csv(a + "/truth.csv");
    CHECK(t.rows.size() == 6601);
    CHECK(t.header == std::vector<std::string>{"t", "N", "P", "Z"});
    CHECK(t.numbers("t").back() == doctest::Approx(330.0));
    check_increasing_times(a + "/truth.csv");
    c.out_dir = b;
    cmd_gen_data(c);
    CHECK(slurp(a + "/truth.csv") == slurp(b + "/truth.csv"));

    ExperimentConfig r = default_config(ExperimentKind::Exp1Rom);
    r.out_dir = scratch("gen_rom");
    cmd_gen_data(r);
    const CsvTable coeffs = read_csv(r.out_dir + "/truth.csv");
    CHECK(coeffs.header.size() == 4);  // t + 3 coefficients
    CHECK(coeffs.rows.size() == 601);
    const CsvTable basis = read_csv(r.out_dir + "/pod_basis.csv");
    CHECK(basis.rows.size() == 100);
    CHECK(basis.header.size() == 5);

    ExperimentConfig s = default_config(ExperimentKind::Exp2Subgrid);
    s.out_dir = scratch("gen_sub");
    cmd_gen_data(s);
    CHECK(read_csv(s.out_dir + "/truth.csv").header.size() == 26);
    CHECK(read_csv(s.out_dir + "/fine.csv").header.size() == 101);
}

TEST_CASE("experiment truth follows the configured spans") {
    ExperimentConfig c = default_config(ExperimentKind::Exp2Subgrid);
    const Experiment e = build_experiment(c);
    CHECK(e.data.size() == 501);
    CHECK(e.train_span.last == 125);
    CHECK(e.val_span.first == 125);
    CHECK(e.val_span.last == 250);
    CHECK(e.predict_span.last == 500);
    // Coarse truth matches the fine field at shared nodes (x = 0, 1/3, ...).
    CHECK(e.data.states()[100][0] == 0.0);
    const AugmentedSystem sys = e.system();
    CHECK(sys.param_count() == 110);
    CHECK(sys.closure().output_mask.front() == 0.0);
}

TEST_CASE("checkpoint round trip is exact") {
    const std::string dir = scratch("ckpt");
    const Experiment e = build_experiment(toy_cfg(dir));
    const AugmentedSystem sys = e.system();
    const Trainer tr(sys, e.data, e.train_config());
    Checkpoint ck;
    ck.experiment = "toy";
    ck.fingerprint = system_fingerprint(sys);
    ck.config_hash = config_hash(e.cfg);
    ck.theta_count = sys.theta_count();
    ck.state = tr.initial_state(5);
    tr.step(ck.state);
    ck.history.push_back({0, 0.5, std::numeric_limits<double>::infinity(), 0.1});
    save_checkpoint(dir + "/c.json", ck);
    const Checkpoint back = load_checkpoint(dir + "/c.json");
    CHECK(back.state.params == ck.state.params);
    CHECK(back.state.opt.s == ck.state.opt.s);
    CHECK(back.state.opt.step == ck.state.opt.step);
    CHECK(back.state.rng == ck.state.rng);
    CHECK(back.config_hash == ck.config_hash);
    CHECK(std::isinf(back.history[0].val_loss));
    check_compatible(back, sys);

    Experiment other = e;
    other.cfg.closure = ClosureKind::Markovian;
    CHECK_THROWS_AS(check_compatible(back, other.system()), CheckpointError);
    std::ofstream(dir + "/bad.json") << "{\"format\": 3}";
    CHECK_THROWS_AS(load_checkpoint(dir + "/bad.json"), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(dir + "/missing.json"), CheckpointError);
}

TEST_CASE("resuming from a checkpoint reproduces an uninterrupted run") {
    const std::string full = scratch("resume_full"), part = scratch("resume_part");
    const TrainOutcome a = cmd_train(toy_cfg(full, 6));
    cmd_train(toy_cfg(part, 3));
    const TrainOutcome b = cmd_train(toy_cfg(part, 6), part + "/checkpoint.json");
    CHECK(a.checkpoint.state.params == b.checkpoint.state.params);
    CHECK(a.checkpoint.state.opt.s == b.checkpoint.state.opt.s);
    REQUIRE(a.history.size() == 7);
    REQUIRE(b.history.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(a.history[i].val_loss == b.history[i].val_loss);
    CHECK(slurp(full + "/loss_history.csv") == slurp(part + "/loss_history.csv"));

    const CsvTable h = read_csv(full + "/loss_history.csv");
    CHECK(h.header == std::vector<std::string>{"epoch", "train_loss", "val_loss", "lr"});
    CHECK(h.rows.size() == 7);

    ExperimentConfig changed = toy_cfg(part, 8);
    changed.schedule.lr0 = 0.5;
    CHECK_THROWS_AS(cmd_train(changed, part + "/checkpoint.json"), CheckpointError);
}

TEST_CASE("evaluating an untrained checkpoint reproduces the baseline") {
    const std::string dir = scratch("eval_zero");
    ExperimentConfig c = default_config(ExperimentKind::Exp2Subgrid);
    c.out_dir = dir;
    c.epochs = 0;
    c.train_end = 0.5, c.val_end = 1.0, c.predict_end = 1.5;
    cmd_train(c);
    const EvaluationReport r = cmd_evaluate(c);
    for (std::size_t i = 0; i < r.times.size(); ++i) CHECK(r.closure[i] == r.baseline[i]);
    CHECK(r.rmse_closure == r.rmse_baseline);
    const CsvTable traj = read_csv(dir + "/trajectories.csv");
    CHECK(traj.header.size() == 2 + 4 * 25);
    CHECK(traj.header[2] == "truth_u0");
    CHECK(traj.rows.size() == 151);
    check_increasing_times(dir + "/trajectories.csv");
    check_increasing_times(dir + "/metrics.csv");
    const CsvTable m = read_csv(dir + "/metrics.csv");
    CHECK(m.header.back() == "rmse_smagorinsky");
    const CsvTable s = read_csv(dir + "/summary.csv");
    CHECK(s.rows.size() == 15);  // 3 models x 5 windows
    CHECK(r.find("closure", "val").l2_error == r.find("baseline", "val").l2_error);
    CHECK(std::isfinite(r.find("smagorinsky", "train").l2_error));
}

TEST_CASE("baseline columns do not depend on checkpoint content") {
    const std::string dir = scratch("eval_indep");
    ExperimentConfig c = toy_cfg(dir, 3);
    cmd_train(c);
    const EvaluationReport trained = cmd_evaluate(c);
    const Experiment e = build_experiment(c);
    const AugmentedSystem sys = e.system();
    const EvaluationReport zero = evaluate_params(e, sys, Vec(sys.param_count(), 0.0));
    CHECK(trained.baseline == zero.baseline);
    CHECK(trained.closure != zero.closure);
}

TEST_CASE("single-delay sweep with one repeat matches a training run") {
    const std::string dir = scratch("sweep_one");
    ExperimentConfig c = toy_cfg(dir, 5);
    c.sweep_tau2 = {0.2};
    c.sweep_repeats = 1;
    c.sweep_tail = 3;
    const SweepReport rep = cmd_sweep_delay(c);
    REQUIRE(rep.runs.size() == 1);
    REQUIRE_FALSE(rep.runs[0].diverged);

    ExperimentConfig t = c;
    t.closure = ClosureKind::Distributed;
    t.tau2 = 0.2;
    t.seed = rep.runs[0].seed;
    t.out_dir = scratch("sweep_one_train");
    const TrainOutcome out = cmd_train(t);
    const double tail = (out.history[3].val_loss + out.history[4].val_loss + out.history[5].val_loss) / 3.0;
    CHECK(rep.runs[0].final_val == doctest::Approx(tail).epsilon(1e-15));
    CHECK(rep.summary[0].second.count == 1);
    CHECK(rep.summary[0].second.median == rep.runs[0].final_val);
    const CsvTable s = read_csv(dir + "/sweep_summary.csv");
    CHECK(s.header == std::vector<std::string>{"tau2", "runs", "min", "q1", "median", "q3", "max"});
}

TEST_CASE("sweep seeds are distinct and reproducible") {
    CHECK(sweep_seed(1, 0, 0) == sweep_seed(1, 0, 0));
    CHECK(sweep_seed(1, 0, 1) != sweep_seed(1, 0, 0));
    CHECK(sweep_seed(1, 1, 0) != sweep_seed(1, 0, 0));
    CHECK(sweep_seed(2, 0, 0) != sweep_seed(1, 0, 0));
}

TEST_CASE("verify-gradients passes on the toy system") {
    ExperimentConfig c = toy_cfg(scratch("verify"));
    const VerifyReport r = cmd_verify_gradients(c);
    CHECK(r.passed);
    CHECK(r.checks.size() == 4);
    CHECK(r.max_rel_err < 1e-4);
    c.verify_threshold = 1e-14;
    CHECK_FALSE(cmd_verify_gradients(c).passed);
}

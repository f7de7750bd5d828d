#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nclosure/experiment/checkpoint.hpp"
#include "nclosure/experiment/config.hpp"
#include "nclosure/experiment/setup.hpp"
#include "nclosure/toy.hpp"

namespace ncm {

/// Writes truth.csv (t, state columns); exp1 adds pod_basis.csv and pod_spectrum.csv, exp2 adds fine.csv.
void cmd_gen_data(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct TrainOutcome {
    std::vector<EpochRecord> history;
    Checkpoint checkpoint;
    std::string checkpoint_path;
};

/// Trains the configured closure. Resumes when `checkpoint` names an existing file,
/// otherwise starts from the seed and writes `<out>/checkpoint.json` (or `checkpoint`).
/// Writes loss_history.csv with one row per epoch, epoch 0 being the untrained model.
TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::string& checkpoint = "", std::ostream* log = nullptr);

/// Same loop on an already built experiment; no files unless `out_dir` is set.
TrainOutcome train_closure(const Experiment& exp, const AugmentedSystem& sys, std::uint64_t seed,
                           std::size_t epochs, const std::string& out_dir, const std::string& checkpoint,
                           std::ostream* log);

struct WindowMetrics {
    std::string model, window;
    double l2_error = 0.0;   // time-averaged L2 (or depth-averaged) error
    double mean_rmse = 0.0;  // RMSE(t) averaged over the window's times
    std::optional<double> crosscorr;
};

struct EvaluationReport {
    std::vector<double> times;
    std::vector<std::string> windows;  // per time: train | val | predict
    std::vector<Vec> truth, baseline, closure, smagorinsky;
    Vec rmse_baseline, rmse_closure, rmse_smagorinsky;
    std::vector<WindowMetrics> summary;

    const WindowMetrics& find(const std::string& model, const std::string& window) const;
};

/// Continuous rollouts from the truth at t = 0 across all spans. The baseline shares the
/// closure's step grid so a zero closure reproduces it.
EvaluationReport evaluate_params(const Experiment& exp, const AugmentedSystem& sys, std::span<const double> params);

/// Loads `checkpoint` (default `<out>/checkpoint.json`) and writes trajectories.csv, metrics.csv and summary.csv.
EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint = "",
                              std::ostream* log = nullptr);

struct VerifyReport {
    std::vector<GradientCheck> checks;
    double max_rel_err = 0.0;
    bool passed = false;
};

/// Adjoint against finite differences on the toy system for every closure kind; writes gradients.csv.
VerifyReport cmd_verify_gradients(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct SweepRun {
    double tau2 = 0.0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string message;
    double final_val = 0.0;  // mean validation loss over the last `tail` epochs
};

struct FiveNumber {
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles by linear interpolation between order statistics.
FiveNumber five_number(std::vector<double> values);

struct SweepReport {
    std::vector<SweepRun> runs;
    std::vector<std::pair<double, FiveNumber>> summary;
};

/// Distributed closures with τ1 from the config and each sweep τ2; writes sweep_runs.csv and sweep_summary.csv.
SweepReport cmd_sweep_delay(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Seed of sweep run (i, r), derived from the config seed.
std::uint64_t sweep_seed(std::uint64_t seed, std::size_t tau_index, std::size_t repeat);

}  // namespace ncm

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nclosure/closure.hpp"
#include "nclosure/experiment/config.hpp"
#include "nclosure/models/pod.hpp"
#include "nclosure/train.hpp"

namespace ncm {

/// A configured experiment: low-fidelity model, truth snapshots and closure layout.
struct Experiment {
    ExperimentConfig cfg;
    BaseModel base;
    SnapshotDataset data;  // truth on [0, predict_end] at cfg.data_dt
    std::vector<std::string> state_names;
    std::size_t positions = 1;
    Vec output_mask;
    LossSpec loss;
    IndexRange train_span, val_span, predict_span;

    /// exp1_rom: basis of the full-order snapshots on [0, burgers.pod_end].
    std::optional<PodBasis> pod;
    /// exp2_subgrid: fine-grid truth and both grids; Smagorinsky-corrected coarse model.
    std::vector<Vec> fine_states;
    Vec fine_x, coarse_x;
    std::optional<BaseModel> smagorinsky;

    /// Closure of the given kind with the experiment's architectures and delays.
    ClosureSpec closure_spec(ClosureKind kind) const;
    AugmentedSystem system() const;
    AugmentedSystem baseline() const;
    TrainConfig train_config() const;
    /// Truth interpolant, constant before the first snapshot.
    HistoryFn truth_history() const;
};

/// Builds the models and integrates the truth. Deterministic in the config.
Experiment build_experiment(const ExperimentConfig& cfg);

/// Snapshot times t_i = i·dt for i = 0…round(t_end/dt).
std::vector<double> snapshot_times(double t_end, double dt);

}  // namespace ncm

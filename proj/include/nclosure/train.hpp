#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclosure/closure.hpp"

namespace ncm {

/// Truth snapshots at uniformly spaced times with a C¹ interpolant between them.
class SnapshotDataset {
public:
    SnapshotDataset() = default;
    SnapshotDataset(std::vector<double> times, std::vector<Vec> states);

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vec>& states() const { return states_; }
    std::size_t size() const { return times_.size(); }
    std::size_t dim() const { return states_.empty() ? 0 : states_.front().size(); }
    double dt() const { return dt_; }

    /// Cubic Hermite through the snapshots with finite-difference slopes;
    /// constant extension before the first snapshot.
    Vec interpolate(double t) const;
    /// Index of the snapshot at time t (within 1e-6·dt), or throws.
    std::size_t index_of(double t) const;

private:
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<Vec> slopes_;
    double dt_ = 0.0;
};

enum class LossKind { TimeAvgL2, DepthAvgL2 };

struct LossSpec {
    LossKind kind = LossKind::TimeAvgL2;
    double positivity_weight = 0.0;
    /// DepthAvgL2: state is position-major with `species` values per position.
    std::size_t species = 3;
};

struct LossValue {
    double value = 0.0;
    std::vector<Vec> grads;  // ∂value/∂pred_i
};

/// (1/M) Σ_i ‖pred_i − truth_i‖₂ (or the depth-averaged variant), plus the positivity penalty.
LossValue evaluate_loss(const LossSpec& spec, const std::vector<Vec>& pred, const std::vector<Vec>& truth);
double loss_time_avg_l2(const std::vector<Vec>& pred, const std::vector<Vec>& truth);
double loss_depth_avg_l2(const std::vector<Vec>& pred, const std::vector<Vec>& truth, std::size_t species);
/// weight · mean over all entries of max(0, −x)².
double positivity_penalty(const std::vector<Vec>& pred, double weight);

struct LrSchedule {
    double lr0 = 0.075;
    double decay_rate = 0.97;
    double decay_steps = 18;
    bool staircase = false;
};

double lr_at(std::uint64_t step, const LrSchedule& schedule);

struct RmspropState {
    Vec s;
    double rho = 0.9;
    double epsilon = 1e-7;
    std::uint64_t step = 0;
};

/// s ← ρs + (1−ρ)g²; θ ← θ − lr(step)·g/(√s + ε); step += 1.
void rmsprop_step(RmspropState& state, const LrSchedule& schedule, Vec& theta, std::span<const double> grad);

struct BatchSpec {
    std::size_t window_steps = 6;
    std::size_t stride = 2;
    std::size_t batch_size = 2;
};

std::size_t iterations_per_epoch(std::size_t n_train_steps, std::size_t batch_size, std::size_t window_steps = 6);

struct Window {
    std::size_t start = 0;                 // dataset index of the initial condition
    std::vector<std::size_t> supervised;   // dataset indices with targets
};

/// Snapshot indices [first, last] form the training span.
struct IndexRange {
    std::size_t first = 0, last = 0;
};

/// Admissible starts: windows inside the span whose delayed history reaches no earlier than the span start.
std::vector<std::size_t> admissible_starts(const SnapshotDataset& data, IndexRange span, const BatchSpec& spec,
                                           double max_delay);
std::vector<Window> sample_batch(const SnapshotDataset& data, IndexRange span, const BatchSpec& spec,
                                 double max_delay, std::mt19937_64& rng);

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    BatchSpec batch;
    LossSpec loss;
    LrSchedule schedule;
    double rho = 0.9, epsilon = 1e-7;
    bool mean_batch_gradient = false;
    StepperSpec forward_stepper = DormandPrince54{};
    StepperSpec adjoint_stepper = DormandPrince54{};
    IndexRange train_span;
    IndexRange val_span;
    std::size_t iterations_per_epoch = 0;  // 0 derives it from the span
    /// Worker threads for the windows of a batch.
    std::size_t threads = 1;
};

/// Everything needed to resume training bit-for-bit.
struct TrainState {
    Vec params;
    RmspropState opt;
    std::size_t epoch = 0;
    std::mt19937_64 rng;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

class Trainer {
public:
    Trainer(const AugmentedSystem& sys, const SnapshotDataset& data, TrainConfig cfg);

    const TrainConfig& config() const { return cfg_; }
    std::size_t iterations() const { return iterations_; }
    TrainState initial_state(std::uint64_t seed) const;

    /// Loss and gradient of one window.
    struct WindowResult {
        double loss = 0.0;
        Vec grad;
    };
    WindowResult window_gradient(std::span<const double> params, const Window& w) const;

    /// One optimizer step on a freshly sampled batch; returns the mean window loss.
    double step(TrainState& state) const;

    /// Rollout from the truth at data index `first` (truth history before it),
    /// loss over indices (first, last]; +inf when the rollout fails.
    double span_loss(std::span<const double> params, IndexRange span) const;
    /// Epoch record for the current parameters (train and validation span losses, possibly +inf).
    EpochRecord evaluate(const TrainState& state) const;
    EpochRecord run_epoch(TrainState& state) const;

private:
    const AugmentedSystem& sys_;
    const SnapshotDataset& data_;
    TrainConfig cfg_;
    std::size_t iterations_ = 0;
};

/// Per-time RMSE over components.
Vec rmse_series(const std::vector<Vec>& pred, const std::vector<Vec>& truth);
/// Mean over components of the zero-lag Pearson correlation; components with
/// zero variance are skipped; nullopt when no component is defined.
std::optional<double> avg_crosscorr(const std::vector<Vec>& pred, const std::vector<Vec>& truth);

}  // namespace ncm

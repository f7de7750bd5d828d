#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclosure/closure.hpp"
#include "nclosure/integrate.hpp"
#include "nclosure/models/bio.hpp"
#include "nclosure/models/burgers.hpp"
#include "nclosure/models/column.hpp"
#include "nclosure/train.hpp"

namespace ncm {

/// Malformed or inconsistent configuration; maps to the validation exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Exp1Rom, Exp2Subgrid, Exp3aBio0d, Exp3bBio1d, Toy };

const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

/// Stepper choice as written in a config: method plus its parameters.
struct SolverConfig {
    std::string method = "dopri5";  // dopri5 | rk4 | trapezoid
    double rtol = 1e-6, atol = 1e-8;
    double dt = 0.01;                // fixed-step methods
    std::size_t max_steps = 200000;

    StepperSpec spec() const;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Toy;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    ClosureKind closure = ClosureKind::Discrete;
    Vec delays;
    double tau1 = 0.0, tau2 = 0.0;
    std::size_t history_panels = 16;

    std::size_t epochs = 10;
    BatchSpec batch;
    LrSchedule schedule;
    double rho = 0.9, epsilon = 1e-7;
    bool mean_gradient = false;
    double positivity_weight = 0.0;
    std::size_t iterations_per_epoch = 0;
    std::size_t checkpoint_every = 10;
    std::size_t threads = 1;

    double data_dt = 0.01;
    double train_end = 1.0, val_end = 2.0, predict_end = 3.0;

    SolverConfig truth_solver, forward_solver, adjoint_solver;

    BurgersConfig burgers;
    std::size_t nx_coarse = 25;
    double smagorinsky_cs = 1.0;
    std::size_t pod_modes = 3;

    BioParams bio;
    ColumnConfig column;

    Vec sweep_tau2;
    std::size_t sweep_repeats = 3;
    std::size_t sweep_tail = 50;

    double verify_tol = 1e-10, verify_eps = 1e-5, verify_threshold = 1e-4;

    /// Throws ConfigError when the fields are inconsistent.
    void validate() const;
};

/// Defaults of one experiment family.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses `[section]` headers and `key = value` lines; `#` starts a comment.
/// `[experiment] name` selects the defaults the remaining keys override.
/// Unknown sections or keys, duplicates and bad values are errors with line numbers.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Canonical text of every field; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);
/// FNV-1a over the canonical text, ignoring epochs, output directory and sweep settings.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace ncm

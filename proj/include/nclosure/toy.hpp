#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nclosure/closure.hpp"

namespace ncm {

/// Small two-state system with a neural closure, used to check adjoint gradients.
///
/// Base: u1' = −u1 + 0.5 u2, u2' = −0.3 u1 − u2 + 0.2 u1². History h(t) = (cos t, sin t).
/// Loss: Σ_i ½‖u(T_i) − d_i‖² with targets d_i from a perturbed reference.
struct ToyProblem {
    AugmentedSystem sys;
    Vec params;
    HistoryFn history;
    double t0 = 0.0, T = 2.0;
    std::vector<double> data_times;
    std::vector<Vec> targets;

    double loss(const std::vector<Vec>& states) const;
    std::vector<Vec> loss_grads(const std::vector<Vec>& states) const;
};

BaseModel toy_base();

/// kind: Markovian (Dense net), Discrete (Elman net; `delays` may be empty),
/// Distributed (window tau1, tau2). Parameters are random, not zero-initialized.
ToyProblem make_toy(ClosureKind kind, const Vec& delays, double tau1, double tau2, std::uint64_t seed);

struct GradientCheck {
    std::string name;
    std::size_t n_params = 0;
    double rel_err = 0.0;       // relative L2 error, adjoint vs finite differences
    double rel_err_theta = 0.0;
    double rel_err_phi = 0.0;   // distributed only
    double seconds = 0.0;
    Vec adjoint, finite_diff;
};

/// Adjoint vs central finite differences with Dormand–Prince at rtol = atol = tol.
GradientCheck check_toy_gradient(const std::string& name, const ToyProblem& toy, double tol = 1e-10,
                                 double eps = 1e-5);

double relative_l2(std::span<const double> a, std::span<const double> ref);

}  // namespace ncm

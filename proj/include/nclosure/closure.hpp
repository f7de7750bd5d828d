#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "nclosure/integrate.hpp"
#include "nclosure/linalg.hpp"
#include "nclosure/nn.hpp"

namespace ncm {

/// Side inputs for closure networks evaluated at time t (depth grid, irradiance).
struct ContextData {
    Vec depth;
    Vec irradiance;
};

/// Known low-fidelity dynamics: right-hand side and its vector–Jacobian product.
struct BaseModel {
    std::size_t dim = 0;
    std::function<Vec(double t, const Vec& u)> rhs;
    /// wᵀ ∂rhs/∂u at (t, u).
    std::function<Vec(double t, const Vec& u, const Vec& w)> vjp;
    /// Optional: evaluation context for networks with extra-channel layers.
    std::function<ContextData(double t)> context;
};

enum class ClosureKind { None, Markovian, Discrete, Distributed };

const char* to_string(ClosureKind k);
ClosureKind parse_closure_kind(const std::string& name);

struct ClosureSpec {
    ClosureKind kind = ClosureKind::None;
    Network f;  // closure network (recurrent for Discrete)
    Network g;  // Distributed only: integrand network
    Vec delays;  // Discrete: τ_1 < … < τ_K, all > 0
    double tau1 = 0.0, tau2 = 0.0;  // Distributed window, 0 ≤ τ_1 ≤ τ_2
    /// Spatial positions shared by state and auxiliary fields; u and y are
    /// interleaved per position to form the f input of a distributed closure.
    std::size_t positions = 1;
    /// Elementwise factor on the closure output (empty = all ones).
    Vec output_mask;
    /// Trapezoid panels for the initial auxiliary value y(t0).
    std::size_t history_panels = 16;
};

/// Forward rollout: u (and y for distributed closures) stacked in one trajectory.
struct Rollout {
    DenseTrajectory traj;
    std::size_t state_dim = 0;
    double t0 = 0.0;
    double t_end = 0.0;
    Vec state(double t) const;  // u(t), t0 ≤ t ≤ t_end
    Vec aux(double t) const;    // y(t) (empty unless distributed)
};

struct AdjointResult {
    Vec gradient;  // dL/dθ followed by dL/dφ
    /// Backward trajectory of [λ, μ, running θ-integral, running φ-integral].
    DenseTrajectory backward;
    std::size_t state_dim = 0, aux_dim = 0;
    Vec lambda(double t) const;
    Vec mu(double t) const;
};

/// u' = base(t, u) + closure(u, delayed states or y; θ), with y' = g(u(t−τ1)) − g(u(t−τ2)).
class AugmentedSystem {
public:
    AugmentedSystem(BaseModel base, ClosureSpec closure);

    const BaseModel& base() const { return base_; }
    const ClosureSpec& closure() const { return closure_; }
    std::size_t state_dim() const { return base_.dim; }
    std::size_t aux_dim() const { return aux_dim_; }
    std::size_t theta_count() const;
    std::size_t phi_count() const;
    std::size_t param_count() const { return theta_count() + phi_count(); }
    /// Positive delays that the forward solve reads (step cap and break points).
    Vec forward_delays() const;
    double max_delay() const;

    /// Closure network initialization (final layers zeroed), θ then φ.
    Vec init_params(std::uint64_t seed) const;

    /// Augmented right-hand side at t given access to past states.
    Vec rhs(double t, const Vec& state, std::span<const double> params,
            const std::function<Vec(double)>& past_u) const;

    /// Solve on [t0, t_end] with u(s) = history(s) for s ≤ t0. Lands exactly on `stops`.
    /// `grid_delays` adds step caps and break points as if the closure read those delays too,
    /// so a run can share the step grid of another closure.
    Rollout forward(std::span<const double> params, const HistoryFn& history, double t0, double t_end,
                    const std::vector<double>& stops, const StepperSpec& stepper,
                    const Vec& grid_delays = {}) const;

    /// Adjoint gradient of L = Σ_i l_i(u(T_i)) given the jumps ∂l_i/∂u(T_i).
    /// Data times must lie in (t0, t_end]; T = t_end.
    AdjointResult adjoint(std::span<const double> params, const Rollout& fwd, const HistoryFn& history,
                          const std::vector<double>& data_times, const std::vector<Vec>& loss_grads,
                          const StepperSpec& stepper) const;

    /// Plain no-delay adjoint (Markovian closures, or None); no delayed stores involved.
    AdjointResult adjoint_markovian(std::span<const double> params, const Rollout& fwd,
                                    const std::vector<double>& data_times, const std::vector<Vec>& loss_grads,
                                    const StepperSpec& stepper) const;

private:
    std::optional<ContextData> context_at(double t) const;
    Vec apply_mask(Vec v) const;
    std::vector<Vec> discrete_sequence(double t, const Vec& u, const std::function<Vec(double)>& past_u) const;
    Vec interleave(const Vec& u, const Vec& y) const;
    void split(const Vec& uy, Vec& du, Vec& dy) const;
    Vec history_aux(std::span<const double> phi, const HistoryFn& history, double t0) const;

    BaseModel base_;
    ClosureSpec closure_;
    std::size_t aux_dim_ = 0;
};

/// Loss of a rollout from its states at the data times.
using RolloutLoss = std::function<double(const std::vector<Vec>& states_at_data_times)>;

/// Central-difference gradient of the rollout loss, one parameter at a time.
Vec fd_gradient(const AugmentedSystem& sys, std::span<const double> params, const HistoryFn& history, double t0,
                double t_end, const std::vector<double>& data_times, const RolloutLoss& loss,
                const StepperSpec& stepper, double eps);

}  // namespace ncm

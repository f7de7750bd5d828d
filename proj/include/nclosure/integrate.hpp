#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nclosure/linalg.hpp"

namespace ncm {

/// Classic fourth-order Runge–Kutta on a fixed grid.
struct Rk4Fixed {
    double dt = 0.01;
};

/// Adaptive Dormand–Prince 5(4) with FSAL.
struct DormandPrince54 {
    double rtol = 1e-6;
    double atol = 1e-8;
    double dt_init = 0.0;  // 0 selects a starting step from the problem scale
    std::size_t max_steps = 100000;
};

/// A-stable implicit trapezoidal rule with a finite-difference Newton Jacobian.
struct ImplicitTrapezoid {
    double dt = 0.01;
    double newton_tol = 1e-10;
    int newton_max_iters = 20;
};

using StepperSpec = std::variant<Rk4Fixed, DormandPrince54, ImplicitTrapezoid>;

/// Throws InvalidArgument when the stepper parameters violate their invariants.
void validate(const StepperSpec& spec);

/// Failure during time integration (step budget exhausted, non-finite state,
/// Newton breakdown). Carries the time at which the solve stopped.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " (t=" + std::to_string(t) + ")"), time(t) {}
    double time;
};

struct TimeSpan {
    double start = 0.0;
    double end = 0.0;
};

/// Append-only record of a solution as contiguous cubic Hermite segments.
///
/// A forward trajectory grows toward larger t, a backward one toward smaller t
/// (adjoint sweeps). Segments are always stored with t0 < t1. Adjacent segments
/// share their endpoint time; states may differ there, which is how adjoint
/// jumps at data times are represented.
class DenseTrajectory {
public:
    enum class Direction { Forward, Backward };

    DenseTrajectory() = default;
    DenseTrajectory(double t_origin, Vec u_origin, Direction dir = Direction::Forward);

    Direction direction() const { return dir_; }
    bool empty() const { return segments_.empty(); }
    std::size_t size() const { return segments_.size(); }
    const std::vector<HermiteSegment>& segments() const { return segments_; }

    /// Time where the solve started and the current growth front.
    double origin() const { return origin_; }
    double front() const { return front_; }
    double lo() const { return dir_ == Direction::Forward ? origin_ : front_; }
    double hi() const { return dir_ == Direction::Forward ? front_ : origin_; }
    bool covers(double t) const;
    const Vec& front_state() const { return front_state_; }

    /// Forward: seg.t0 must equal front(); backward: seg.t1 must equal front().
    void append(HermiteSegment seg);
    /// Restart the growth front at the current front time with a new state (jump).
    void reset_front_state(Vec u) { front_state_ = std::move(u); }

    Vec query(double t) const;
    /// At a shared endpoint, `left_limit` selects the segment ending there
    /// instead of the one starting there (matters only across jumps).
    Vec query(double t, bool left_limit) const;
    Vec query_derivative(double t) const;

private:
    const HermiteSegment& locate(double t, bool left_limit = false) const;

    Direction dir_ = Direction::Forward;
    double origin_ = 0.0;
    double front_ = 0.0;
    Vec origin_state_;
    Vec front_state_;
    std::vector<HermiteSegment> segments_;
};

using OdeRhs = std::function<Vec(double t, const Vec& u)>;

struct AdvanceOptions {
    /// Upper bound on |step|; DDE solves cap this at the smallest delay.
    double max_step = std::numeric_limits<double>::infinity();
    /// Times strictly inside the interval the stepper must land on exactly.
    std::vector<double> stops;
    /// Adaptive error control on the leading components only (0 = all).
    std::size_t error_dims = 0;
};

/// Integrates from traj.front() to t_to (either direction, matching the
/// trajectory's direction) and appends the steps. The rhs may query `traj`
/// for times already committed. Returns the state at t_to.
Vec advance(DenseTrajectory& traj, const OdeRhs& rhs, double t_to, const StepperSpec& stepper,
            const AdvanceOptions& opts = {});

DenseTrajectory integrate_ode(const OdeRhs& rhs, const Vec& u0, TimeSpan span, const StepperSpec& stepper);
/// States at increasing `times` (times[0] is the initial time), landing on each exactly.
std::vector<Vec> solve_at(const OdeRhs& rhs, const Vec& u0, const std::vector<double>& times,
                          const StepperSpec& stepper);

using DdeRhs = std::function<Vec(double t, const Vec& u, const std::vector<Vec>& delayed)>;
using HistoryFn = std::function<Vec(double t)>;

struct DdeProblem {
    DdeRhs rhs;
    Vec delays;  // strictly positive, strictly increasing
    HistoryFn history;
};

/// Delayed-state access for method-of-steps solves: the history function at or
/// before `t_start`, the committed trajectory after it.
class DelayedLookup {
public:
    DelayedLookup(const HistoryFn& history, const DenseTrajectory& traj, double t_start)
        : history_(history), traj_(traj), t_start_(t_start) {}
    Vec operator()(double s) const;

private:
    const HistoryFn& history_;
    const DenseTrajectory& traj_;
    double t_start_;
};

/// Break points t_start + k·τ_i (k ≥ 1) strictly inside (t_start, t_end), sorted.
std::vector<double> delay_breakpoints(std::span<const double> delays, double t_start, double t_end,
                                      std::size_t max_count = 4096);

/// Method-of-steps solve; steps never exceed min τ so every delayed lookup
/// falls in the history or an already committed segment.
DenseTrajectory integrate_dde(const DdeProblem& prob, TimeSpan span, const StepperSpec& stepper);

/// Composite trapezoidal rule with n_panels equal panels.
double quadrature(const std::function<double(double)>& f, double a, double b, std::size_t n_panels);
/// Vector-valued composite trapezoidal rule.
Vec quadrature_vec(const std::function<Vec(double)>& f, double a, double b, std::size_t n_panels);

}  // namespace ncm

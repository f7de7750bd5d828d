#include "nclosure/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace ncm {

namespace {

double time_slack(double a, double b) { return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

void check_finite_state(const Vec& u, double t) {
    if (!all_finite(u)) throw IntegrationError("non-finite state (blow-up)", t);
}

}  // namespace

void validate(const StepperSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Rk4Fixed>) {
                if (!(s.dt > 0)) throw InvalidArgument("RK4: dt must be > 0");
            } else if constexpr (std::is_same_v<T, DormandPrince54>) {
                if (!(s.rtol > 0) || !(s.atol > 0)) throw InvalidArgument("Dormand-Prince: rtol and atol must be > 0");
                if (s.max_steps == 0) throw InvalidArgument("Dormand-Prince: max_steps must be > 0");
                if (s.dt_init < 0) throw InvalidArgument("Dormand-Prince: dt_init must be >= 0");
            } else {
                if (!(s.dt > 0)) throw InvalidArgument("implicit trapezoid: dt must be > 0");
                if (!(s.newton_tol > 0) || s.newton_max_iters <= 0)
                    throw InvalidArgument("implicit trapezoid: invalid Newton settings");
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// DenseTrajectory

DenseTrajectory::DenseTrajectory(double t_origin, Vec u_origin, Direction dir)
    : dir_(dir), origin_(t_origin), front_(t_origin), origin_state_(u_origin), front_state_(std::move(u_origin)) {}

bool DenseTrajectory::covers(double t) const {
    const double s = time_slack(lo(), hi());
    return t >= lo() - s && t <= hi() + s;
}

void DenseTrajectory::append(HermiteSegment seg) {
    if (!(seg.t1 > seg.t0)) throw InvalidArgument("DenseTrajectory::append: empty segment");
    if (dir_ == Direction::Forward) {
        if (std::abs(seg.t0 - front_) > time_slack(seg.t0, front_))
            throw InvalidArgument("DenseTrajectory::append: segment is not contiguous with the front");
        seg.t0 = front_;
        front_ = seg.t1;
        front_state_ = seg.u1;
    } else {
        if (std::abs(seg.t1 - front_) > time_slack(seg.t1, front_))
            throw InvalidArgument("DenseTrajectory::append: segment is not contiguous with the front");
        seg.t1 = front_;
        front_ = seg.t0;
        front_state_ = seg.u0;
    }
    segments_.push_back(std::move(seg));
}

const HermiteSegment& DenseTrajectory::locate(double t, bool left_limit) const {
    if (!covers(t))
        throw OutOfDomain("DenseTrajectory: t=" + std::to_string(t) + " outside [" + std::to_string(lo()) + ", " +
                          std::to_string(hi()) + "]");
    const std::size_t n = segments_.size();
    // Index k in ascending-time order maps to storage index:
    auto at = [&](std::size_t k) -> const HermiteSegment& {
        return dir_ == Direction::Forward ? segments_[k] : segments_[n - 1 - k];
    };
    // First segment (ascending) whose t1 > t (right-continuous) or t1 >= t (left-continuous).
    std::size_t lo_i = 0, hi_i = n;
    while (lo_i < hi_i) {
        const std::size_t mid = (lo_i + hi_i) / 2;
        if (left_limit ? at(mid).t1 >= t : at(mid).t1 > t)
            hi_i = mid;
        else
            lo_i = mid + 1;
    }
    return at(std::min(lo_i, n - 1));
}

Vec DenseTrajectory::query(double t) const {
    if (segments_.empty()) {
        if (std::abs(t - origin_) <= time_slack(t, origin_)) return origin_state_;
        throw OutOfDomain("DenseTrajectory: query on an empty trajectory");
    }
    return hermite_eval(locate(t), t);
}

Vec DenseTrajectory::query(double t, bool left_limit) const {
    if (segments_.empty()) return query(t);
    return hermite_eval(locate(t, left_limit), t);
}

Vec DenseTrajectory::query_derivative(double t) const {
    if (segments_.empty()) throw OutOfDomain("DenseTrajectory: derivative query on an empty trajectory");
    return hermite_derivative(locate(t), t);
}

// ---------------------------------------------------------------------------
// Steppers

namespace {

struct StepResult {
    Vec u1;
    Vec f1;
};

Vec combine(const Vec& u, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
    Vec out = u;
    for (const auto& [c, k] : terms) {
        if (c == 0.0) continue;
        const double hc = h * c;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += hc * (*k)[i];
    }
    return out;
}

StepResult rk4_step(const OdeRhs& rhs, double t, const Vec& u, const Vec& f0, double h) {
    const Vec k2 = rhs(t + 0.5 * h, combine(u, h, {{0.5, &f0}}));
    const Vec k3 = rhs(t + 0.5 * h, combine(u, h, {{0.5, &k2}}));
    const Vec k4 = rhs(t + h, combine(u, h, {{1.0, &k3}}));
    Vec u1 = combine(u, h, {{1.0 / 6.0, &f0}, {1.0 / 3.0, &k2}, {1.0 / 3.0, &k3}, {1.0 / 6.0, &k4}});
    Vec f1 = rhs(t + h, u1);
    return {std::move(u1), std::move(f1)};
}

Mat fd_jacobian(const OdeRhs& rhs, double t, const Vec& u, const Vec& fu) {
    const std::size_t n = u.size();
    Mat j(n, n);
    Vec up = u;
    for (std::size_t c = 0; c < n; ++c) {
        const double delta = 1.4901161193847656e-08 * std::max(1.0, std::abs(u[c]));
        up[c] = u[c] + delta;
        const Vec fp = rhs(t, up);
        up[c] = u[c];
        for (std::size_t r = 0; r < n; ++r) j(r, c) = (fp[r] - fu[r]) / delta;
    }
    return j;
}

StepResult trapezoid_step(const OdeRhs& rhs, double t, const Vec& u, const Vec& f0, double h,
                          const ImplicitTrapezoid& spec) {
    const std::size_t n = u.size();
    const double t1 = t + h;
    Vec u1 = combine(u, h, {{1.0, &f0}});  // explicit Euler predictor
    for (int attempt = 0; attempt < 2; ++attempt) {
        const Vec fp = rhs(t1, u1);
        Mat m = fd_jacobian(rhs, t1, u1, fp);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m(r, c) = (r == c ? 1.0 : 0.0) - 0.5 * h * m(r, c);
        Vec f1 = fp;
        for (int it = 0; it < spec.newton_max_iters; ++it) {
            Vec g(n);
            for (std::size_t i = 0; i < n; ++i) g[i] = -(u1[i] - u[i] - 0.5 * h * (f0[i] + f1[i]));
            Vec delta = solve(m, std::move(g));
            double dmax = 0.0, umax = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                u1[i] += delta[i];
                dmax = std::max(dmax, std::abs(delta[i]));
                umax = std::max(umax, std::abs(u1[i]));
            }
            check_finite_state(u1, t1);
            f1 = rhs(t1, u1);
            if (dmax <= spec.newton_tol * (1.0 + umax)) return {std::move(u1), std::move(f1)};
        }
    }
    throw IntegrationError("implicit trapezoid: Newton iteration did not converge", t1);
}

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

struct DpTrial {
    Vec u1;
    Vec f1;
    double err_norm;
};

DpTrial dp_trial(const OdeRhs& rhs, double t, const Vec& u, const Vec& k1, double h, const DormandPrince54& spec,
                 std::size_t ne) {
    const Vec k2 = rhs(t + c2 * h, combine(u, h, {{a21, &k1}}));
    const Vec k3 = rhs(t + c3 * h, combine(u, h, {{a31, &k1}, {a32, &k2}}));
    const Vec k4 = rhs(t + c4 * h, combine(u, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const Vec k5 = rhs(t + c5 * h, combine(u, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const Vec k6 = rhs(t + h, combine(u, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    Vec u1 = combine(u, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    Vec k7 = rhs(t + h, u1);
    double acc = 0.0;
    for (std::size_t i = 0; i < ne; ++i) {
        const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = spec.atol + spec.rtol * std::max(std::abs(u[i]), std::abs(u1[i]));
        acc += (err / sc) * (err / sc);
    }
    const double en = ne == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(ne));
    return {std::move(u1), std::move(k7), std::isfinite(en) ? en : std::numeric_limits<double>::infinity()};
}

double dp_initial_step(const OdeRhs& rhs, double t, const Vec& u, const Vec& f0, double dir,
                       const DormandPrince54& spec, double max_step, std::size_t ne) {
    if (spec.dt_init > 0) return std::min(spec.dt_init, max_step);
    if (ne == 0) return 1.0;
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < ne; ++i) {
        const double sc = spec.atol + spec.rtol * std::abs(u[i]);
        d0 += (u[i] / sc) * (u[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    const double n = static_cast<double>(ne);
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h0 = std::min((d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1, max_step);
    const Vec u1 = combine(u, dir * h0, {{1.0, &f0}});
    const Vec f1 = rhs(t + dir * h0, u1);
    double d2 = 0;
    for (std::size_t i = 0; i < ne; ++i) {
        const double sc = spec.atol + spec.rtol * std::abs(u[i]);
        d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / n) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100 * h0, h1, max_step});
}

void push_segment(DenseTrajectory& traj, double ta, const Vec& ua, const Vec& fa, double tb, const Vec& ub,
                  const Vec& fb) {
    if (tb > ta)
        traj.append(HermiteSegment{ta, tb, ua, ub, fa, fb});
    else
        traj.append(HermiteSegment{tb, ta, ub, ua, fb, fa});
}

}  // namespace

Vec advance(DenseTrajectory& traj, const OdeRhs& rhs, double t_to, const StepperSpec& stepper,
            const AdvanceOptions& opts) {
    validate(stepper);
    const bool forward = traj.direction() == DenseTrajectory::Direction::Forward;
    double t = traj.front();
    if (forward ? t_to < t : t_to > t)
        throw InvalidArgument("advance: target time lies behind the trajectory front");
    const double dir = forward ? 1.0 : -1.0;
    Vec u = traj.front_state();
    check_finite_state(u, t);
    if (std::abs(t_to - t) <= time_slack(t, t_to)) return u;

    // Landing targets in integration order, ending with t_to.
    std::vector<double> targets;
    for (double s : opts.stops)
        if (dir * (s - t) > time_slack(s, t) && dir * (t_to - s) > time_slack(s, t_to)) targets.push_back(s);
    std::sort(targets.begin(), targets.end(), [&](double a, double b) { return dir * a < dir * b; });
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    targets.push_back(t_to);

    const double max_step = opts.max_step > 0 ? opts.max_step : std::numeric_limits<double>::infinity();
    Vec f = rhs(t, u);
    check_finite_state(f, t);

    if (const auto* dp = std::get_if<DormandPrince54>(&stepper)) {
        const std::size_t ne = opts.error_dims > 0 ? std::min(opts.error_dims, u.size()) : u.size();
        double h = std::min(dp_initial_step(rhs, t, u, f, dir, *dp, max_step, ne), max_step);
        std::size_t steps = 0;
        for (double target : targets) {
            while (dir * (target - t) > time_slack(t, target)) {
                if (++steps > dp->max_steps) throw IntegrationError("Dormand-Prince: max_steps exceeded", t);
                const double remaining = std::abs(target - t);
                bool lands = false;
                double step = std::min(h, max_step);
                if (step >= remaining * (1.0 - 1e-12)) {
                    step = remaining;
                    lands = true;
                }
                if (step < time_slack(t, target) * 10) throw IntegrationError("Dormand-Prince: step size underflow", t);
                const DpTrial trial = dp_trial(rhs, t, u, f, dir * step, *dp, ne);
                if (trial.err_norm <= 1.0) {
                    const double t_new = lands ? target : t + dir * step;
                    check_finite_state(trial.u1, t_new);
                    push_segment(traj, t, u, f, t_new, trial.u1, trial.f1);
                    t = t_new;
                    u = trial.u1;
                    f = trial.f1;
                    const double fac = trial.err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(trial.err_norm, -0.2), 0.2, 5.0);
                    h = std::min(step * fac, max_step);
                    // A shortened landing step must not shrink the next proposal.
                    if (lands) h = std::max(h, std::min(step, max_step));
                } else {
                    h = step * std::max(0.1, 0.9 * std::pow(trial.err_norm, -0.25));
                }
            }
        }
        return u;
    }

    const double dt = std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DormandPrince54>)
                return 0.0;
            else
                return s.dt;
        },
        stepper);
    const double base_step = std::min(dt, max_step);
    for (double target : targets) {
        const double len = std::abs(target - t);
        if (len <= time_slack(t, target)) continue;
        const auto n = static_cast<std::size_t>(std::ceil(len / base_step * (1.0 - 1e-12)));
        const double t_begin = t;
        for (std::size_t k = 1; k <= n; ++k) {
            const double t_new = k == n ? target : t_begin + dir * len * static_cast<double>(k) / static_cast<double>(n);
            const double h = t_new - t;
            StepResult r = std::holds_alternative<Rk4Fixed>(stepper)
                               ? rk4_step(rhs, t, u, f, h)
                               : trapezoid_step(rhs, t, u, f, h, std::get<ImplicitTrapezoid>(stepper));
            check_finite_state(r.u1, t_new);
            push_segment(traj, t, u, f, t_new, r.u1, r.f1);
            t = t_new;
            u = std::move(r.u1);
            f = std::move(r.f1);
        }
    }
    return u;
}

DenseTrajectory integrate_ode(const OdeRhs& rhs, const Vec& u0, TimeSpan span, const StepperSpec& stepper) {
    if (!all_finite(u0)) throw InvalidArgument("integrate_ode: non-finite initial state");
    if (!(span.end > span.start)) throw InvalidArgument("integrate_ode: span end must exceed start");
    DenseTrajectory traj(span.start, u0);
    advance(traj, rhs, span.end, stepper);
    return traj;
}

std::vector<Vec> solve_at(const OdeRhs& rhs, const Vec& u0, const std::vector<double>& times,
                          const StepperSpec& stepper) {
    if (times.empty()) throw InvalidArgument("solve_at: no output times");
    if (!all_finite(u0)) throw InvalidArgument("solve_at: non-finite initial state");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw InvalidArgument("solve_at: times must be strictly increasing");
    std::vector<Vec> out{u0};
    if (times.size() == 1) return out;
    DenseTrajectory traj(times.front(), u0);
    AdvanceOptions opts;
    opts.stops.assign(times.begin() + 1, times.end() - 1);
    advance(traj, rhs, times.back(), stepper, opts);
    for (std::size_t i = 1; i < times.size(); ++i) out.push_back(traj.query(times[i]));
    return out;
}

Vec DelayedLookup::operator()(double s) const {
    if (s <= t_start_ + time_slack(s, t_start_)) return history_(std::min(s, t_start_));
    if (s > traj_.front() + time_slack(s, traj_.front()))
        throw OutOfDomain("delayed lookup at t=" + std::to_string(s) + " beyond committed solution (front " +
                          std::to_string(traj_.front()) + ")");
    return traj_.query(std::min(s, traj_.front()));
}

std::vector<double> delay_breakpoints(std::span<const double> delays, double t_start, double t_end,
                                      std::size_t max_count) {
    std::vector<double> out;
    for (double tau : delays) {
        if (!(tau > 0)) continue;
        for (std::size_t k = 1; out.size() < max_count; ++k) {
            const double b = t_start + static_cast<double>(k) * tau;
            if (b >= t_end) break;
            out.push_back(b);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= time_slack(a, b); }),
              out.end());
    return out;
}

DenseTrajectory integrate_dde(const DdeProblem& prob, TimeSpan span, const StepperSpec& stepper) {
    if (!(span.end > span.start)) throw InvalidArgument("integrate_dde: span end must exceed start");
    if (!prob.rhs || !prob.history) throw InvalidArgument("integrate_dde: rhs and history are required");
    for (std::size_t i = 0; i < prob.delays.size(); ++i) {
        if (!(prob.delays[i] > 0)) throw InvalidArgument("integrate_dde: delays must be strictly positive");
        if (i > 0 && !(prob.delays[i] > prob.delays[i - 1]))
            throw InvalidArgument("integrate_dde: delays must be strictly increasing");
    }
    const Vec u0 = prob.history(span.start);
    if (!all_finite(u0)) throw InvalidArgument("integrate_dde: non-finite initial state");
    DenseTrajectory traj(span.start, u0);
    const DelayedLookup lookup(prob.history, traj, span.start);
    std::vector<Vec> delayed(prob.delays.size());
    const OdeRhs rhs = [&](double t, const Vec& u) {
        for (std::size_t i = 0; i < prob.delays.size(); ++i) delayed[i] = lookup(t - prob.delays[i]);
        return prob.rhs(t, u, delayed);
    };
    AdvanceOptions opts;
    if (!prob.delays.empty()) {
        opts.max_step = prob.delays.front();
        opts.stops = delay_breakpoints(prob.delays, span.start, span.end);
    }
    advance(traj, rhs, span.end, stepper, opts);
    return traj;
}

double quadrature(const std::function<double(double)>& f, double a, double b, std::size_t n_panels) {
    if (n_panels == 0) throw InvalidArgument("quadrature: n_panels must be >= 1");
    if (b < a) throw InvalidArgument("quadrature: requires b >= a");
    if (a == b) return 0.0;
    const double h = (b - a) / static_cast<double>(n_panels);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t k = 1; k < n_panels; ++k) s += f(a + h * static_cast<double>(k));
    return s * h;
}

Vec quadrature_vec(const std::function<Vec(double)>& f, double a, double b, std::size_t n_panels) {
    if (n_panels == 0) throw InvalidArgument("quadrature: n_panels must be >= 1");
    if (b < a) throw InvalidArgument("quadrature: requires b >= a");
    Vec s = f(a);
    if (a == b) {
        std::fill(s.begin(), s.end(), 0.0);
        return s;
    }
    const double h = (b - a) / static_cast<double>(n_panels);
    for (double& v : s) v *= 0.5;
    axpy(0.5, f(b), s);
    for (std::size_t k = 1; k < n_panels; ++k) axpy(1.0, f(a + h * static_cast<double>(k)), s);
    for (double& v : s) v *= h;
    return s;
}

}  // namespace ncm

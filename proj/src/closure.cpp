#include "nclosure/closure.hpp"

#include <algorithm>
#include <cmath>

namespace ncm {

namespace {

double slack(double a, double b) { return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

Vec head(const Vec& v, std::size_t n) { return Vec(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)); }

Vec slice(const Vec& v, std::size_t off, std::size_t n) {
    return Vec(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + n));
}

/// Sorted, de-duplicated times strictly inside (lo, hi).
std::vector<double> clean_stops(std::vector<double> s, double lo, double hi) {
    std::erase_if(s, [&](double x) { return !(x > lo + slack(x, lo) && x < hi - slack(x, hi)); });
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end(), [](double a, double b) { return std::abs(a - b) <= slack(a, b); }),
            s.end());
    return s;
}

/// Network evaluation wrapper that builds an EvalContext on demand.
struct Ctx {
    std::optional<ContextData> data;
    EvalContext view;
    const EvalContext* ptr() {
        if (!data) return nullptr;
        view = EvalContext{data->depth, data->irradiance};
        return &view;
    }
};

}  // namespace

const char* to_string(ClosureKind k) {
    switch (k) {
        case ClosureKind::Markovian: return "markovian";
        case ClosureKind::Discrete: return "discrete";
        case ClosureKind::Distributed: return "distributed";
        case ClosureKind::None: break;
    }
    return "none";
}

ClosureKind parse_closure_kind(const std::string& name) {
    if (name == "none") return ClosureKind::None;
    if (name == "markovian" || name == "node") return ClosureKind::Markovian;
    if (name == "discrete") return ClosureKind::Discrete;
    if (name == "distributed") return ClosureKind::Distributed;
    throw InvalidArgument("unknown closure kind '" + name + "'");
}

Vec Rollout::state(double t) const { return head(traj.query(t), state_dim); }

Vec Rollout::aux(double t) const {
    Vec s = traj.query(t);
    return Vec(s.begin() + static_cast<std::ptrdiff_t>(state_dim), s.end());
}

Vec AdjointResult::lambda(double t) const {
    if (t >= backward.hi()) return Vec(state_dim, 0.0);
    return head(backward.query(t), state_dim);
}

Vec AdjointResult::mu(double t) const {
    if (t >= backward.hi()) return Vec(aux_dim, 0.0);
    return slice(backward.query(t), state_dim, aux_dim);
}

AugmentedSystem::AugmentedSystem(BaseModel base, ClosureSpec closure) : base_(std::move(base)), closure_(std::move(closure)) {
    if (base_.dim == 0 || !base_.rhs || !base_.vjp) throw InvalidArgument("base model needs dim, rhs and vjp");
    const std::size_t n = base_.dim;
    const ClosureSpec& c = closure_;
    if (!c.output_mask.empty() && c.output_mask.size() != n) throw InvalidArgument("closure mask size mismatch");
    if (c.positions == 0 || n % c.positions != 0) throw InvalidArgument("state size not divisible by positions");
    switch (c.kind) {
        case ClosureKind::None: break;
        case ClosureKind::Markovian:
            if (c.f.input_shape().size() != n || c.f.output_shape().size() != n)
                throw InvalidArgument("markovian closure network must map the state to the state");
            break;
        case ClosureKind::Discrete:
            if (!c.f.recurrent() && !c.delays.empty())
                throw InvalidArgument("discrete closure with delays needs a recurrent network");
            if (c.f.input_shape().size() != n || c.f.output_shape().size() != n)
                throw InvalidArgument("discrete closure network must map the state to the state");
            for (std::size_t i = 0; i < c.delays.size(); ++i) {
                if (!(c.delays[i] > 0)) throw InvalidArgument("discrete delays must be positive");
                if (i > 0 && !(c.delays[i] > c.delays[i - 1]))
                    throw InvalidArgument("discrete delays must be strictly increasing");
            }
            break;
        case ClosureKind::Distributed: {
            if (!(c.tau1 >= 0.0) || !(c.tau2 >= c.tau1)) throw InvalidArgument("distributed window needs 0 <= tau1 <= tau2");
            if (c.g.input_shape().size() != n) throw InvalidArgument("g network must take the state");
            aux_dim_ = c.g.output_shape().size();
            if (aux_dim_ % c.positions != 0) throw InvalidArgument("g output not divisible by positions");
            if (c.f.input_shape().size() != n + aux_dim_ || c.f.output_shape().size() != n)
                throw InvalidArgument("distributed f network must map [u, y] to the state");
            if (c.history_panels == 0) throw InvalidArgument("history quadrature needs at least one panel");
            break;
        }
    }
}

std::size_t AugmentedSystem::theta_count() const {
    return closure_.kind == ClosureKind::None ? 0 : closure_.f.param_count();
}

std::size_t AugmentedSystem::phi_count() const {
    return closure_.kind == ClosureKind::Distributed ? closure_.g.param_count() : 0;
}

Vec AugmentedSystem::forward_delays() const {
    Vec d;
    if (closure_.kind == ClosureKind::Discrete) d = closure_.delays;
    if (closure_.kind == ClosureKind::Distributed && closure_.tau2 > closure_.tau1) {
        if (closure_.tau1 > 0) d.push_back(closure_.tau1);
        d.push_back(closure_.tau2);
    }
    return d;
}

double AugmentedSystem::max_delay() const {
    const Vec d = forward_delays();
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

Vec AugmentedSystem::init_params(std::uint64_t seed) const {
    Vec p;
    if (closure_.kind == ClosureKind::None) return p;
    p = closure_.f.init_params(seed, true);
    if (closure_.kind == ClosureKind::Distributed) {
        // g keeps a nonzero output layer so that y carries information from the start.
        const Vec phi = closure_.g.init_params(seed ^ 0x9e3779b97f4a7c15ULL, false);
        p.insert(p.end(), phi.begin(), phi.end());
    }
    return p;
}

std::optional<ContextData> AugmentedSystem::context_at(double t) const {
    if (!base_.context) return std::nullopt;
    return base_.context(t);
}

Vec AugmentedSystem::apply_mask(Vec v) const {
    if (!closure_.output_mask.empty())
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= closure_.output_mask[i];
    return v;
}

std::vector<Vec> AugmentedSystem::discrete_sequence(double t, const Vec& u,
                                                    const std::function<Vec(double)>& past_u) const {
    std::vector<Vec> seq;
    const Vec& d = closure_.delays;
    seq.reserve(d.size() + 1);
    for (std::size_t k = d.size(); k-- > 0;) seq.push_back(past_u(t - d[k]));
    seq.push_back(u);
    return seq;
}

Vec AugmentedSystem::interleave(const Vec& u, const Vec& y) const {
    const std::size_t L = closure_.positions;
    const std::size_t cu = u.size() / L, cy = y.size() / L;
    Vec x(u.size() + y.size());
    for (std::size_t p = 0; p < L; ++p) {
        for (std::size_t c = 0; c < cu; ++c) x[p * (cu + cy) + c] = u[p * cu + c];
        for (std::size_t c = 0; c < cy; ++c) x[p * (cu + cy) + cu + c] = y[p * cy + c];
    }
    return x;
}

void AugmentedSystem::split(const Vec& uy, Vec& du, Vec& dy) const {
    const std::size_t L = closure_.positions;
    const std::size_t cu = base_.dim / L, cy = aux_dim_ / L;
    du.assign(base_.dim, 0.0);
    dy.assign(aux_dim_, 0.0);
    for (std::size_t p = 0; p < L; ++p) {
        for (std::size_t c = 0; c < cu; ++c) du[p * cu + c] = uy[p * (cu + cy) + c];
        for (std::size_t c = 0; c < cy; ++c) dy[p * cy + c] = uy[p * (cu + cy) + cu + c];
    }
}

Vec AugmentedSystem::rhs(double t, const Vec& state, std::span<const double> params,
                         const std::function<Vec(double)>& past_u) const {
    const std::size_t n = base_.dim;
    const Vec u = state.size() == n ? state : head(state, n);
    Vec du = base_.rhs(t, u);
    const std::span<const double> theta = params.subspan(0, theta_count());
    Ctx ctx;
    switch (closure_.kind) {
        case ClosureKind::None: return du;
        case ClosureKind::Markovian: {
            ctx.data = context_at(t);
            axpy(1.0, apply_mask(closure_.f.rnn_forward({u}, theta, ctx.ptr())), du);
            return du;
        }
        case ClosureKind::Discrete: {
            ctx.data = context_at(t);
            axpy(1.0, apply_mask(closure_.f.rnn_forward(discrete_sequence(t, u, past_u), theta, ctx.ptr())), du);
            return du;
        }
        case ClosureKind::Distributed: {
            const std::span<const double> phi = params.subspan(theta_count(), phi_count());
            const Vec y = slice(state, n, aux_dim_);
            ctx.data = context_at(t);
            axpy(1.0, apply_mask(closure_.f.forward(interleave(u, y), theta, ctx.ptr())), du);
            Vec dy(aux_dim_, 0.0);
            const double t1 = closure_.tau1, t2 = closure_.tau2;
            if (t2 > t1) {
                Ctx c1, c2;
                c1.data = context_at(t - t1);
                c2.data = context_at(t - t2);
                const Vec u1 = t1 > 0 ? past_u(t - t1) : u;
                dy = closure_.g.forward(u1, phi, c1.ptr());
                axpy(-1.0, closure_.g.forward(past_u(t - t2), phi, c2.ptr()), dy);
            }
            du.insert(du.end(), dy.begin(), dy.end());
            return du;
        }
    }
    return du;
}

Vec AugmentedSystem::history_aux(std::span<const double> phi, const HistoryFn& history, double t0) const {
    const double a = t0 - closure_.tau2, b = t0 - closure_.tau1;
    if (!(b > a)) return Vec(aux_dim_, 0.0);
    return quadrature_vec(
        [&](double s) {
            Ctx c;
            c.data = context_at(s);
            return closure_.g.forward(history(s), phi, c.ptr());
        },
        a, b, closure_.history_panels);
}

Rollout AugmentedSystem::forward(std::span<const double> params, const HistoryFn& history, double t0, double t_end,
                                 const std::vector<double>& stops, const StepperSpec& stepper,
                                 const Vec& grid_delays) const {
    if (params.size() != param_count())
        throw InvalidArgument("parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                              std::to_string(param_count()));
    if (!(t_end > t0)) throw InvalidArgument("forward: t_end must exceed t0");
    Vec s0 = history(t0);
    if (s0.size() != base_.dim) throw InvalidArgument("history returns a state of the wrong size");
    if (!all_finite(s0)) throw InvalidArgument("forward: non-finite initial state");
    if (closure_.kind == ClosureKind::Distributed) {
        const Vec y0 = history_aux(params.subspan(theta_count(), phi_count()), history, t0);
        s0.insert(s0.end(), y0.begin(), y0.end());
    }
    Rollout out{DenseTrajectory(t0, s0), base_.dim, t0, t_end};
    const DenseTrajectory& traj = out.traj;
    const std::size_t n = base_.dim;
    const std::function<Vec(double)> past_u = [&](double s) -> Vec {
        if (s <= t0 + slack(s, t0)) return history(std::min(s, t0));
        if (s > traj.front() + slack(s, traj.front()))
            throw OutOfDomain("delayed lookup at t=" + std::to_string(s) + " beyond committed solution");
        return head(traj.query(std::min(s, traj.front())), n);
    };
    const OdeRhs f = [&](double t, const Vec& s) { return rhs(t, s, params, past_u); };

    AdvanceOptions opts;
    Vec delays = forward_delays();
    for (double d : grid_delays)
        if (d > 0) delays.push_back(d);
    std::vector<double> all_stops = stops;
    if (!delays.empty()) {
        opts.max_step = *std::min_element(delays.begin(), delays.end());
        const std::vector<double> bp = delay_breakpoints(delays, t0, t_end);
        all_stops.insert(all_stops.end(), bp.begin(), bp.end());
    }
    opts.stops = clean_stops(std::move(all_stops), t0, t_end);
    opts.error_dims = n;
    advance(out.traj, f, t_end, stepper, opts);
    return out;
}

namespace {

struct JumpPlan {
    std::vector<double> times;  // descending
    std::vector<Vec> grads;
};

JumpPlan plan_jumps(const std::vector<double>& data_times, const std::vector<Vec>& loss_grads, double t0, double T,
                    std::size_t n) {
    if (data_times.size() != loss_grads.size()) throw InvalidArgument("one loss gradient per data time is required");
    JumpPlan plan;
    std::vector<std::size_t> order(data_times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data_times[a] > data_times[b]; });
    for (std::size_t i : order) {
        const double ti = data_times[i];
        if (!(ti > t0 + slack(ti, t0)) || ti > T + slack(ti, T))
            throw InvalidArgument("data time " + std::to_string(ti) + " outside (t0, T]");
        if (loss_grads[i].size() != n) throw InvalidArgument("loss gradient has the wrong size");
        if (!plan.times.empty() && std::abs(plan.times.back() - ti) <= slack(ti, plan.times.back())) {
            axpy(1.0, loss_grads[i], plan.grads.back());
            continue;
        }
        plan.times.push_back(std::min(ti, T));
        plan.grads.push_back(loss_grads[i]);
    }
    return plan;
}

/// Integrates the backward system interval by interval between `boundaries`
/// (descending, starting at T), applying λ jumps at data times.
void sweep_backward(DenseTrajectory& bt, const std::function<Vec(double, const Vec&, double, double)>& rhs,
                    const std::vector<double>& boundaries, const JumpPlan& jumps, std::size_t n,
                    const StepperSpec& stepper, double max_step) {
    std::size_t next_jump = 0;
    auto apply_jumps_at = [&](double t) {
        while (next_jump < jumps.times.size() && std::abs(jumps.times[next_jump] - t) <= slack(t, jumps.times[next_jump])) {
            Vec z = bt.front_state();
            for (std::size_t i = 0; i < n; ++i) z[i] -= jumps.grads[next_jump][i];
            bt.reset_front_state(std::move(z));
            ++next_jump;
        }
    };
    apply_jumps_at(boundaries.front());
    AdvanceOptions opts;
    opts.max_step = max_step;
    for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
        const double hi = boundaries[k], lo = boundaries[k + 1];
        const OdeRhs f = [&](double t, const Vec& z) { return rhs(t, z, lo, hi); };
        advance(bt, f, lo, stepper, opts);
        apply_jumps_at(lo);
    }
}

std::vector<double> descending_boundaries(std::vector<double> stops, double t0, double T) {
    std::vector<double> b = clean_stops(std::move(stops), t0, T);
    b.insert(b.begin(), t0);
    b.push_back(T);
    std::reverse(b.begin(), b.end());
    return b;
}

}  // namespace

AdjointResult AugmentedSystem::adjoint(std::span<const double> params, const Rollout& fwd, const HistoryFn& history,
                                       const std::vector<double>& data_times, const std::vector<Vec>& loss_grads,
                                       const StepperSpec& stepper) const {
    if (params.size() != param_count()) throw InvalidArgument("parameter vector size mismatch");
    const std::size_t n = base_.dim, m = aux_dim_, nt = theta_count(), np = phi_count();
    const std::size_t dim = n + m + nt + np;
    const double t0 = fwd.t0, T = fwd.t_end;
    const JumpPlan jumps = plan_jumps(data_times, loss_grads, t0, T, n);
    const std::span<const double> theta = params.subspan(0, nt);
    const std::span<const double> phi = params.subspan(nt, np);
    const ClosureSpec& c = closure_;

    // Delays at which advanced adjoint values are read.
    Vec adv;
    if (c.kind == ClosureKind::Discrete) adv = c.delays;
    if (c.kind == ClosureKind::Distributed && c.tau2 > c.tau1) {
        if (c.tau1 > 0) adv.push_back(c.tau1);
        adv.push_back(c.tau2);
    }
    std::vector<double> stops = jumps.times;
    for (double tj : jumps.times)
        for (double a : adv) {
            stops.push_back(tj - a);
            for (double b : adv) stops.push_back(tj - a - b);
        }
    const Vec fdel = forward_delays();
    const std::vector<double> bp = delay_breakpoints(fdel, t0, T);
    stops.insert(stops.end(), bp.begin(), bp.end());
    const std::vector<double> boundaries = descending_boundaries(std::move(stops), t0, T);
    const double max_step = adv.empty() ? std::numeric_limits<double>::infinity() : *std::min_element(adv.begin(), adv.end());

    AdjointResult res{Vec{}, DenseTrajectory(T, Vec(dim, 0.0), DenseTrajectory::Direction::Backward), n, m};
    const DenseTrajectory& bt = res.backward;

    const std::function<Vec(double)> past_u = [&](double s) -> Vec {
        if (s <= t0 + slack(s, t0)) return history(std::min(s, t0));
        return fwd.state(std::min(s, T));
    };
    // Adjoint values at s > t, read from the committed backward store; zero at and beyond T.
    auto advanced = [&](double s, bool left, std::size_t off, std::size_t len) -> Vec {
        if (s >= T - slack(s, T)) return Vec(len, 0.0);
        return slice(bt.query(std::max(s, bt.front()), left), off, len);
    };

    const auto adj_rhs = [&](double t, const Vec& z, double lo, double hi) -> Vec {
        const bool left = t > 0.5 * (lo + hi);
        const Vec lam = head(z, n);
        const Vec u = fwd.state(t);
        Vec out(dim, 0.0);
        Vec dlam = base_.vjp(t, u, lam);
        double* dth = out.data() + n + m;
        double* dph = dth + nt;
        Ctx ctx;
        ctx.data = context_at(t);
        switch (c.kind) {
            case ClosureKind::None: break;
            case ClosureKind::Markovian: {
                const auto g = c.f.vjp({u}, theta, apply_mask(lam), ctx.ptr());
                axpy(1.0, g.dx.front(), dlam);
                for (std::size_t i = 0; i < nt; ++i) dth[i] = -g.dtheta[i];
                break;
            }
            case ClosureKind::Discrete: {
                const std::size_t K = c.delays.size();
                const auto g = c.f.vjp(discrete_sequence(t, u, past_u), theta, apply_mask(lam), ctx.ptr());
                axpy(1.0, g.dx[K], dlam);
                for (std::size_t i = 0; i < nt; ++i) dth[i] = -g.dtheta[i];
                for (std::size_t i = 0; i < K; ++i) {
                    const double s = t + c.delays[i];
                    const Vec ls = advanced(s, left, 0, n);
                    if (std::all_of(ls.begin(), ls.end(), [](double v) { return v == 0.0; })) continue;
                    Ctx cs;
                    cs.data = context_at(s);
                    const auto gs = c.f.vjp(discrete_sequence(s, past_u(s), past_u), theta, apply_mask(ls), cs.ptr(),
                                            true, false);
                    axpy(1.0, gs.dx[K - 1 - i], dlam);
                }
                break;
            }
            case ClosureKind::Distributed: {
                const Vec mu = slice(z, n, m);
                const Vec y = fwd.aux(t);
                const auto g = c.f.vjp({interleave(u, y)}, theta, apply_mask(lam), ctx.ptr());
                Vec du, dy;
                split(g.dx.front(), du, dy);
                axpy(1.0, du, dlam);
                for (std::size_t i = 0; i < m; ++i) out[n + i] = -dy[i];
                for (std::size_t i = 0; i < nt; ++i) dth[i] = -g.dtheta[i];
                if (c.tau2 > c.tau1) {
                    const Vec mu1 = c.tau1 > 0 ? advanced(t + c.tau1, left, n, m) : mu;
                    const Vec mu2 = advanced(t + c.tau2, left, n, m);
                    const Vec w = sub(mu1, mu2);
                    const auto gu = c.g.vjp({u}, phi, w, ctx.ptr(), true, false);
                    axpy(1.0, gu.dx.front(), dlam);
                    Ctx c1, c2;
                    c1.data = context_at(t - c.tau1);
                    c2.data = context_at(t - c.tau2);
                    const Vec u1 = c.tau1 > 0 ? past_u(t - c.tau1) : u;
                    const Vec p1 = c.g.vjp({u1}, phi, mu, c1.ptr(), false, true).dtheta;
                    const Vec p2 = c.g.vjp({past_u(t - c.tau2)}, phi, mu, c2.ptr(), false, true).dtheta;
                    for (std::size_t i = 0; i < np; ++i) dph[i] = -(p1[i] - p2[i]);
                }
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = -dlam[i];
        return out;
    };

    sweep_backward(res.backward, adj_rhs, boundaries, jumps, n, stepper, max_step);

    const Vec z0 = bt.front_state();
    res.gradient.assign(nt + np, 0.0);
    for (std::size_t i = 0; i < nt + np; ++i) res.gradient[i] = -z0[n + m + i];
    if (c.kind == ClosureKind::Distributed && np > 0) {
        const double a = t0 - c.tau2, b = t0 - c.tau1;
        if (b > a) {
            const Vec mu0 = slice(z0, n, m);
            const Vec hist = quadrature_vec(
                [&](double s) {
                    Ctx cs;
                    cs.data = context_at(s);
                    return c.g.vjp({history(s)}, phi, mu0, cs.ptr(), false, true).dtheta;
                },
                a, b, c.history_panels);
            for (std::size_t i = 0; i < np; ++i) res.gradient[nt + i] -= hist[i];
        }
    }
    return res;
}

AdjointResult AugmentedSystem::adjoint_markovian(std::span<const double> params, const Rollout& fwd,
                                                 const std::vector<double>& data_times,
                                                 const std::vector<Vec>& loss_grads, const StepperSpec& stepper) const {
    if (params.size() != param_count()) throw InvalidArgument("parameter vector size mismatch");
    const ClosureSpec& c = closure_;
    const bool no_delays = c.kind == ClosureKind::None || c.kind == ClosureKind::Markovian ||
                           (c.kind == ClosureKind::Discrete && c.delays.empty());
    if (!no_delays) throw InvalidArgument("adjoint_markovian requires a closure without delays");
    const std::size_t n = base_.dim, nt = theta_count();
    const double t0 = fwd.t0, T = fwd.t_end;
    const JumpPlan jumps = plan_jumps(data_times, loss_grads, t0, T, n);
    const std::span<const double> theta = params.subspan(0, nt);

    // z = [λ, A]; λ' = −(∂u f)ᵀλ, A' = −(∂θ f)ᵀλ.
    const auto adj_rhs = [&](double t, const Vec& z, double, double) -> Vec {
        const Vec lam = head(z, n);
        const Vec u = fwd.state(t);
        Vec out(n + nt, 0.0);
        Vec dlam = base_.vjp(t, u, lam);
        if (c.kind != ClosureKind::None) {
            Ctx ctx;
            ctx.data = context_at(t);
            const auto g = c.f.vjp({u}, theta, apply_mask(lam), ctx.ptr());
            axpy(1.0, g.dx.front(), dlam);
            for (std::size_t i = 0; i < nt; ++i) out[n + i] = -g.dtheta[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = -dlam[i];
        return out;
    };
    AdjointResult res{Vec{}, DenseTrajectory(T, Vec(n + nt, 0.0), DenseTrajectory::Direction::Backward), n, 0};
    sweep_backward(res.backward, adj_rhs, descending_boundaries(jumps.times, t0, T), jumps, n, stepper,
                   std::numeric_limits<double>::infinity());
    const Vec z0 = res.backward.front_state();
    res.gradient.assign(nt, 0.0);
    for (std::size_t i = 0; i < nt; ++i) res.gradient[i] = -z0[n + i];
    return res;
}

Vec fd_gradient(const AugmentedSystem& sys, std::span<const double> params, const HistoryFn& history, double t0,
                double t_end, const std::vector<double>& data_times, const RolloutLoss& loss,
                const StepperSpec& stepper, double eps) {
    if (!(eps > 0)) throw InvalidArgument("finite-difference step must be positive");
    Vec p(params.begin(), params.end());
    auto eval = [&]() {
        const Rollout r = sys.forward(p, history, t0, t_end, data_times, stepper);
        std::vector<Vec> states;
        states.reserve(data_times.size());
        for (double t : data_times) states.push_back(r.state(t));
        return loss(states);
    };
    Vec grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + eps;
        const double lp = eval();
        p[i] = keep - eps;
        const double lm = eval();
        p[i] = keep;
        grad[i] = (lp - lm) / (2.0 * eps);
    }
    return grad;
}

}  // namespace ncm

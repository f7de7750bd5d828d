#include "nclosure/toy.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace ncm {

BaseModel toy_base() {
    BaseModel b;
    b.dim = 2;
    b.rhs = [](double, const Vec& u) {
        return Vec{-u[0] + 0.5 * u[1], -0.3 * u[0] - u[1] + 0.2 * u[0] * u[0]};
    };
    b.vjp = [](double, const Vec& u, const Vec& w) {
        return Vec{-w[0] + (-0.3 + 0.4 * u[0]) * w[1], 0.5 * w[0] - w[1]};
    };
    return b;
}

double ToyProblem::loss(const std::vector<Vec>& states) const {
    double l = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Vec r = sub(states[i], targets[i]);
        l += 0.5 * dot(r, r);
    }
    return l;
}

std::vector<Vec> ToyProblem::loss_grads(const std::vector<Vec>& states) const {
    std::vector<Vec> g;
    for (std::size_t i = 0; i < states.size(); ++i) g.push_back(sub(states[i], targets[i]));
    return g;
}

ToyProblem make_toy(ClosureKind kind, const Vec& delays, double tau1, double tau2, std::uint64_t seed) {
    ClosureSpec spec;
    spec.kind = kind;
    const auto T = Activation::Tanh, L = Activation::Linear;
    switch (kind) {
        case ClosureKind::None: break;
        case ClosureKind::Markovian: spec.f = Network({1, 2}, {Dense{2, 6, T}, Dense{6, 2, L}}); break;
        case ClosureKind::Discrete:
            spec.f = Network({1, 2}, {SimpleRnnCell{2, 4, T}, Dense{4, 2, L}});
            spec.delays = delays;
            break;
        case ClosureKind::Distributed:
            spec.f = Network({1, 3}, {Dense{3, 5, T}, Dense{5, 2, L}});
            spec.g = Network({1, 2}, {Dense{2, 3, T}, Dense{3, 1, L}});
            spec.tau1 = tau1;
            spec.tau2 = tau2;
            spec.history_panels = 8;
            break;
    }
    AugmentedSystem sys(toy_base(), spec);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-0.6, 0.6);
    Vec params(sys.param_count());
    for (double& p : params) p = ud(rng);

    ToyProblem toy{std::move(sys), std::move(params), [](double t) { return Vec{std::cos(t), std::sin(t)}; }, 0.0,
                   2.0, {0.7, 1.4, 2.0}, {}};
    // Targets: the base model's own trajectory shifted, so residuals are O(0.1–1).
    const AugmentedSystem base_only(toy_base(), ClosureSpec{});
    const Rollout ref = base_only.forward({}, toy.history, toy.t0, toy.T, toy.data_times, DormandPrince54{1e-10, 1e-10, 0, 100000});
    for (std::size_t i = 0; i < toy.data_times.size(); ++i) {
        Vec d = ref.state(toy.data_times[i]);
        d[0] += 0.3 * std::sin(3.0 * toy.data_times[i]);
        d[1] -= 0.2;
        toy.targets.push_back(d);
    }
    return toy;
}

double relative_l2(std::span<const double> a, std::span<const double> ref) {
    require_same_size(a, ref, "relative_l2");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ref[i]) * (a[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
    return std::sqrt(num / den);
}

GradientCheck check_toy_gradient(const std::string& name, const ToyProblem& toy, double tol, double eps) {
    const auto start = std::chrono::steady_clock::now();
    const StepperSpec stepper = DormandPrince54{tol, tol, 0.0, 1000000};
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, stepper);
    std::vector<Vec> states;
    for (double t : toy.data_times) states.push_back(fwd.state(t));
    const AdjointResult adj =
        toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, toy.loss_grads(states), stepper);
    const Vec fd = fd_gradient(
        toy.sys, toy.params, toy.history, toy.t0, toy.T, toy.data_times,
        [&](const std::vector<Vec>& s) { return toy.loss(s); }, stepper, eps);

    GradientCheck out;
    out.name = name;
    out.n_params = toy.params.size();
    out.adjoint = adj.gradient;
    out.finite_diff = fd;
    out.rel_err = relative_l2(adj.gradient, fd);
    const std::size_t nt = toy.sys.theta_count();
    out.rel_err_theta = relative_l2(std::span(adj.gradient).subspan(0, nt), std::span(fd).subspan(0, nt));
    if (toy.sys.phi_count() > 0)
        out.rel_err_phi = relative_l2(std::span(adj.gradient).subspan(nt), std::span(fd).subspan(nt));
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace ncm

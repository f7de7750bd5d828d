#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nclosure/closure.hpp"
#include "nclosure/toy.hpp"

using namespace ncm;

TEST_CASE("discrete adjoint matches finite differences") {
    const GradientCheck c = check_toy_gradient("discrete", make_toy(ClosureKind::Discrete, {0.3, 0.7}, 0, 0, 1));
    MESSAGE("rel err " << c.rel_err << " in " << c.seconds << " s");
    CHECK(c.rel_err < 1e-4);
}

TEST_CASE("distributed adjoint matches finite differences") {
    for (auto [a, b] : {std::pair{0.0, 0.5}, std::pair{0.2, 0.7}}) {
        const GradientCheck c = check_toy_gradient("distributed", make_toy(ClosureKind::Distributed, {}, a, b, 2));
        MESSAGE("window " << a << "," << b << " theta " << c.rel_err_theta << " phi " << c.rel_err_phi);
        CHECK(c.rel_err_theta < 1e-4);
        CHECK(c.rel_err_phi < 1e-4);
    }
}

TEST_CASE("markovian adjoint matches finite differences") {
    const GradientCheck c = check_toy_gradient("markovian", make_toy(ClosureKind::Markovian, {}, 0, 0, 3));
    CHECK(c.rel_err < 1e-4);
}

namespace {

const StepperSpec tight = DormandPrince54{1e-10, 1e-10, 0.0, 1000000};

std::vector<Vec> states_at(const Rollout& r, const std::vector<double>& times) {
    std::vector<Vec> s;
    for (double t : times) s.push_back(r.state(t));
    return s;
}

}  // namespace

TEST_CASE("zero loss gradients give zero parameter gradients") {
    for (ClosureKind k : {ClosureKind::Markovian, ClosureKind::Discrete, ClosureKind::Distributed}) {
        const ToyProblem toy = make_toy(k, {0.3, 0.7}, 0.0, 0.5, 4);
        const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, tight);
        const std::vector<Vec> zeros(toy.data_times.size(), Vec(2, 0.0));
        const AdjointResult adj = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, zeros, tight);
        for (double g : adj.gradient) CHECK(g == 0.0);
    }
}

TEST_CASE("discrete closure without delays reduces to the plain adjoint") {
    const ToyProblem toy = make_toy(ClosureKind::Discrete, {}, 0, 0, 5);
    for (const StepperSpec& s : {tight, StepperSpec{Rk4Fixed{0.01}}}) {
        const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, s);
        const auto grads = toy.loss_grads(states_at(fwd, toy.data_times));
        const Vec a = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, s).gradient;
        const Vec b = toy.sys.adjoint_markovian(toy.params, fwd, toy.data_times, grads, s).gradient;
        CHECK(relative_l2(a, b) < 1e-10);
    }
}

TEST_CASE("distributed closure with zero g reduces to a markovian closure on [u, 0]") {
    ToyProblem toy = make_toy(ClosureKind::Distributed, {}, 0.0, 0.5, 6);
    const std::size_t nt = toy.sys.theta_count();
    std::fill(toy.params.begin() + static_cast<std::ptrdiff_t>(nt), toy.params.end(), 0.0);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, tight);
    for (double t : {0.0, 0.5, 1.3, 2.0}) CHECK(fwd.aux(t)[0] == 0.0);
    const auto grads = toy.loss_grads(states_at(fwd, toy.data_times));
    const Vec a = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, tight).gradient;

    // Same f with y frozen at zero: a Markovian closure whose network ignores its last input.
    ClosureSpec spec;
    spec.kind = ClosureKind::Markovian;
    const Network& f = toy.sys.closure().f;
    const auto& d0 = std::get<Dense>(f.layers()[0]);
    spec.f = Network({1, 2}, {Dense{2, d0.out, d0.act}, f.layers()[1]});
    Vec theta;
    for (std::size_t o = 0; o < d0.out; ++o)
        for (std::size_t i = 0; i < 2; ++i) theta.push_back(toy.params[o * 3 + i]);
    theta.insert(theta.end(), toy.params.begin() + static_cast<std::ptrdiff_t>(3 * d0.out),
                 toy.params.begin() + static_cast<std::ptrdiff_t>(nt));
    const AugmentedSystem mk(toy_base(), spec);
    const Rollout fm = mk.forward(theta, toy.history, toy.t0, toy.T, toy.data_times, tight);
    const Vec b = mk.adjoint_markovian(theta, fm, toy.data_times, toy.loss_grads(states_at(fm, toy.data_times)), tight)
                      .gradient;
    Vec a_reduced;
    for (std::size_t o = 0; o < d0.out; ++o)
        for (std::size_t i = 0; i < 2; ++i) a_reduced.push_back(a[o * 3 + i]);
    a_reduced.insert(a_reduced.end(), a.begin() + static_cast<std::ptrdiff_t>(3 * d0.out),
                     a.begin() + static_cast<std::ptrdiff_t>(nt));
    CHECK(relative_l2(a_reduced, b) < 1e-8);
}

TEST_CASE("empty distributed window keeps y at zero and gives no phi gradient") {
    const ToyProblem toy = make_toy(ClosureKind::Distributed, {}, 0.4, 0.4, 7);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, tight);
    CHECK(fwd.aux(1.5)[0] == 0.0);
    const auto grads = toy.loss_grads(states_at(fwd, toy.data_times));
    const Vec g = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, tight).gradient;
    for (std::size_t i = toy.sys.theta_count(); i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("gradients are linear in the loss weights") {
    // Fixed steps: the adaptive controller would pick different grids for scaled adjoints.
    const StepperSpec rk = Rk4Fixed{0.01};
    const ToyProblem toy = make_toy(ClosureKind::Discrete, {0.3, 0.7}, 0, 0, 8);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, rk);
    auto grads = toy.loss_grads(states_at(fwd, toy.data_times));
    const Vec a = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, rk).gradient;
    for (Vec& g : grads) g = scaled(2.0, g);
    const Vec b = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, rk).gradient;
    CHECK(relative_l2(b, scaled(2.0, a)) < 1e-12);
}

TEST_CASE("adjoint state vanishes at and after the final time") {
    const ToyProblem toy = make_toy(ClosureKind::Distributed, {}, 0.2, 0.7, 9);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, toy.t0, toy.T, toy.data_times, tight);
    const auto grads = toy.loss_grads(states_at(fwd, toy.data_times));
    const AdjointResult adj = toy.sys.adjoint(toy.params, fwd, toy.history, toy.data_times, grads, tight);
    CHECK(adj.lambda(2.5) == Vec{0.0, 0.0});
    CHECK(adj.mu(2.0) == Vec{0.0});
    CHECK(adj.mu(3.0) == Vec{0.0});
    // Just below T the jump −∂l/∂u(T) has been applied.
    const Vec below = adj.lambda(2.0 - 1e-9);
    CHECK(below[0] == doctest::Approx(-grads.back()[0]).epsilon(1e-6));
}

TEST_CASE("zero closure parameters reproduce the base model") {
    for (ClosureKind k : {ClosureKind::Markovian, ClosureKind::Discrete}) {
        ToyProblem toy = make_toy(k, {0.3, 0.7}, 0, 0, 10);
        std::fill(toy.params.begin(), toy.params.end(), 0.0);
        const AugmentedSystem base_only(toy_base(), ClosureSpec{});
        const Rollout a = toy.sys.forward(toy.params, toy.history, 0.0, 2.0, toy.data_times, tight);
        const Rollout b = base_only.forward({}, toy.history, 0.0, 2.0, toy.data_times, tight);
        for (double t : {0.35, 1.0, 2.0}) CHECK(relative_l2(a.state(t), b.state(t)) < 1e-7);
    }
}

TEST_CASE("constant closure on linear decay matches the closed form") {
    // u' = −u + c  =>  u(t) = c + (u0 − c) e^{−t}
    BaseModel b;
    b.dim = 1;
    b.rhs = [](double, const Vec& u) { return Vec{-u[0]}; };
    b.vjp = [](double, const Vec&, const Vec& w) { return Vec{-w[0]}; };
    ClosureSpec spec;
    spec.kind = ClosureKind::Markovian;
    spec.f = Network({1, 1}, {Dense{1, 1, Activation::Linear}});
    const AugmentedSystem sys(b, spec);
    const double c = 0.4;
    const Rollout r = sys.forward(Vec{0.0, c}, [](double) { return Vec{2.0}; }, 0.0, 1.0, {}, tight);
    CHECK(std::abs(r.state(1.0)[0] - (c + (2.0 - c) * std::exp(-1.0))) < 1e-9);
}

TEST_CASE("configuration errors") {
    ClosureSpec spec;
    spec.kind = ClosureKind::Discrete;
    spec.f = Network({1, 2}, {SimpleRnnCell{2, 3, Activation::Tanh}, Dense{3, 2, Activation::Linear}});
    spec.delays = {0.5, 0.2};
    CHECK_THROWS_AS(AugmentedSystem(toy_base(), spec), InvalidArgument);
    spec.delays = {0.0};
    CHECK_THROWS_AS(AugmentedSystem(toy_base(), spec), InvalidArgument);
    ClosureSpec d;
    d.kind = ClosureKind::Distributed;
    d.f = Network({1, 3}, {Dense{3, 2, Activation::Linear}});
    d.g = Network({1, 2}, {Dense{2, 1, Activation::Linear}});
    d.tau1 = 0.5;
    d.tau2 = 0.2;
    CHECK_THROWS_AS(AugmentedSystem(toy_base(), d), InvalidArgument);
    const ToyProblem toy = make_toy(ClosureKind::Discrete, {0.3}, 0, 0, 1);
    const Rollout fwd = toy.sys.forward(toy.params, toy.history, 0.0, 2.0, {}, tight);
    CHECK_THROWS_AS(toy.sys.adjoint(toy.params, fwd, toy.history, {2.5}, {Vec{1, 1}}, tight), InvalidArgument);
}

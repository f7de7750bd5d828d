#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nclosure/toy.hpp"
#include "nclosure/train.hpp"

using namespace ncm;

TEST_CASE("rmsprop step") {
    LrSchedule sched{0.1, 1.0, 1.0, false};
    RmspropState st;
    Vec theta{0.0};
    rmsprop_step(st, sched, theta, Vec{1.0});
    CHECK(theta[0] == doctest::Approx(-0.1 / (std::sqrt(0.1) + 1e-7)).epsilon(1e-14));
    CHECK(theta[0] == doctest::Approx(-0.3162276).epsilon(1e-6));
    CHECK(st.step == 1);

    RmspropState z;
    z.s = {0.5, 2.0};
    Vec th{1.0, -1.0};
    rmsprop_step(z, sched, th, Vec{0.0, 0.0});
    CHECK(th == Vec{1.0, -1.0});
    CHECK(z.s[0] == doctest::Approx(0.45));
    CHECK(z.s[1] == doctest::Approx(1.8));

    RmspropState a, b;
    Vec ta{0.3, 0.3}, tb{0.3, 0.3};
    for (int i = 0; i < 5; ++i) {
        rmsprop_step(a, sched, ta, Vec{0.7, 0.7});
        rmsprop_step(b, sched, tb, Vec{0.7, 0.7});
    }
    CHECK(ta[0] == ta[1]);
    CHECK(ta == tb);
}

TEST_CASE("learning rate schedule") {
    const LrSchedule s{0.075, 0.97, 18, false};
    CHECK(lr_at(0, s) == doctest::Approx(0.075));
    CHECK(lr_at(18, s) == doctest::Approx(0.075 * 0.97));
    CHECK(lr_at(9, s) == doctest::Approx(0.075 * std::sqrt(0.97)));
    LrSchedule stair = s;
    stair.staircase = true;
    CHECK(lr_at(17, stair) == doctest::Approx(0.075));
    const LrSchedule flat{0.01, 1.0, 5, false};
    CHECK(lr_at(1000, flat) == doctest::Approx(0.01));
}

TEST_CASE("iterations per epoch") {
    CHECK(iterations_per_epoch(200, 2) == 18);
    CHECK(iterations_per_epoch(125, 8) == 4);
    CHECK(iterations_per_epoch(600, 4) == 26);
    CHECK(iterations_per_epoch(300, 8) == 8);
}

TEST_CASE("losses") {
    const std::vector<Vec> truth{{0, 0}, {1, 1}};
    const std::vector<Vec> pred{{3, 4}, {1, 1}};
    CHECK(loss_time_avg_l2(pred, truth) == doctest::Approx(2.5));
    CHECK(loss_time_avg_l2(truth, truth) == 0.0);
    const LossValue lv = evaluate_loss(LossSpec{}, pred, truth);
    CHECK(lv.value == doctest::Approx(2.5));
    CHECK(lv.grads[0][0] == doctest::Approx(0.3));
    CHECK(lv.grads[0][1] == doctest::Approx(0.4));
    CHECK(lv.grads[1] == Vec{0, 0});

    // Two positions of two species.
    const std::vector<Vec> t2{{0, 0, 0, 0}}, p2{{3, 4, 0, 1}};
    CHECK(loss_depth_avg_l2(p2, t2, 2) == doctest::Approx(3.0));

    CHECK(positivity_penalty({{-2, 1}}, 1.0) == doctest::Approx(2.0));
    CHECK(positivity_penalty({{-2, 1}}, 0.0) == 0.0);
    CHECK(positivity_penalty({{2, 1}}, 3.0) == 0.0);
    CHECK_THROWS_AS(loss_time_avg_l2({{1, 2}}, {{1}}), InvalidArgument);
}

TEST_CASE("loss gradients match finite differences") {
    const std::vector<Vec> truth{{0.1, -0.2, 0.3, 0.0}, {0.5, 0.4, -0.1, 0.2}};
    const std::vector<Vec> pred{{-0.3, 0.2, 0.7, 0.1}, {0.1, -0.6, 0.2, 0.9}};
    for (LossKind kind : {LossKind::TimeAvgL2, LossKind::DepthAvgL2}) {
        const LossSpec spec{kind, 0.7, 2};
        const LossValue lv = evaluate_loss(spec, pred, truth);
        for (std::size_t i = 0; i < pred.size(); ++i)
            for (std::size_t k = 0; k < pred[i].size(); ++k) {
                auto p = pred, m = pred;
                p[i][k] += 1e-6;
                m[i][k] -= 1e-6;
                const double fd =
                    (evaluate_loss(spec, p, truth).value - evaluate_loss(spec, m, truth).value) / 2e-6;
                CHECK(lv.grads[i][k] == doctest::Approx(fd).epsilon(1e-6));
            }
    }
}

namespace {

SnapshotDataset linear_dataset(std::size_t n, double dt, double shift = 0.0) {
    std::vector<double> t;
    std::vector<Vec> s;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back(shift + dt * static_cast<double>(i));
        s.push_back({static_cast<double>(i)});
    }
    return {t, s};
}

}  // namespace

TEST_CASE("dataset interpolant") {
    std::vector<double> t;
    std::vector<Vec> s;
    for (int i = 0; i <= 10; ++i) {
        const double x = 0.1 * i;
        t.push_back(x);
        s.push_back({x * x - 2 * x, 1.0});
    }
    const SnapshotDataset d(t, s);
    CHECK(d.interpolate(t[3]) == s[3]);
    CHECK(d.interpolate(0.3) == s[3]);
    // Central-difference slopes are exact for quadratics on interior segments.
    const double x = 0.437;
    CHECK(d.interpolate(x)[0] == doctest::Approx(x * x - 2 * x).epsilon(1e-12));
    CHECK(d.interpolate(-5.0) == s.front());
    CHECK(d.index_of(0.7) == 7);
    CHECK_THROWS_AS(d.index_of(0.75), InvalidArgument);
    CHECK_THROWS_AS(SnapshotDataset({0.0, 0.1, 0.3}, {{0}, {0}, {0}}), InvalidArgument);
}

TEST_CASE("batch sampling") {
    const SnapshotDataset d = linear_dataset(30, 0.1);
    BatchSpec spec{6, 2, 1};
    std::mt19937_64 rng(1);
    const auto one = sample_batch(d, {0, 6}, spec, 0.0, rng);
    REQUIRE(one.size() == 1);
    CHECK(one[0].start == 0);
    CHECK(one[0].supervised == std::vector<std::size_t>{2, 4, 6});

    spec.batch_size = 4;
    std::mt19937_64 r1(42), r2(42);
    for (int k = 0; k < 10; ++k) {
        const auto a = sample_batch(d, {0, 29}, spec, 0.35, r1), b = sample_batch(d, {0, 29}, spec, 0.35, r2);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].start == b[i].start);
    }
    std::mt19937_64 r(7);
    bool ok = true;
    for (int k = 0; k < 250; ++k)
        for (const Window& w : sample_batch(d, {3, 25}, spec, 0.35, r)) {
            ok = ok && w.start >= 3 && w.supervised.back() <= 25;
            ok = ok && d.times()[w.start] - 0.35 >= d.times()[3] - 1e-12;
        }
    CHECK(ok);
    CHECK_THROWS_AS(sample_batch(d, {0, 5}, spec, 0.0, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_batch(d, {0, 8}, spec, 0.5, rng), InvalidArgument);
}

TEST_CASE("metrics") {
    const std::vector<Vec> a{{1, 2}, {2, 0}, {3, 5}};
    CHECK(rmse_series(a, a) == Vec{0, 0, 0});
    CHECK(avg_crosscorr(a, a).value() == doctest::Approx(1.0));
    std::vector<Vec> neg;
    for (const Vec& v : a) neg.push_back(scaled(-1.0, v));
    CHECK(avg_crosscorr(neg, a).value() == doctest::Approx(-1.0));
    std::vector<Vec> shifted;
    for (const Vec& v : a) shifted.push_back(add(v, Vec{0.5, 0.5}));
    for (double r : rmse_series(shifted, a)) CHECK(r == doctest::Approx(0.5));
    const std::vector<Vec> flat{{1, 1}, {1, 1}, {1, 1}};
    CHECK_FALSE(avg_crosscorr(flat, flat).has_value());
}

namespace {

// Toy data generated by the base model plus a hidden linear forcing.
SnapshotDataset toy_truth(double shift, double forcing) {
    BaseModel b = toy_base();
    const auto rhs = b.rhs;
    b.rhs = [=](double t, const Vec& u) {
        Vec f = rhs(t, u);
        f[0] += forcing * u[1];
        return f;
    };
    AugmentedSystem truth(b, ClosureSpec{});
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(shift + 0.1 * i);
    const Rollout r = truth.forward({}, [](double) { return Vec{1.0, -0.5}; }, shift, times.back(), times,
                                    DormandPrince54{1e-11, 1e-11, 0, 100000});
    std::vector<Vec> s;
    for (double t : times) s.push_back(r.state(t));
    return {times, s};
}

AugmentedSystem toy_markovian() {
    ClosureSpec c;
    c.kind = ClosureKind::Markovian;
    c.f = Network({1, 2}, {Dense{2, 5, Activation::Tanh}, Dense{5, 2, Activation::Linear}});
    return AugmentedSystem(toy_base(), c);
}

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.batch = {6, 2, 2};
    cfg.schedule = {0.005, 0.9, 10, false};
    cfg.train_span = {0, 20};
    cfg.val_span = {20, 40};
    cfg.forward_stepper = DormandPrince54{1e-8, 1e-8, 0, 100000};
    cfg.adjoint_stepper = DormandPrince54{1e-8, 1e-8, 0, 100000};
    return cfg;
}

}  // namespace

TEST_CASE("zero residual data leaves parameters unchanged") {
    const AugmentedSystem sys = toy_markovian();
    std::vector<double> t;
    std::vector<Vec> s;
    for (int i = 0; i <= 40; ++i) {
        t.push_back(0.1 * i);
        s.push_back({0.0, 0.0});
    }
    const SnapshotDataset d(t, s);
    const Trainer tr(sys, d, toy_config());
    TrainState st = tr.initial_state(3);
    const Vec before = st.params;
    tr.step(st);
    CHECK(st.params == before);
}

TEST_CASE("epoch-0 losses equal the uncorrected model") {
    const SnapshotDataset d = toy_truth(0.0, 0.4);
    const AugmentedSystem sys = toy_markovian();
    const AugmentedSystem base(toy_base(), ClosureSpec{});
    const Trainer tr(sys, d, toy_config()), tb(base, d, toy_config());
    const TrainState st = tr.initial_state(5);
    const double closure_val = tr.span_loss(st.params, {20, 40});
    const double base_val = tb.span_loss({}, {20, 40});
    CHECK(closure_val > 0.01);
    CHECK(std::abs(closure_val - base_val) < 1e-12);
}

TEST_CASE("loss is invariant to time translation") {
    const AugmentedSystem base(toy_base(), ClosureSpec{});
    const SnapshotDataset a = toy_truth(0.0, 0.4), b = toy_truth(7.5, 0.4);
    const Trainer ta(base, a, toy_config()), tb(base, b, toy_config());
    CHECK(ta.span_loss({}, {20, 40}) == doctest::Approx(tb.span_loss({}, {20, 40})).epsilon(1e-7));
}

TEST_CASE("training reduces the training loss and resumes deterministically") {
    const SnapshotDataset d = toy_truth(0.0, 0.4);
    const AugmentedSystem sys = toy_markovian();
    const Trainer tr(sys, d, toy_config());
    CHECK(tr.iterations() == iterations_per_epoch(20, 2));
    TrainState st = tr.initial_state(11);
    const EpochRecord e0 = tr.evaluate(st);
    EpochRecord last = e0;
    for (int e = 0; e < 10; ++e) last = tr.run_epoch(st);
    MESSAGE("train " << e0.train_loss << " -> " << last.train_loss);
    CHECK(last.epoch == 10);
    CHECK(last.train_loss < 0.3 * e0.train_loss);

    // Continuing from a copied state reproduces the same trajectory bit for bit.
    TrainState copy = st;
    const EpochRecord r1 = tr.run_epoch(st), r2 = tr.run_epoch(copy);
    CHECK(st.params == copy.params);
    CHECK(r1.val_loss == r2.val_loss);
}

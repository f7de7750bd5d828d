#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nclosure/integrate.hpp"

using namespace ncm;

namespace {

const OdeRhs decay = [](double, const Vec& u) { return Vec{-u[0]}; };

double rk4_error(double dt) {
    const DenseTrajectory tr = integrate_ode(decay, {1.0}, {0.0, 1.0}, Rk4Fixed{dt});
    return std::abs(tr.query(1.0)[0] - std::exp(-1.0));
}

double dp_error(double tol) {
    const DenseTrajectory tr = integrate_ode(decay, {1.0}, {0.0, 1.0}, DormandPrince54{tol, tol, 0.0, 100000});
    return std::abs(tr.query(1.0)[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("zero right-hand side keeps the state constant") {
    const OdeRhs zero = [](double, const Vec& u) { return Vec(u.size(), 0.0); };
    for (const StepperSpec& s : {StepperSpec{Rk4Fixed{0.1}}, StepperSpec{DormandPrince54{}},
                                 StepperSpec{ImplicitTrapezoid{0.1, 1e-12, 10}}}) {
        const DenseTrajectory tr = integrate_ode(zero, {2.5, -1.0}, {0.0, 3.0}, s);
        CHECK(tr.query(1.234) == Vec{2.5, -1.0});
        CHECK(tr.query(3.0) == Vec{2.5, -1.0});
    }
}

TEST_CASE("exponential decay with Dormand-Prince at tight tolerance") {
    const DenseTrajectory tr = integrate_ode(decay, {1.0}, {0.0, 1.0}, DormandPrince54{1e-10, 1e-10, 0.0, 100000});
    CHECK(tr.query(0.0)[0] == 1.0);
    CHECK(std::abs(tr.query(1.0)[0] - 0.3678794412) < 1e-8);
    // Dense output between knots stays close to the exact solution.
    CHECK(std::abs(tr.query(0.4321)[0] - std::exp(-0.4321)) < 1e-8);
}

TEST_CASE("RK4 is exact on constant-velocity drift") {
    const OdeRhs drift = [](double, const Vec&) { return Vec{1.0, 2.0}; };
    const DenseTrajectory tr = integrate_ode(drift, {0.0, 0.0}, {0.0, 2.0}, Rk4Fixed{0.5});
    CHECK(tr.size() == 4);
    CHECK(tr.query(2.0) == Vec{2.0, 4.0});
}

TEST_CASE("RK4 global error is fourth order") {
    const double ratio = rk4_error(0.1) / rk4_error(0.05);
    CHECK(ratio >= 14.0);
    CHECK(ratio <= 18.0);
}

TEST_CASE("Dormand-Prince error responds to tolerance") {
    CHECK(dp_error(1e-6) / dp_error(1e-8) >= 10.0);
    CHECK(dp_error(1e-8) / dp_error(1e-10) >= 10.0);
}

TEST_CASE("implicit trapezoid is second order and stable on stiff decay") {
    const auto err = [](double dt) {
        const DenseTrajectory tr = integrate_ode(decay, {1.0}, {0.0, 1.0}, ImplicitTrapezoid{dt, 1e-13, 20});
        return std::abs(tr.query(1.0)[0] - std::exp(-1.0));
    };
    const double ratio = err(0.1) / err(0.05);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
    const OdeRhs stiff = [](double, const Vec& u) { return Vec{-1e4 * u[0]}; };
    const DenseTrajectory tr = integrate_ode(stiff, {1.0}, {0.0, 1.0}, ImplicitTrapezoid{0.1, 1e-12, 20});
    CHECK(std::abs(tr.query(1.0)[0]) < 1.0);
}

TEST_CASE("query at stored knots returns stored states exactly") {
    const DenseTrajectory tr = integrate_ode(decay, {1.0}, {0.0, 1.0}, DormandPrince54{1e-8, 1e-8, 0.0, 1000});
    for (const HermiteSegment& s : tr.segments()) {
        CHECK(tr.query(s.t1) == s.u1);
    }
    CHECK_THROWS_AS(tr.query(1.5), OutOfDomain);
}

TEST_CASE("integration errors are reported with the failing time") {
    const OdeRhs blowup = [](double, const Vec& u) { return Vec{u[0] * u[0]}; };
    CHECK_THROWS_AS(integrate_ode(blowup, {1.0}, {0.0, 2.0}, Rk4Fixed{0.01}), IntegrationError);
    CHECK_THROWS_AS(integrate_ode(decay, {1.0}, {0.0, 10.0}, DormandPrince54{1e-12, 1e-12, 0.0, 5}), IntegrationError);
    try {
        integrate_ode(decay, {1.0}, {0.0, 10.0}, DormandPrince54{1e-12, 1e-12, 0.0, 5});
    } catch (const IntegrationError& e) {
        CHECK(e.time > 0.0);
        CHECK(e.time < 10.0);
    }
    CHECK_THROWS_AS(integrate_ode(decay, {1.0}, {1.0, 0.0}, Rk4Fixed{0.1}), InvalidArgument);
}

TEST_CASE("DDE u' = -u(t-1) with unit history matches method-of-steps closed form") {
    const DdeProblem prob{[](double, const Vec&, const std::vector<Vec>& d) { return Vec{-d[0][0]}; },
                          {1.0},
                          [](double) { return Vec{1.0}; }};
    const DenseTrajectory tr = integrate_dde(prob, {0.0, 2.0}, DormandPrince54{1e-10, 1e-10, 0.0, 100000});
    CHECK(std::abs(tr.query(1.0)[0]) < 1e-9);
    CHECK(std::abs(tr.query(2.0)[0] + 0.5) < 1e-8);
    // u = 1 - t + (t-1)^2/2 on [1, 2]
    const double t = 1.6;
    CHECK(std::abs(tr.query(t)[0] - (1 - t + (t - 1) * (t - 1) / 2)) < 1e-8);
}

TEST_CASE("DDE with zero dynamics keeps the history constant") {
    const DdeProblem prob{[](double, const Vec& u, const std::vector<Vec>&) { return Vec(u.size(), 0.0); },
                          {0.3, 0.7},
                          [](double) { return Vec{3.0, 4.0}; }};
    for (const StepperSpec& s : {StepperSpec{Rk4Fixed{0.5}}, StepperSpec{DormandPrince54{}}}) {
        const DenseTrajectory tr = integrate_dde(prob, {0.0, 2.0}, s);
        CHECK(tr.query(2.0) == Vec{3.0, 4.0});
    }
}

TEST_CASE("DDE steps are capped at the smallest delay") {
    const DdeProblem prob{[](double, const Vec&, const std::vector<Vec>& d) { return Vec{-d[0][0]}; },
                          {0.25},
                          [](double) { return Vec{1.0}; }};
    const DenseTrajectory tr = integrate_dde(prob, {0.0, 1.0}, Rk4Fixed{1.0});
    for (const HermiteSegment& s : tr.segments()) CHECK(s.t1 - s.t0 <= 0.25 + 1e-12);
}

TEST_CASE("DDE rejects invalid delays") {
    const DdeRhs rhs = [](double, const Vec& u, const std::vector<Vec>&) { return u; };
    const HistoryFn h = [](double) { return Vec{1.0}; };
    CHECK_THROWS_AS(integrate_dde(DdeProblem{rhs, {0.0}, h}, {0, 1}, Rk4Fixed{0.1}), InvalidArgument);
    CHECK_THROWS_AS(integrate_dde(DdeProblem{rhs, {0.5, 0.2}, h}, {0, 1}, Rk4Fixed{0.1}), InvalidArgument);
}

TEST_CASE("backward trajectories grow toward earlier times") {
    DenseTrajectory tr(1.0, {1.0}, DenseTrajectory::Direction::Backward);
    // v' = v backward from t=1: v(t) = e^{t-1}
    const OdeRhs grow = [](double, const Vec& v) { return v; };
    advance(tr, grow, 0.0, DormandPrince54{1e-10, 1e-10, 0.0, 10000});
    CHECK(tr.lo() == 0.0);
    CHECK(tr.hi() == 1.0);
    CHECK(std::abs(tr.query(0.0)[0] - std::exp(-1.0)) < 1e-9);
    CHECK(std::abs(tr.query(0.5)[0] - std::exp(-0.5)) < 1e-8);
}

TEST_CASE("trapezoidal quadrature") {
    CHECK(quadrature([](double x) { return x; }, 0.0, 1.0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(quadrature([](double x) { return x; }, 0.0, 1.0, 7) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(quadrature([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1000) - 2.0) < 1e-5);
    CHECK(quadrature([](double x) { return x * x; }, 2.0, 2.0, 4) == 0.0);
    CHECK_THROWS_AS(quadrature([](double) { return 1.0; }, 0.0, 1.0, 0), InvalidArgument);
    const Vec v = quadrature_vec([](double x) { return Vec{1.0, x}; }, 0.0, 2.0, 3);
    CHECK(v[0] == doctest::Approx(2.0));
    CHECK(v[1] == doctest::Approx(2.0));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nclosure/integrate.hpp"
#include "nclosure/models/bio.hpp"
#include "nclosure/models/burgers.hpp"
#include "nclosure/models/column.hpp"
#include "nclosure/models/pod.hpp"

using namespace ncm;

TEST_CASE("burgers initial condition") {
    CHECK(burgers_ic(0.0, 1000) == 0.0);
    CHECK(burgers_ic(0.5, 1000) == doctest::Approx(0.25).epsilon(1e-14));
    // Separate factors evaluated in long double as an independent check.
    const long double x = 0.3L, Re = 1000.0L;
    const long double ref = x / (1.0L + std::sqrt(1.0L / std::exp(Re / 8.0L)) * std::exp(Re * x * x / 4.0L));
    CHECK(burgers_ic(0.3, 1000) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    BurgersConfig cfg;
    for (double u : burgers_ic_field(cfg)) CHECK(u >= 0.0);
    CHECK(burgers_ic_field(cfg).back() == 0.0);
}

TEST_CASE("burgers stencils") {
    BurgersConfig cfg;
    cfg.nx = 11;
    CHECK(burgers_rhs(Vec(11, 0.0), cfg) == Vec(11, 0.0));

    // Linear positive interior profile, inviscid: −u_i (u_i − u_{i−1})/dx.
    BurgersConfig inviscid = cfg;
    inviscid.Re = 1e300;
    Vec u(11);
    for (int i = 0; i < 11; ++i) u[i] = 1.0 + 0.5 * i;
    const Vec r = burgers_rhs(u, inviscid);
    CHECK(r[4] == doctest::Approx(-3.0 * (0.5 / 0.1)));
    CHECK(r[0] == 0.0);
    CHECK(r[10] == 0.0);
    // Negative velocity uses the forward difference.
    Vec un(11);
    for (int i = 0; i < 11; ++i) un[i] = -1.0 - 0.25 * i * i;
    CHECK(burgers_rhs(un, inviscid)[3] == doctest::Approx(-un[3] * (un[4] - un[3]) / 0.1));

    // Quadratic profile with negligible advection: ν·u'' exactly.
    Vec q(11);
    const Vec x = burgers_grid(cfg);
    for (int i = 0; i < 11; ++i) q[i] = 1e-9 * (3.0 * x[i] * x[i]);
    const Vec rq = burgers_rhs(q, cfg);
    CHECK(rq[5] == doctest::Approx(cfg.nu() * 6e-9).epsilon(1e-3));
}

TEST_CASE("burgers vjp matches finite differences") {
    BurgersConfig cfg;
    cfg.nx = 15;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1, 1);
    Vec u(15), w(15);
    for (auto& v : u) v = U(rng);
    for (auto& v : w) v = U(rng);
    u.front() = u.back() = 0;
    const Vec g = burgers_vjp(u, w, cfg);
    for (std::size_t i = 0; i < u.size(); ++i) {
        Vec p = u, m = u;
        p[i] += 1e-7;
        m[i] -= 1e-7;
        // Stay on one upwind branch: skip nodes whose sign would flip.
        if ((p[i] > 0) != (m[i] > 0)) continue;
        const double fd = (dot(w, burgers_rhs(p, cfg)) - dot(w, burgers_rhs(m, cfg))) / 2e-7;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("smagorinsky") {
    BurgersConfig cfg;
    cfg.nx = 21;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    Vec u(21);
    for (auto& v : u) v = U(rng);
    CHECK(smagorinsky_rhs(u, cfg, 0.0) == burgers_rhs(u, cfg));
    Vec lin(21);
    const Vec x = burgers_grid(cfg);
    for (int i = 0; i < 21; ++i) lin[i] = 0.3 - 2.0 * x[i];
    const Vec a = smagorinsky_rhs(lin, cfg, 1.0), b = burgers_rhs(lin, cfg);
    for (int i = 0; i < 21; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12).scale(1.0));
    // The eddy term is dissipative: it lowers the discrete energy of a rough field.
    const Vec e = sub(smagorinsky_rhs(u, cfg, 1.0), burgers_rhs(u, cfg));
    CHECK(dot(u, e) < 0.0);
}

TEST_CASE("restriction to a coarse grid") {
    const Vec fx{0.0, 0.25, 0.5, 0.75, 1.0};
    const Vec f{0.0, 2.0, 4.0, 1.0, 0.0};
    CHECK(restrict_to_coarse(f, fx, {0.0, 0.5, 1.0}) == Vec{0.0, 4.0, 0.0});
    CHECK(restrict_to_coarse({0.0, 2.0}, {0.0, 1.0}, {0.5})[0] == doctest::Approx(1.0));
    const Vec lin{1.0, 1.5, 2.0, 2.5, 3.0};
    const Vec c = restrict_to_coarse(lin, fx, {0.1, 0.6, 0.9});
    CHECK(c[0] == doctest::Approx(1.2));
    CHECK(c[1] == doctest::Approx(2.2));
    CHECK(c[2] == doctest::Approx(2.8));
    CHECK_THROWS_AS(restrict_to_coarse(f, fx, {1.5}), InvalidArgument);
}

TEST_CASE("pod basics") {
    const Vec v{1.0, -2.0, 0.5};
    const PodBasis p = compute_pod({v, scaled(-1.0, v)}, 1);
    CHECK(p.energy_fraction(1) == doctest::Approx(1.0));
    const Vec mode = p.modes.col(0);
    CHECK(std::abs(dot(mode, v)) == doctest::Approx(norm2(v)));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<Vec> snaps(5, Vec(8));
    for (auto& s : snaps)
        for (auto& x : s) x = U(rng);
    const PodBasis full = compute_pod(snaps, 0);
    for (std::size_t i = 0; i < full.m; ++i)
        for (std::size_t j = 0; j < full.m; ++j)
            CHECK(dot(full.modes.col(i), full.modes.col(j)) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
    for (const Vec& s : snaps) {
        const Vec back = full.reconstruct(full.project(s));
        for (std::size_t k = 0; k < s.size(); ++k) CHECK(back[k] == doctest::Approx(s[k]).epsilon(1e-8));
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= full.sigma.size(); ++k) {
        CHECK(full.energy_fraction(k) >= prev - 1e-15);
        prev = full.energy_fraction(k);
    }
    CHECK(prev == doctest::Approx(1.0));
    CHECK_THROWS_AS(compute_pod({v, v}, 1), InvalidArgument);
}

TEST_CASE("galerkin tensors agree with direct projection") {
    BurgersConfig cfg;
    cfg.nx = 40;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<Vec> snaps(6, Vec(40));
    for (auto& s : snaps) {
        for (auto& x : s) x = U(rng);
        s.front() = s.back() = 0;
    }
    const PodBasis basis = compute_pod(snaps, 3);
    const GalerkinTensors g = galerkin_tensors(basis, cfg);
    CHECK(rom_rhs(Vec(3, 0.0), g) == g.b);
    for (int trial = 0; trial < 20; ++trial) {
        Vec a{U(rng), U(rng), U(rng)};
        const Vec t = rom_rhs(a, g), d = rom_rhs_direct(a, basis, cfg);
        CHECK(norm2(sub(t, d)) <= 1e-10 * std::max(1.0, norm2(d)));
    }
    // Homogeneity: linear part doubles, quadratic part quadruples.
    const Vec a{0.3, -0.2, 0.7};
    const Vec r1 = sub(rom_rhs(a, g), g.b), r2 = sub(rom_rhs(scaled(2.0, a), g), g.b);
    const Vec lin = g.A * a;
    for (int k = 0; k < 3; ++k) CHECK(r2[k] == doctest::Approx(2 * lin[k] + 4 * (r1[k] - lin[k])));
    // vjp against finite differences.
    const Vec w{0.4, -1.1, 0.2};
    const Vec vj = rom_vjp(a, w, g);
    for (int i = 0; i < 3; ++i) {
        Vec p = a, m = a;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        CHECK(vj[i] == doctest::Approx((dot(w, rom_rhs(p, g)) - dot(w, rom_rhs(m, g))) / 2e-6).epsilon(1e-7));
    }
}

TEST_CASE("pod energy of the advecting shock" * doctest::timeout(120)) {
    BurgersConfig cfg;  // Re 1000, N_x 100, T 4
    std::vector<double> times;
    for (int i = 0; i <= 400; ++i) times.push_back(0.01 * i);
    const auto snaps = solve_at([&](double, const Vec& u) { return burgers_rhs(u, cfg); }, burgers_ic_field(cfg),
                                times, DormandPrince54{1e-8, 1e-10, 0, 1000000});
    const PodBasis p = compute_pod(snaps, 3);
    MESSAGE("3 modes: singular-value share " << p.singular_value_fraction(3) << ", squared share "
                                              << p.energy_fraction(3));
    CHECK(std::abs(p.singular_value_fraction(3) - 0.608) < 0.02);
    CHECK(p.energy_fraction(3) > p.singular_value_fraction(3));
}

TEST_CASE("growth rate") {
    BioParams p;
    CHECK(growth_G(0.0, 0.0, p) == 0.0);
    CHECK(growth_G(0.0, 60.0, p) == doctest::Approx(1.5 / std::sqrt(2.0)));
    CHECK(growth_G(0.0, 1e12, p) == doctest::Approx(1.5));
    CHECK(growth_G(-25.0, 60.0, p) < growth_G(0.0, 60.0, p));
}

TEST_CASE("ecosystem conservation") {
    BioParams p;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-5, 40);
    double worst3 = 0, worst5 = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec s3{U(rng), U(rng), U(rng)};
        const Vec s5{U(rng), U(rng), U(rng), U(rng), U(rng)};
        const double G = growth_G(-25, 158.075, p);
        const Vec r3 = npz_rhs(s3, p, G), r5 = nnpzd_rhs(s5, p, G);
        if (s3[0] + p.k_u == 0 || s5[0] + p.k_u == 0 || s5[1] + p.k_u == 0) continue;
        worst3 = std::max(worst3, std::abs(r3[0] + r3[1] + r3[2]) / norm2(s3));
        worst5 = std::max(worst5, std::abs(r5[0] + r5[1] + r5[2] + r5[3] + r5[4]) / norm2(s5));
    }
    CHECK(worst3 < 1e-12);
    CHECK(worst5 < 1e-12);
    CHECK(npz_rhs({30, 0, 0}, p, 1.0) == Vec{0, 0, 0});
    CHECK(aggregate_nnpzd({1, 2, 3, 4, 5}) == Vec{8, 3, 4});
    CHECK(aggregate_nnpzd({0, 0, 0, 0, 0}) == Vec{0, 0, 0});
}

TEST_CASE("npz vjp matches finite differences") {
    BioParams p;
    const Vec s{12.0, 3.0, 1.5}, w{0.3, -0.7, 1.2};
    const double G = 0.8;
    const Vec g = npz_vjp(s, w, p, G);
    for (int i = 0; i < 3; ++i) {
        Vec a = s, b = s;
        a[i] += 1e-6;
        b[i] -= 1e-6;
        CHECK(g[i] == doctest::Approx((dot(w, npz_rhs(a, p, G)) - dot(w, npz_rhs(b, p, G))) / 2e-6).epsilon(1e-7));
    }
}

TEST_CASE("nnpzd rollout conserves biomass" * doctest::timeout(60)) {
    BioParams p;
    const double G = growth_G(p.z_eval, p.i0_surface, p);
    const Vec s0 = nnpzd_initial(p, p.t_bio);
    const DenseTrajectory tr = integrate_ode([&](double, const Vec& s) { return nnpzd_rhs(s, p, G); }, s0, {0, 330},
                                             DormandPrince54{1e-10, 1e-10, 0, 1000000});
    const Vec end = tr.query(330);
    double total = 0;
    for (double v : end) total += v;
    CHECK(std::abs(total - p.t_bio) / p.t_bio < 1e-6);
    // The seeded state leaves the fixed point.
    CHECK(std::abs(end[2] - s0[2]) > 1e-3);
}

TEST_CASE("eddy diffusivity profile") {
    ColumnConfig c;
    for (double M : {-10.0, -30.0, -50.0}) {
        CHECK(kz_profile(0.0, M, c) == doctest::Approx(c.kz_0).epsilon(1e-14));
        CHECK(kz_profile(c.d_total, M, c) == doctest::Approx(c.kz_b).epsilon(1e-12));
        double prev = kz_profile(0.0, M, c);
        for (int k = 1; k <= 100; ++k) {
            const double v = kz_profile(-static_cast<double>(k), M, c);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("column mixing") {
    ColumnConfig c;
    BioParams p;
    c.biology = false;
    // Linear profile under constant diffusivity: interior tendencies vanish.
    ColumnConfig flat = c;
    flat.kz_0 = 1.0 + 1e-12;
    flat.kz_b = 1.0;
    Vec f(3 * c.nz);
    for (std::size_t k = 0; k < c.nz; ++k)
        for (int s = 0; s < 3; ++s) f[3 * k + s] = 2.0 + 0.1 * static_cast<double>(k);
    const Vec r = column_npz_rhs(f, 0.0, flat, p);
    for (std::size_t k = 1; k + 1 < c.nz; ++k) CHECK(std::abs(r[3 * k]) < 1e-9);
    // Boundary cells lose/gain exactly the single interior flux.
    CHECK(r[0] == doctest::Approx(flat.kz_b * 0.1 / (flat.dz() * flat.dz())).epsilon(1e-9));

    // Conservation over 30 days with biology off.
    const Vec f0 = column_npz_initial(c, p);
    const Vec inv0 = column_inventory(f0, 3, c);
    const DenseTrajectory tr = integrate_ode([&](double t, const Vec& s) { return column_npz_rhs(s, t, c, p); }, f0,
                                             {0, 30}, DormandPrince54{1e-8, 1e-8, 0, 1000000});
    const Vec inv1 = column_inventory(tr.query(30), 3, c);
    for (int s = 0; s < 3; ++s) CHECK(std::abs(inv1[s] - inv0[s]) / inv0[s] < 1e-8);
}

TEST_CASE("column biology conserves pointwise and vjp is consistent") {
    ColumnConfig c;
    BioParams p;
    c.mixing = false;
    const Vec f = column_nnpzd_initial(c, p);
    const Vec r = column_nnpzd_rhs(f, 10.0, c, p);
    for (std::size_t k = 0; k < c.nz; ++k) {
        double s = 0;
        for (int j = 0; j < 5; ++j) s += r[5 * k + j];
        CHECK(std::abs(s) < 1e-12);
    }
    CHECK(column_aggregate(f, c.nz).size() == 3 * c.nz);

    ColumnConfig full;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.1, 5);
    Vec x(3 * full.nz), w(3 * full.nz);
    for (auto& v : x) v = U(rng);
    for (auto& v : w) v = U(rng) - 2.5;
    const Vec g = column_npz_vjp(x, w, 42.0, full, p);
    for (std::size_t i = 0; i < x.size(); i += 7) {
        Vec a = x, b = x;
        a[i] += 1e-6;
        b[i] -= 1e-6;
        const double fd = (dot(w, column_npz_rhs(a, 42.0, full, p)) - dot(w, column_npz_rhs(b, 42.0, full, p))) / 2e-6;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

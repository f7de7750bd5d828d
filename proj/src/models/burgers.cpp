#include "nclosure/models/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ncm {

void BurgersConfig::validate() const {
    if (!(Re > 0)) throw InvalidArgument("burgers: Re must be positive");
    if (!(L > 0)) throw InvalidArgument("burgers: domain length must be positive");
    if (nx < 3) throw InvalidArgument("burgers: need at least 3 grid points");
    if (!(T > 0)) throw InvalidArgument("burgers: final time must be positive");
}

Vec burgers_grid(const BurgersConfig& cfg) {
    cfg.validate();
    Vec x(cfg.nx);
    for (std::size_t i = 0; i < cfg.nx; ++i) x[i] = cfg.L * static_cast<double>(i) / static_cast<double>(cfg.nx - 1);
    return x;
}

double burgers_ic(double x, double Re) {
    // sqrt(1/t0) = exp(−Re/16); combined exponent avoids overflow of the separate factors.
    return x / (1.0 + std::exp(Re * x * x / 4.0 - Re / 16.0));
}

Vec burgers_ic_field(const BurgersConfig& cfg) {
    const Vec x = burgers_grid(cfg);
    Vec u(x.size());
    for (std::size_t i = 1; i + 1 < x.size(); ++i) u[i] = burgers_ic(x[i], cfg.Re);
    return u;
}

namespace {

void require_grid(const Vec& u, const BurgersConfig& cfg) {
    if (u.size() != cfg.nx)
        throw InvalidArgument("burgers: field has " + std::to_string(u.size()) + " points, expected " +
                              std::to_string(cfg.nx));
}

}  // namespace

Vec burgers_rhs(const Vec& u, const BurgersConfig& cfg) {
    require_grid(u, cfg);
    const double dx = cfg.dx(), nu = cfg.nu();
    Vec r(u.size(), 0.0);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double ux = u[i] > 0 ? (u[i] - u[i - 1]) / dx : (u[i + 1] - u[i]) / dx;
        r[i] = -u[i] * ux + nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
    }
    return r;
}

Vec burgers_vjp(const Vec& u, const Vec& w, const BurgersConfig& cfg) {
    require_grid(u, cfg);
    require_grid(w, cfg);
    const double dx = cfg.dx(), c = cfg.nu() / (dx * dx);
    Vec g(u.size(), 0.0);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double wi = w[i];
        if (u[i] > 0) {
            g[i] -= wi * (2.0 * u[i] - u[i - 1]) / dx;
            g[i - 1] += wi * u[i] / dx;
        } else {
            g[i] -= wi * (u[i + 1] - 2.0 * u[i]) / dx;
            g[i + 1] -= wi * u[i] / dx;
        }
        g[i - 1] += wi * c;
        g[i] -= 2.0 * wi * c;
        g[i + 1] += wi * c;
    }
    return g;
}

Vec smagorinsky_rhs(const Vec& u, const BurgersConfig& cfg, double cs) {
    if (cs < 0) throw InvalidArgument("smagorinsky: C_s must be nonnegative");
    Vec r = burgers_rhs(u, cfg);
    if (cs == 0.0) return r;
    const std::size_t n = u.size();
    const double dx = cfg.dx(), l2 = (cs * dx) * (cs * dx);
    Vec nu_e(n);
    nu_e[0] = l2 * std::abs((u[1] - u[0]) / dx);
    nu_e[n - 1] = l2 * std::abs((u[n - 1] - u[n - 2]) / dx);
    for (std::size_t i = 1; i + 1 < n; ++i) nu_e[i] = l2 * std::abs((u[i + 1] - u[i - 1]) / (2.0 * dx));
    // Flux on face i+1/2.
    Vec flux(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) flux[i] = 0.5 * (nu_e[i] + nu_e[i + 1]) * (u[i + 1] - u[i]) / dx;
    for (std::size_t i = 1; i + 1 < n; ++i) r[i] += (flux[i] - flux[i - 1]) / dx;
    return r;
}

Vec restrict_to_coarse(const Vec& fine, const Vec& fine_x, const Vec& coarse_x) {
    require_same_size(fine, fine_x, "restrict_to_coarse");
    if (fine_x.size() < 2) throw InvalidArgument("restrict_to_coarse: fine grid needs two points");
    const double lo = fine_x.front(), hi = fine_x.back();
    const double tol = 1e-12 * std::max(1.0, std::abs(hi - lo));
    Vec out(coarse_x.size());
    for (std::size_t k = 0; k < coarse_x.size(); ++k) {
        const double x = coarse_x[k];
        if (x < lo - tol || x > hi + tol)
            throw InvalidArgument("restrict_to_coarse: coarse node " + std::to_string(x) + " outside the fine domain");
        auto it = std::lower_bound(fine_x.begin(), fine_x.end(), x);
        std::size_t j = static_cast<std::size_t>(it - fine_x.begin());
        if (j < fine_x.size() && std::abs(fine_x[j] - x) <= tol) {
            out[k] = fine[j];
            continue;
        }
        if (j > 0 && std::abs(fine_x[j - 1] - x) <= tol) {
            out[k] = fine[j - 1];
            continue;
        }
        j = std::clamp<std::size_t>(j, 1, fine_x.size() - 1);
        const double s = (x - fine_x[j - 1]) / (fine_x[j] - fine_x[j - 1]);
        out[k] = (1.0 - s) * fine[j - 1] + s * fine[j];
    }
    return out;
}

}  // namespace ncm

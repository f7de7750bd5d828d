#pragma once

#include <cstddef>

#include "nclosure/linalg.hpp"

namespace ncm {

/// Viscous Burgers equation on [0, L] with u(0) = u(L) = 0.
struct BurgersConfig {
    double Re = 1000.0;
    double L = 1.0;
    std::size_t nx = 100;
    double T = 4.0;

    double nu() const { return 1.0 / Re; }
    double dx() const { return L / static_cast<double>(nx - 1); }
    void validate() const;
};

Vec burgers_grid(const BurgersConfig& cfg);

/// x / (1 + sqrt(1/t0)·exp(Re·x²/4)) with t0 = exp(Re/8).
double burgers_ic(double x, double Re);
/// Initial field on the grid, boundary entries pinned to zero.
Vec burgers_ic_field(const BurgersConfig& cfg);

/// −u·∂x u (first-order upwind on the sign of u) + ν ∂xx u (central); zero at both ends.
Vec burgers_rhs(const Vec& u, const BurgersConfig& cfg);
/// wᵀ ∂burgers_rhs/∂u, on the upwind branch selected by u.
Vec burgers_vjp(const Vec& u, const Vec& w, const BurgersConfig& cfg);

/// burgers_rhs plus ∂x(ν_e ∂x u) with ν_e = (C_s Δx)²|∂x u| averaged onto cell faces.
Vec smagorinsky_rhs(const Vec& u, const BurgersConfig& cfg, double cs);

/// Linear interpolation of a field on `fine_x` onto `coarse_x`.
Vec restrict_to_coarse(const Vec& fine, const Vec& fine_x, const Vec& coarse_x);

}  // namespace ncm

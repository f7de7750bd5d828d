#pragma once

#include <cstddef>
#include <functional>

#include "nclosure/linalg.hpp"
#include "nclosure/models/bio.hpp"

namespace ncm {

/// Water column of depth |d_total| split into nz equal cells; z is negative downward.
struct ColumnConfig {
    std::size_t nz = 20;
    double d_total = -100.0;
    double kz_b = 0.0864;   // bottom diffusivity, m²/day
    double kz_0 = 8.64;     // surface diffusivity, m²/day
    double gamma_thermo = 0.1;
    /// M(t) = m_mean + m_amp·cos(2πt/period)
    double m_mean = -30.0, m_amp = 20.0;
    /// I0(t) = i0_mean·(1 + i0_amp·cos(2πt/period))
    double i0_mean = 158.075, i0_amp = 0.5;
    double period = 364.0;
    /// Total biomass linear in depth: tbio_surface at z = 0, tbio_bottom at z = d_total.
    double tbio_surface = 10.0, tbio_bottom = 30.0;
    bool biology = true;
    bool mixing = true;

    void validate() const;
    double dz() const;
    double mixed_layer(double t) const;
    double surface_light(double t) const;
};

/// Cell-centre depths z_k = −(k + ½)Δz.
Vec column_depths(const ColumnConfig& cfg);
/// Total biomass at the cell centres.
Vec column_tbio(const ColumnConfig& cfg);

/// K_zb + (K_z0 − K_zb)(atan(−γ(M − z)) − atan(−γ(M − D)))/(atan(−γM) − atan(−γ(M − D))).
double kz_profile(double z, double M, const ColumnConfig& cfg);

/// Pointwise biology: species values at one depth, growth rate there → tendencies.
using LocalBio = std::function<Vec(const Vec& b, double G)>;

/// Fields are position-major (nz, species). Biology with depth-local G(z, I0(t))
/// plus ∂z(K_z ∂z B) in flux form with zero flux at surface and bottom.
Vec column_pde_rhs(const Vec& fields, double t, std::size_t species, const ColumnConfig& cfg, const BioParams& bio,
                   const LocalBio& local);

/// 1-D NPZ (3 species) and NNPZD (5 species) columns.
Vec column_npz_rhs(const Vec& fields, double t, const ColumnConfig& cfg, const BioParams& bio);
Vec column_npz_vjp(const Vec& fields, const Vec& w, double t, const ColumnConfig& cfg, const BioParams& bio);
Vec column_nnpzd_rhs(const Vec& fields, double t, const ColumnConfig& cfg, const BioParams& bio);

/// Position-major initial fields.
Vec column_npz_initial(const ColumnConfig& cfg, const BioParams& bio);
Vec column_nnpzd_initial(const ColumnConfig& cfg, const BioParams& bio);
/// Per-depth aggregation of NNPZD fields to (N, P, Z).
Vec column_aggregate(const Vec& nnpzd_fields, std::size_t nz);

/// Depth-integrated amount of each species (Σ_k B_k Δz).
Vec column_inventory(const Vec& fields, std::size_t species, const ColumnConfig& cfg);

/// Network side inputs per cell: depth scaled by |d_total| and light I(z, t) scaled by i0_mean.
Vec column_depth_channel(const ColumnConfig& cfg);
Vec column_light_channel(double t, const ColumnConfig& cfg, const BioParams& bio);

}  // namespace ncm

#pragma once

#include "nclosure/linalg.hpp"

namespace ncm {

/// Parameters shared by the NPZ and NNPZD ecosystem models (rates per day).
struct BioParams {
    double k_w = 0.067;          // light attenuation, 1/m
    double alpha_pi = 0.025;     // initial slope of the P–I curve
    double i0_surface = 158.075; // surface radiation, W/m²
    double v_m = 1.5;            // max phytoplankton uptake
    double k_u = 1.0;            // uptake half-saturation
    double xi = 0.1;             // phytoplankton mortality
    double r_m = 1.52;           // max grazing
    double lambda = 0.06;        // Ivlev constant
    double gamma_egest = 0.3;    // egested fraction of grazing
    double gamma_z = 0.145;      // zooplankton excretion/mortality
    double t_bio = 30.0;         // total biomass
    double psi = 1.46;           // ammonium inhibition
    double phi_d = 0.175;        // detritus decomposition
    double omega = 0.041;        // ammonium oxidation
    double z_eval = -25.0;       // depth of the 0-D model, m
    /// Initial phytoplankton and zooplankton; nutrients take the remaining biomass.
    double p0 = 0.1, z0 = 0.1;

    void validate() const;
};

/// V_m·αI/√(V_m² + α²I²) with I = I0·exp(k_w z).
double growth_G(double z, double i0, const BioParams& p);

/// State (N, P, Z).
Vec npz_rhs(const Vec& s, const BioParams& p, double G);
/// wᵀ ∂npz_rhs/∂s.
Vec npz_vjp(const Vec& s, const Vec& w, const BioParams& p, double G);
/// State (NO3, NH4, P, Z, D).
Vec nnpzd_rhs(const Vec& s, const BioParams& p, double G);

/// (NO3 + NH4 + D, P, Z).
Vec aggregate_nnpzd(const Vec& s);

/// Initial states holding total biomass `total`.
Vec npz_initial(const BioParams& p, double total);
Vec nnpzd_initial(const BioParams& p, double total);

}  // namespace ncm

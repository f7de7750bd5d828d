#include "nclosure/models/bio.hpp"

#include <cmath>
#include <string>

namespace ncm {

void BioParams::validate() const {
    for (double v : {k_w, alpha_pi, i0_surface, v_m, k_u, xi, r_m, lambda, gamma_egest, gamma_z, t_bio, psi, phi_d,
                     omega, p0, z0})
        if (!(v >= 0) || !std::isfinite(v)) throw InvalidArgument("bio parameters must be finite and nonnegative");
    if (gamma_egest > 1) throw InvalidArgument("bio: egested fraction must not exceed 1");
    if (p0 + z0 > t_bio) throw InvalidArgument("bio: initial plankton exceeds the total biomass");
}

double growth_G(double z, double i0, const BioParams& p) {
    const double ai = p.alpha_pi * i0 * std::exp(p.k_w * z);
    if (ai == 0.0) return 0.0;
    return p.v_m * ai / std::sqrt(p.v_m * p.v_m + ai * ai);
}

namespace {

void require_size(const Vec& s, std::size_t n, const char* what) {
    if (s.size() != n) throw InvalidArgument(std::string(what) + ": wrong state size");
}

}  // namespace

Vec npz_rhs(const Vec& s, const BioParams& p, double G) {
    require_size(s, 3, "npz_rhs");
    const double N = s[0], P = s[1], Z = s[2];
    const double uptake = G * P * N / (N + p.k_u);
    const double graze = p.r_m * Z * (1.0 - std::exp(-p.lambda * P));
    return {-uptake + p.xi * P + p.gamma_z * Z + p.gamma_egest * graze,
            uptake - p.xi * P - graze,
            (1.0 - p.gamma_egest) * graze - p.gamma_z * Z};
}

Vec npz_vjp(const Vec& s, const Vec& w, const BioParams& p, double G) {
    require_size(s, 3, "npz_vjp");
    require_size(w, 3, "npz_vjp");
    const double N = s[0], P = s[1], Z = s[2];
    const double d = N + p.k_u;
    const double e = std::exp(-p.lambda * P);
    // Partial derivatives of uptake and grazing.
    const double up_N = G * P * p.k_u / (d * d), up_P = G * N / d;
    const double gr_P = p.r_m * Z * p.lambda * e, gr_Z = p.r_m * (1.0 - e);
    // Row-wise: ∂rhs_k/∂(N, P, Z).
    const double dN[3] = {-up_N, up_N, 0.0};
    const double dP[3] = {-up_P + p.xi + p.gamma_egest * gr_P, up_P - p.xi - gr_P, (1.0 - p.gamma_egest) * gr_P};
    const double dZ[3] = {p.gamma_z + p.gamma_egest * gr_Z, -gr_Z, (1.0 - p.gamma_egest) * gr_Z - p.gamma_z};
    Vec g(3, 0.0);
    for (int k = 0; k < 3; ++k) {
        g[0] += w[k] * dN[k];
        g[1] += w[k] * dP[k];
        g[2] += w[k] * dZ[k];
    }
    return g;
}

Vec nnpzd_rhs(const Vec& s, const BioParams& p, double G) {
    require_size(s, 5, "nnpzd_rhs");
    const double no3 = s[0], nh4 = s[1], P = s[2], Z = s[3], D = s[4];
    const double new_up = G * no3 / (no3 + p.k_u) * std::exp(-p.psi * nh4) * P;
    const double reg_up = G * nh4 / (nh4 + p.k_u) * P;
    const double graze = p.r_m * Z * (1.0 - std::exp(-p.lambda * P));
    return {p.omega * nh4 - new_up,
            -p.omega * nh4 + p.phi_d * D + p.gamma_z * Z - reg_up,
            new_up + reg_up - p.xi * P - graze,
            (1.0 - p.gamma_egest) * graze - p.gamma_z * Z,
            p.gamma_egest * graze + p.xi * P - p.phi_d * D};
}

Vec aggregate_nnpzd(const Vec& s) {
    require_size(s, 5, "aggregate_nnpzd");
    return {s[0] + s[1] + s[4], s[2], s[3]};
}

Vec npz_initial(const BioParams& p, double total) { return {total - p.p0 - p.z0, p.p0, p.z0}; }

Vec nnpzd_initial(const BioParams& p, double total) {
    const double n = 0.5 * (total - p.p0 - p.z0);
    return {n, n, p.p0, p.z0, 0.0};
}

}  // namespace ncm

#include "nclosure/models/column.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ncm {

void ColumnConfig::validate() const {
    if (nz < 2) throw InvalidArgument("column: need at least 2 cells");
    if (!(d_total < 0)) throw InvalidArgument("column: total depth must be negative (z downward)");
    if (!(kz_0 > kz_b && kz_b > 0)) throw InvalidArgument("column: need K_z0 > K_zb > 0");
    if (!(gamma_thermo > 0)) throw InvalidArgument("column: thermocline sharpness must be positive");
    if (!(period > 0)) throw InvalidArgument("column: forcing period must be positive");
    if (tbio_surface < 0 || tbio_bottom < 0) throw InvalidArgument("column: total biomass must be nonnegative");
}

double ColumnConfig::dz() const { return -d_total / static_cast<double>(nz); }

double ColumnConfig::mixed_layer(double t) const {
    return m_mean + m_amp * std::cos(2.0 * std::numbers::pi * t / period);
}

double ColumnConfig::surface_light(double t) const {
    return i0_mean * (1.0 + i0_amp * std::cos(2.0 * std::numbers::pi * t / period));
}

Vec column_depths(const ColumnConfig& cfg) {
    cfg.validate();
    Vec z(cfg.nz);
    for (std::size_t k = 0; k < cfg.nz; ++k) z[k] = -(static_cast<double>(k) + 0.5) * cfg.dz();
    return z;
}

Vec column_tbio(const ColumnConfig& cfg) {
    const Vec z = column_depths(cfg);
    Vec out(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
        out[k] = cfg.tbio_surface + (cfg.tbio_bottom - cfg.tbio_surface) * (z[k] / cfg.d_total);
    return out;
}

double kz_profile(double z, double M, const ColumnConfig& cfg) {
    const double g = cfg.gamma_thermo, D = cfg.d_total;
    const double den = std::atan(-g * M) - std::atan(-g * (M - D));
    if (std::abs(den) < 1e-14) throw InvalidArgument("kz_profile: degenerate mixed-layer depth " + std::to_string(M));
    return cfg.kz_b + (cfg.kz_0 - cfg.kz_b) * (std::atan(-g * (M - z)) - std::atan(-g * (M - D))) / den;
}

namespace {

void require_fields(const Vec& f, std::size_t species, const ColumnConfig& cfg) {
    if (f.size() != cfg.nz * species)
        throw InvalidArgument("column: field has " + std::to_string(f.size()) + " entries, expected " +
                              std::to_string(cfg.nz * species));
}

/// Adds ∂z(K_z ∂z B) for every species; the operator is symmetric.
void add_mixing(const Vec& f, Vec& out, double t, std::size_t species, const ColumnConfig& cfg) {
    const double dz = cfg.dz(), M = cfg.mixed_layer(t);
    for (std::size_t k = 0; k + 1 < cfg.nz; ++k) {
        const double kf = kz_profile(-static_cast<double>(k + 1) * dz, M, cfg) / (dz * dz);
        for (std::size_t c = 0; c < species; ++c) {
            const double flux = kf * (f[k * species + c] - f[(k + 1) * species + c]);
            out[k * species + c] -= flux;
            out[(k + 1) * species + c] += flux;
        }
    }
}

}  // namespace

Vec column_pde_rhs(const Vec& fields, double t, std::size_t species, const ColumnConfig& cfg, const BioParams& bio,
                   const LocalBio& local) {
    require_fields(fields, species, cfg);
    Vec out(fields.size(), 0.0);
    if (cfg.biology) {
        const Vec z = column_depths(cfg);
        const double i0 = cfg.surface_light(t);
        for (std::size_t k = 0; k < cfg.nz; ++k) {
            const Vec b(fields.begin() + static_cast<std::ptrdiff_t>(k * species),
                        fields.begin() + static_cast<std::ptrdiff_t>((k + 1) * species));
            const Vec s = local(b, growth_G(z[k], i0, bio));
            for (std::size_t c = 0; c < species; ++c) out[k * species + c] = s[c];
        }
    }
    if (cfg.mixing) add_mixing(fields, out, t, species, cfg);
    return out;
}

Vec column_npz_rhs(const Vec& fields, double t, const ColumnConfig& cfg, const BioParams& bio) {
    return column_pde_rhs(fields, t, 3, cfg, bio, [&](const Vec& b, double G) { return npz_rhs(b, bio, G); });
}

Vec column_npz_vjp(const Vec& fields, const Vec& w, double t, const ColumnConfig& cfg, const BioParams& bio) {
    require_fields(fields, 3, cfg);
    require_fields(w, 3, cfg);
    Vec out(fields.size(), 0.0);
    if (cfg.biology) {
        const Vec z = column_depths(cfg);
        const double i0 = cfg.surface_light(t);
        for (std::size_t k = 0; k < cfg.nz; ++k) {
            const Vec b(fields.begin() + static_cast<std::ptrdiff_t>(3 * k),
                        fields.begin() + static_cast<std::ptrdiff_t>(3 * k + 3));
            const Vec wk(w.begin() + static_cast<std::ptrdiff_t>(3 * k), w.begin() + static_cast<std::ptrdiff_t>(3 * k + 3));
            const Vec g = npz_vjp(b, wk, bio, growth_G(z[k], i0, bio));
            for (std::size_t c = 0; c < 3; ++c) out[3 * k + c] = g[c];
        }
    }
    if (cfg.mixing) add_mixing(w, out, t, 3, cfg);
    return out;
}

Vec column_nnpzd_rhs(const Vec& fields, double t, const ColumnConfig& cfg, const BioParams& bio) {
    return column_pde_rhs(fields, t, 5, cfg, bio, [&](const Vec& b, double G) { return nnpzd_rhs(b, bio, G); });
}

Vec column_npz_initial(const ColumnConfig& cfg, const BioParams& bio) {
    Vec out;
    for (double tb : column_tbio(cfg)) {
        const Vec s = npz_initial(bio, tb);
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

Vec column_nnpzd_initial(const ColumnConfig& cfg, const BioParams& bio) {
    Vec out;
    for (double tb : column_tbio(cfg)) {
        const Vec s = nnpzd_initial(bio, tb);
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

Vec column_aggregate(const Vec& f, std::size_t nz) {
    if (f.size() != 5 * nz) throw InvalidArgument("column_aggregate: expected 5 species per cell");
    Vec out(3 * nz);
    for (std::size_t k = 0; k < nz; ++k) {
        out[3 * k] = f[5 * k] + f[5 * k + 1] + f[5 * k + 4];
        out[3 * k + 1] = f[5 * k + 2];
        out[3 * k + 2] = f[5 * k + 3];
    }
    return out;
}

Vec column_inventory(const Vec& fields, std::size_t species, const ColumnConfig& cfg) {
    require_fields(fields, species, cfg);
    Vec inv(species, 0.0);
    for (std::size_t k = 0; k < cfg.nz; ++k)
        for (std::size_t c = 0; c < species; ++c) inv[c] += fields[k * species + c] * cfg.dz();
    return inv;
}

Vec column_depth_channel(const ColumnConfig& cfg) {
    Vec z = column_depths(cfg);
    for (double& v : z) v /= -cfg.d_total;
    return z;
}

Vec column_light_channel(double t, const ColumnConfig& cfg, const BioParams& bio) {
    const Vec z = column_depths(cfg);
    const double i0 = cfg.surface_light(t);
    Vec out(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = i0 * std::exp(bio.k_w * z[k]) / cfg.i0_mean;
    return out;
}

}  // namespace ncm

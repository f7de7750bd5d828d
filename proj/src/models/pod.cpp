#include "nclosure/models/pod.hpp"

#include <string>

namespace ncm {

double PodBasis::energy_fraction(std::size_t k) const {
    double total = 0.0, head = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        total += sigma[i] * sigma[i];
        if (i < k) head += sigma[i] * sigma[i];
    }
    if (total == 0.0) throw InvalidArgument("pod: zero total energy");
    return head / total;
}

double PodBasis::singular_value_fraction(std::size_t k) const {
    double total = 0.0, head = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        total += sigma[i];
        if (i < k) head += sigma[i];
    }
    if (total == 0.0) throw InvalidArgument("pod: zero total energy");
    return head / total;
}

Vec PodBasis::project(const Vec& u) const { return mul_transpose(modes, sub(u, mean)); }

Vec PodBasis::reconstruct(const Vec& a) const { return add(mean, modes * a); }

PodBasis compute_pod(const std::vector<Vec>& snapshots, std::size_t m) {
    if (snapshots.size() < 2) throw InvalidArgument("pod: need at least two snapshots");
    const std::size_t n = snapshots[0].size(), s = snapshots.size();
    PodBasis out;
    out.mean.assign(n, 0.0);
    for (const Vec& u : snapshots) {
        if (u.size() != n) throw InvalidArgument("pod: ragged snapshots");
        axpy(1.0 / static_cast<double>(s), u, out.mean);
    }
    Mat X(n, s);
    for (std::size_t j = 0; j < s; ++j)
        for (std::size_t i = 0; i < n; ++i) X(i, j) = snapshots[j][i] - out.mean[i];
    if (frobenius(X) == 0.0) throw InvalidArgument("pod: snapshots carry zero energy after centering");
    const SvdResult r = svd(X);
    out.sigma = r.sigma;
    const std::size_t k = r.sigma.size();
    if (m == 0) m = k;
    if (m > k) throw InvalidArgument("pod: requested " + std::to_string(m) + " modes, rank bound is " + std::to_string(k));
    out.m = m;
    out.modes = Mat(n, m);
    for (std::size_t c = 0; c < m; ++c) out.modes.set_col(c, r.U.col(c));
    return out;
}

namespace {

Vec central_d1(const Vec& v, double dx) {
    Vec d(v.size(), 0.0);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    return d;
}

Vec central_d2(const Vec& v, double dx) {
    Vec d(v.size(), 0.0);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
    return d;
}

}  // namespace

GalerkinTensors galerkin_tensors(const PodBasis& basis, const BurgersConfig& cfg) {
    const std::size_t n = basis.mean.size(), m = basis.m;
    if (n != cfg.nx) throw InvalidArgument("galerkin_tensors: basis and grid sizes differ");
    const double dx = cfg.dx(), nu = cfg.nu();
    std::vector<Vec> v(m), dv(m), ddv(m);
    for (std::size_t i = 0; i < m; ++i) {
        v[i] = basis.modes.col(i);
        dv[i] = central_d1(v[i], dx);
        ddv[i] = central_d2(v[i], dx);
    }
    const Vec& ub = basis.mean;
    const Vec dub = central_d1(ub, dx), ddub = central_d2(ub, dx);

    GalerkinTensors g;
    g.m = m;
    g.b.assign(m, 0.0);
    g.A = Mat(m, m);
    g.N.assign(m * m * m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t p = 0; p < n; ++p) g.b[k] += v[k][p] * (-ub[p] * dub[p] + nu * ddub[p]);
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                s += v[k][p] * (-v[i][p] * dub[p] - ub[p] * dv[i][p] + nu * ddv[i][p]);
            g.A(k, i) = s;
            for (std::size_t j = 0; j < m; ++j) {
                double q = 0.0;
                for (std::size_t p = 0; p < n; ++p) q -= v[k][p] * v[i][p] * dv[j][p];
                g.N[(k * m + i) * m + j] = q;
            }
        }
    }
    return g;
}

Vec rom_rhs(const Vec& a, const GalerkinTensors& g) {
    if (a.size() != g.m) throw InvalidArgument("rom_rhs: coefficient vector has the wrong size");
    const std::size_t m = g.m;
    Vec r = g.b;
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            r[k] += g.A(k, i) * a[i];
            for (std::size_t j = 0; j < m; ++j) r[k] += g.N[(k * m + i) * m + j] * a[i] * a[j];
        }
    return r;
}

Vec rom_vjp(const Vec& a, const Vec& w, const GalerkinTensors& g) {
    if (a.size() != g.m || w.size() != g.m) throw InvalidArgument("rom_vjp: size mismatch");
    const std::size_t m = g.m;
    Vec out(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            out[i] += w[k] * g.A(k, i);
            for (std::size_t j = 0; j < m; ++j) {
                const double c = w[k] * g.N[(k * m + i) * m + j];
                out[i] += c * a[j];
                out[j] += c * a[i];
            }
        }
    return out;
}

Vec rom_rhs_direct(const Vec& a, const PodBasis& basis, const BurgersConfig& cfg) {
    if (a.size() != basis.m) throw InvalidArgument("rom_rhs_direct: coefficient vector has the wrong size");
    const Vec u = basis.reconstruct(a);
    const double dx = cfg.dx(), nu = cfg.nu();
    Vec r(u.size(), 0.0);
    for (std::size_t p = 1; p + 1 < u.size(); ++p)
        r[p] = -u[p] * (u[p + 1] - u[p - 1]) / (2.0 * dx) + nu * (u[p + 1] - 2.0 * u[p] + u[p - 1]) / (dx * dx);
    return mul_transpose(basis.modes, r);
}

}  // namespace ncm

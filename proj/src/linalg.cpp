#include "nclosure/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncm {

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) return {};
    Mat m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw InvalidArgument("Mat::from_rows: ragged rows");
        std::copy(rows[r].begin(), rows[r].end(), m.data().begin() + r * m.cols());
    }
    return m;
}

Vec Mat::col(std::size_t c) const {
    Vec v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

void Mat::set_col(std::size_t c, std::span<const double> v) {
    if (v.size() != rows_) throw InvalidArgument("Mat::set_col: length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Vec Mat::row(std::size_t r) const {
    return Vec(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("Mat product: inner dimensions differ");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw InvalidArgument("Mat-vector product: dimension mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vec mul_transpose(const Mat& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw InvalidArgument("Mat-transpose product: dimension mismatch");
    Vec y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
    return y;
}

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        throw InvalidArgument(std::string(what) + ": size mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec add(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "add");
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "sub");
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Vec scaled(double alpha, std::span<const double> a) {
    Vec c(a.begin(), a.end());
    for (double& v : c) v *= alpha;
    return c;
}

double frobenius(const Mat& a) { return norm2(a.data()); }

Vec solve(Mat a, Vec b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw InvalidArgument("solve: dimension mismatch");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (a(piv, k) == 0.0) throw InvalidArgument("solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * b[j];
        b[k] = s / a(k, k);
    }
    return b;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

// Columns of `w` (m x n, m >= n) are rotated in place until mutually orthogonal;
// `v` accumulates the rotations. Returns nothing; convergence is checked per sweep.
void jacobi_orthogonalize(Mat& w, Mat& v) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    constexpr double tol = 1e-15;
    constexpr int max_sweeps = 80;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < v.rows(); ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) return;
    }
}

// Replace columns flagged in `fill` with unit vectors orthogonal to all other columns.
void complete_orthonormal(Mat& q, const std::vector<bool>& fill) {
    const std::size_t m = q.rows();
    std::size_t candidate = 0;
    for (std::size_t c = 0; c < q.cols(); ++c) {
        if (!fill[c]) continue;
        while (candidate < m) {
            Vec e(m, 0.0);
            e[candidate++] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t o = 0; o < q.cols(); ++o) {
                    if (o == c || (fill[o] && o > c)) continue;
                    const Vec qo = q.col(o);
                    axpy(-dot(qo, e), qo, e);
                }
            }
            const double nrm = norm2(e);
            if (nrm > 1e-8) {
                for (double& x : e) x /= nrm;
                q.set_col(c, e);
                break;
            }
        }
    }
}

SvdResult svd_tall(const Mat& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Mat w = a;
    Mat v = Mat::identity(n);
    jacobi_orthogonalize(w, v);

    Vec norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(w.col(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    SvdResult r{Mat(m, n), Vec(n), Mat(n, n)};
    const double smax = norms[order.front()];
    const double floor = std::max(smax, 1e-300) * 1e-14 * static_cast<double>(std::max(m, n));
    std::vector<bool> fill(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        const double s = norms[j];
        r.sigma[k] = s;
        for (std::size_t i = 0; i < n; ++i) r.Vt(k, i) = v(i, j);
        if (s > floor) {
            for (std::size_t i = 0; i < m; ++i) r.U(i, k) = w(i, j) / s;
        } else {
            fill[k] = true;
        }
    }
    complete_orthonormal(r.U, fill);
    return r;
}

}  // namespace

SvdResult svd(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("svd: empty matrix");
    if (!all_finite(a.data())) throw InvalidArgument("svd: non-finite entries");
    if (a.rows() >= a.cols()) return svd_tall(a);
    // A = (Aᵀ)ᵀ = (U' S V'ᵀ)ᵀ = V' S U'ᵀ
    SvdResult t = svd_tall(a.transpose());
    return SvdResult{t.Vt.transpose(), std::move(t.sigma), t.U.transpose()};
}

namespace {

void check_segment_time(const HermiteSegment& seg, double& t) {
    if (!(seg.t1 > seg.t0)) throw InvalidArgument("hermite: segment requires t1 > t0");
    const double slack = 1e-12 * std::max({1.0, std::abs(seg.t0), std::abs(seg.t1)});
    if (t < seg.t0 - slack || t > seg.t1 + slack)
        throw OutOfDomain("hermite: t=" + std::to_string(t) + " outside [" + std::to_string(seg.t0) + ", " +
                          std::to_string(seg.t1) + "]");
    t = std::clamp(t, seg.t0, seg.t1);
}

}  // namespace

Vec hermite_eval(const HermiteSegment& seg, double t) {
    check_segment_time(seg, t);
    if (t == seg.t0) return seg.u0;
    if (t == seg.t1) return seg.u1;
    const double h = seg.t1 - seg.t0;
    const double s = (t - seg.t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    Vec out(seg.u0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * seg.u0[i] + h * h10 * seg.f0[i] + h01 * seg.u1[i] + h * h11 * seg.f1[i];
    return out;
}

Vec hermite_derivative(const HermiteSegment& seg, double t) {
    check_segment_time(seg, t);
    const double h = seg.t1 - seg.t0;
    const double s = (t - seg.t0) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    Vec out(seg.u0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = d00 * seg.u0[i] + d10 * seg.f0[i] + d01 * seg.u1[i] + d11 * seg.f1[i];
    return out;
}

}  // namespace ncm

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncm {

/// Real vector; every state, coefficient, and parameter array in the library.
using Vec = std::vector<double>;

/// Thrown when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Query outside the domain where a function or trajectory is defined.
class OutOfDomain : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Dense row-major matrix.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n);
    static Mat from_rows(const std::vector<Vec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    Vec col(std::size_t c) const;
    void set_col(std::size_t c, std::span<const double> v);
    Vec row(std::size_t r) const;

    Mat transpose() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, std::span<const double> x);
/// Aᵀx without forming the transpose.
Vec mul_transpose(const Mat& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec scaled(double alpha, std::span<const double> a);
double frobenius(const Mat& a);
/// Solves A x = b by LU with partial pivoting; throws on a singular matrix.
Vec solve(Mat a, Vec b);
bool all_finite(std::span<const double> v);

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what);

struct SvdResult {
    Mat U;      // rows x k, orthonormal columns
    Vec sigma;  // k values, nonincreasing
    Mat Vt;     // k x cols
};

/// Thin SVD by one-sided Jacobi rotations applied to the smaller Gram dimension.
/// k = min(rows, cols); null-space columns of U and V are completed to an
/// orthonormal set so that UᵀU = VᵀV = I holds even for rank-deficient input.
SvdResult svd(const Mat& a);

/// Cubic Hermite data on [t0, t1]: endpoint states and their time derivatives.
struct HermiteSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    Vec u0, u1;
    Vec f0, f1;
};

Vec hermite_eval(const HermiteSegment& seg, double t);
/// Time derivative of the Hermite interpolant.
Vec hermite_derivative(const HermiteSegment& seg, double t);

}  // namespace ncm

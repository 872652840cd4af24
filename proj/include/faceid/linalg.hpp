#ifndef FACEID_LINALG_HPP
#define FACEID_LINALG_HPP

#include <cstddef>
#include <vector>

#include "faceid/errors.hpp"

namespace faceid {

/// Dense real matrix, row-major storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    /// Column j as a vector.
    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Eigendecomposition of a symmetric matrix. Column j of `eigenvectors`
/// is the unit eigenvector paired with `eigenvalues[j]`; eigenvalues are
/// sorted descending.
struct EigenResult {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Convergence: off-diagonal Frobenius norm <= tol * (1 + ||S||_F)
/// within at most 100 sweeps. Sign convention: the first entry of each
/// eigenvector with magnitude > 1e-12 is made non-negative, so output
/// is deterministic (bit-identical for identical input).
EigenResult sym_eig(const Matrix& s, double tol = 1e-12);

// Small vector helpers shared across modules.
double dot(const std::vector<double>& a, const std::vector<double>& b);
double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

} // namespace faceid

#endif

#include "gatlab/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "gatlab/rng.hpp"

namespace gatlab {

Matrix::Matrix(int rows, int cols, std::initializer_list<double> init)
    : Matrix(rows, cols) {
    if (init.size() != data_.size()) {
        throw DimensionError("Matrix init list has " + std::to_string(init.size()) +
                             " entries, shape wants " + std::to_string(data_.size()));
    }
    std::copy(init.begin(), init.end(), data_.begin());
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row(std::initializer_list<double> init) {
    return Matrix(1, static_cast<int>(init.size()), init);
}

Matrix Matrix::col(std::initializer_list<double> init) {
    return Matrix(static_cast<int>(init.size()), 1, init);
}

Matrix Matrix::glorot(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    const double s = std::sqrt(6.0 / (rows + cols));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
    return m;
}

Matrix Matrix::randn(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

std::string Matrix::shape_str() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    }
    return t;
}

void gemm_nn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
        throw DimensionError("matmul: " + a.shape_str() + " * " + b.shape_str() +
                             " -> " + c.shape_str());
    }
    const int m = a.rows(), k = a.cols(), n = b.cols();
    for (int i = 0; i < m; ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b.row_ptr(p);
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
        throw DimensionError("matmul_nt: " + a.shape_str() + " * " + b.shape_str() +
                             "^T -> " + c.shape_str());
    }
    const int m = a.rows(), k = a.cols(), n = b.rows();
    for (int i = 0; i < m; ++i) {
        const double* ai = a.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (int j = 0; j < n; ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
        throw DimensionError("matmul_tn: " + a.shape_str() + "^T * " + b.shape_str() +
                             " -> " + c.shape_str());
    }
    const int m = a.cols(), k = a.rows(), n = b.cols();
    for (int p = 0; p < k; ++p) {
        const double* ap = a.row_ptr(p);
        const double* bp = b.row_ptr(p);
        for (int i = 0; i < m; ++i) {
            const double aip = ap[i];
            if (aip == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dims differ, " + a.shape_str() + " * " +
                             b.shape_str());
    }
    Matrix c(a.rows(), b.cols());
    gemm_nn_acc(a, b, c);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner dims differ, " + a.shape_str() + " * " +
                             b.shape_str() + "^T");
    }
    Matrix c(a.rows(), b.rows());
    gemm_nt_acc(a, b, c);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: inner dims differ, " + a.shape_str() + "^T * " +
                             b.shape_str());
    }
    Matrix c(a.cols(), b.cols());
    gemm_tn_acc(a, b, c);
    return c;
}

}  // namespace gatlab

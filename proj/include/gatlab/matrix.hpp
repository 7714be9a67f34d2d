#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gatlab/error.hpp"

namespace gatlab {

class Rng;

// Dense row-major 2-D array of doubles. Plain value type; the autodiff
// Tensor wraps one of these per node.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}
    Matrix(int rows, int cols, std::initializer_list<double> init);

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
    static Matrix identity(int n);
    static Matrix row(std::initializer_list<double> init);
    static Matrix col(std::initializer_list<double> init);
    static Matrix glorot(int rows, int cols, Rng& rng);
    static Matrix randn(int rows, int cols, Rng& rng);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    std::span<const double> row_span(int r) const {
        return {row_ptr(r), static_cast<std::size_t>(cols_)};
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool all_finite() const;
    double max_abs() const;
    double frobenius_norm() const;

    Matrix transposed() const;

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
Matrix matmul_nn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// c += A * B, accumulating into an existing matrix.
void gemm_nn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

}  // namespace gatlab

#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace protohat {

/// Dense row-major matrix of 64-bit reals. The only numeric storage used by
/// the model; datasets are desk scale, so there are no sparse kernels.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);

    static Matrix identity(int n);
    static Matrix zeros_like(const Matrix& other);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    long long size() const { return static_cast<long long>(rows_) * cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;
    std::string shape_str() const;  // e.g. "3x4"

    void fill(double v);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

bool operator==(const Matrix& a, const Matrix& b);

/// Number of worker threads for the dense kernels, from PROTOHAT_THREADS
/// (default 1). Row-partitioned, so results are bitwise identical for any
/// thread count.
int dense_thread_count();

/// Standard matrix product. Throws DimensionError naming both shapes when the
/// inner dimensions differ.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Elementwise max(x, slope*x). The subgradient at exactly 0 is fixed to
/// `slope`. Throws ConfigError unless slope is in (0,1).
Matrix leaky_relu(const Matrix& x, double slope);

/// Row-wise softmax over the masked-in entries (mask nonzero), computed with
/// row-max subtraction. Masked-out entries of the result are exactly 0 and
/// each row sums to 1. A row with no masked-in entries raises
/// DegenerateRowError identifying the row.
Matrix masked_row_softmax(const Matrix& logits, const Matrix& mask);

/// out(i,j) = squared Euclidean distance between z row i and m row j.
Matrix pairwise_sq_dist(const Matrix& z, const Matrix& m);

}  // namespace protohat

#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace dckd {

// Dense row-major float64 matrix. Row vectors are 1 x n, scalars 1 x 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    void fill(double v);
    Matrix& operator+=(const Matrix& other);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

bool operator==(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

// ---- value kernels ----
// Plain matrix arithmetic shared by the graph ops and the no-graph eval path,
// so both produce bit-identical values.

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add_bias_row(const Matrix& x, const Matrix& bias);
Matrix relu(const Matrix& x);

// Row-wise softmax of x / temperature, stabilised by max subtraction.
Matrix softmax_rows(const Matrix& logits, double temperature);
// Row-wise log softmax of x / temperature via log-sum-exp.
Matrix log_softmax_rows(const Matrix& logits, double temperature);

}  // namespace dckd

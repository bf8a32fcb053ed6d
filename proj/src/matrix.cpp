#include "dckd/matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "dckd/errors.hpp"

namespace dckd {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

void require_positive_temperature(double temperature) {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("temperature must be > 0, got " +
                                    std::to_string(temperature));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols_) {
            throw ShapeError("from_rows: ragged row lengths");
        }
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) shape_mismatch("operator+=", *this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

bool operator==(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] != b.data()[i]) return false;
    }
    return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_mismatch("max_abs_diff", a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

Matrix add_bias_row(const Matrix& x, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols()) shape_mismatch("add_bias_row", x, bias);
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += bias(0, c);
    }
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            if (out(r, c) < 0.0) out(r, c) = 0.0;
        }
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
    require_positive_temperature(temperature);
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double peak = logits(r, 0) / temperature;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            peak = std::max(peak, logits(r, c) / temperature);
        }
        double norm = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out(r, c) = std::exp(logits(r, c) / temperature - peak);
            norm += out(r, c);
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= norm;
    }
    return out;
}

Matrix log_softmax_rows(const Matrix& logits, double temperature) {
    require_positive_temperature(temperature);
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double peak = logits(r, 0) / temperature;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            peak = std::max(peak, logits(r, c) / temperature);
        }
        double norm = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            norm += std::exp(logits(r, c) / temperature - peak);
        }
        const double log_norm = peak + std::log(norm);
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out(r, c) = logits(r, c) / temperature - log_norm;
        }
    }
    return out;
}

}  // namespace dckd

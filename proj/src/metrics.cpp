#include "dckd/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dckd/errors.hpp"

namespace dckd {

double topk_accuracy(const Matrix& logits, const std::vector<int>& labels, int k) {
    if (logits.rows() == 0) throw std::invalid_argument("topk_accuracy: no rows");
    if (labels.size() != logits.rows()) {
        throw ShapeError("topk_accuracy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows()) + " rows");
    }
    const int classes = static_cast<int>(logits.cols());
    if (k < 1 || k > classes) {
        throw std::invalid_argument("topk_accuracy: k must be in [1, " +
                                    std::to_string(classes) + "]");
    }
    std::size_t hits = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int label = labels[r];
        if (label < 0 || label >= classes) {
            throw std::invalid_argument("topk_accuracy: label " + std::to_string(label) +
                                        " outside [0, " + std::to_string(classes) + ")");
        }
        const double own = logits(r, label);
        int rank = 0;
        for (int c = 0; c < classes; ++c) {
            if (logits(r, c) > own || (logits(r, c) == own && c < label)) ++rank;
        }
        if (rank < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

int correlation_number(const Matrix& distribution, double threshold) {
    if (distribution.rows() != 1 || distribution.cols() == 0) {
        throw ShapeError("correlation_number: expected a single distribution row");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("correlation_number: threshold must be in (0, 1)");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < distribution.cols(); ++c) {
        const double p = distribution(0, c);
        if (!(p >= 0.0)) throw InvalidInput("correlation_number: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw InvalidInput("correlation_number: row sums to " + std::to_string(sum));
    }
    int count = 0;
    for (std::size_t c = 0; c < distribution.cols(); ++c) {
        if (distribution(0, c) > threshold) ++count;
    }
    return count;
}

double mean_correlation_number(const Model& model, const Dataset& dataset, double temperature,
                               double threshold) {
    if (dataset.size() == 0) {
        throw std::invalid_argument("mean_correlation_number: empty dataset");
    }
    const Matrix probs = softmax_rows(model.forward_values(dataset.features), temperature);
    double total = 0.0;
    Matrix row(1, probs.cols());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        for (std::size_t c = 0; c < probs.cols(); ++c) row(0, c) = probs(r, c);
        total += correlation_number(row, threshold);
    }
    return total / static_cast<double>(probs.rows());
}

Matrix class_accumulation(const Model& model, const Dataset& dataset, int class_index,
                          double temperature) {
    if (dataset.size() == 0) throw std::invalid_argument("class_accumulation: empty dataset");
    if (class_index < 0 || class_index >= dataset.num_classes) {
        throw std::invalid_argument("class_accumulation: class " + std::to_string(class_index) +
                                    " outside [0, " + std::to_string(dataset.num_classes) + ")");
    }
    const Matrix probs = softmax_rows(model.forward_values(dataset.features), temperature);
    Matrix profile(1, probs.cols(), 0.0);
    bool seen = false;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        if (dataset.labels[r] != class_index) continue;
        seen = true;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
            profile(0, c) = std::max(profile(0, c), probs(r, c));
        }
    }
    if (!seen) {
        throw std::invalid_argument("class_accumulation: class " + std::to_string(class_index) +
                                    " has no samples");
    }
    return profile;
}

}  // namespace dckd

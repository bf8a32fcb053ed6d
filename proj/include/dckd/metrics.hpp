#pragma once

#include <vector>

#include "dckd/data.hpp"
#include "dckd/matrix.hpp"
#include "dckd/model.hpp"

namespace dckd {

// Fraction of rows whose true class ranks inside the top k logits. A class
// outranks the true one when its logit is strictly higher, or equal with a
// lower index, so ties resolve the same way an argsort by (logit, -index)
// would.
double topk_accuracy(const Matrix& logits, const std::vector<int>& labels, int k);

// Number of classes whose probability exceeds the threshold (strictly).
// distribution must be a single row that sums to one.
int correlation_number(const Matrix& distribution, double threshold);

// Mean correlation number of softmax(logits / temperature) over the dataset.
double mean_correlation_number(const Model& model, const Dataset& dataset,
                               double temperature = 4.0, double threshold = 0.1);

// Per-class maximum of softmax(logits / temperature) over the samples of one
// class: a 1 x C profile of which wrong classes the model ever leans toward
// when shown that class.
Matrix class_accumulation(const Model& model, const Dataset& dataset, int class_index,
                          double temperature = 4.0);

}  // namespace dckd

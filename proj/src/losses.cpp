#include "dckd/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dckd/errors.hpp"

namespace dckd {

namespace {

constexpr double kRowSumTolerance = 1e-4;

void require_distribution_rows(const char* op, const Tensor& t) {
    const Matrix& v = t.value();
    for (std::size_t r = 0; r < v.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < v.cols(); ++c) sum += v(r, c);
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            throw InvalidInput(std::string(op) + ": row " + std::to_string(r) +
                               " sums to " + std::to_string(sum) + ", expected 1");
        }
    }
}

void require_non_negative(const char* op, const Tensor& t) {
    const Matrix& v = t.value();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.data()[i] < 0.0) {
            throw InvalidInput(std::string(op) + ": negative entry " +
                               std::to_string(v.data()[i]));
        }
    }
}

Tensor batch_mean_of_cellsum(const Tensor& cells, std::size_t batch) {
    return scale(sum_all(cells), 1.0 / static_cast<double>(batch));
}

}  // namespace

const char* to_string(CollectionMethod method) {
    switch (method) {
        case CollectionMethod::LogitMax: return "logit_max";
        case CollectionMethod::ProbMax: return "prob_max";
        case CollectionMethod::Average: return "average";
    }
    return "?";
}

const char* to_string(KLDirection direction) {
    switch (direction) {
        case KLDirection::Forward: return "forward";
        case KLDirection::Reverse: return "reverse";
        case KLDirection::Bidirectional: return "bidirectional";
    }
    return "?";
}

CollectionMethod parse_collection_method(const std::string& text) {
    if (text == "logit_max") return CollectionMethod::LogitMax;
    if (text == "prob_max") return CollectionMethod::ProbMax;
    if (text == "average") return CollectionMethod::Average;
    throw ConfigError("unknown collection method '" + text +
                      "' (expected logit_max, prob_max or average)");
}

KLDirection parse_kl_direction(const std::string& text) {
    if (text == "forward") return KLDirection::Forward;
    if (text == "reverse") return KLDirection::Reverse;
    if (text == "bidirectional") return KLDirection::Bidirectional;
    throw ConfigError("unknown kl direction '" + text +
                      "' (expected forward, reverse or bidirectional)");
}

Tensor cross_entropy_soft(const Tensor& target, const Tensor& pred_logits, double temperature) {
    if (!target.defined() || !pred_logits.defined()) {
        throw std::invalid_argument("cross_entropy_soft: undefined tensor");
    }
    if (!target.value().same_shape(pred_logits.value())) {
        throw ShapeError("cross_entropy_soft: target is " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()) + ", logits are " +
                         std::to_string(pred_logits.rows()) + "x" +
                         std::to_string(pred_logits.cols()));
    }
    require_distribution_rows("cross_entropy_soft", target);
    Tensor log_probs = log_softmax_rows(pred_logits, temperature);
    return scale(batch_mean_of_cellsum(hadamard(target, log_probs), target.rows()), -1.0);
}

Tensor entropy(const Tensor& p) {
    if (!p.defined()) throw std::invalid_argument("entropy: undefined tensor");
    require_non_negative("entropy", p);
    return scale(batch_mean_of_cellsum(hadamard(p, log_eps(p)), p.rows()), -1.0);
}

Tensor kld(const Tensor& u, const Tensor& v) {
    if (!u.defined() || !v.defined()) throw std::invalid_argument("kld: undefined tensor");
    if (!u.value().same_shape(v.value())) {
        throw ShapeError("kld: shape mismatch (" + std::to_string(u.rows()) + "x" +
                         std::to_string(u.cols()) + " vs " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()) + ")");
    }
    return batch_mean_of_cellsum(hadamard(u, sub(log_eps(u), log_eps(v))), u.rows());
}

Tensor kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, double t_kd) {
    if (!teacher_logits.defined() || !student_logits.defined()) {
        throw std::invalid_argument("kd_loss: undefined tensor");
    }
    if (teacher_logits.requires_grad()) {
        throw std::invalid_argument("kd_loss: teacher logits must be detached");
    }
    Tensor teacher_soft = softmax_rows(teacher_logits, t_kd);
    return cross_entropy_soft(teacher_soft, student_logits, t_kd);
}

Tensor collect(CollectionMethod method, const std::vector<Tensor>& logit_set,
               std::optional<std::size_t> exclude_index) {
    std::vector<Tensor> members;
    members.reserve(logit_set.size());
    for (std::size_t i = 0; i < logit_set.size(); ++i) {
        if (exclude_index && *exclude_index == i) continue;
        members.push_back(logit_set[i]);
    }
    if (members.empty()) {
        throw std::invalid_argument("collect: member set is empty after exclusion");
    }
    switch (method) {
        case CollectionMethod::LogitMax:
            return elementwise_max_set(members);
        case CollectionMethod::ProbMax: {
            std::vector<Tensor> probs;
            probs.reserve(members.size());
            for (const Tensor& m : members) probs.push_back(softmax_rows(m, 1.0));
            return normalize_rows(elementwise_max_set(probs));
        }
        case CollectionMethod::Average: {
            Tensor acc = softmax_rows(members.front(), 1.0);
            for (std::size_t i = 1; i < members.size(); ++i) {
                acc = add(acc, softmax_rows(members[i], 1.0));
            }
            return scale(acc, 1.0 / static_cast<double>(members.size()));
        }
    }
    throw std::invalid_argument("collect: unknown method");
}

Tensor collection_loss(const Tensor& student_logits, const Tensor& collection,
                       CollectionMethod method, double t_kld, KLDirection direction,
                       bool simultaneous) {
    if (!student_logits.defined() || !collection.defined()) {
        throw std::invalid_argument("collection_loss: undefined tensor");
    }
    Tensor col = simultaneous ? collection : collection.detached();
    Tensor student_soft = softmax_rows(student_logits, t_kld);
    // Probability-space collections are annealed through pseudo logits so the
    // same temperature mechanics apply to every method.
    Tensor col_soft = method == CollectionMethod::LogitMax
                          ? softmax_rows(col, t_kld)
                          : softmax_rows(log_eps(col), t_kld);
    switch (direction) {
        case KLDirection::Reverse: return kld(student_soft, col_soft);
        case KLDirection::Forward: return kld(col_soft, student_soft);
        case KLDirection::Bidirectional:
            return scale(add(kld(student_soft, col_soft), kld(col_soft, student_soft)), 0.5);
    }
    throw std::invalid_argument("collection_loss: unknown direction");
}

Tensor student_loss(const Tensor& hard_labels, const Tensor& teacher_logits,
                    const std::vector<Tensor>& all_student_logits, std::size_t k,
                    const LossWeights& weights, CollectionMethod method, KLDirection direction,
                    bool simultaneous, StudentLossTerms* terms) {
    if (k >= all_student_logits.size()) {
        throw std::invalid_argument("student_loss: student index " + std::to_string(k) +
                                    " out of range for " +
                                    std::to_string(all_student_logits.size()) + " students");
    }
    if (weights.beta_ce < 0.0 || weights.beta_kd < 0.0 || weights.beta_col < 0.0) {
        throw std::invalid_argument("student_loss: loss weights must be >= 0");
    }
    if (weights.beta_col > 0.0 && all_student_logits.size() < 2) {
        throw std::invalid_argument(
            "student_loss: the collection term needs at least 2 students");
    }
    const Tensor& own_logits = all_student_logits[k];
    Tensor loss;
    auto add_term = [&loss](Tensor term, double weight) {
        Tensor weighted = scale(term, weight);
        loss = loss.defined() ? add(loss, weighted) : weighted;
    };
    if (weights.beta_ce > 0.0) {
        Tensor ce = cross_entropy_soft(hard_labels, own_logits, 1.0);
        if (terms) terms->ce = ce;
        add_term(ce, weights.beta_ce);
    }
    if (weights.beta_kd > 0.0) {
        if (!teacher_logits.defined()) {
            throw std::invalid_argument("student_loss: beta_kd > 0 needs teacher logits");
        }
        Tensor kd = kd_loss(teacher_logits, own_logits, weights.t_kd);
        if (terms) terms->kd = kd;
        add_term(kd, weights.beta_kd);
    }
    if (weights.beta_col > 0.0) {
        Tensor collection = collect(method, all_student_logits, k);
        Tensor col = collection_loss(own_logits, collection, method, weights.t_kld, direction,
                                     simultaneous);
        if (terms) terms->col = col;
        add_term(col, weights.beta_col);
    }
    if (!loss.defined()) return Tensor::scalar(0.0);
    return loss;
}

Tensor total_loss(const std::vector<Tensor>& per_student_losses) {
    if (per_student_losses.empty()) {
        throw std::invalid_argument("total_loss: no per-student losses given");
    }
    Tensor acc = per_student_losses.front();
    for (std::size_t i = 1; i < per_student_losses.size(); ++i) {
        acc = add(acc, per_student_losses[i]);
    }
    return acc;
}

}  // namespace dckd

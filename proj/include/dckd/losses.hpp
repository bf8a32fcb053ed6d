#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dckd/autodiff.hpp"

namespace dckd {

// How a student collection is condensed from the peers' outputs.
enum class CollectionMethod { LogitMax, ProbMax, Average };

// Direction of the collection divergence. Reverse measures the student
// against the collection, forward the collection against the student.
enum class KLDirection { Forward, Reverse, Bidirectional };

const char* to_string(CollectionMethod method);
const char* to_string(KLDirection direction);
CollectionMethod parse_collection_method(const std::string& text);
KLDirection parse_kl_direction(const std::string& text);

struct LossWeights {
    double beta_ce = 1.0;
    double beta_kd = 1.0;
    double beta_col = 0.5;
    double t_kd = 4.0;
    double t_kld = 2.0;
};

// Per-student terms of the composite objective, exposed for run records.
struct StudentLossTerms {
    Tensor ce;
    Tensor kd;
    Tensor col;
};

// Mean over the batch of -sum_c target * log_softmax(pred / temperature).
// target rows must be distributions; gradient flows into pred_logits (and
// into target only when it is a live graph node).
Tensor cross_entropy_soft(const Tensor& target, const Tensor& pred_logits, double temperature);

// Mean row entropy -sum_c p log p, with the 1e-12 offset inside the log.
Tensor entropy(const Tensor& p);

// Mean row KL divergence sum_c u * (log u - log v), batch-averaged, same
// epsilon handling as entropy so kld(u, v) == ce_against(v) - entropy(u).
Tensor kld(const Tensor& u, const Tensor& v);

// Distillation term: cross entropy of the student's softened prediction
// against the softened teacher distribution. teacher_logits must be detached.
Tensor kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, double t_kd);

// Condenses the peer logits (optionally excluding one member) into a single
// collection. LogitMax stays in logit space; ProbMax and Average return
// probability rows.
Tensor collect(CollectionMethod method, const std::vector<Tensor>& logit_set,
               std::optional<std::size_t> exclude_index = std::nullopt);

// Divergence between the annealed student prediction and the annealed
// collection. Probability-space collections are annealed through pseudo
// logits log(p + 1e-12). With simultaneous == false the collection is
// detached before the divergence, so no gradient reaches the peers.
Tensor collection_loss(const Tensor& student_logits, const Tensor& collection,
                       CollectionMethod method, double t_kld, KLDirection direction,
                       bool simultaneous);

// Composite per-student objective
//   beta_ce * ce + beta_kd * kd + beta_col * col
// over the shared batch. Terms with zero weight are skipped entirely, so an
// undefined teacher tensor is fine when beta_kd == 0.
Tensor student_loss(const Tensor& hard_labels, const Tensor& teacher_logits,
                    const std::vector<Tensor>& all_student_logits, std::size_t k,
                    const LossWeights& weights, CollectionMethod method, KLDirection direction,
                    bool simultaneous, StudentLossTerms* terms = nullptr);

// Sum of the per-student losses; the single backward root.
Tensor total_loss(const std::vector<Tensor>& per_student_losses);

}  // namespace dckd

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dckd/data.hpp"
#include "dckd/losses.hpp"
#include "dckd/model.hpp"

namespace dckd {

struct DistillConfig {
    LossWeights weights;
    CollectionMethod method = CollectionMethod::LogitMax;
    KLDirection direction = KLDirection::Reverse;
    bool simultaneous = true;
    int num_students = 3;
    int epochs = 90;
    int batch_size = 128;
    double lr0 = 0.05;
    double lr_min = 0.0;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int t0 = 30;
    int tmult = 2;
    std::int64_t seed = 7;
};

// Cosine annealing with warm restarts over whole epochs. The first epoch of
// every cycle returns lr0 exactly; epoch 15 of a 30-epoch cycle returns the
// midpoint (lr0 + lr_min) / 2.
double cosine_warm_restart_lr(int epoch, double lr0, double lr_min, int t0, int tmult);

// Epochs at which a new cycle starts, ascending, up to and including
// horizon. t0 = 30, tmult = 2 gives 30, 90, 210, 450, 930, ...
std::vector<int> cycle_boundaries(int t0, int tmult, int horizon);

// One epoch of one student in the run record. Loss terms are batch-size
// weighted means over the epoch; skipped terms read zero.
struct StudentEpochStats {
    double loss_ce = 0.0;
    double loss_kd = 0.0;
    double loss_col = 0.0;
    double val_top1 = 0.0;
    double val_top5 = 0.0;
};

struct EpochRow {
    int epoch = 0;
    double lr = 0.0;
    std::vector<StudentEpochStats> students;
    double mean_corr = 0.0;
};

// Per-epoch training log. to_csv prints
//   epoch,lr,s1_loss_ce,...,s1_val_top5,s2_...,mean_corr
// with %.17g values so identical runs serialize identically.
struct RunRecord {
    int num_students = 0;
    std::vector<EpochRow> rows;
    std::string to_csv() const;
};

// Produces detached teacher logits for a batch; an empty function means no
// teacher term.
using TeacherFn = std::function<Matrix(const Matrix& features)>;

struct GroupResult {
    // Final-epoch students in training order.
    std::vector<Model> students;
    std::vector<double> final_val_top1;
    std::vector<double> final_val_top5;
    // Indices into students sorted by final validation top-1, descending,
    // ties keeping training order.
    std::vector<std::size_t> ranking;
    // Best-validation clone per student, with the earliest epoch on ties.
    std::vector<Model> best_students;
    std::vector<double> best_val_top1;
    std::vector<int> best_epoch;
    RunRecord record;
};

// Core loop: trains the given students jointly on splits.train with one
// backward pass and one optimizer step per batch over the union of their
// parameters, evaluating on splits.val every epoch. Students must already
// be built and share the batch stream.
GroupResult train_group(const Splits& splits, std::vector<Model> students,
                        const TeacherFn& teacher, const DistillConfig& cfg);

// Single network trained with the hard-label term only; the returned best
// model is the highest validation top-1 clone.
struct TeacherResult {
    Model best;
    double best_val_top1 = 0.0;
    int best_epoch = 0;
    Model final;
    RunRecord record;
};
TeacherResult train_teacher(const Splits& splits, const std::vector<int>& teacher_sizes,
                            const DistillConfig& cfg);

// Students seeded seed, seed + 1, ... distilled from a frozen teacher.
GroupResult train_dckd(const Splits& splits, const Model& teacher,
                       const std::vector<int>& student_sizes, const DistillConfig& cfg);

// Mean softmax (temperature 1) of the members' outputs.
Matrix ensemble_prob(const std::vector<Model>& members, const Matrix& features);

// log(p + 1e-12): logits that reproduce p under softmax, used to feed
// probability ensembles through logit-space losses.
Matrix pseudo_logits(const Matrix& probs);

// Distillation with the teacher replaced by a frozen student ensemble acting
// through pseudo logits.
GroupResult train_edckd(const Splits& splits, const std::vector<Model>& ensemble,
                        const std::vector<int>& student_sizes, const DistillConfig& cfg);

// Single student distilled from the frozen ensemble (no collection term).
GroupResult train_ensembled_student(const Splits& splits, const std::vector<Model>& ensemble,
                                    const std::vector<int>& student_sizes, DistillConfig cfg);

}  // namespace dckd

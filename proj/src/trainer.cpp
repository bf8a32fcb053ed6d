#include "dckd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dckd/errors.hpp"
#include "dckd/metrics.hpp"

namespace dckd {

namespace {

constexpr double kCorrTemperature = 4.0;
constexpr double kCorrThreshold = 0.1;

void validate_schedule(double lr0, double lr_min, int t0, int tmult) {
    if (!(lr0 >= 0.0)) throw std::invalid_argument("lr0 must be >= 0");
    if (!(lr_min >= 0.0)) throw std::invalid_argument("lr_min must be >= 0");
    if (lr_min > lr0) throw std::invalid_argument("lr_min must not exceed lr0");
    if (t0 < 1) throw std::invalid_argument("t0 must be >= 1");
    if (tmult < 1) throw std::invalid_argument("tmult must be >= 1");
}

void validate_config(const DistillConfig& cfg) {
    validate_schedule(cfg.lr0, cfg.lr_min, cfg.t0, cfg.tmult);
    if (cfg.num_students < 1) throw std::invalid_argument("num_students must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

double term_mean(double weighted_sum, std::size_t samples) {
    return weighted_sum / static_cast<double>(samples);
}

double mean_corr_from_logits(const Matrix& logits) {
    const Matrix probs = softmax_rows(logits, kCorrTemperature);
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        int count = 0;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
            if (probs(r, c) > kCorrThreshold) ++count;
        }
        total += count;
    }
    return total / static_cast<double>(probs.rows());
}

void append_g17(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

TeacherFn ensemble_teacher(const std::vector<Model>& ensemble) {
    return [&ensemble](const Matrix& features) {
        return pseudo_logits(ensemble_prob(ensemble, features));
    };
}

void validate_teacher_dims(const Splits& splits, int input_dim, int output_dim,
                           const char* who) {
    if (input_dim != splits.train.dim()) {
        throw ShapeError(std::string(who) + " expects " + std::to_string(input_dim) +
                         " features but the data has " + std::to_string(splits.train.dim()));
    }
    if (output_dim != splits.train.num_classes) {
        throw ShapeError(std::string(who) + " emits " + std::to_string(output_dim) +
                         " classes but the data has " +
                         std::to_string(splits.train.num_classes));
    }
}

}  // namespace

double cosine_warm_restart_lr(int epoch, double lr0, double lr_min, int t0, int tmult) {
    if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
    validate_schedule(lr0, lr_min, t0, tmult);
    long long cycle_start = 0;
    long long cycle_len = t0;
    while (epoch >= cycle_start + cycle_len) {
        cycle_start += cycle_len;
        cycle_len *= tmult;
    }
    const long long t_cur = epoch - cycle_start;
    if (t_cur == 0) return lr0;
    const double phase = M_PI * static_cast<double>(t_cur) / static_cast<double>(cycle_len);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

std::vector<int> cycle_boundaries(int t0, int tmult, int horizon) {
    if (t0 < 1) throw std::invalid_argument("t0 must be >= 1");
    if (tmult < 1) throw std::invalid_argument("tmult must be >= 1");
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    std::vector<int> out;
    long long boundary = t0;
    long long cycle_len = t0;
    while (boundary <= horizon) {
        out.push_back(static_cast<int>(boundary));
        cycle_len *= tmult;
        boundary += cycle_len;
    }
    return out;
}

std::string RunRecord::to_csv() const {
    std::string out = "epoch,lr";
    for (int k = 1; k <= num_students; ++k) {
        const std::string p = ",s" + std::to_string(k) + "_";
        out += p + "loss_ce" + p + "loss_kd" + p + "loss_col" + p + "val_top1" + p + "val_top5";
    }
    out += ",mean_corr\n";
    for (const EpochRow& row : rows) {
        out += std::to_string(row.epoch);
        out += ',';
        append_g17(out, row.lr);
        for (const StudentEpochStats& s : row.students) {
            for (double v : {s.loss_ce, s.loss_kd, s.loss_col, s.val_top1, s.val_top5}) {
                out += ',';
                append_g17(out, v);
            }
        }
        out += ',';
        append_g17(out, row.mean_corr);
        out += '\n';
    }
    return out;
}

GroupResult train_group(const Splits& splits, std::vector<Model> students,
                        const TeacherFn& teacher, const DistillConfig& cfg) {
    validate_config(cfg);
    if (students.size() != static_cast<std::size_t>(cfg.num_students)) {
        throw std::invalid_argument("train_group: got " + std::to_string(students.size()) +
                                    " students for num_students = " +
                                    std::to_string(cfg.num_students));
    }
    if (splits.train.size() == 0 || splits.val.size() == 0) {
        throw std::invalid_argument("train_group: empty split");
    }
    const int classes = splits.train.num_classes;
    for (const Model& s : students) {
        validate_teacher_dims(splits, s.input_dim(), s.output_dim(), "student");
        if (&s != &students.front() && s.layer_sizes() != students.front().layer_sizes()) {
            throw std::invalid_argument("train_group: students must share a topology");
        }
    }
    if (cfg.weights.beta_kd > 0.0 && !teacher) {
        throw std::invalid_argument("train_group: beta_kd > 0 needs a teacher");
    }

    const std::size_t n = students.size();
    std::vector<Tensor> params;
    for (Model& s : students) {
        for (const Tensor& p : s.parameters()) params.push_back(p);
    }
    SgdOptimizer optimizer(cfg.lr0, cfg.momentum, cfg.weight_decay);

    GroupResult out;
    out.record.num_students = static_cast<int>(n);
    out.best_val_top1.assign(n, -1.0);
    out.best_epoch.assign(n, -1);
    out.best_students.resize(n);

    const int top5_k = std::min(5, classes);
    const std::uint64_t epoch_seed = static_cast<std::uint64_t>(cfg.seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_warm_restart_lr(epoch, cfg.lr0, cfg.lr_min, cfg.t0, cfg.tmult);
        optimizer.set_lr(lr);

        std::vector<StudentEpochStats> stats(n);
        for (const Batch& batch : batches(splits.train, cfg.batch_size, epoch_seed,
                                          static_cast<std::uint64_t>(epoch))) {
            const Tensor features = Tensor::leaf(batch.features);
            const Tensor hard = Tensor::leaf(one_hot(batch.labels, classes));
            Tensor teacher_logits;
            if (teacher) teacher_logits = Tensor::leaf(teacher(batch.features));

            std::vector<Tensor> logits;
            logits.reserve(n);
            for (const Model& s : students) logits.push_back(s.forward(features));

            std::vector<Tensor> losses;
            losses.reserve(n);
            const double weight = static_cast<double>(batch.labels.size());
            for (std::size_t k = 0; k < n; ++k) {
                StudentLossTerms terms;
                losses.push_back(student_loss(hard, teacher_logits, logits, k, cfg.weights,
                                              cfg.method, cfg.direction, cfg.simultaneous,
                                              &terms));
                if (terms.ce.defined()) stats[k].loss_ce += weight * terms.ce.item();
                if (terms.kd.defined()) stats[k].loss_kd += weight * terms.kd.item();
                if (terms.col.defined()) stats[k].loss_col += weight * terms.col.item();
            }

            zero_grads(params);
            backward(total_loss(losses));
            optimizer.step(params);
        }

        EpochRow row;
        row.epoch = epoch;
        row.lr = lr;
        double corr_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const Matrix val_logits = students[k].forward_values(splits.val.features);
            stats[k].loss_ce = term_mean(stats[k].loss_ce, splits.train.size());
            stats[k].loss_kd = term_mean(stats[k].loss_kd, splits.train.size());
            stats[k].loss_col = term_mean(stats[k].loss_col, splits.train.size());
            stats[k].val_top1 = topk_accuracy(val_logits, splits.val.labels, 1);
            stats[k].val_top5 = topk_accuracy(val_logits, splits.val.labels, top5_k);
            corr_sum += mean_corr_from_logits(val_logits);
            if (stats[k].val_top1 > out.best_val_top1[k]) {
                out.best_val_top1[k] = stats[k].val_top1;
                out.best_epoch[k] = epoch;
                out.best_students[k] = students[k].clone(false);
            }
        }
        row.students = std::move(stats);
        row.mean_corr = corr_sum / static_cast<double>(n);
        out.record.rows.push_back(std::move(row));
    }

    const std::vector<StudentEpochStats>& last = out.record.rows.back().students;
    for (std::size_t k = 0; k < n; ++k) {
        out.final_val_top1.push_back(last[k].val_top1);
        out.final_val_top5.push_back(last[k].val_top5);
    }
    out.ranking.resize(n);
    std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
    std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](std::size_t a, std::size_t b) {
        return out.final_val_top1[a] > out.final_val_top1[b];
    });
    out.students = std::move(students);
    return out;
}

TeacherResult train_teacher(const Splits& splits, const std::vector<int>& teacher_sizes,
                            const DistillConfig& cfg) {
    DistillConfig solo = cfg;
    solo.num_students = 1;
    solo.weights.beta_kd = 0.0;
    solo.weights.beta_col = 0.0;
    std::vector<Model> nets;
    nets.push_back(Model::build_mlp(teacher_sizes, cfg.seed));
    GroupResult group = train_group(splits, std::move(nets), TeacherFn{}, solo);

    TeacherResult out;
    out.best = std::move(group.best_students[0]);
    out.best_val_top1 = group.best_val_top1[0];
    out.best_epoch = group.best_epoch[0];
    out.final = std::move(group.students[0]);
    out.record = std::move(group.record);
    return out;
}

GroupResult train_dckd(const Splits& splits, const Model& teacher,
                       const std::vector<int>& student_sizes, const DistillConfig& cfg) {
    validate_config(cfg);
    validate_teacher_dims(splits, teacher.input_dim(), teacher.output_dim(), "teacher");
    std::vector<Model> students;
    for (int k = 0; k < cfg.num_students; ++k) {
        students.push_back(Model::build_mlp(student_sizes, cfg.seed + k));
    }
    TeacherFn fn = [&teacher](const Matrix& features) { return teacher.forward_values(features); };
    return train_group(splits, std::move(students), fn, cfg);
}

Matrix ensemble_prob(const std::vector<Model>& members, const Matrix& features) {
    if (members.empty()) throw std::invalid_argument("ensemble_prob: no members");
    Matrix mean = softmax_rows(members[0].forward_values(features), 1.0);
    for (std::size_t k = 1; k < members.size(); ++k) {
        mean += softmax_rows(members[k].forward_values(features), 1.0);
    }
    const double scale = 1.0 / static_cast<double>(members.size());
    for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] *= scale;
    return mean;
}

Matrix pseudo_logits(const Matrix& probs) {
    Matrix out = probs;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i] + 1e-12);
    return out;
}

GroupResult train_edckd(const Splits& splits, const std::vector<Model>& ensemble,
                        const std::vector<int>& student_sizes, const DistillConfig& cfg) {
    validate_config(cfg);
    if (ensemble.empty()) throw std::invalid_argument("train_edckd: empty ensemble");
    for (const Model& m : ensemble) {
        validate_teacher_dims(splits, m.input_dim(), m.output_dim(), "ensemble member");
    }
    std::vector<Model> students;
    for (int k = 0; k < cfg.num_students; ++k) {
        students.push_back(Model::build_mlp(student_sizes, cfg.seed + k));
    }
    return train_group(splits, std::move(students), ensemble_teacher(ensemble), cfg);
}

GroupResult train_ensembled_student(const Splits& splits, const std::vector<Model>& ensemble,
                                    const std::vector<int>& student_sizes, DistillConfig cfg) {
    cfg.num_students = 1;
    cfg.weights.beta_col = 0.0;
    return train_edckd(splits, ensemble, student_sizes, cfg);
}

}  // namespace dckd

#include "dckd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dckd/bytes.hpp"
#include "dckd/errors.hpp"
#include "dckd/losses.hpp"
#include "dckd/metrics.hpp"
#include "dckd/model.hpp"
#include "dckd/rng.hpp"
#include "dckd/trainer.hpp"

namespace dckd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kGradCheckStream = 4;

// Arms with on-disk run directories, in scan order for eval and metrics.
const char* const kScanArms[] = {"teacher",  "baseline-ce", "kd-only",
                                 "dckd",     "edckd",       "ensembled"};

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string p4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StateError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw StateError("failed while writing " + path.string());
}

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StateError("cannot open " + path.string() + " for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    return fnv1a64(bytes.data(), bytes.size());
}

// Written last, so it can list the hash of every other artifact in the run
// directory.
void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& arm,
                    std::int64_t seed) {
    std::vector<std::string> artifacts;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "manifest.txt") continue;
        artifacts.push_back(fs::relative(entry.path(), dir).generic_string());
    }
    std::sort(artifacts.begin(), artifacts.end());

    std::string text;
    text += "arm=" + arm + "\n";
    text += "seed=" + std::to_string(seed) + "\n";
    text += "config_hash=" + hex16(cfg.hash()) + "\n";
    text += "--- config ---\n";
    text += cfg.echo();
    text += "--- artifacts ---\n";
    for (const std::string& rel : artifacts) {
        text += rel + " fnv1a=" + hex16(fnv1a64_file(dir / rel)) + "\n";
    }
    write_text_file(dir / "manifest.txt", text);
}

DistillConfig arm_config(const ExperimentConfig& cfg, const std::string& arm,
                         std::int64_t seed) {
    DistillConfig d = cfg.distill;
    d.seed = seed;
    if (arm == "baseline-ce") {
        d.weights.beta_kd = 0.0;
        d.weights.beta_col = 0.0;
    } else if (arm == "kd-only") {
        d.weights.beta_col = 0.0;
    }
    return d;
}

fs::path teacher_checkpoint_path(const ExperimentConfig& cfg, std::int64_t seed) {
    return fs::path(run_dir(cfg, "teacher", seed)) / "checkpoints" / "teacher.ckpt";
}

Model load_teacher(const ExperimentConfig& cfg, std::int64_t seed) {
    const fs::path path = teacher_checkpoint_path(cfg, seed);
    if (!fs::exists(path)) {
        throw DependencyError("missing teacher checkpoint " + path.string() +
                              "; run train-teacher first");
    }
    return load_checkpoint(path.string(), cfg.teacher_sizes);
}

std::vector<Model> load_dckd_students(const ExperimentConfig& cfg, std::int64_t seed) {
    const fs::path base = fs::path(run_dir(cfg, "dckd", seed)) / "checkpoints";
    std::vector<Model> members;
    for (int k = 1; k <= cfg.distill.num_students; ++k) {
        const fs::path path = base / ("net" + std::to_string(k) + ".ckpt");
        if (!fs::exists(path)) {
            throw DependencyError("missing student checkpoint " + path.string() +
                                  "; run train-dckd first");
        }
        members.push_back(load_checkpoint(path.string(), cfg.student_sizes));
    }
    return members;
}

// record.csv, summary.json, ranked net<k>.ckpt checkpoints and the manifest
// for one trained student group.
void write_group_run(const ExperimentConfig& cfg, const std::string& arm, std::int64_t seed,
                     const GroupResult& result, int epochs) {
    const fs::path dir = run_dir(cfg, arm, seed);
    fs::create_directories(dir / "checkpoints");
    write_text_file(dir / "record.csv", result.record.to_csv());

    json nets = json::array();
    for (std::size_t i = 0; i < result.ranking.size(); ++i) {
        const std::size_t idx = result.ranking[i];
        CheckpointMeta meta;
        meta.seed = result.students[idx].seed();
        meta.epoch = epochs - 1;
        meta.config_hash = cfg.hash();
        const std::string net = "net" + std::to_string(i + 1);
        save_checkpoint(result.students[idx], (dir / "checkpoints" / (net + ".ckpt")).string(),
                        meta);
        nets.push_back({{"net", net},
                        {"training_index", idx},
                        {"final_val_top1", result.final_val_top1[idx]},
                        {"final_val_top5", result.final_val_top5[idx]},
                        {"best_val_top1", result.best_val_top1[idx]},
                        {"best_epoch", result.best_epoch[idx]}});
    }
    const json summary = {{"arm", arm},
                          {"seed", seed},
                          {"epochs", epochs},
                          {"config_hash", hex16(cfg.hash())},
                          {"mean_final_val_top1", mean(result.final_val_top1)},
                          {"nets", nets}};
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    write_manifest(dir, cfg, arm, seed);
}

int cmd_train_teacher(const ExperimentConfig& cfg, std::ostream& out) {
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        DistillConfig d = cfg.distill;
        d.seed = seed;
        const TeacherResult result = train_teacher(splits, cfg.teacher_sizes, d);

        const fs::path dir = run_dir(cfg, "teacher", seed);
        fs::create_directories(dir / "checkpoints");
        write_text_file(dir / "record.csv", result.record.to_csv());
        CheckpointMeta meta;
        meta.seed = seed;
        meta.epoch = result.best_epoch;
        meta.config_hash = cfg.hash();
        save_checkpoint(result.best, (dir / "checkpoints" / "teacher.ckpt").string(), meta);
        const json summary = {
            {"arm", "teacher"},
            {"seed", seed},
            {"epochs", d.epochs},
            {"config_hash", hex16(cfg.hash())},
            {"best_epoch", result.best_epoch},
            {"best_val_top1", result.best_val_top1},
            {"final_val_top1", result.record.rows.back().students[0].val_top1}};
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");
        write_manifest(dir, cfg, "teacher", seed);

        out << "teacher seed=" << seed << " best_epoch=" << result.best_epoch
            << " best_val_top1=" << p4(result.best_val_top1) << "\n";
    }
    return 0;
}

int cmd_train_dckd(const ExperimentConfig& cfg, std::ostream& out) {
    std::vector<std::string> arms;
    for (const std::string& arm : cfg.arms) {
        if (arm == "baseline-ce" || arm == "kd-only" || arm == "dckd") arms.push_back(arm);
    }
    if (arms.empty()) {
        throw ConfigError(
            "arms lists no group-training arm (expected baseline-ce, kd-only or dckd)");
    }
    const bool needs_teacher =
        std::any_of(arms.begin(), arms.end(), [](const std::string& a) { return a != "baseline-ce"; });

    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        std::optional<Model> teacher;
        if (needs_teacher) teacher = load_teacher(cfg, seed);
        for (const std::string& arm : arms) {
            const DistillConfig d = arm_config(cfg, arm, seed);
            GroupResult result;
            if (arm == "baseline-ce") {
                std::vector<Model> students;
                for (int k = 0; k < d.num_students; ++k) {
                    students.push_back(Model::build_mlp(cfg.student_sizes, seed + k));
                }
                result = train_group(splits, std::move(students), TeacherFn{}, d);
            } else {
                result = train_dckd(splits, *teacher, cfg.student_sizes, d);
            }
            write_group_run(cfg, arm, seed, result, d.epochs);
            out << arm << " seed=" << seed
                << " mean_final_top1=" << p4(mean(result.final_val_top1))
                << " net1_top1=" << p4(result.final_val_top1[result.ranking[0]]) << "\n";
        }
    }
    return 0;
}

int cmd_train_edckd(const ExperimentConfig& cfg, std::ostream& out) {
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        const std::vector<Model> members = load_dckd_students(cfg, seed);
        DistillConfig d = cfg.distill;
        d.seed = seed;
        const GroupResult result = train_edckd(splits, members, cfg.student_sizes, d);
        write_group_run(cfg, "edckd", seed, result, d.epochs);
        out << "edckd seed=" << seed << " mean_final_top1=" << p4(mean(result.final_val_top1))
            << " net1_top1=" << p4(result.final_val_top1[result.ranking[0]]) << "\n";
    }
    return 0;
}

int cmd_train_ensembled(const ExperimentConfig& cfg, std::ostream& out) {
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        const std::vector<Model> members = load_dckd_students(cfg, seed);
        DistillConfig d = cfg.distill;
        d.seed = seed;
        const GroupResult result = train_ensembled_student(splits, members, cfg.student_sizes, d);
        write_group_run(cfg, "ensembled", seed, result, d.epochs);
        out << "ensembled seed=" << seed << " final_top1=" << p4(result.final_val_top1[0])
            << "\n";
    }
    return 0;
}

// Checkpoint files of one run directory, sorted by name; empty when the run
// does not exist.
std::vector<fs::path> checkpoint_files(const ExperimentConfig& cfg, const std::string& arm,
                                       std::int64_t seed) {
    const fs::path dir = fs::path(run_dir(cfg, arm, seed)) / "checkpoints";
    std::vector<fs::path> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ckpt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& out) {
    std::string csv = "arm,seed,checkpoint,val_top1,val_top5\n";
    bool any = false;
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        const int top5_k = std::min(5, splits.val.num_classes);
        for (const char* arm : kScanArms) {
            for (const fs::path& path : checkpoint_files(cfg, arm, seed)) {
                const Model model = load_checkpoint(path.string());
                const Matrix logits = model.forward_values(splits.val.features);
                const double top1 = topk_accuracy(logits, splits.val.labels, 1);
                const double top5 = topk_accuracy(logits, splits.val.labels, top5_k);
                const std::string name = path.stem().string();
                csv += std::string(arm) + "," + std::to_string(seed) + "," + name + "," +
                       g17(top1) + "," + g17(top5) + "\n";
                out << "eval " << arm << " seed=" << seed << " " << name
                    << " top1=" << p4(top1) << " top5=" << p4(top5) << "\n";
                any = true;
            }
        }
    }
    if (!any) {
        throw DependencyError("no checkpoints found under " + cfg.out_dir + " for run name " +
                              cfg.name + "; train something first");
    }
    write_text_file(fs::path(cfg.out_dir) / (cfg.name + "-eval.csv"), csv);
    return 0;
}

int cmd_metrics(const ExperimentConfig& cfg, std::ostream& out) {
    std::string corr_csv = "arm,seed,checkpoint,mean_corr\n";
    std::string accum_csv;
    bool any = false;
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        const int num_classes = splits.val.num_classes;
        if (accum_csv.empty()) {
            accum_csv = "arm,seed,checkpoint,class";
            for (int c = 0; c < num_classes; ++c) accum_csv += ",p" + std::to_string(c);
            accum_csv += "\n";
        }
        std::vector<bool> present(num_classes, false);
        for (const int label : splits.val.labels) present[label] = true;

        for (const char* arm : kScanArms) {
            for (const fs::path& path : checkpoint_files(cfg, arm, seed)) {
                const Model model = load_checkpoint(path.string());
                const double corr = mean_correlation_number(model, splits.val);
                const std::string name = path.stem().string();
                corr_csv += std::string(arm) + "," + std::to_string(seed) + "," + name + "," +
                            g17(corr) + "\n";
                out << "metrics " << arm << " seed=" << seed << " " << name
                    << " mean_corr=" << p4(corr) << "\n";
                for (int c = 0; c < num_classes; ++c) {
                    if (!present[c]) continue;
                    const Matrix profile = class_accumulation(model, splits.val, c);
                    accum_csv += std::string(arm) + "," + std::to_string(seed) + "," + name +
                                 "," + std::to_string(c);
                    for (int j = 0; j < num_classes; ++j) {
                        accum_csv += "," + g17(profile(0, static_cast<std::size_t>(j)));
                    }
                    accum_csv += "\n";
                }
                any = true;
            }
        }
    }
    if (!any) {
        throw DependencyError("no checkpoints found under " + cfg.out_dir + " for run name " +
                              cfg.name + "; train something first");
    }
    write_text_file(fs::path(cfg.out_dir) / (cfg.name + "-metrics.csv"), corr_csv);
    write_text_file(fs::path(cfg.out_dir) / (cfg.name + "-accumulation.csv"), accum_csv);
    return 0;
}

int cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& out) {
    constexpr int kCases = 50;
    constexpr double kEps = 1e-5;
    constexpr double kTolerance = 1e-4;
    const auto start = std::chrono::steady_clock::now();
    const GradCheckReport report = run_gradcheck_suite(kCases, cfg.distill.seed, kEps);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[160];
    std::snprintf(line, sizeof(line), "gradcheck cases=%d eps=%g max_rel_err=%.3g (%.2f s)\n",
                  report.cases, kEps, report.max_rel_err, seconds);
    out << line;
    if (report.max_rel_err >= kTolerance) {
        out << "gradcheck FAILED: max relative error exceeds " << g17(kTolerance) << "\n";
        return 1;
    }
    return 0;
}

struct AblateCell {
    KLDirection direction;
    CollectionMethod method;
    int num_students;
    std::int64_t seed;
    std::vector<double> top1;  // ranked
};

int cmd_ablate(const ExperimentConfig& cfg, std::ostream& out) {
    std::string csv = "direction,method,num_students,seed,net,val_top1\n";
    std::vector<AblateCell> cells;
    for (const std::int64_t seed : cfg.seeds) {
        const Splits splits = make_splits(cfg, seed);
        const Model teacher = load_teacher(cfg, seed);
        for (const KLDirection direction : cfg.ablate_directions) {
            for (const CollectionMethod method : cfg.ablate_methods) {
                for (const int n : cfg.ablate_num_students) {
                    DistillConfig d = cfg.distill;
                    d.seed = seed;
                    d.direction = direction;
                    d.method = method;
                    d.num_students = n;
                    const GroupResult result = train_dckd(splits, teacher, cfg.student_sizes, d);
                    AblateCell cell{direction, method, n, seed, {}};
                    for (std::size_t i = 0; i < result.ranking.size(); ++i) {
                        const double top1 = result.final_val_top1[result.ranking[i]];
                        cell.top1.push_back(top1);
                        csv += std::string(to_string(direction)) + "," + to_string(method) +
                               "," + std::to_string(n) + "," + std::to_string(seed) + ",net" +
                               std::to_string(i + 1) + "," + g17(top1) + "\n";
                    }
                    out << "ablate " << to_string(direction) << " " << to_string(method)
                        << " n=" << n << " seed=" << seed << " mean_top1=" << p4(mean(cell.top1))
                        << "\n";
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    write_text_file(fs::path(cfg.out_dir) / (cfg.name + "-ablate.csv"), csv);

    // Mean final top-1 over every net, seed and non-compared axis value with
    // the compared axis fixed.
    const auto side_mean = [&cells](int n, const std::function<bool(const AblateCell&)>& pick) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const AblateCell& cell : cells) {
            if (cell.num_students != n || !pick(cell)) continue;
            for (const double v : cell.top1) {
                sum += v;
                ++count;
            }
        }
        return count == 0 ? std::optional<double>{} : std::optional<double>{sum / count};
    };

    std::string summary = "comparison,num_students,lhs,rhs,lhs_mean_top1,rhs_mean_top1,delta\n";
    std::vector<int> ns = cfg.ablate_num_students;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    for (const int n : ns) {
        const auto reverse = side_mean(n, [](const AblateCell& c) {
            return c.direction == KLDirection::Reverse;
        });
        const auto forward = side_mean(n, [](const AblateCell& c) {
            return c.direction == KLDirection::Forward;
        });
        if (reverse && forward) {
            summary += "reverse_vs_forward," + std::to_string(n) + ",reverse,forward," +
                       g17(*reverse) + "," + g17(*forward) + "," + g17(*reverse - *forward) +
                       "\n";
            out << "ablate summary n=" << n << " reverse=" << p4(*reverse)
                << " forward=" << p4(*forward) << " delta=" << p4(*reverse - *forward) << "\n";
        }
        const auto logit_max = side_mean(n, [](const AblateCell& c) {
            return c.method == CollectionMethod::LogitMax;
        });
        const auto average = side_mean(n, [](const AblateCell& c) {
            return c.method == CollectionMethod::Average;
        });
        if (logit_max && average) {
            summary += "logit_max_vs_average," + std::to_string(n) + ",logit_max,average," +
                       g17(*logit_max) + "," + g17(*average) + "," + g17(*logit_max - *average) +
                       "\n";
            out << "ablate summary n=" << n << " logit_max=" << p4(*logit_max)
                << " average=" << p4(*average) << " delta=" << p4(*logit_max - *average) << "\n";
        }
    }
    write_text_file(fs::path(cfg.out_dir) / (cfg.name + "-ablate-summary.csv"), summary);
    return 0;
}

}  // namespace

Splits make_splits(const ExperimentConfig& cfg, std::int64_t seed) {
    if (cfg.dataset == "blobs") {
        const Dataset all =
            gen_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_spread,
                      seed);
        return split_dataset(all, cfg.val_fraction, static_cast<std::uint64_t>(seed));
    }
    std::optional<std::size_t> limit;
    if (cfg.idx_limit > 0) limit = static_cast<std::size_t>(cfg.idx_limit);
    if (!cfg.idx_val_images.empty()) {
        Splits splits;
        splits.train = load_idx(cfg.idx_images, cfg.idx_labels, limit);
        splits.val = load_idx(cfg.idx_val_images, cfg.idx_val_labels, limit);
        if (splits.val.dim() != splits.train.dim()) {
            throw FormatError("validation images are " + std::to_string(splits.val.dim()) +
                              "-dimensional but training images are " +
                              std::to_string(splits.train.dim()) + "-dimensional");
        }
        const int classes = std::max(splits.train.num_classes, splits.val.num_classes);
        splits.train.num_classes = classes;
        splits.val.num_classes = classes;
        return splits;
    }
    const Dataset all = load_idx(cfg.idx_images, cfg.idx_labels, limit);
    return split_dataset(all, cfg.val_fraction, static_cast<std::uint64_t>(seed));
}

std::string run_dir(const ExperimentConfig& cfg, const std::string& arm, std::int64_t seed) {
    const std::string name = cfg.name + "-" + arm + "-seed" + std::to_string(seed);
    return (fs::path(cfg.out_dir) / name).string();
}

GradCheckReport run_gradcheck_suite(int cases, std::int64_t seed, double eps) {
    if (cases < 1) throw std::invalid_argument("cases must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");

    const CollectionMethod kMethods[] = {CollectionMethod::LogitMax, CollectionMethod::ProbMax,
                                         CollectionMethod::Average};
    const KLDirection kDirections[] = {KLDirection::Forward, KLDirection::Reverse,
                                       KLDirection::Bidirectional};

    Rng rng(mix_seed(static_cast<std::uint64_t>(seed), kGradCheckStream));
    GradCheckReport report;
    report.cases = cases;
    for (int c = 0; c < cases; ++c) {
        const int num_classes = 3 + static_cast<int>(rng.below(8));
        const int batch = 1 + static_cast<int>(rng.below(8));
        const int num_students = 2 + static_cast<int>(rng.below(2));
        const int hidden = 4 + static_cast<int>(rng.below(9));
        const int dim = 2 + static_cast<int>(rng.below(4));
        const auto case_seed = static_cast<std::int64_t>(rng.next_u64() >> 1);

        LossWeights weights;
        weights.beta_ce = rng.uniform(0.5, 1.5);
        weights.beta_kd = rng.uniform(0.5, 1.5);
        weights.beta_col = rng.uniform(0.25, 1.0);
        weights.t_kd = rng.uniform(2.0, 6.0);
        weights.t_kld = rng.uniform(1.0, 3.0);
        const CollectionMethod method = kMethods[rng.below(3)];
        const KLDirection direction = kDirections[rng.below(3)];

        std::vector<Model> students;
        for (int k = 0; k < num_students; ++k) {
            students.push_back(Model::build_mlp({dim, hidden, num_classes}, case_seed + k));
        }
        const Model teacher =
            Model::build_mlp({dim, hidden + 2, num_classes}, case_seed + 100, false);

        Matrix features(static_cast<std::size_t>(batch), static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < features.size(); ++i) features.data()[i] = rng.normal();
        std::vector<int> labels(static_cast<std::size_t>(batch));
        for (int& label : labels) label = static_cast<int>(rng.below(num_classes));

        const Tensor input = Tensor::leaf(features);
        const Tensor hard = Tensor::leaf(one_hot(labels, num_classes));
        const Tensor teacher_logits = Tensor::leaf(teacher.forward_values(features));

        std::vector<Tensor> params;
        for (const Model& s : students) {
            for (const Tensor& p : s.parameters()) params.push_back(p);
        }

        const auto loss_fn = [&]() {
            std::vector<Tensor> logits;
            logits.reserve(students.size());
            for (const Model& s : students) logits.push_back(s.forward(input));
            std::vector<Tensor> losses;
            for (std::size_t k = 0; k < students.size(); ++k) {
                losses.push_back(student_loss(hard, teacher_logits, logits, k, weights, method,
                                              direction, true));
            }
            return total_loss(losses);
        };
        report.max_rel_err = std::max(report.max_rel_err, grad_check(loss_fn, params, eps));
    }
    return report;
}

int run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg,
                   std::ostream& out) {
    if (subcommand == "train-teacher") return cmd_train_teacher(cfg, out);
    if (subcommand == "train-dckd") return cmd_train_dckd(cfg, out);
    if (subcommand == "train-edckd") return cmd_train_edckd(cfg, out);
    if (subcommand == "train-ensembled") return cmd_train_ensembled(cfg, out);
    if (subcommand == "eval") return cmd_eval(cfg, out);
    if (subcommand == "metrics") return cmd_metrics(cfg, out);
    if (subcommand == "gradcheck") return cmd_gradcheck(cfg, out);
    if (subcommand == "ablate") return cmd_ablate(cfg, out);
    throw std::invalid_argument("unknown subcommand: " + subcommand);
}

}  // namespace dckd

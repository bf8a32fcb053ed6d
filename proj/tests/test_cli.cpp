#include "dckd/experiment.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dckd/bytes.hpp"
#include "dckd/config.hpp"
#include "dckd/data.hpp"
#include "dckd/errors.hpp"

namespace dckd {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("dckd_cli_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    EXPECT_TRUE(in.good()) << "cannot open " << path;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Small blobs problem so the full pipeline stays fast.
ExperimentConfig tiny_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.blobs_classes = 4;
    cfg.blobs_per_class = 40;
    cfg.distill.epochs = 4;
    cfg.distill.batch_size = 32;
    cfg.teacher_sizes = {2, 12, 4};
    cfg.student_sizes = {2, 6, 4};
    cfg.seeds = {7};
    cfg.name = "tiny";
    cfg.out_dir = out_dir;
    return cfg;
}

int run(const std::string& subcommand, const ExperimentConfig& cfg) {
    std::ostringstream out;
    return run_subcommand(subcommand, cfg, out);
}

// ---- splits and paths ----

TEST(RunDir, JoinsOutDirNameArmAndSeed) {
    ExperimentConfig cfg;
    cfg.name = "exp";
    cfg.out_dir = "runs";
    EXPECT_EQ(run_dir(cfg, "dckd", 7), std::string("runs/exp-dckd-seed7"));
}

TEST(MakeSplits, BlobsPresetSplitsDeterministically) {
    ExperimentConfig cfg = tiny_config("unused");
    const Splits a = make_splits(cfg, 7);
    const Splits b = make_splits(cfg, 7);
    EXPECT_EQ(a.train.size(), 128u);
    EXPECT_EQ(a.val.size(), 32u);
    EXPECT_EQ(a.train.num_classes, 4);
    EXPECT_TRUE(a.train.features == b.train.features);
    EXPECT_TRUE(a.val.features == b.val.features);

    const Splits c = make_splits(cfg, 8);
    EXPECT_FALSE(a.train.features == c.train.features);
}

TEST(MakeSplits, IdxLoadsASeparateValidationPair) {
    TempDir dir("idx");
    IdxImages train_images;
    train_images.count = 6;
    train_images.rows = 2;
    train_images.cols = 2;
    train_images.pixels.assign(24, 0);
    for (std::size_t i = 0; i < train_images.pixels.size(); ++i) {
        train_images.pixels[i] = static_cast<std::uint8_t>(10 * i);
    }
    IdxImages val_images = train_images;
    val_images.count = 3;
    val_images.pixels.resize(12);
    write_idx_images(train_images, dir.file("train-images.idx"));
    write_idx_labels({0, 1, 2, 0, 1, 2}, dir.file("train-labels.idx"));
    write_idx_images(val_images, dir.file("val-images.idx"));
    write_idx_labels({0, 1, 3}, dir.file("val-labels.idx"));

    ExperimentConfig cfg;
    cfg.dataset = "idx";
    cfg.idx_images = dir.file("train-images.idx");
    cfg.idx_labels = dir.file("train-labels.idx");
    cfg.idx_val_images = dir.file("val-images.idx");
    cfg.idx_val_labels = dir.file("val-labels.idx");

    const Splits splits = make_splits(cfg, 7);
    EXPECT_EQ(splits.train.size(), 6u);
    EXPECT_EQ(splits.val.size(), 3u);
    // The class count covers both files: the validation labels reach 3.
    EXPECT_EQ(splits.train.num_classes, 4);
    EXPECT_EQ(splits.val.num_classes, 4);
}

// ---- full pipeline over a shared workspace ----

class CliPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        workspace_ = new TempDir("pipeline");
        cfg_ = new ExperimentConfig(tiny_config(workspace_->path.string()));
        ASSERT_EQ(run("train-teacher", *cfg_), 0);
        ASSERT_EQ(run("train-dckd", *cfg_), 0);
        ASSERT_EQ(run("train-edckd", *cfg_), 0);
        ASSERT_EQ(run("train-ensembled", *cfg_), 0);
        ASSERT_EQ(run("eval", *cfg_), 0);
        ASSERT_EQ(run("metrics", *cfg_), 0);
        ASSERT_EQ(run("ablate", *cfg_), 0);
    }
    static void TearDownTestSuite() {
        delete cfg_;
        delete workspace_;
        cfg_ = nullptr;
        workspace_ = nullptr;
    }
    static fs::path dir_of(const std::string& arm) { return run_dir(*cfg_, arm, 7); }
    static TempDir* workspace_;
    static ExperimentConfig* cfg_;
};
TempDir* CliPipeline::workspace_ = nullptr;
ExperimentConfig* CliPipeline::cfg_ = nullptr;

TEST_F(CliPipeline, EveryRunDirectoryHasTheDocumentedLayout) {
    for (const std::string arm :
         {"teacher", "baseline-ce", "kd-only", "dckd", "edckd", "ensembled"}) {
        const fs::path dir = dir_of(arm);
        EXPECT_TRUE(fs::exists(dir / "manifest.txt")) << arm;
        EXPECT_TRUE(fs::exists(dir / "record.csv")) << arm;
        EXPECT_TRUE(fs::exists(dir / "summary.json")) << arm;
        EXPECT_TRUE(fs::exists(dir / "checkpoints")) << arm;
    }
    EXPECT_TRUE(fs::exists(dir_of("teacher") / "checkpoints" / "teacher.ckpt"));
    EXPECT_TRUE(fs::exists(dir_of("dckd") / "checkpoints" / "net3.ckpt"));
    EXPECT_TRUE(fs::exists(dir_of("ensembled") / "checkpoints" / "net1.ckpt"));
    EXPECT_FALSE(fs::exists(dir_of("ensembled") / "checkpoints" / "net2.ckpt"));
}

TEST_F(CliPipeline, RecordHasAHeaderAndOneRowPerEpoch) {
    const auto lines = lines_of(read_file(dir_of("dckd") / "record.csv"));
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0].rfind("epoch,lr,s1_loss_ce", 0), 0u);
}

TEST_F(CliPipeline, ManifestHashesMatchTheArtifactsOnDisk) {
    const fs::path dir = dir_of("dckd");
    const auto lines = lines_of(read_file(dir / "manifest.txt"));
    ASSERT_GE(lines.size(), 4u);
    EXPECT_EQ(lines[0], "arm=dckd");
    EXPECT_EQ(lines[1], "seed=7");
    EXPECT_EQ(lines[2].rfind("config_hash=", 0), 0u);

    std::size_t artifacts = 0;
    bool in_artifacts = false;
    for (const std::string& line : lines) {
        if (line == "--- artifacts ---") {
            in_artifacts = true;
            continue;
        }
        if (!in_artifacts || line.empty()) continue;
        const std::size_t sep = line.find(" fnv1a=");
        ASSERT_NE(sep, std::string::npos) << line;
        const std::string rel = line.substr(0, sep);
        const std::string claimed = line.substr(sep + 7);
        const std::string bytes = read_file(dir / rel);
        char actual[17];
        std::snprintf(actual, sizeof(actual), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        EXPECT_EQ(claimed, actual) << rel;
        ++artifacts;
    }
    // net1..net3 checkpoints plus record.csv and summary.json.
    EXPECT_EQ(artifacts, 5u);
}

TEST_F(CliPipeline, EvalAgreesWithTheTrainingRecord) {
    const json summary = json::parse(read_file(dir_of("dckd") / "summary.json"));
    const double summary_top1 = summary["nets"][0]["final_val_top1"];
    const auto training_index = summary["nets"][0]["training_index"].get<std::size_t>();

    double eval_top1 = -1.0;
    for (const std::string& line :
         lines_of(read_file(workspace_->path / "tiny-eval.csv"))) {
        if (line.rfind("dckd,7,net1,", 0) == 0) {
            std::istringstream fields(line.substr(12));
            std::string top1;
            std::getline(fields, top1, ',');
            eval_top1 = std::stod(top1);
        }
    }
    ASSERT_GE(eval_top1, 0.0) << "eval.csv has no dckd net1 row";
    EXPECT_NEAR(eval_top1, summary_top1, 1e-12);

    // The record's final row holds the same accuracy in the student's
    // training-order column.
    const auto record = lines_of(read_file(dir_of("dckd") / "record.csv"));
    std::vector<std::string> fields;
    std::istringstream last(record.back());
    std::string field;
    while (std::getline(last, field, ',')) fields.push_back(field);
    const std::size_t column = 2 + 5 * training_index + 3;
    ASSERT_LT(column, fields.size());
    EXPECT_NEAR(std::stod(fields[column]), summary_top1, 1e-12);
}

TEST_F(CliPipeline, EvalCoversEveryCheckpoint) {
    const auto lines = lines_of(read_file(workspace_->path / "tiny-eval.csv"));
    // teacher + three nets for each of baseline-ce / kd-only / dckd / edckd
    // + the single ensembled student.
    EXPECT_EQ(lines.size(), 1u + 14u);
    EXPECT_EQ(lines[0], "arm,seed,checkpoint,val_top1,val_top5");
}

TEST_F(CliPipeline, MetricsEmitsCorrelationAndAccumulationTables) {
    const auto corr = lines_of(read_file(workspace_->path / "tiny-metrics.csv"));
    EXPECT_EQ(corr.size(), 1u + 14u);
    EXPECT_EQ(corr[0], "arm,seed,checkpoint,mean_corr");
    for (std::size_t i = 1; i < corr.size(); ++i) {
        const double value = std::stod(corr[i].substr(corr[i].rfind(',') + 1));
        EXPECT_GE(value, 0.0);
        EXPECT_LE(value, 4.0);
    }

    const auto accum = lines_of(read_file(workspace_->path / "tiny-accumulation.csv"));
    EXPECT_EQ(accum[0], "arm,seed,checkpoint,class,p0,p1,p2,p3");
    // Four classes in the validation split for each of the 14 checkpoints.
    EXPECT_EQ(accum.size(), 1u + 14u * 4u);
}

TEST_F(CliPipeline, AblateEmitsTheGridAndBothComparisonRows) {
    const auto grid = lines_of(read_file(workspace_->path / "tiny-ablate.csv"));
    EXPECT_EQ(grid[0], "direction,method,num_students,seed,net,val_top1");
    // two directions x two methods x one seed x three nets
    EXPECT_EQ(grid.size(), 1u + 12u);

    const std::string summary = read_file(workspace_->path / "tiny-ablate-summary.csv");
    EXPECT_NE(summary.find("reverse_vs_forward,3,reverse,forward,"), std::string::npos);
    EXPECT_NE(summary.find("logit_max_vs_average,3,logit_max,average,"), std::string::npos);
}

TEST_F(CliPipeline, RepeatRunInAnotherDirectoryIsBitIdentical) {
    TempDir other("repeat");
    ExperimentConfig repeat = *cfg_;
    repeat.out_dir = other.path.string();
    ASSERT_EQ(run("train-teacher", repeat), 0);
    ASSERT_EQ(run("train-dckd", repeat), 0);

    for (const std::string arm : {"teacher", "dckd"}) {
        const fs::path a = dir_of(arm);
        const fs::path b = run_dir(repeat, arm, 7);
        EXPECT_EQ(read_file(a / "record.csv"), read_file(b / "record.csv")) << arm;
        for (const auto& entry : fs::directory_iterator(a / "checkpoints")) {
            const auto name = entry.path().filename();
            EXPECT_EQ(read_file(entry.path()), read_file(b / "checkpoints" / name)) << name;
        }
    }
}

// ---- failure paths ----

TEST(CliErrors, TrainDckdWithoutTeacherNamesTheMissingArtifact) {
    TempDir dir("noteacher");
    const ExperimentConfig cfg = tiny_config(dir.path.string());
    try {
        run("train-dckd", cfg);
        FAIL() << "expected DependencyError";
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find("teacher.ckpt"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("train-teacher"), std::string::npos);
    }
}

TEST(CliErrors, TrainEdckdWithoutStudentsNamesTheMissingArtifact) {
    TempDir dir("nostudents");
    const ExperimentConfig cfg = tiny_config(dir.path.string());
    try {
        run("train-edckd", cfg);
        FAIL() << "expected DependencyError";
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find("net1.ckpt"), std::string::npos);
    }
}

TEST(CliErrors, EvalWithNothingTrainedThrows) {
    TempDir dir("empty");
    const ExperimentConfig cfg = tiny_config(dir.path.string());
    EXPECT_THROW(run("eval", cfg), DependencyError);
    EXPECT_THROW(run("metrics", cfg), DependencyError);
}

TEST(CliErrors, BaselineArmAloneNeedsNoTeacher) {
    TempDir dir("solobaseline");
    ExperimentConfig cfg = tiny_config(dir.path.string());
    cfg.arms = {"baseline-ce"};
    EXPECT_EQ(run("train-dckd", cfg), 0);
    EXPECT_TRUE(fs::exists(fs::path(run_dir(cfg, "baseline-ce", 7)) / "record.csv"));
}

TEST(CliErrors, ArmsWithoutAGroupArmIsAConfigError) {
    TempDir dir("noarms");
    ExperimentConfig cfg = tiny_config(dir.path.string());
    cfg.arms = {"edckd"};
    EXPECT_THROW(run("train-dckd", cfg), ConfigError);
}

TEST(CliErrors, UnknownSubcommandThrows) {
    const ExperimentConfig cfg;
    EXPECT_THROW(run("dance", cfg), std::invalid_argument);
}

// ---- gradcheck ----

TEST(Gradcheck, SubcommandPassesAndPrintsTheError) {
    const ExperimentConfig cfg;
    std::ostringstream out;
    EXPECT_EQ(run_subcommand("gradcheck", cfg, out), 0);
    EXPECT_NE(out.str().find("max_rel_err="), std::string::npos);
}

TEST(Gradcheck, SuiteReportsATinyWorstError) {
    const GradCheckReport report = run_gradcheck_suite(10, 123, 1e-5);
    EXPECT_EQ(report.cases, 10);
    EXPECT_GT(report.max_rel_err, 0.0);
    EXPECT_LT(report.max_rel_err, 1e-4);
}

TEST(Gradcheck, RejectsBadArguments) {
    EXPECT_THROW(run_gradcheck_suite(0, 7, 1e-5), std::invalid_argument);
    EXPECT_THROW(run_gradcheck_suite(10, 7, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace dckd

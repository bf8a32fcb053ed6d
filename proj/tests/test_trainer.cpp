#include "dckd/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dckd/errors.hpp"
#include "dckd/matrix.hpp"
#include "dckd/metrics.hpp"
#include "dckd/rng.hpp"

namespace dckd {
namespace {

// Three well separated clusters so short runs converge. The blob generator
// is unsuitable here because it overlaps class pairs by design.
Splits easy_splits(int per_class = 60, std::int64_t seed = 101) {
    const double cx[3] = {3.0, -3.0, 0.0};
    const double cy[3] = {0.0, 3.0, -3.0};
    Dataset d;
    d.num_classes = 3;
    d.features = Matrix(static_cast<std::size_t>(per_class) * 3, 2);
    Rng rng(static_cast<std::uint64_t>(seed));
    for (int c = 0; c < 3; ++c) {
        for (int s = 0; s < per_class; ++s) {
            const std::size_t r = static_cast<std::size_t>(c) * per_class + s;
            d.features(r, 0) = cx[c] + 0.3 * rng.normal();
            d.features(r, 1) = cy[c] + 0.3 * rng.normal();
            d.labels.push_back(c);
        }
    }
    return split_dataset(d, 0.2, static_cast<std::uint64_t>(seed));
}

DistillConfig quick_config(int epochs = 8) {
    DistillConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.lr0 = 0.05;
    cfg.t0 = 30;
    cfg.seed = 7;
    return cfg;
}

bool same_parameters(const Model& a, const Model& b) {
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!(pa[i].value() == pb[i].value())) return false;
    }
    return true;
}

// ---- learning-rate schedule ----

TEST(CosineWarmRestartLr, CycleStartsReturnBaseRateExactly) {
    for (int epoch : {0, 30, 90, 210, 450, 930}) {
        EXPECT_EQ(cosine_warm_restart_lr(epoch, 0.05, 0.0, 30, 2), 0.05) << "epoch " << epoch;
    }
    EXPECT_EQ(cosine_warm_restart_lr(40, 0.1, 0.0, 40, 3), 0.1);
}

TEST(CosineWarmRestartLr, MidCycleHitsTheMidpoint) {
    EXPECT_NEAR(cosine_warm_restart_lr(15, 0.05, 0.0, 30, 2), 0.025, 1e-12);
    EXPECT_NEAR(cosine_warm_restart_lr(15, 0.05, 0.01, 30, 2), 0.03, 1e-12);
    // Second cycle spans [30, 90), so its midpoint is epoch 60.
    EXPECT_NEAR(cosine_warm_restart_lr(60, 0.05, 0.0, 30, 2), 0.025, 1e-12);
}

TEST(CosineWarmRestartLr, DecreasesWithinACycleAndStaysInRange) {
    double prev = cosine_warm_restart_lr(0, 0.05, 0.001, 30, 2);
    for (int epoch = 1; epoch < 30; ++epoch) {
        const double lr = cosine_warm_restart_lr(epoch, 0.05, 0.001, 30, 2);
        EXPECT_LT(lr, prev);
        EXPECT_GE(lr, 0.001);
        EXPECT_LE(lr, 0.05);
        prev = lr;
    }
    // End of the first cycle approaches lr_min.
    EXPECT_NEAR(prev, 0.001, 2e-4);
}

TEST(CosineWarmRestartLr, RejectsBadArguments) {
    EXPECT_THROW(cosine_warm_restart_lr(-1, 0.05, 0.0, 30, 2), std::invalid_argument);
    EXPECT_THROW(cosine_warm_restart_lr(0, 0.05, 0.0, 0, 2), std::invalid_argument);
    EXPECT_THROW(cosine_warm_restart_lr(0, 0.05, 0.0, 30, 0), std::invalid_argument);
    EXPECT_THROW(cosine_warm_restart_lr(0, 0.05, 0.1, 30, 2), std::invalid_argument);
    EXPECT_THROW(cosine_warm_restart_lr(0, -0.05, 0.0, 30, 2), std::invalid_argument);
}

TEST(CycleBoundaries, MatchesTheDoublingSchedule) {
    EXPECT_EQ(cycle_boundaries(30, 2, 1000), (std::vector<int>{30, 90, 210, 450, 930}));
    EXPECT_EQ(cycle_boundaries(30, 2, 929), (std::vector<int>{30, 90, 210, 450}));
    EXPECT_EQ(cycle_boundaries(10, 1, 35), (std::vector<int>{10, 20, 30}));
    EXPECT_EQ(cycle_boundaries(30, 2, 29), (std::vector<int>{}));
}

// ---- run record ----

TEST(RunRecord, CsvHasHeaderAndOneRowPerEpoch) {
    Splits splits = easy_splits();
    DistillConfig cfg = quick_config(3);
    cfg.num_students = 2;
    cfg.weights.beta_kd = 0.0;
    std::vector<Model> students;
    students.push_back(Model::build_mlp({2, 8, 3}, cfg.seed));
    students.push_back(Model::build_mlp({2, 8, 3}, cfg.seed + 1));
    GroupResult result = train_group(splits, std::move(students), TeacherFn{}, cfg);

    std::stringstream csv(result.record.to_csv());
    std::string header;
    ASSERT_TRUE(std::getline(csv, header));
    EXPECT_EQ(header,
              "epoch,lr,s1_loss_ce,s1_loss_kd,s1_loss_col,s1_val_top1,s1_val_top5,"
              "s2_loss_ce,s2_loss_kd,s2_loss_col,s2_val_top1,s2_val_top5,mean_corr");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        EXPECT_EQ(static_cast<int>(std::count(line.begin(), line.end(), ',')), 12);
    }
    EXPECT_EQ(rows, 3);
}

// ---- core loop semantics ----

TEST(TrainGroup, ZeroLearningRateLeavesParametersUntouched) {
    Splits splits = easy_splits();
    DistillConfig cfg = quick_config(2);
    cfg.lr0 = 0.0;
    cfg.lr_min = 0.0;
    cfg.num_students = 1;
    cfg.weights.beta_kd = 0.0;
    cfg.weights.beta_col = 0.0;

    Model reference = Model::build_mlp({2, 8, 3}, 5);
    std::vector<Model> students;
    students.push_back(reference.clone(true));
    GroupResult result = train_group(splits, std::move(students), TeacherFn{}, cfg);
    EXPECT_TRUE(same_parameters(result.students[0], reference));
}

TEST(TrainGroup, WithoutCouplingTermsStudentsTrainIndependently) {
    // beta_kd = beta_col = 0 makes the joint objective a sum of per-student
    // objectives over the same batches, so a joint run must reproduce two
    // solo runs bit for bit.
    Splits splits = easy_splits();
    DistillConfig joint = quick_config(4);
    joint.num_students = 2;
    joint.weights.beta_kd = 0.0;
    joint.weights.beta_col = 0.0;

    std::vector<Model> pair;
    pair.push_back(Model::build_mlp({2, 8, 3}, 21));
    pair.push_back(Model::build_mlp({2, 8, 3}, 22));
    GroupResult both = train_group(splits, std::move(pair), TeacherFn{}, joint);

    DistillConfig solo = joint;
    solo.num_students = 1;
    for (int k = 0; k < 2; ++k) {
        std::vector<Model> one;
        one.push_back(Model::build_mlp({2, 8, 3}, 21 + k));
        GroupResult alone = train_group(splits, std::move(one), TeacherFn{}, solo);
        EXPECT_TRUE(same_parameters(both.students[k], alone.students[0])) << "student " << k;
    }
}

TEST(TrainGroup, DistillationTermsChangeTheTrajectory) {
    Splits splits = easy_splits();
    Model teacher = train_teacher(splits, {2, 16, 3}, quick_config(6)).best;

    DistillConfig cfg = quick_config(4);
    cfg.num_students = 2;
    GroupResult distilled = train_dckd(splits, teacher, {2, 8, 3}, cfg);

    DistillConfig plain = cfg;
    plain.weights.beta_kd = 0.0;
    plain.weights.beta_col = 0.0;
    std::vector<Model> students;
    students.push_back(Model::build_mlp({2, 8, 3}, cfg.seed));
    students.push_back(Model::build_mlp({2, 8, 3}, cfg.seed + 1));
    GroupResult baseline = train_group(splits, std::move(students), TeacherFn{}, plain);

    EXPECT_FALSE(same_parameters(distilled.students[0], baseline.students[0]));
    // The distillation arms also report nonzero kd / col terms.
    const StudentEpochStats& s = distilled.record.rows.back().students[0];
    EXPECT_GT(s.loss_kd, 0.0);
    EXPECT_GT(s.loss_col, 0.0);
    EXPECT_EQ(baseline.record.rows.back().students[0].loss_kd, 0.0);
}

TEST(TrainGroup, RankingSortsByFinalValidationAccuracy) {
    Splits splits = easy_splits();
    DistillConfig cfg = quick_config(5);
    cfg.num_students = 3;
    cfg.weights.beta_kd = 0.0;
    cfg.weights.beta_col = 0.0;
    std::vector<Model> students;
    for (int k = 0; k < 3; ++k) students.push_back(Model::build_mlp({2, 8, 3}, 40 + k));
    GroupResult result = train_group(splits, std::move(students), TeacherFn{}, cfg);

    ASSERT_EQ(result.ranking.size(), 3u);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_GE(result.final_val_top1[result.ranking[i - 1]],
                  result.final_val_top1[result.ranking[i]]);
    }
}

TEST(TrainGroup, RejectsInvalidSetupsEarly) {
    Splits splits = easy_splits();
    DistillConfig cfg = quick_config(2);
    cfg.num_students = 1;
    std::vector<Model> one;
    one.push_back(Model::build_mlp({2, 8, 3}, 0));
    // beta_kd > 0 with no teacher.
    EXPECT_THROW(train_group(splits, std::move(one), TeacherFn{}, cfg), std::invalid_argument);

    cfg.weights.beta_kd = 0.0;
    cfg.weights.beta_col = 0.0;
    std::vector<Model> wrong_dim;
    wrong_dim.push_back(Model::build_mlp({3, 8, 3}, 0));
    EXPECT_THROW(train_group(splits, std::move(wrong_dim), TeacherFn{}, cfg), ShapeError);

    std::vector<Model> wrong_classes;
    wrong_classes.push_back(Model::build_mlp({2, 8, 4}, 0));
    EXPECT_THROW(train_group(splits, std::move(wrong_classes), TeacherFn{}, cfg), ShapeError);

    cfg.num_students = 2;
    std::vector<Model> just_one;
    just_one.push_back(Model::build_mlp({2, 8, 3}, 0));
    EXPECT_THROW(train_group(splits, std::move(just_one), TeacherFn{}, cfg),
                 std::invalid_argument);
}

// ---- teacher training ----

TEST(TrainTeacher, LearnsSeparatedClustersAndTracksBestEpoch) {
    Splits splits = easy_splits(80);
    DistillConfig cfg = quick_config(12);
    TeacherResult teacher = train_teacher(splits, {2, 16, 3}, cfg);

    EXPECT_GT(teacher.best_val_top1, 0.95);
    double best_seen = -1.0;
    int best_epoch = -1;
    for (const EpochRow& row : teacher.record.rows) {
        if (row.students[0].val_top1 > best_seen) {
            best_seen = row.students[0].val_top1;
            best_epoch = row.epoch;
        }
    }
    EXPECT_DOUBLE_EQ(teacher.best_val_top1, best_seen);
    EXPECT_EQ(teacher.best_epoch, best_epoch);

    // The stored best model reproduces the recorded accuracy.
    const Matrix logits = teacher.best.forward_values(splits.val.features);
    EXPECT_DOUBLE_EQ(topk_accuracy(logits, splits.val.labels, 1), teacher.best_val_top1);
    // Best clones are frozen evaluation models.
    EXPECT_FALSE(teacher.best.parameters()[0].requires_grad());
}

// ---- distillation training ----

TEST(TrainDckd, TeacherStaysFrozen) {
    Splits splits = easy_splits();
    TeacherResult teacher = train_teacher(splits, {2, 16, 3}, quick_config(6));
    Model before = teacher.best.clone(false);

    DistillConfig cfg = quick_config(4);
    cfg.num_students = 2;
    GroupResult result = train_dckd(splits, teacher.best, {2, 8, 3}, cfg);
    EXPECT_TRUE(same_parameters(teacher.best, before));
    EXPECT_EQ(result.students.size(), 2u);
}

TEST(TrainDckd, RunsAreBitwiseReproducible) {
    Splits splits = easy_splits();
    TeacherResult teacher = train_teacher(splits, {2, 16, 3}, quick_config(6));
    DistillConfig cfg = quick_config(4);
    cfg.num_students = 2;

    GroupResult a = train_dckd(splits, teacher.best, {2, 8, 3}, cfg);
    GroupResult b = train_dckd(splits, teacher.best, {2, 8, 3}, cfg);
    EXPECT_EQ(a.record.to_csv(), b.record.to_csv());
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_TRUE(same_parameters(a.students[k], b.students[k]));
    }

    cfg.seed = 8;
    GroupResult c = train_dckd(splits, teacher.best, {2, 8, 3}, cfg);
    EXPECT_NE(a.record.to_csv(), c.record.to_csv());
}

TEST(TrainDckd, ValidatesTeacherShape) {
    Splits splits = easy_splits();
    DistillConfig cfg = quick_config(2);
    Model bad_in = Model::build_mlp({5, 8, 3}, 0);
    EXPECT_THROW(train_dckd(splits, bad_in, {2, 8, 3}, cfg), ShapeError);
    Model bad_out = Model::build_mlp({2, 8, 7}, 0);
    EXPECT_THROW(train_dckd(splits, bad_out, {2, 8, 3}, cfg), ShapeError);
}

// ---- ensembles ----

TEST(EnsembleProb, SingleMemberEqualsItsSoftmax) {
    Model m = Model::build_mlp({2, 8, 4}, 9);
    Matrix features(3, 2);
    for (std::size_t i = 0; i < features.size(); ++i) {
        features.data()[i] = 0.3 * static_cast<double>(i) - 0.5;
    }
    EXPECT_EQ(ensemble_prob({m}, features), softmax_rows(m.forward_values(features), 1.0));
}

TEST(EnsembleProb, AveragesMembersAndStaysStochastic) {
    std::vector<Model> members;
    for (int k = 0; k < 3; ++k) members.push_back(Model::build_mlp({2, 8, 4}, k));
    Matrix features(5, 2);
    for (std::size_t i = 0; i < features.size(); ++i) {
        features.data()[i] = 0.1 * static_cast<double>(i);
    }
    const Matrix mean = ensemble_prob(members, features);
    for (std::size_t r = 0; r < mean.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < mean.cols(); ++c) {
            EXPECT_GT(mean(r, c), 0.0);
            sum += mean(r, c);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_THROW(ensemble_prob({}, features), std::invalid_argument);
}

TEST(PseudoLogits, SoftmaxRecoversTheDistribution) {
    Matrix p(2, 3);
    p(0, 0) = 0.2; p(0, 1) = 0.5; p(0, 2) = 0.3;
    p(1, 0) = 0.98; p(1, 1) = 0.01; p(1, 2) = 0.01;
    const Matrix back = softmax_rows(pseudo_logits(p), 1.0);
    EXPECT_LT(max_abs_diff(back, p), 1e-9);
}

TEST(TrainEdckd, DistillsFromFrozenStudentEnsemble) {
    Splits splits = easy_splits();
    DistillConfig first = quick_config(6);
    first.num_students = 2;
    first.weights.beta_kd = 0.0;
    std::vector<Model> students;
    students.push_back(Model::build_mlp({2, 8, 3}, first.seed));
    students.push_back(Model::build_mlp({2, 8, 3}, first.seed + 1));
    GroupResult round_one = train_group(splits, std::move(students), TeacherFn{}, first);

    std::vector<Model> ensemble;
    for (const Model& m : round_one.students) ensemble.push_back(m.clone(false));

    DistillConfig second = quick_config(4);
    second.num_students = 2;
    GroupResult round_two = train_edckd(splits, ensemble, {2, 8, 3}, second);
    EXPECT_EQ(round_two.students.size(), 2u);
    EXPECT_GT(round_two.record.rows.back().students[0].loss_kd, 0.0);
    for (std::size_t k = 0; k < ensemble.size(); ++k) {
        EXPECT_TRUE(same_parameters(ensemble[k], round_one.students[k]));
    }
}

// ---- reference blob experiment ----
//
// One full seed-7 run of the reference blob setup (C=10, 200 per class,
// dim 2, spread 0.4, teacher [2,64,64,10], students [2,16,10] x 3,
// 90 epochs), shared across the assertions below. The data's engineered
// class overlaps put the Bayes ceiling near 0.66, so every arm lands in
// that band; the fixtures pin the observed values and orderings.
class BlobsPreset : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        Dataset d = gen_blobs(10, 200, 2, 0.4, 7);
        splits_ = new Splits(split_dataset(d, 0.2, 7));
        DistillConfig cfg;
        cfg.seed = 7;
        teacher_ = new TeacherResult(train_teacher(*splits_, {2, 64, 64, 10}, cfg));
        dckd_ = new GroupResult(train_dckd(*splits_, teacher_->best, {2, 16, 10}, cfg));

        DistillConfig ce = cfg;
        ce.weights.beta_kd = 0.0;
        ce.weights.beta_col = 0.0;
        std::vector<Model> nets;
        for (int k = 0; k < 3; ++k) nets.push_back(Model::build_mlp({2, 16, 10}, cfg.seed + k));
        ce_ = new GroupResult(train_group(*splits_, std::move(nets), TeacherFn{}, ce));

        std::vector<Model> frozen;
        for (const Model& m : dckd_->students) frozen.push_back(m.clone(false));
        edckd_ = new GroupResult(train_edckd(*splits_, frozen, {2, 16, 10}, cfg));
        ensembled_ = new GroupResult(train_ensembled_student(*splits_, frozen, {2, 16, 10}, cfg));
    }
    static void TearDownTestSuite() {
        delete splits_;
        delete teacher_;
        delete dckd_;
        delete ce_;
        delete edckd_;
        delete ensembled_;
    }
    static double mean_top1(const GroupResult& g) {
        double sum = 0.0;
        for (double v : g.final_val_top1) sum += v;
        return sum / static_cast<double>(g.final_val_top1.size());
    }
    static Splits* splits_;
    static TeacherResult* teacher_;
    static GroupResult* dckd_;
    static GroupResult* ce_;
    static GroupResult* edckd_;
    static GroupResult* ensembled_;
};
Splits* BlobsPreset::splits_ = nullptr;
TeacherResult* BlobsPreset::teacher_ = nullptr;
GroupResult* BlobsPreset::dckd_ = nullptr;
GroupResult* BlobsPreset::ce_ = nullptr;
GroupResult* BlobsPreset::edckd_ = nullptr;
GroupResult* BlobsPreset::ensembled_ = nullptr;

TEST_F(BlobsPreset, TeacherAccuracyMatchesTheFrozenReferenceValue) {
    EXPECT_NEAR(teacher_->best_val_top1, 0.67, 0.02);
}

TEST_F(BlobsPreset, LinearProbeCannotSolveTheOverlappingClasses) {
    DistillConfig cfg;
    cfg.seed = 7;
    TeacherResult probe = train_teacher(*splits_, {2, 10}, cfg);
    EXPECT_LT(probe.best_val_top1, 1.0);
}

TEST_F(BlobsPreset, EnsembledStudentBeatsPlainBaselineMean) {
    EXPECT_GE(ensembled_->final_val_top1[0], mean_top1(*ce_));
}

TEST_F(BlobsPreset, SecondGenerationKeepsTheTopStudentWithinTwoPoints) {
    const double dckd1 = dckd_->final_val_top1[dckd_->ranking[0]];
    const double edckd1 = edckd_->final_val_top1[edckd_->ranking[0]];
    EXPECT_NEAR(edckd1, dckd1, 0.02);
}

TEST_F(BlobsPreset, GroupStudentsAccumulateMoreClassesThanTheTeacher) {
    double corr = 0.0;
    for (const Model& m : dckd_->students) {
        corr += mean_correlation_number(m, splits_->val);
    }
    corr /= static_cast<double>(dckd_->students.size());
    EXPECT_GE(corr, mean_correlation_number(teacher_->best, splits_->val));
}

TEST_F(BlobsPreset, OverlappingPairShowsUpInTheAccumulationProfile) {
    // Classes 0 and 1 share nearly the same center, so the best student's
    // accumulation profile for class 0 leaks probability onto class 1.
    const Model& net1 = dckd_->students[dckd_->ranking[0]];
    const Matrix profile = class_accumulation(net1, splits_->val, 0, 4.0);
    EXPECT_GT(profile(0, 1), 0.1);
}

TEST(TrainEnsembledStudent, ForcesSingleStudentWithoutCollectionTerm) {
    Splits splits = easy_splits();
    DistillConfig first = quick_config(5);
    first.num_students = 2;
    first.weights.beta_kd = 0.0;
    std::vector<Model> students;
    students.push_back(Model::build_mlp({2, 8, 3}, first.seed));
    students.push_back(Model::build_mlp({2, 8, 3}, first.seed + 1));
    GroupResult round_one = train_group(splits, std::move(students), TeacherFn{}, first);

    DistillConfig cfg = quick_config(4);
    cfg.num_students = 3;  // overridden to one
    GroupResult result = train_ensembled_student(splits, round_one.students, {2, 8, 3}, cfg);
    EXPECT_EQ(result.students.size(), 1u);
    EXPECT_EQ(result.record.rows.back().students[0].loss_col, 0.0);
    EXPECT_GT(result.record.rows.back().students[0].loss_kd, 0.0);
}

}  // namespace
}  // namespace dckd

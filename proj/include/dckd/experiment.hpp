#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dckd/config.hpp"
#include "dckd/data.hpp"

namespace dckd {

// Materialises the train/validation splits for one seed: the blobs preset is
// generated and split, IDX datasets load a separate validation pair when one
// is configured and split off a fraction otherwise.
Splits make_splits(const ExperimentConfig& cfg, std::int64_t seed);

// <out_dir>/<name>-<arm>-seed<seed>
std::string run_dir(const ExperimentConfig& cfg, const std::string& arm, std::int64_t seed);

// Finite-difference audit of the multi-student objective on randomly built
// student groups (2-3 students, 3-10 classes, batches of at most 8).
struct GradCheckReport {
    int cases = 0;
    double max_rel_err = 0.0;
};
GradCheckReport run_gradcheck_suite(int cases, std::int64_t seed, double eps);

// Executes one CLI subcommand against the config, streaming progress lines
// to out. Returns the process exit status: 0 on success, nonzero when a
// check fails. Missing prerequisite checkpoints raise DependencyError naming
// the artifact; an unknown subcommand raises std::invalid_argument.
int run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg,
                   std::ostream& out);

}  // namespace dckd

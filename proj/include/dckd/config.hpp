#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dckd/losses.hpp"
#include "dckd/trainer.hpp"

namespace dckd {

// Everything an experiment needs beyond the per-run DistillConfig: data
// source, model topologies, output layout, and the arm / seed / ablation
// grids. Parsed from a flat key=value file with '#' comments.
struct ExperimentConfig {
    DistillConfig distill;

    std::string dataset = "blobs";  // "blobs" or "idx"
    int blobs_classes = 10;
    int blobs_per_class = 200;
    int blobs_dim = 2;
    double blobs_spread = 0.4;
    double val_fraction = 0.2;

    std::string idx_images;
    std::string idx_labels;
    std::string idx_val_images;
    std::string idx_val_labels;
    std::uint64_t idx_limit = 0;  // 0 keeps everything

    std::vector<int> teacher_sizes = {2, 64, 64, 10};
    std::vector<int> student_sizes = {2, 16, 10};

    std::string name = "exp";
    std::string out_dir = "runs";
    std::vector<std::int64_t> seeds = {7, 8, 9};
    std::vector<std::string> arms = {"baseline-ce", "kd-only", "dckd"};

    std::vector<KLDirection> ablate_directions = {KLDirection::Reverse, KLDirection::Forward};
    std::vector<CollectionMethod> ablate_methods = {CollectionMethod::LogitMax,
                                                    CollectionMethod::Average};
    std::vector<int> ablate_num_students = {3};

    // Canonical sorted key=value listing with every default filled in; two
    // configs behave identically iff their echoes match.
    std::string echo() const;
    // FNV-1a of the echo minus the output-location keys (name, out_dir), so
    // re-running a config into a different directory hashes the same.
    std::uint64_t hash() const;
};

// Parses and fully validates a config file. Unknown keys, malformed values,
// out-of-range numbers, unknown enum variants, and missing referenced files
// all raise ConfigError.
ExperimentConfig parse_config(const std::string& path);

// Same contract on in-memory text, used by parse_config and tests.
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace dckd

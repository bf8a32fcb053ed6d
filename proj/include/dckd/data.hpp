#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dckd/matrix.hpp"

namespace dckd {

struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    int dim() const noexcept { return static_cast<int>(features.cols()); }
};

struct Batch {
    Matrix features;
    std::vector<int> labels;
};

struct Splits {
    Dataset train;
    Dataset val;
};

// Gaussian class blobs: centers drawn on the sphere of radius 3, samples
// center + spread * N(0, 1). Classes (0, 1) and, given four or more classes,
// (2, 3) are overlapping pairs whose centers sit only 0.5 * spread apart,
// which manufactures the class-correlation structure the distillation
// analytics look for. Deterministic in the seed.
Dataset gen_blobs(int num_classes, int per_class, int dim, double spread, std::int64_t seed);

// IDX image/label pair (big-endian magics 0x803 / 0x801). Pixels are scaled
// to [0, 1] and standardised with the mean/std of the loaded subset. limit
// truncates from the front; 0 loads nothing and is valid.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit = std::nullopt);

// Raw IDX payloads, exposed so subsets can be written back out losslessly.
struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;
};
IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
void write_idx_images(const IdxImages& images, const std::string& path);
void write_idx_labels(const std::vector<std::uint8_t>& labels, const std::string& path);

// Shuffled minibatches for one epoch. The permutation is deterministic in
// (epoch_seed, epoch); a final partial batch is kept.
std::vector<Batch> batches(const Dataset& dataset, std::size_t batch_size,
                           std::uint64_t epoch_seed, std::uint64_t epoch);

// Seeded permutation split; the first round(n * val_fraction) permuted rows
// become the validation set.
Splits split_dataset(const Dataset& dataset, double val_fraction, std::uint64_t seed);

// One-hot rows for hard labels.
Matrix one_hot(const std::vector<int>& labels, int num_classes);

// Writes "f0,...,f<d-1>,label" rows with full float64 precision.
void save_dataset_csv(const Dataset& dataset, const std::string& path);

}  // namespace dckd

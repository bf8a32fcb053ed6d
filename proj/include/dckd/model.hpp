#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dckd/autodiff.hpp"
#include "dckd/matrix.hpp"

namespace dckd {

// Fully connected ReLU network with a linear output layer. Parameters are
// leaf tensors shared by every forward pass, so one optimizer can keep
// velocity state across batches.
class Model {
public:
    Model() = default;

    // Uniform(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) weights, zero biases;
    // identical (sizes, seed) pairs give bit-identical parameters.
    static Model build_mlp(const std::vector<int>& layer_sizes, std::int64_t seed,
                           bool trainable = true);

    // Graph-building forward; gradients reach the parameters when trainable.
    Tensor forward(const Tensor& batch) const;
    // Forward on plain matrices for evaluation; uses the same value kernels
    // as the graph path, so results are bit-identical.
    Matrix forward_values(const Matrix& batch) const;

    // Weight and bias leaves in layer order: W0, b0, W1, b1, ...
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;
    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    std::int64_t seed() const { return seed_; }

    void set_trainable(bool trainable);
    // Deep copy with its own parameter leaves.
    Model clone(bool trainable) const;

private:
    struct Layer {
        Tensor weight;  // fan_in x fan_out
        Tensor bias;    // 1 x fan_out
        bool relu = true;
    };
    std::vector<int> sizes_;
    std::vector<Layer> layers_;
    std::int64_t seed_ = 0;
};

// Spec-level alias for Model::forward.
Tensor forward_mlp(const Model& model, const Tensor& batch);

struct CheckpointMeta {
    std::int64_t seed = 0;
    std::int64_t epoch = 0;
    std::uint64_t config_hash = 0;
};

// Binary container: "DCKD1" magic, length-prefixed layer sizes, metadata,
// little-endian float64 parameter block, FNV-1a integrity hash.
void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta);

// Loads a checkpoint; when expected_sizes is non-empty the stored topology
// must match it exactly. The returned model is frozen unless trainable.
Model load_checkpoint(const std::string& path, std::vector<int> expected_sizes = {},
                      CheckpointMeta* meta = nullptr, bool trainable = false);

}  // namespace dckd

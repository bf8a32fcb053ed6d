#include "dckd/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dckd/bytes.hpp"
#include "dckd/errors.hpp"
#include "dckd/rng.hpp"

namespace dckd {

namespace {

constexpr char kMagic[5] = {'D', 'C', 'K', 'D', '1'};

void validate_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) {
        throw std::invalid_argument("model needs at least an input and an output layer");
    }
    for (int s : sizes) {
        if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
    }
}

std::string sizes_to_string(const std::vector<int>& sizes) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < sizes.size(); ++i) out << (i ? "," : "") << sizes[i];
    out << "]";
    return out.str();
}

std::uint64_t hash_f64_le(std::uint64_t hash, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char raw[8];
    for (int b = 0; b < 8; ++b) raw[b] = static_cast<unsigned char>(bits >> (8 * b));
    return fnv1a64(raw, 8, hash);
}

}  // namespace

Model Model::build_mlp(const std::vector<int>& layer_sizes, std::int64_t seed, bool trainable) {
    validate_sizes(layer_sizes);
    Model model;
    model.sizes_ = layer_sizes;
    model.seed_ = seed;
    Rng rng(static_cast<std::uint64_t>(seed));
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto fan_in = static_cast<std::size_t>(layer_sizes[l]);
        const auto fan_out = static_cast<std::size_t>(layer_sizes[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Matrix weight(fan_in, fan_out);
        for (std::size_t i = 0; i < weight.size(); ++i) {
            weight.data()[i] = rng.uniform(-bound, bound);
        }
        Layer layer;
        layer.weight = Tensor::leaf(std::move(weight), trainable);
        layer.bias = Tensor::leaf(Matrix(1, fan_out), trainable);
        layer.relu = l + 2 < layer_sizes.size();
        model.layers_.push_back(std::move(layer));
    }
    return model;
}

Tensor Model::forward(const Tensor& batch) const {
    if (layers_.empty()) throw StateError("model has no layers");
    if (batch.cols() != static_cast<std::size_t>(input_dim())) {
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                         " features, model expects " + std::to_string(input_dim()));
    }
    Tensor x = batch;
    for (const Layer& layer : layers_) {
        x = add_bias_row(matmul(x, layer.weight), layer.bias);
        if (layer.relu) x = relu(x);
    }
    return x;
}

Matrix Model::forward_values(const Matrix& batch) const {
    if (layers_.empty()) throw StateError("model has no layers");
    if (batch.cols() != static_cast<std::size_t>(input_dim())) {
        throw ShapeError("forward_values: batch has " + std::to_string(batch.cols()) +
                         " features, model expects " + std::to_string(input_dim()));
    }
    Matrix x = batch;
    for (const Layer& layer : layers_) {
        x = add_bias_row(matmul(x, layer.weight.value()), layer.bias.value());
        if (layer.relu) x = relu(x);
    }
    return x;
}

std::vector<Tensor> Model::parameters() const {
    std::vector<Tensor> params;
    params.reserve(layers_.size() * 2);
    for (const Layer& layer : layers_) {
        params.push_back(layer.weight);
        params.push_back(layer.bias);
    }
    return params;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& layer : layers_) n += layer.weight.value().size() + layer.bias.value().size();
    return n;
}

void Model::set_trainable(bool trainable) {
    for (Layer& layer : layers_) {
        layer.weight.set_requires_grad(trainable);
        layer.bias.set_requires_grad(trainable);
    }
}

Model Model::clone(bool trainable) const {
    Model copy;
    copy.sizes_ = sizes_;
    copy.seed_ = seed_;
    for (const Layer& layer : layers_) {
        Layer fresh;
        fresh.weight = Tensor::leaf(layer.weight.value(), trainable);
        fresh.bias = Tensor::leaf(layer.bias.value(), trainable);
        fresh.relu = layer.relu;
        copy.layers_.push_back(std::move(fresh));
    }
    return copy;
}

Tensor forward_mlp(const Model& model, const Tensor& batch) { return model.forward(batch); }

void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("save_checkpoint: cannot open '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::vector<int>& sizes = model.layer_sizes();
    write_u64_le(out, sizes.size());
    for (int s : sizes) write_i64_le(out, s);
    write_i64_le(out, meta.seed);
    write_i64_le(out, meta.epoch);
    write_u64_le(out, meta.config_hash);

    std::uint64_t param_hash = fnv1a64(nullptr, 0);
    write_u64_le(out, model.parameter_count());
    for (const Tensor& p : model.parameters()) {
        const Matrix& v = p.value();
        for (std::size_t i = 0; i < v.size(); ++i) {
            write_f64_le(out, v.data()[i]);
            param_hash = hash_f64_le(param_hash, v.data()[i]);
        }
    }
    write_u64_le(out, param_hash);
    if (!out) throw FormatError("save_checkpoint: write to '" + path + "' failed");
}

Model load_checkpoint(const std::string& path, std::vector<int> expected_sizes,
                      CheckpointMeta* meta, bool trainable) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("load_checkpoint: cannot open '" + path + "'");
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("load_checkpoint: '" + path + "' is not a DCKD1 checkpoint");
    }
    const std::uint64_t num_sizes = read_u64_le(in, "layer count");
    if (num_sizes < 2 || num_sizes > 64) {
        throw FormatError("load_checkpoint: implausible layer count " +
                          std::to_string(num_sizes));
    }
    std::vector<int> sizes(num_sizes);
    for (std::uint64_t i = 0; i < num_sizes; ++i) {
        const std::int64_t s = read_i64_le(in, "layer size");
        if (s < 1 || s > (1 << 24)) {
            throw FormatError("load_checkpoint: implausible layer size " + std::to_string(s));
        }
        sizes[i] = static_cast<int>(s);
    }
    if (!expected_sizes.empty() && expected_sizes != sizes) {
        throw FormatError("load_checkpoint: checkpoint topology " + sizes_to_string(sizes) +
                          " does not match expected " + sizes_to_string(expected_sizes));
    }
    CheckpointMeta loaded;
    loaded.seed = read_i64_le(in, "seed");
    loaded.epoch = read_i64_le(in, "epoch");
    loaded.config_hash = read_u64_le(in, "config hash");

    std::uint64_t expected_count = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        expected_count += static_cast<std::uint64_t>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
    }
    const std::uint64_t param_count = read_u64_le(in, "parameter count");
    if (param_count != expected_count) {
        throw FormatError("load_checkpoint: parameter count " + std::to_string(param_count) +
                          " does not match topology (" + std::to_string(expected_count) + ")");
    }

    Model model = Model::build_mlp(sizes, loaded.seed, trainable);
    std::uint64_t param_hash = fnv1a64(nullptr, 0);
    for (const Tensor& p : model.parameters()) {
        Tensor param = p;
        Matrix& v = param.mutable_value();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v.data()[i] = read_f64_le(in, "parameter block");
            param_hash = hash_f64_le(param_hash, v.data()[i]);
        }
    }
    const std::uint64_t stored_hash = read_u64_le(in, "integrity hash");
    if (stored_hash != param_hash) {
        throw FormatError("load_checkpoint: integrity hash mismatch in '" + path + "'");
    }
    in.peek();
    if (!in.eof()) {
        throw FormatError("load_checkpoint: trailing bytes after parameter block in '" + path +
                          "'");
    }
    if (meta) *meta = loaded;
    return model;
}

}  // namespace dckd

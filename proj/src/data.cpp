#include "dckd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dckd/bytes.hpp"
#include "dckd/errors.hpp"
#include "dckd/rng.hpp"

namespace dckd {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kBatchStream = 3;

std::vector<double> unit_direction(Rng& rng, int dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (int i = 0; i < dim; ++i) {
            v[i] = rng.normal();
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (int i = 0; i < dim; ++i) v[i] /= norm;
    return v;
}

}  // namespace

Dataset gen_blobs(int num_classes, int per_class, int dim, double spread, std::int64_t seed) {
    if (num_classes < 1) throw std::invalid_argument("gen_blobs: num_classes must be >= 1");
    if (per_class < 1) throw std::invalid_argument("gen_blobs: per_class must be >= 1");
    if (dim < 1) throw std::invalid_argument("gen_blobs: dim must be >= 1");
    if (!(spread > 0.0)) throw std::invalid_argument("gen_blobs: spread must be > 0");

    Rng rng(static_cast<std::uint64_t>(seed));
    std::vector<std::vector<double>> centers(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        std::vector<double> dir = unit_direction(rng, dim);
        centers[c].resize(dim);
        for (int i = 0; i < dim; ++i) centers[c][i] = 3.0 * dir[i];
    }
    // Overlapping pairs: the partner center sits 0.5 * spread away from its
    // base, well inside one noise standard deviation.
    if (num_classes >= 2) {
        std::vector<double> offset = unit_direction(rng, dim);
        for (int i = 0; i < dim; ++i) centers[1][i] = centers[0][i] + 0.5 * spread * offset[i];
    }
    if (num_classes >= 4) {
        std::vector<double> offset = unit_direction(rng, dim);
        for (int i = 0; i < dim; ++i) centers[3][i] = centers[2][i] + 0.5 * spread * offset[i];
    }

    Dataset out;
    out.num_classes = num_classes;
    out.features = Matrix(static_cast<std::size_t>(num_classes) * per_class, dim);
    out.labels.resize(static_cast<std::size_t>(num_classes) * per_class);
    std::size_t row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < per_class; ++s, ++row) {
            for (int i = 0; i < dim; ++i) {
                out.features(row, i) = centers[c][i] + spread * rng.normal();
            }
            out.labels[row] = c;
        }
    }
    return out;
}

IdxImages read_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_idx_images: cannot open '" + path + "'");
    IdxImages out;
    const std::uint32_t magic = read_u32_be(in, "image magic");
    if (magic != kIdxImagesMagic) {
        throw FormatError("read_idx_images: bad magic in '" + path + "'");
    }
    out.count = read_u32_be(in, "image count");
    out.rows = read_u32_be(in, "image rows");
    out.cols = read_u32_be(in, "image cols");
    const std::size_t total =
        static_cast<std::size_t>(out.count) * out.rows * out.cols;
    out.pixels.resize(total);
    in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(total));
    if (!in && total > 0) throw FormatError("read_idx_images: truncated pixel data");
    return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_idx_labels: cannot open '" + path + "'");
    const std::uint32_t magic = read_u32_be(in, "label magic");
    if (magic != kIdxLabelsMagic) {
        throw FormatError("read_idx_labels: bad magic in '" + path + "'");
    }
    const std::uint32_t count = read_u32_be(in, "label count");
    std::vector<std::uint8_t> labels(count);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
    if (!in && count > 0) throw FormatError("read_idx_labels: truncated label data");
    return labels;
}

void write_idx_images(const IdxImages& images, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("write_idx_images: cannot open '" + path + "'");
    write_u32_be(out, kIdxImagesMagic);
    write_u32_be(out, images.count);
    write_u32_be(out, images.rows);
    write_u32_be(out, images.cols);
    out.write(reinterpret_cast<const char*>(images.pixels.data()),
              static_cast<std::streamsize>(images.pixels.size()));
    if (!out) throw FormatError("write_idx_images: write failed");
}

void write_idx_labels(const std::vector<std::uint8_t>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("write_idx_labels: cannot open '" + path + "'");
    write_u32_be(out, kIdxLabelsMagic);
    write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw FormatError("write_idx_labels: write failed");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit) {
    IdxImages images = read_idx_images(images_path);
    std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
    if (images.count != labels.size()) {
        throw FormatError("load_idx: " + std::to_string(images.count) + " images but " +
                          std::to_string(labels.size()) + " labels");
    }
    std::size_t n = images.count;
    if (limit) n = std::min(n, *limit);
    const std::size_t dim = static_cast<std::size_t>(images.rows) * images.cols;

    Dataset out;
    out.features = Matrix(n, dim);
    out.labels.resize(n);
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        out.labels[r] = labels[r];
        for (std::size_t c = 0; c < dim; ++c) {
            out.features(r, c) = images.pixels[r * dim + c] / 255.0;
            mean += out.features(r, c);
        }
    }
    int max_label = -1;
    for (std::size_t r = 0; r < n; ++r) max_label = std::max(max_label, out.labels[r]);
    out.num_classes = max_label + 1;

    const std::size_t total = n * dim;
    if (total > 0) {
        mean /= static_cast<double>(total);
        double var = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            const double d = out.features.data()[i] - mean;
            var += d * d;
        }
        const double stddev = std::sqrt(var / static_cast<double>(total));
        const double denom = stddev > 1e-12 ? stddev : 1.0;
        for (std::size_t i = 0; i < total; ++i) {
            out.features.data()[i] = (out.features.data()[i] - mean) / denom;
        }
    }
    return out;
}

std::vector<Batch> batches(const Dataset& dataset, std::size_t batch_size,
                           std::uint64_t epoch_seed, std::uint64_t epoch) {
    if (dataset.size() == 0) throw std::invalid_argument("batches: dataset is empty");
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    Rng rng(mix_seed(mix_seed(epoch_seed, kBatchStream), epoch));
    const std::vector<std::size_t> order = rng.permutation(dataset.size());

    std::vector<Batch> out;
    const std::size_t n = dataset.size();
    const std::size_t dim = dataset.features.cols();
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t count = std::min(batch_size, n - start);
        Batch b;
        b.features = Matrix(count, dim);
        b.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = order[start + i];
            for (std::size_t c = 0; c < dim; ++c) b.features(i, c) = dataset.features(src, c);
            b.labels[i] = dataset.labels[src];
        }
        out.push_back(std::move(b));
    }
    return out;
}

Splits split_dataset(const Dataset& dataset, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("split_dataset: val_fraction must be in (0, 1)");
    }
    if (dataset.size() < 2) {
        throw std::invalid_argument("split_dataset: need at least 2 samples");
    }
    Rng rng(mix_seed(seed, kSplitStream));
    const std::vector<std::size_t> order = rng.permutation(dataset.size());
    std::size_t val_n = static_cast<std::size_t>(
        std::llround(static_cast<double>(dataset.size()) * val_fraction));
    val_n = std::max<std::size_t>(1, std::min(val_n, dataset.size() - 1));

    const std::size_t dim = dataset.features.cols();
    auto take = [&](std::size_t begin, std::size_t count) {
        Dataset part;
        part.num_classes = dataset.num_classes;
        part.features = Matrix(count, dim);
        part.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = order[begin + i];
            for (std::size_t c = 0; c < dim; ++c) part.features(i, c) = dataset.features(src, c);
            part.labels[i] = dataset.labels[src];
        }
        return part;
    };
    Splits out;
    out.val = take(0, val_n);
    out.train = take(val_n, dataset.size() - val_n);
    return out;
}

Matrix one_hot(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("one_hot: num_classes must be >= 1");
    Matrix m(labels.size(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                        " outside [0, " + std::to_string(num_classes) + ")");
        }
        m(i, labels[i]) = 1.0;
    }
    return m;
}

void save_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("save_dataset_csv: cannot open '" + path + "'");
    for (int c = 0; c < dataset.dim(); ++c) out << "f" << c << ",";
    out << "label\n";
    char buf[64];
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        for (std::size_t c = 0; c < dataset.features.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(r, c));
            out << buf << ",";
        }
        out << dataset.labels[r] << "\n";
    }
    if (!out) throw FormatError("save_dataset_csv: write failed");
}

}  // namespace dckd

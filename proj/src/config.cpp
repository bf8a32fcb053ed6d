#include "dckd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dckd/bytes.hpp"
#include "dckd/errors.hpp"

namespace dckd {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (trim(value.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (trim(value.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + value + "'");
}

std::vector<int> parse_sizes(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const std::string& item : split_list(value)) {
        const long long v = parse_int(key, item);
        if (v < 1) throw ConfigError("key '" + key + "' expects sizes >= 1, got '" + value + "'");
        out.push_back(static_cast<int>(v));
    }
    if (out.size() < 2) {
        throw ConfigError("key '" + key + "' expects at least input and output sizes");
    }
    return out;
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& items, Fn&& format) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += format(items[i]);
    }
    return out;
}

const std::vector<std::string> kValidArms = {"baseline-ce", "kd-only", "dckd", "edckd",
                                             "ensembled"};

void require_file(const std::string& key, const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("key '" + key + "' references missing file '" + path + "'");
    }
}

void validate(const ExperimentConfig& cfg) {
    const LossWeights& w = cfg.distill.weights;
    if (w.beta_ce < 0 || w.beta_kd < 0 || w.beta_col < 0) {
        throw ConfigError("loss weights must be >= 0");
    }
    if (!(w.t_kd > 0) || !(w.t_kld > 0)) throw ConfigError("temperatures must be > 0");
    if (cfg.distill.num_students < 1) throw ConfigError("num_students must be >= 1");
    if (cfg.distill.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.distill.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.distill.lr0 < 0 || cfg.distill.lr_min < 0 || cfg.distill.lr_min > cfg.distill.lr0) {
        throw ConfigError("learning rates must satisfy 0 <= lr_min <= lr0");
    }
    if (cfg.distill.momentum < 0 || cfg.distill.momentum >= 1) {
        throw ConfigError("momentum must be in [0, 1)");
    }
    if (cfg.distill.weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
    if (cfg.distill.t0 < 1 || cfg.distill.tmult < 1) {
        throw ConfigError("t0 and tmult must be >= 1");
    }

    if (cfg.dataset != "blobs" && cfg.dataset != "idx") {
        throw ConfigError("key 'dataset' expects blobs or idx, got '" + cfg.dataset + "'");
    }
    if (cfg.blobs_classes < 1 || cfg.blobs_per_class < 1 || cfg.blobs_dim < 1) {
        throw ConfigError("blob counts must be >= 1");
    }
    if (!(cfg.blobs_spread > 0)) throw ConfigError("blobs_spread must be > 0");
    if (!(cfg.val_fraction > 0 && cfg.val_fraction < 1)) {
        throw ConfigError("val_fraction must be in (0, 1)");
    }
    if (cfg.dataset == "idx") {
        if (cfg.idx_images.empty() || cfg.idx_labels.empty()) {
            throw ConfigError("dataset=idx needs idx_images and idx_labels");
        }
        require_file("idx_images", cfg.idx_images);
        require_file("idx_labels", cfg.idx_labels);
        if (cfg.idx_val_images.empty() != cfg.idx_val_labels.empty()) {
            throw ConfigError("idx_val_images and idx_val_labels must be given together");
        }
        if (!cfg.idx_val_images.empty()) {
            require_file("idx_val_images", cfg.idx_val_images);
            require_file("idx_val_labels", cfg.idx_val_labels);
        }
    }

    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (cfg.arms.empty()) throw ConfigError("arms must not be empty");
    for (const std::string& arm : cfg.arms) {
        if (std::find(kValidArms.begin(), kValidArms.end(), arm) == kValidArms.end()) {
            throw ConfigError("unknown arm '" + arm + "' (valid: baseline-ce, kd-only, dckd, "
                              "edckd, ensembled)");
        }
    }
    if (cfg.ablate_directions.empty() || cfg.ablate_methods.empty() ||
        cfg.ablate_num_students.empty()) {
        throw ConfigError("ablation lists must not be empty");
    }
    for (int n : cfg.ablate_num_students) {
        if (n < 2) throw ConfigError("ablate_num_students entries must be >= 2");
    }
}

std::string join_kv(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [key, value] : kv) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::map<std::string, std::string> config_kv(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["beta_ce"] = g17(cfg.distill.weights.beta_ce);
    kv["beta_kd"] = g17(cfg.distill.weights.beta_kd);
    kv["beta_col"] = g17(cfg.distill.weights.beta_col);
    kv["t_kd"] = g17(cfg.distill.weights.t_kd);
    kv["t_kld"] = g17(cfg.distill.weights.t_kld);
    kv["method"] = to_string(cfg.distill.method);
    kv["direction"] = to_string(cfg.distill.direction);
    kv["simultaneous"] = cfg.distill.simultaneous ? "true" : "false";
    kv["num_students"] = std::to_string(cfg.distill.num_students);
    kv["epochs"] = std::to_string(cfg.distill.epochs);
    kv["batch_size"] = std::to_string(cfg.distill.batch_size);
    kv["lr0"] = g17(cfg.distill.lr0);
    kv["lr_min"] = g17(cfg.distill.lr_min);
    kv["momentum"] = g17(cfg.distill.momentum);
    kv["weight_decay"] = g17(cfg.distill.weight_decay);
    kv["t0"] = std::to_string(cfg.distill.t0);
    kv["tmult"] = std::to_string(cfg.distill.tmult);
    kv["dataset"] = cfg.dataset;
    kv["blobs_classes"] = std::to_string(cfg.blobs_classes);
    kv["blobs_per_class"] = std::to_string(cfg.blobs_per_class);
    kv["blobs_dim"] = std::to_string(cfg.blobs_dim);
    kv["blobs_spread"] = g17(cfg.blobs_spread);
    kv["val_fraction"] = g17(cfg.val_fraction);
    kv["idx_images"] = cfg.idx_images;
    kv["idx_labels"] = cfg.idx_labels;
    kv["idx_val_images"] = cfg.idx_val_images;
    kv["idx_val_labels"] = cfg.idx_val_labels;
    kv["idx_limit"] = std::to_string(cfg.idx_limit);
    kv["teacher_sizes"] = join(cfg.teacher_sizes, [](int v) { return std::to_string(v); });
    kv["student_sizes"] = join(cfg.student_sizes, [](int v) { return std::to_string(v); });
    kv["name"] = cfg.name;
    kv["out_dir"] = cfg.out_dir;
    kv["seeds"] = join(cfg.seeds, [](std::int64_t v) { return std::to_string(v); });
    kv["arms"] = join(cfg.arms, [](const std::string& v) { return v; });
    kv["ablate_directions"] =
        join(cfg.ablate_directions, [](KLDirection v) { return std::string(to_string(v)); });
    kv["ablate_methods"] =
        join(cfg.ablate_methods, [](CollectionMethod v) { return std::string(to_string(v)); });
    kv["ablate_num_students"] =
        join(cfg.ablate_num_students, [](int v) { return std::to_string(v); });

    return kv;
}

}  // namespace

std::string ExperimentConfig::echo() const { return join_kv(config_kv(*this)); }

std::uint64_t ExperimentConfig::hash() const {
    // The hash covers behavior only: where artifacts land must not change
    // what they contain, so the location keys are excluded.
    std::map<std::string, std::string> kv = config_kv(*this);
    kv.erase("name");
    kv.erase("out_dir");
    return fnv1a64(join_kv(kv));
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    using Handler = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Handler> handlers = {
        {"beta_ce", [&](const std::string& k, const std::string& v) {
             cfg.distill.weights.beta_ce = parse_double(k, v);
         }},
        {"beta_kd", [&](const std::string& k, const std::string& v) {
             cfg.distill.weights.beta_kd = parse_double(k, v);
         }},
        {"beta_col", [&](const std::string& k, const std::string& v) {
             cfg.distill.weights.beta_col = parse_double(k, v);
         }},
        {"t_kd", [&](const std::string& k, const std::string& v) {
             cfg.distill.weights.t_kd = parse_double(k, v);
         }},
        {"t_kld", [&](const std::string& k, const std::string& v) {
             cfg.distill.weights.t_kld = parse_double(k, v);
         }},
        {"method", [&](const std::string&, const std::string& v) {
             cfg.distill.method = parse_collection_method(v);
         }},
        {"direction", [&](const std::string&, const std::string& v) {
             cfg.distill.direction = parse_kl_direction(v);
         }},
        {"simultaneous", [&](const std::string& k, const std::string& v) {
             cfg.distill.simultaneous = parse_bool(k, v);
         }},
        {"num_students", [&](const std::string& k, const std::string& v) {
             cfg.distill.num_students = static_cast<int>(parse_int(k, v));
         }},
        {"epochs", [&](const std::string& k, const std::string& v) {
             cfg.distill.epochs = static_cast<int>(parse_int(k, v));
         }},
        {"batch_size", [&](const std::string& k, const std::string& v) {
             cfg.distill.batch_size = static_cast<int>(parse_int(k, v));
         }},
        {"lr0", [&](const std::string& k, const std::string& v) {
             cfg.distill.lr0 = parse_double(k, v);
         }},
        {"lr_min", [&](const std::string& k, const std::string& v) {
             cfg.distill.lr_min = parse_double(k, v);
         }},
        {"momentum", [&](const std::string& k, const std::string& v) {
             cfg.distill.momentum = parse_double(k, v);
         }},
        {"weight_decay", [&](const std::string& k, const std::string& v) {
             cfg.distill.weight_decay = parse_double(k, v);
         }},
        {"t0", [&](const std::string& k, const std::string& v) {
             cfg.distill.t0 = static_cast<int>(parse_int(k, v));
         }},
        {"tmult", [&](const std::string& k, const std::string& v) {
             cfg.distill.tmult = static_cast<int>(parse_int(k, v));
         }},
        {"dataset", [&](const std::string&, const std::string& v) { cfg.dataset = v; }},
        {"blobs_classes", [&](const std::string& k, const std::string& v) {
             cfg.blobs_classes = static_cast<int>(parse_int(k, v));
         }},
        {"blobs_per_class", [&](const std::string& k, const std::string& v) {
             cfg.blobs_per_class = static_cast<int>(parse_int(k, v));
         }},
        {"blobs_dim", [&](const std::string& k, const std::string& v) {
             cfg.blobs_dim = static_cast<int>(parse_int(k, v));
         }},
        {"blobs_spread", [&](const std::string& k, const std::string& v) {
             cfg.blobs_spread = parse_double(k, v);
         }},
        {"val_fraction", [&](const std::string& k, const std::string& v) {
             cfg.val_fraction = parse_double(k, v);
         }},
        {"idx_images", [&](const std::string&, const std::string& v) { cfg.idx_images = v; }},
        {"idx_labels", [&](const std::string&, const std::string& v) { cfg.idx_labels = v; }},
        {"idx_val_images",
         [&](const std::string&, const std::string& v) { cfg.idx_val_images = v; }},
        {"idx_val_labels",
         [&](const std::string&, const std::string& v) { cfg.idx_val_labels = v; }},
        {"idx_limit", [&](const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 0) throw ConfigError("key 'idx_limit' must be >= 0");
             cfg.idx_limit = static_cast<std::uint64_t>(n);
         }},
        {"teacher_sizes", [&](const std::string& k, const std::string& v) {
             cfg.teacher_sizes = parse_sizes(k, v);
         }},
        {"student_sizes", [&](const std::string& k, const std::string& v) {
             cfg.student_sizes = parse_sizes(k, v);
         }},
        {"name", [&](const std::string&, const std::string& v) { cfg.name = v; }},
        {"out_dir", [&](const std::string&, const std::string& v) { cfg.out_dir = v; }},
        {"seeds", [&](const std::string& k, const std::string& v) {
             cfg.seeds.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.seeds.push_back(parse_int(k, item));
             }
         }},
        {"arms", [&](const std::string&, const std::string& v) { cfg.arms = split_list(v); }},
        {"ablate_directions", [&](const std::string&, const std::string& v) {
             cfg.ablate_directions.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.ablate_directions.push_back(parse_kl_direction(item));
             }
         }},
        {"ablate_methods", [&](const std::string&, const std::string& v) {
             cfg.ablate_methods.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.ablate_methods.push_back(parse_collection_method(item));
             }
         }},
        {"ablate_num_students", [&](const std::string& k, const std::string& v) {
             cfg.ablate_num_students.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.ablate_num_students.push_back(static_cast<int>(parse_int(k, item)));
             }
         }},
    };

    std::stringstream ss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(ss, raw)) {
        ++line_no;
        const std::size_t hash_pos = raw.find('#');
        if (hash_pos != std::string::npos) raw.erase(hash_pos);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + " is not key=value: '" +
                              line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = handlers.find(key);
        if (it == handlers.end()) throw ConfigError("unknown key '" + key + "'");
        it->second(key, value);
    }

    validate(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace dckd

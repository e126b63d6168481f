#include "protohat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "protohat/errors.hpp"
#include "protohat/rng.hpp"

namespace protohat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Noise levels of the planted generator. Targets are deliberately noisier
// than attribute nodes, so structure carries real information.
constexpr double kTargetNoiseStd = 1.2;
constexpr double kAttrNoiseStd = 0.35;

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& file, size_t line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw LoadError(file + ":" + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

long parse_int(const std::string& tok, const std::string& file, size_t line) {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        throw LoadError(file + ":" + std::to_string(line) + ": bad integer '" + tok + "'");
    return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string() + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_comma(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

json parse_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string() + ": cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    return j;
}

struct Fnv1a64 {
    uint64_t h = 1469598103934665603ull;

    void bytes(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    }
    void str(const std::string& s) {
        bytes(s.data(), s.size());
        const char sep = '\x1f';
        bytes(&sep, 1);
    }
    void i64(long long v) { bytes(&v, sizeof(v)); }
    void dbl(double v) { bytes(&v, sizeof(v)); }

    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

}  // namespace

std::string HinDataset::schema_hash() const {
    Fnv1a64 f;
    for (const auto& t : graph.types.type_names) f.str(t);
    f.i64(target_type);
    f.i64(n_classes);
    f.i64(graph.n_nodes);
    f.i64(graph.n_edges());
    for (const Matrix& m : features) {
        f.i64(m.rows());
        f.i64(m.cols());
        for (double v : m.data()) f.dbl(v);
    }
    for (size_t i = 0; i < node_ids.size(); ++i) {
        f.str(node_ids[i]);
        f.i64(graph.types.node_type[i]);
    }
    for (const auto& e : graph.hyperedges) {
        f.i64(static_cast<long long>(e.size()));
        for (int v : e) f.i64(v);
    }
    for (int v : labels) f.i64(v);
    for (const auto* split : {&train_idx, &val_idx, &test_idx}) {
        f.i64(static_cast<long long>(split->size()));
        for (int v : *split) f.i64(v);
    }
    return f.hex();
}

void HinDataset::check_consistency() const {
    const ValidationReport report = validate(graph);
    if (!report.ok()) throw LoadError("dataset: " + report.errors.front());

    const int n = graph.n_nodes;
    if (static_cast<int>(node_ids.size()) != n || static_cast<int>(labels.size()) != n ||
        static_cast<int>(type_local_row.size()) != n)
        throw LoadError("dataset: per-node arrays do not cover all nodes");
    if (target_type < 0 || target_type >= graph.types.n_types())
        throw LoadError("dataset: target type index out of range");
    if (n_classes < 2) throw LoadError("dataset: need at least 2 classes");
    if (static_cast<int>(features.size()) != graph.types.n_types())
        throw LoadError("dataset: one feature matrix per type required");

    std::vector<int> per_type_count(features.size(), 0);
    for (int v = 0; v < n; ++v) {
        const int t = graph.types.node_type[static_cast<size_t>(v)];
        const int row = type_local_row[static_cast<size_t>(v)];
        if (row < 0 || row >= features[static_cast<size_t>(t)].rows())
            throw LoadError("dataset: node " + node_ids[static_cast<size_t>(v)] +
                            " has no feature row");
        ++per_type_count[static_cast<size_t>(t)];
    }
    for (size_t t = 0; t < features.size(); ++t)
        if (per_type_count[t] != features[t].rows())
            throw LoadError("dataset: feature matrix for type " + graph.types.type_names[t] +
                            " has " + std::to_string(features[t].rows()) + " rows, expected " +
                            std::to_string(per_type_count[t]));

    for (int v = 0; v < n; ++v) {
        const int y = labels[static_cast<size_t>(v)];
        if (y == -1) continue;
        if (graph.types.node_type[static_cast<size_t>(v)] != target_type)
            throw LoadError("dataset: label on non-target node " +
                            node_ids[static_cast<size_t>(v)]);
        if (y < 0 || y >= n_classes)
            throw LoadError("dataset: class index " + std::to_string(y) + " out of range for " +
                            node_ids[static_cast<size_t>(v)]);
    }

    std::vector<int> seen(static_cast<size_t>(n), -1);
    const char* names[3] = {"train", "val", "test"};
    const std::vector<int>* splits[3] = {&train_idx, &val_idx, &test_idx};
    for (int s = 0; s < 3; ++s) {
        for (int v : *splits[s]) {
            if (v < 0 || v >= n) throw LoadError("dataset: split index out of range");
            if (labels[static_cast<size_t>(v)] == -1)
                throw LoadError("dataset: " + std::string(names[s]) + " split contains unlabeled node " +
                                node_ids[static_cast<size_t>(v)]);
            if (seen[static_cast<size_t>(v)] != -1)
                throw LoadError("dataset: node " + node_ids[static_cast<size_t>(v)] +
                                " appears in both " + names[seen[static_cast<size_t>(v)]] +
                                " and " + names[s] + " splits");
            seen[static_cast<size_t>(v)] = s;
        }
    }
}

HinDataset load_dataset(const fs::path& dir) {
    HinDataset ds;

    // schema.json
    const fs::path schema_path = dir / "schema.json";
    const json schema = parse_json_file(schema_path);
    try {
        ds.graph.types.type_names = schema.at("types").get<std::vector<std::string>>();
        const std::string target = schema.at("target_type").get<std::string>();
        ds.n_classes = schema.at("n_classes").get<int>();
        ds.target_type = -1;
        for (size_t t = 0; t < ds.graph.types.type_names.size(); ++t)
            if (ds.graph.types.type_names[t] == target) ds.target_type = static_cast<int>(t);
        if (ds.target_type < 0)
            throw LoadError(schema_path.string() + ": target_type '" + target +
                            "' is not a declared type");
    } catch (const json::exception& e) {
        throw LoadError(schema_path.string() + ": " + e.what());
    }
    std::unordered_map<std::string, int> type_index;
    for (size_t t = 0; t < ds.graph.types.type_names.size(); ++t)
        type_index[ds.graph.types.type_names[t]] = static_cast<int>(t);

    std::vector<int> feature_dims(ds.graph.types.type_names.size(), 0);
    try {
        const json& dims = schema.at("feature_dims");
        for (const auto& [type, idx] : type_index) {
            if (!dims.contains(type))
                throw LoadError(schema_path.string() + ": feature_dims missing type '" + type +
                                "'");
            feature_dims[static_cast<size_t>(idx)] = dims.at(type).get<int>();
        }
    } catch (const json::exception& e) {
        throw LoadError(schema_path.string() + ": " + e.what());
    }

    // nodes.tsv
    const fs::path nodes_path = dir / "nodes.tsv";
    std::unordered_map<std::string, int> node_index;
    {
        const auto lines = read_lines(nodes_path);
        for (size_t ln = 0; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            const auto cols = split_tab(lines[ln]);
            if (cols.size() != 2)
                throw LoadError(nodes_path.string() + ":" + std::to_string(ln + 1) +
                                ": expected node_id<TAB>type");
            const auto it = type_index.find(cols[1]);
            if (it == type_index.end())
                throw LoadError(nodes_path.string() + ":" + std::to_string(ln + 1) +
                                ": unknown type '" + cols[1] + "'");
            if (!node_index.emplace(cols[0], ds.graph.n_nodes).second)
                throw LoadError(nodes_path.string() + ":" + std::to_string(ln + 1) +
                                ": duplicate node id '" + cols[0] + "'");
            ds.node_ids.push_back(cols[0]);
            ds.graph.types.node_type.push_back(it->second);
            ++ds.graph.n_nodes;
        }
    }

    // features-<type>.tsv
    const int n_types = ds.graph.types.n_types();
    std::vector<int> per_type_count(static_cast<size_t>(n_types), 0);
    ds.type_local_row.assign(static_cast<size_t>(ds.graph.n_nodes), -1);
    for (int v = 0; v < ds.graph.n_nodes; ++v) {
        const int t = ds.graph.types.node_type[static_cast<size_t>(v)];
        ds.type_local_row[static_cast<size_t>(v)] = per_type_count[static_cast<size_t>(t)]++;
    }
    for (int t = 0; t < n_types; ++t) {
        const fs::path fpath = dir / ("features-" + ds.graph.types.type_names[static_cast<size_t>(t)] + ".tsv");
        const auto lines = read_lines(fpath);
        Matrix feats(per_type_count[static_cast<size_t>(t)], feature_dims[static_cast<size_t>(t)]);
        std::vector<uint8_t> filled(static_cast<size_t>(feats.rows()), 0);
        for (size_t ln = 0; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            const auto cols = split_tab(lines[ln]);
            const auto it = node_index.find(cols[0]);
            if (it == node_index.end())
                throw LoadError(fpath.string() + ":" + std::to_string(ln + 1) +
                                ": unknown node id '" + cols[0] + "'");
            const int v = it->second;
            if (ds.graph.types.node_type[static_cast<size_t>(v)] != t)
                throw LoadError(fpath.string() + ":" + std::to_string(ln + 1) + ": node '" +
                                cols[0] + "' is not of type '" +
                                ds.graph.types.type_names[static_cast<size_t>(t)] + "'");
            if (static_cast<int>(cols.size()) - 1 != feats.cols())
                throw LoadError(fpath.string() + ":" + std::to_string(ln + 1) + ": expected " +
                                std::to_string(feats.cols()) + " feature values, got " +
                                std::to_string(cols.size() - 1));
            const int row = ds.type_local_row[static_cast<size_t>(v)];
            if (filled[static_cast<size_t>(row)])
                throw LoadError(fpath.string() + ":" + std::to_string(ln + 1) +
                                ": duplicate feature row for '" + cols[0] + "'");
            filled[static_cast<size_t>(row)] = 1;
            for (int j = 0; j < feats.cols(); ++j)
                feats(row, j) = parse_double(cols[static_cast<size_t>(j) + 1], fpath.string(), ln + 1);
        }
        for (size_t r = 0; r < filled.size(); ++r)
            if (!filled[r])
                throw LoadError(fpath.string() + ": missing feature row for a node of type '" +
                                ds.graph.types.type_names[static_cast<size_t>(t)] + "'");
        ds.features.push_back(std::move(feats));
    }

    // hyperedges.tsv
    const fs::path edges_path = dir / "hyperedges.tsv";
    {
        const auto lines = read_lines(edges_path);
        if (lines.empty() || (lines[0] != "mode=explicit" && lines[0] != "mode=bundle"))
            throw LoadError(edges_path.string() + ":1: expected header 'mode=explicit' or 'mode=bundle'");
        const bool bundle = lines[0] == "mode=bundle";
        for (size_t ln = 1; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            const auto cols = split_tab(lines[ln]);
            if (cols.size() != 2)
                throw LoadError(edges_path.string() + ":" + std::to_string(ln + 1) +
                                ": expected two tab-separated fields");
            std::vector<int> edge;
            auto add_member = [&](const std::string& id) {
                const auto it = node_index.find(id);
                if (it == node_index.end())
                    throw LoadError(edges_path.string() + ":" + std::to_string(ln + 1) +
                                    ": unknown node id '" + id + "'");
                edge.push_back(it->second);
            };
            if (bundle) add_member(cols[0]);  // the target leads the bundle
            for (const auto& id : split_comma(cols[1])) add_member(id);
            ds.graph.hyperedges.push_back(std::move(edge));
        }
    }

    // labels.tsv
    const fs::path labels_path = dir / "labels.tsv";
    ds.labels.assign(static_cast<size_t>(ds.graph.n_nodes), -1);
    {
        const auto lines = read_lines(labels_path);
        for (size_t ln = 0; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            const auto cols = split_tab(lines[ln]);
            if (cols.size() != 2)
                throw LoadError(labels_path.string() + ":" + std::to_string(ln + 1) +
                                ": expected node_id<TAB>class_index");
            const auto it = node_index.find(cols[0]);
            if (it == node_index.end())
                throw LoadError(labels_path.string() + ":" + std::to_string(ln + 1) +
                                ": unknown node id '" + cols[0] + "'");
            if (ds.labels[static_cast<size_t>(it->second)] != -1)
                throw LoadError(labels_path.string() + ":" + std::to_string(ln + 1) +
                                ": duplicate label for '" + cols[0] + "'");
            const long y = parse_int(cols[1], labels_path.string(), ln + 1);
            if (ds.graph.types.node_type[static_cast<size_t>(it->second)] != ds.target_type)
                throw LoadError(labels_path.string() + ":" + std::to_string(ln + 1) +
                                ": label on non-target node '" + cols[0] + "'");
            if (y < 0 || y >= ds.n_classes)
                throw LoadError(labels_path.string() + ":" + std::to_string(ln + 1) +
                                ": class index " + std::to_string(y) + " out of range [0," +
                                std::to_string(ds.n_classes) + ")");
            ds.labels[static_cast<size_t>(it->second)] = static_cast<int>(y);
        }
    }

    // splits.json
    const fs::path splits_path = dir / "splits.json";
    {
        const json splits = parse_json_file(splits_path);
        auto read_split = [&](const char* key) {
            std::vector<int> out;
            try {
                for (const auto& id : splits.at(key)) {
                    const std::string s = id.get<std::string>();
                    const auto it = node_index.find(s);
                    if (it == node_index.end())
                        throw LoadError(splits_path.string() + ": unknown node id '" + s +
                                        "' in split '" + key + "'");
                    out.push_back(it->second);
                }
            } catch (const json::exception& e) {
                throw LoadError(splits_path.string() + ": " + e.what());
            }
            return out;
        };
        ds.train_idx = read_split("train");
        ds.val_idx = read_split("val");
        ds.test_idx = read_split("test");
    }

    ds.check_consistency();
    return ds;
}

void save_dataset(const HinDataset& ds, const fs::path& dir) {
    fs::create_directories(dir);

    {
        json schema;
        schema["types"] = ds.graph.types.type_names;
        schema["target_type"] = ds.graph.types.type_names[static_cast<size_t>(ds.target_type)];
        schema["n_classes"] = ds.n_classes;
        json dims = json::object();
        for (size_t t = 0; t < ds.features.size(); ++t)
            dims[ds.graph.types.type_names[t]] = ds.features[t].cols();
        schema["feature_dims"] = dims;
        std::ofstream out(dir / "schema.json");
        out << schema.dump(2) << "\n";
    }

    {
        std::ofstream out(dir / "nodes.tsv");
        for (int v = 0; v < ds.graph.n_nodes; ++v)
            out << ds.node_ids[static_cast<size_t>(v)] << '\t'
                << ds.graph.types.type_names[static_cast<size_t>(
                       ds.graph.types.node_type[static_cast<size_t>(v)])]
                << '\n';
    }

    for (size_t t = 0; t < ds.features.size(); ++t) {
        std::ofstream out(dir / ("features-" + ds.graph.types.type_names[t] + ".tsv"));
        for (int v = 0; v < ds.graph.n_nodes; ++v) {
            if (ds.graph.types.node_type[static_cast<size_t>(v)] != static_cast<int>(t)) continue;
            out << ds.node_ids[static_cast<size_t>(v)];
            const double* row = ds.node_features(v);
            for (int j = 0; j < ds.features[t].cols(); ++j) out << '\t' << fmt_g17(row[j]);
            out << '\n';
        }
    }

    {
        std::ofstream out(dir / "hyperedges.tsv");
        out << "mode=explicit\n";
        for (size_t e = 0; e < ds.graph.hyperedges.size(); ++e) {
            out << 'e' << e << '\t';
            const auto& members = ds.graph.hyperedges[e];
            for (size_t k = 0; k < members.size(); ++k) {
                if (k) out << ',';
                out << ds.node_ids[static_cast<size_t>(members[k])];
            }
            out << '\n';
        }
    }

    {
        std::ofstream out(dir / "labels.tsv");
        for (int v = 0; v < ds.graph.n_nodes; ++v)
            if (ds.labels[static_cast<size_t>(v)] != -1)
                out << ds.node_ids[static_cast<size_t>(v)] << '\t'
                    << ds.labels[static_cast<size_t>(v)] << '\n';
    }

    {
        json splits;
        auto ids_of = [&](const std::vector<int>& idx) {
            std::vector<std::string> ids;
            for (int v : idx) ids.push_back(ds.node_ids[static_cast<size_t>(v)]);
            return ids;
        };
        splits["train"] = ids_of(ds.train_idx);
        splits["val"] = ids_of(ds.val_idx);
        splits["test"] = ids_of(ds.test_idx);
        std::ofstream out(dir / "splits.json");
        out << splits.dump(2) << "\n";
    }
}

void SyntheticConfig::check() const {
    if (n_classes < 2) throw ConfigError("synthetic: n_classes must be >= 2");
    if (targets_per_class < 1) throw ConfigError("synthetic: targets_per_class must be >= 1");
    for (int a : n_attr_nodes_per_type)
        if (a < n_classes)
            throw ConfigError("synthetic: each attribute type needs >= n_classes nodes");
    if (target_feature_dim < 1) throw ConfigError("synthetic: target_feature_dim must be >= 1");
    for (int d : attr_feature_dims)
        if (d < 1) throw ConfigError("synthetic: attribute feature dims must be >= 1");
    if (!(label_signal >= 0.0 && label_signal <= 1.0))
        throw ConfigError("synthetic: label_signal must be in [0,1]");
    if (!(edge_purity >= 0.0 && edge_purity <= 1.0))
        throw ConfigError("synthetic: edge_purity must be in [0,1]");
}

namespace {

// Class-indicator mean pattern on the first d_sig dims: +1 on this class's
// dims, balanced negative elsewhere.
double class_pattern(int cls, int dim, int n_classes) {
    return dim % n_classes == cls ? 1.0 : -1.0 / (n_classes - 1);
}

void fill_planted_features(Matrix& feats, int row, int cls, int n_classes, double signal,
                           double noise_std, Rng& rng) {
    const int d = feats.cols();
    const int d_sig = static_cast<int>(std::lround(signal * d));
    for (int j = 0; j < d; ++j) {
        const double mean = j < d_sig ? class_pattern(cls, j, n_classes) : 0.0;
        feats(row, j) = mean + rng.normal(0.0, noise_std);
    }
}

// Contiguous pool of class `cls` within an attribute type of `count` nodes.
std::pair<int, int> pool_range(int cls, int count, int n_classes) {
    return {cls * count / n_classes, (cls + 1) * count / n_classes};
}

}  // namespace

HinDataset generate_synthetic(const SyntheticConfig& cfg) {
    cfg.check();
    Rng rng(cfg.seed);

    HinDataset ds;
    ds.n_classes = cfg.n_classes;
    ds.target_type = 0;
    ds.graph.types.type_names = {"target", "attr0", "attr1"};

    const int n_targets = cfg.n_classes * cfg.targets_per_class;
    const int n_total = n_targets + cfg.n_attr_nodes_per_type[0] + cfg.n_attr_nodes_per_type[1];
    ds.graph.n_nodes = n_total;
    ds.labels.assign(static_cast<size_t>(n_total), -1);

    // Targets first (class-major), then the two attribute blocks.
    Matrix target_feats(n_targets, cfg.target_feature_dim);
    for (int i = 0; i < n_targets; ++i) {
        const int cls = i / cfg.targets_per_class;
        ds.node_ids.push_back("t" + std::to_string(i));
        ds.graph.types.node_type.push_back(0);
        ds.type_local_row.push_back(i);
        ds.labels[static_cast<size_t>(i)] = cls;
        fill_planted_features(target_feats, i, cls, cfg.n_classes, cfg.label_signal,
                              kTargetNoiseStd, rng);
    }
    ds.features.push_back(std::move(target_feats));

    // Attribute nodes; pool class is determined by position in the block.
    for (int a = 0; a < 2; ++a) {
        const int count = cfg.n_attr_nodes_per_type[static_cast<size_t>(a)];
        Matrix feats(count, cfg.attr_feature_dims[static_cast<size_t>(a)]);
        for (int i = 0; i < count; ++i) {
            int cls = 0;
            for (int c = 0; c < cfg.n_classes; ++c) {
                const auto [lo, hi] = pool_range(c, count, cfg.n_classes);
                if (i >= lo && i < hi) cls = c;
            }
            ds.node_ids.push_back("a" + std::to_string(a) + "_" + std::to_string(i));
            ds.graph.types.node_type.push_back(1 + a);
            ds.type_local_row.push_back(i);
            fill_planted_features(feats, i, cls, cfg.n_classes, cfg.label_signal, kAttrNoiseStd,
                                  rng);
        }
        ds.features.push_back(std::move(feats));
    }

    // One hyperedge per target: target + one node from each attribute type.
    const int attr_base[2] = {n_targets, n_targets + cfg.n_attr_nodes_per_type[0]};
    for (int i = 0; i < n_targets; ++i) {
        const int cls = i / cfg.targets_per_class;
        std::vector<int> edge = {i};
        for (int a = 0; a < 2; ++a) {
            const int count = cfg.n_attr_nodes_per_type[static_cast<size_t>(a)];
            const auto [lo, hi] = pool_range(cls, count, cfg.n_classes);
            const bool aligned = rng.uniform() < cfg.edge_purity;
            int pick;
            if (aligned || hi - lo == count) {
                pick = lo + rng.uniform_int(hi - lo);
            } else {
                // uniform over the complement of the aligned pool
                const int outside = count - (hi - lo);
                int r = rng.uniform_int(outside);
                pick = r < lo ? r : hi + (r - lo);
            }
            edge.push_back(attr_base[a] + pick);
        }
        ds.graph.hyperedges.push_back(std::move(edge));
    }

    // Class-stratified 24%/6%/70% split over the labeled targets.
    for (int cls = 0; cls < cfg.n_classes; ++cls) {
        std::vector<int> pool;
        for (int i = cls * cfg.targets_per_class; i < (cls + 1) * cfg.targets_per_class; ++i)
            pool.push_back(i);
        rng.shuffle(pool);
        const int n = static_cast<int>(pool.size());
        int n_train = std::max(1, static_cast<int>(std::lround(0.24 * n)));
        int n_val = std::max(1, static_cast<int>(std::lround(0.06 * n)));
        while (n_train + n_val >= n && n_train > 1) --n_train;
        while (n_train + n_val >= n && n_val > 1) --n_val;
        for (int i = 0; i < n; ++i) {
            if (i < n_train)
                ds.train_idx.push_back(pool[static_cast<size_t>(i)]);
            else if (i < n_train + n_val)
                ds.val_idx.push_back(pool[static_cast<size_t>(i)]);
            else
                ds.test_idx.push_back(pool[static_cast<size_t>(i)]);
        }
    }
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
    std::sort(ds.val_idx.begin(), ds.val_idx.end());
    std::sort(ds.test_idx.begin(), ds.test_idx.end());

    ds.check_consistency();
    return ds;
}

void write_embeddings(const fs::path& path, const Matrix& embeddings,
                      const std::vector<std::string>& ids) {
    if (static_cast<int>(ids.size()) != embeddings.rows())
        throw DimensionError("write_embeddings: " + std::to_string(ids.size()) + " ids for " +
                             std::to_string(embeddings.rows()) + " rows");
    std::ofstream out(path);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    out << "id";
    for (int j = 0; j < embeddings.cols(); ++j) out << "\tdim" << j;
    out << '\n';
    for (int i = 0; i < embeddings.rows(); ++i) {
        out << ids[static_cast<size_t>(i)];
        for (int j = 0; j < embeddings.cols(); ++j) out << '\t' << fmt_g17(embeddings(i, j));
        out << '\n';
    }
    if (!out) throw LoadError(path.string() + ": write failure");
}

Matrix read_embeddings(const fs::path& path, std::vector<std::string>* ids_out) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw LoadError(path.string() + ": empty embeddings file");
    const int cols = static_cast<int>(split_tab(lines[0]).size()) - 1;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    for (size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto toks = split_tab(lines[ln]);
        if (static_cast<int>(toks.size()) - 1 != cols)
            throw LoadError(path.string() + ":" + std::to_string(ln + 1) + ": expected " +
                            std::to_string(cols) + " values");
        ids.push_back(toks[0]);
        std::vector<double> row;
        for (int j = 0; j < cols; ++j)
            row.push_back(parse_double(toks[static_cast<size_t>(j) + 1], path.string(), ln + 1));
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<int>(rows.size()), cols);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < cols; ++j) m(static_cast<int>(i), j) = rows[i][static_cast<size_t>(j)];
    if (ids_out) *ids_out = std::move(ids);
    return m;
}

}  // namespace protohat

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "protohat/hypergraph.hpp"
#include "protohat/matrix.hpp"

namespace protohat {

/// A loaded heterogeneous-hypergraph dataset for transductive node
/// classification. Node indexing is global; per-type feature matrices are
/// addressed through type_local_row.
struct HinDataset {
    Hypergraph graph;
    std::vector<Matrix> features;      // by type index: n_t x d_t
    std::vector<int> type_local_row;   // node -> row within its type's matrix
    std::vector<std::string> node_ids;
    std::vector<int> labels;  // node -> class index, -1 if unlabeled
    std::vector<int> train_idx, val_idx, test_idx;
    int target_type = 0;
    int n_classes = 0;

    int n_nodes() const { return graph.n_nodes; }
    int feature_dim(int type) const { return features[static_cast<size_t>(type)].cols(); }
    const double* node_features(int v) const {
        return features[static_cast<size_t>(graph.types.node_type[static_cast<size_t>(v)])].row(
            type_local_row[static_cast<size_t>(v)]);
    }

    /// FNV-1a over schema, structure, features, labels and splits. Stored in
    /// checkpoints and manifests; eval refuses a checkpoint whose hash
    /// disagrees with the dataset it is pointed at.
    std::string schema_hash() const;

    /// Structural + labeling checks beyond hypergraph::validate. Throws
    /// LoadError on the first violation.
    void check_consistency() const;
};

/// Reads the on-disk format: schema.json, nodes.tsv, features-<type>.tsv,
/// hyperedges.tsv (mode=explicit|bundle), labels.tsv, splits.json.
/// Load failures throw LoadError naming the file (and line where sensible).
HinDataset load_dataset(const std::filesystem::path& dir);

/// Writes a dataset in the same format load_dataset reads. Used by the
/// synthetic generator; load_dataset(save_dataset(d)) reproduces d exactly.
void save_dataset(const HinDataset& ds, const std::filesystem::path& dir);

/// Planted-partition generator configuration. Produces one hyperedge per
/// target node bundling it with one attribute node per attribute type; the
/// attribute node is drawn from the class-aligned pool with probability
/// edge_purity, otherwise from the other classes' pools.
struct SyntheticConfig {
    int n_classes = 2;
    int targets_per_class = 20;
    std::array<int, 2> n_attr_nodes_per_type = {10, 10};
    int target_feature_dim = 8;
    std::array<int, 2> attr_feature_dims = {4, 4};
    double label_signal = 1.0;  // fraction of feature dims carrying class signal
    double edge_purity = 1.0;   // P(attribute node drawn from the aligned pool)
    uint64_t seed = 1;

    void check() const;  // throws ConfigError
};

/// Deterministic for a fixed seed. Target features are noisy class
/// indicators on the signal dims; attribute features use the same scheme with
/// the pool class and lower noise. Splits are class-stratified 24%/6%/70%.
HinDataset generate_synthetic(const SyntheticConfig& cfg);

/// TSV export: header, then one line per row: id <TAB> 17-significant-digit
/// values. Round-trips doubles bit-exactly.
void write_embeddings(const std::filesystem::path& path, const Matrix& embeddings,
                      const std::vector<std::string>& ids);

/// Reads a file written by write_embeddings.
Matrix read_embeddings(const std::filesystem::path& path, std::vector<std::string>* ids_out);

}  // namespace protohat

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "protohat/dataset.hpp"
#include "protohat/errors.hpp"
#include "support/fixtures.hpp"

using namespace protohat;
namespace fs = std::filesystem;

namespace {

fs::path toy_dir() { return fs::path(PROTOHAT_DATA_DIR) / "toy"; }

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("protohat_dataio_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path corrupted_toy(const std::string& name, const std::string& file,
                       const std::string& content) {
    const fs::path dir = fresh_dir(name);
    fs::copy(toy_dir(), dir, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    std::ofstream out(dir / file);
    out << content;
    return dir;
}

bool datasets_equal(const HinDataset& a, const HinDataset& b) {
    if (a.graph.n_nodes != b.graph.n_nodes || a.graph.hyperedges != b.graph.hyperedges)
        return false;
    if (a.graph.types.type_names != b.graph.types.type_names) return false;
    if (a.graph.types.node_type != b.graph.types.node_type) return false;
    if (a.node_ids != b.node_ids || a.labels != b.labels) return false;
    if (a.train_idx != b.train_idx || a.val_idx != b.val_idx || a.test_idx != b.test_idx)
        return false;
    if (a.target_type != b.target_type || a.n_classes != b.n_classes) return false;
    if (a.features.size() != b.features.size()) return false;
    for (size_t t = 0; t < a.features.size(); ++t)
        if (!(a.features[t] == b.features[t])) return false;
    return true;
}

}  // namespace

TEST_CASE("the shipped toy fixture loads with the documented shape") {
    const HinDataset ds = load_dataset(toy_dir());
    CHECK(ds.n_nodes() == 6);
    CHECK(ds.graph.n_edges() == 2);
    CHECK(ds.n_classes == 2);
    CHECK(ds.graph.types.n_types() == 3);
    CHECK(datasets_equal(ds, fixtures::toy()));
    CHECK(ds.schema_hash() == fixtures::toy().schema_hash());
}

TEST_CASE("an ACM-shaped dataset loads with Table-1 shape checks") {
    // 3 node types, target "paper", 3 classes
    HinDataset ds;
    ds.graph.n_nodes = 7;
    ds.graph.types.type_names = {"paper", "author", "subject"};
    ds.graph.types.node_type = {0, 0, 0, 1, 1, 2, 2};
    ds.graph.hyperedges = {{0, 3, 5}, {1, 3, 6}, {2, 4, 5}};
    ds.node_ids = {"p0", "p1", "p2", "au0", "au1", "s0", "s1"};
    ds.type_local_row = {0, 1, 2, 0, 1, 0, 1};
    ds.labels = {0, 1, 2, -1, -1, -1, -1};
    ds.train_idx = {0};
    ds.val_idx = {1};
    ds.test_idx = {2};
    ds.target_type = 0;
    ds.n_classes = 3;
    ds.features.push_back(Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
    ds.features.push_back(Matrix::from_rows({{0.5}, {0.25}}));
    ds.features.push_back(Matrix::from_rows({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}}));

    const fs::path dir = fresh_dir("acm_shaped");
    save_dataset(ds, dir);
    const HinDataset loaded = load_dataset(dir);
    CHECK(loaded.graph.types.n_types() == 3);
    CHECK(loaded.n_classes == 3);
    CHECK(loaded.graph.types.type_names[static_cast<size_t>(loaded.target_type)] == "paper");
    CHECK(datasets_equal(loaded, ds));
}

TEST_CASE("loader errors are specific") {
    SUBCASE("missing file") {
        const fs::path dir = fresh_dir("missing");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("schema.json"), LoadError);
    }
    SUBCASE("label on a non-target node") {
        const fs::path dir =
            corrupted_toy("label_nontarget", "labels.tsv", "i0\t0\ni1\t1\na0\t0\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("non-target"), LoadError);
    }
    SUBCASE("feature width mismatch against schema") {
        const fs::path dir =
            corrupted_toy("bad_width", "features-attr_a.tsv", "a0\t0.5\t-0.3\t0.9\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("expected 2"), LoadError);
    }
    SUBCASE("overlapping splits") {
        const fs::path dir = corrupted_toy("overlap", "splits.json",
                                           R"({"train":["i0","i1"],"val":["i1"],"test":["i2"]})");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("both"), LoadError);
    }
    SUBCASE("unknown node in a hyperedge") {
        const fs::path dir =
            corrupted_toy("bad_edge", "hyperedges.tsv", "mode=explicit\ne0\ti0,zz\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("zz"), LoadError);
    }
    SUBCASE("class index out of range") {
        const fs::path dir = corrupted_toy("bad_class", "labels.tsv", "i0\t0\ni1\t5\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("out of range"), LoadError);
    }
    SUBCASE("split referencing an unlabeled node") {
        const fs::path dir = corrupted_toy("unlabeled_split", "labels.tsv", "i0\t0\ni3\t1\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("unlabeled"), LoadError);
    }
    SUBCASE("bad hyperedges header") {
        const fs::path dir = corrupted_toy("bad_header", "hyperedges.tsv", "e0\ti0,i1\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("mode="), LoadError);
    }
    SUBCASE("malformed number with file and line") {
        const fs::path dir =
            corrupted_toy("bad_number", "features-attr_b.tsv", "b0\t-0.2\tnope\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("features-attr_b.tsv:1"),
                             LoadError);
    }
}

TEST_CASE("bundle mode builds one hyperedge per target") {
    const fs::path dir = fresh_dir("bundle");
    fs::copy(toy_dir(), dir, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    std::ofstream(dir / "hyperedges.tsv") << "mode=bundle\ni0\ta0,b0\ni1\ta0,b0\ni2\tb0,a0\ni3\ta0,b0\n";
    const HinDataset ds = load_dataset(dir);
    REQUIRE(ds.graph.n_edges() == 4);
    CHECK(ds.graph.hyperedges[0] == std::vector<int>{0, 4, 5});
    CHECK(ds.graph.hyperedges[2] == std::vector<int>{2, 5, 4});  // member order preserved
}

TEST_CASE("synthetic generation is deterministic and validates") {
    SyntheticConfig cfg;
    cfg.n_classes = 2;
    cfg.targets_per_class = 20;
    cfg.edge_purity = 1.0;
    cfg.label_signal = 1.0;
    cfg.seed = 7;
    const HinDataset a = generate_synthetic(cfg);
    const HinDataset b = generate_synthetic(cfg);
    CHECK(datasets_equal(a, b));
    CHECK(a.schema_hash() == b.schema_hash());
    CHECK(validate(a.graph).ok());

    SyntheticConfig other = cfg;
    other.seed = 8;
    CHECK_FALSE(datasets_equal(a, generate_synthetic(other)));
}

TEST_CASE("generated hyperedges bundle exactly one target with one node per attribute type") {
    SyntheticConfig cfg;
    cfg.n_classes = 3;
    cfg.targets_per_class = 15;
    cfg.n_attr_nodes_per_type = {9, 12};
    cfg.edge_purity = 0.7;
    cfg.seed = 4;
    const HinDataset ds = generate_synthetic(cfg);
    const int n_targets = 45;
    REQUIRE(ds.graph.n_edges() == n_targets);
    for (int e = 0; e < ds.graph.n_edges(); ++e) {
        const auto& edge = ds.graph.hyperedges[static_cast<size_t>(e)];
        REQUIRE(edge.size() == 3);
        CHECK(edge[0] == e);  // the target node
        CHECK(ds.graph.types.node_type[static_cast<size_t>(edge[0])] == 0);
        CHECK(ds.graph.types.node_type[static_cast<size_t>(edge[1])] == 1);
        CHECK(ds.graph.types.node_type[static_cast<size_t>(edge[2])] == 2);
    }
}

TEST_CASE("edge purity controls the aligned-draw fraction") {
    SyntheticConfig cfg;
    cfg.n_classes = 2;
    cfg.targets_per_class = 150;  // 600 attribute draws
    cfg.n_attr_nodes_per_type = {20, 20};
    cfg.edge_purity = 0.5;
    cfg.seed = 11;
    const HinDataset ds = generate_synthetic(cfg);

    int aligned = 0, total = 0;
    const int n_targets = cfg.n_classes * cfg.targets_per_class;
    for (const auto& edge : ds.graph.hyperedges) {
        const int cls = ds.labels[static_cast<size_t>(edge[0])];
        for (int a = 0; a < 2; ++a) {
            const int base = n_targets + (a == 1 ? cfg.n_attr_nodes_per_type[0] : 0);
            const int local = edge[static_cast<size_t>(a) + 1] - base;
            const int count = cfg.n_attr_nodes_per_type[static_cast<size_t>(a)];
            const int lo = cls * count / cfg.n_classes;
            const int hi = (cls + 1) * count / cfg.n_classes;
            aligned += (local >= lo && local < hi) ? 1 : 0;
            ++total;
        }
    }
    REQUIRE(total >= 400);
    const double fraction = static_cast<double>(aligned) / total;
    CHECK(fraction > 0.4);
    CHECK(fraction < 0.6);
}

TEST_CASE("splits are stratified 24/6/70 within one node per class") {
    SyntheticConfig cfg;
    cfg.n_classes = 2;
    cfg.targets_per_class = 50;
    cfg.seed = 3;
    const HinDataset ds = generate_synthetic(cfg);
    for (int cls = 0; cls < 2; ++cls) {
        auto count_in = [&](const std::vector<int>& split) {
            int c = 0;
            for (int v : split) c += ds.labels[static_cast<size_t>(v)] == cls ? 1 : 0;
            return c;
        };
        CHECK(std::abs(count_in(ds.train_idx) - 12) <= 1);  // 24% of 50
        CHECK(std::abs(count_in(ds.val_idx) - 3) <= 1);     // 6% of 50
        CHECK(std::abs(count_in(ds.test_idx) - 35) <= 1);
    }
}

TEST_CASE("save then load is the identity on every field") {
    SyntheticConfig cfg;
    cfg.n_classes = 3;
    cfg.targets_per_class = 10;
    cfg.edge_purity = 0.6;
    cfg.label_signal = 0.5;
    cfg.seed = 19;
    const HinDataset ds = generate_synthetic(cfg);
    const fs::path dir = fresh_dir("roundtrip");
    save_dataset(ds, dir);
    const HinDataset loaded = load_dataset(dir);
    CHECK(datasets_equal(ds, loaded));
    CHECK(ds.schema_hash() == loaded.schema_hash());
}

TEST_CASE("synthetic config validation") {
    SyntheticConfig cfg;
    cfg.edge_purity = 1.5;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg = SyntheticConfig{};
    cfg.n_classes = 1;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg = SyntheticConfig{};
    cfg.n_attr_nodes_per_type = {1, 10};
    cfg.n_classes = 2;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
}

TEST_CASE("embeddings export round-trips bit-exactly") {
    Rng rng(5);
    Matrix emb(2, 2);
    for (double& v : emb.data()) v = rng.normal(0.0, 1.0) * 1e-3;
    emb(0, 0) = 1.0 / 3.0;  // not exactly representable in decimal

    const fs::path path = fresh_dir("emb") / "embeddings.tsv";
    write_embeddings(path, emb, {"n0", "n1"});

    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);  // header + 2 rows

    std::vector<std::string> ids;
    const Matrix back = read_embeddings(path, &ids);
    CHECK(back == emb);
    CHECK(ids == std::vector<std::string>{"n0", "n1"});

    CHECK_THROWS_AS(write_embeddings(path, emb, {"only_one"}), DimensionError);
}

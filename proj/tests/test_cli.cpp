#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "protohat/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = PROTOHAT_BIN_PATH;

int run(const std::string& args, const std::string& redirect = "") {
    const std::string cmd = kBin + " " + args +
                            (redirect.empty() ? " >/dev/null 2>&1" : " >" + redirect + " 2>&1");
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("protohat_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

json last_json_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return json::parse(last);
}

const std::string kGenFlags = "--classes 2 --targets 16 --purity 1.0 --signal 1.0 --seed 7";
const std::string kTrainFlags = "--hidden 8 --layers 1 --lr 0.01 --max-epochs 40 --patience 40";

}  // namespace

TEST_CASE("gen produces a loadable dataset and is deterministic") {
    const fs::path a = fresh("gen_a"), b = fresh("gen_b");
    REQUIRE(run("gen " + kGenFlags + " -o " + a.string()) == 0);
    REQUIRE(run("gen " + kGenFlags + " -o " + b.string()) == 0);

    const protohat::HinDataset ds = protohat::load_dataset(a);
    CHECK(ds.n_nodes() == 32 + 20);  // 32 targets + default 10+10 attrs
    CHECK(ds.graph.n_edges() == 32);

    for (const auto& entry : fs::directory_iterator(a))
        CHECK(same_bytes(entry.path(), b / entry.path().filename()));
}

TEST_CASE("gen rejects out-of-range purity with exit code 2") {
    const fs::path out = fresh("gen_bad");
    const fs::path log = fs::temp_directory_path() / "protohat_cli_gen_bad.log";
    CHECK(run("gen --purity 1.5 -o " + out.string(), log.string()) == 2);
    const std::string text = slurp(log);
    CHECK(text.find("purity") != std::string::npos);
}

TEST_CASE("unknown flags exit with code 2, help with 0") {
    CHECK(run("train --definitely-not-a-flag x -o y") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("gen --help") == 0);
}

TEST_CASE("multi-seed training writes per-run directories and aggregate metrics") {
    const fs::path data = fresh("ms_data"), out = fresh("ms_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + out.string() + " " + kTrainFlags +
                " --seeds 5") == 0);

    const json metrics = json::parse(slurp(out / "metrics.json"));
    CHECK(metrics.at("runs").size() == 5);
    CHECK(metrics.contains("mean_test_micro_f1"));
    CHECK(metrics.contains("std_test_micro_f1"));
    CHECK(metrics.contains("mean_test_macro_f1"));
    CHECK(metrics.contains("std_test_macro_f1"));
    for (uint64_t s = 1; s <= 5; ++s) {
        CHECK(fs::exists(out / ("seed" + std::to_string(s)) / "checkpoint.bin"));
        CHECK(fs::exists(out / ("seed" + std::to_string(s)) / "report.jsonl"));
    }
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("eval right after train reproduces the stored test and val numbers") {
    const fs::path data = fresh("ev_data"), out = fresh("ev_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + out.string() + " " + kTrainFlags) == 0);

    const json metrics = json::parse(slurp(out / "metrics.json"));
    const json run0 = metrics.at("runs").at(0);

    const fs::path log = fs::temp_directory_path() / "protohat_cli_eval.json";
    REQUIRE(run("eval " + out.string() + " " + data.string() + " --split test", log.string()) == 0);
    const json test_eval = json::parse(slurp(log));
    CHECK(test_eval.at("micro_f1").get<double>() == run0.at("test_micro_f1").get<double>());
    CHECK(test_eval.at("macro_f1").get<double>() == run0.at("test_macro_f1").get<double>());

    // --split val equals the best-epoch record
    REQUIRE(run("eval " + out.string() + " " + data.string() + " --split val", log.string()) == 0);
    const json val_eval = json::parse(slurp(log));
    const int best_epoch = run0.at("best_epoch").get<int>();
    std::ifstream report(out / "report.jsonl");
    std::string line;
    json best_rec;
    while (std::getline(report, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        if (rec.contains("epoch") && rec.at("epoch").get<int>() == best_epoch) best_rec = rec;
    }
    REQUIRE(!best_rec.is_null());
    CHECK(val_eval.at("micro_f1").get<double>() == best_rec.at("val_micro_f1").get<double>());
}

TEST_CASE("eval on the wrong dataset fails with a schema-hash error and exit 2") {
    const fs::path data = fresh("wh_data"), other = fresh("wh_other"), out = fresh("wh_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("gen --classes 2 --targets 9 --seed 3 -o " + other.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + out.string() + " " + kTrainFlags) == 0);

    const fs::path log = fs::temp_directory_path() / "protohat_cli_hash.log";
    CHECK(run("eval " + out.string() + " " + other.string(), log.string()) == 2);
    CHECK(slurp(log).find("schema-hash") != std::string::npos);
}

TEST_CASE("lambda 0 and --no-regularizer produce byte-identical reports") {
    const fs::path data = fresh("ab_data"), a = fresh("ab_a"), b = fresh("ab_b");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + a.string() + " " + kTrainFlags +
                " --lambda 0") == 0);
    REQUIRE(run("train " + data.string() + " -o " + b.string() + " " + kTrainFlags +
                " --lambda 0 --no-regularizer") == 0);
    CHECK(same_bytes(a / "report.jsonl", b / "report.jsonl"));
    CHECK(same_bytes(a / "metrics.json", b / "metrics.json"));
}

TEST_CASE("identical seed and config give bitwise identical checkpoints and reports") {
    const fs::path data = fresh("det_data"), a = fresh("det_a"), b = fresh("det_b");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    const std::string flags = " " + kTrainFlags + " --lambda 1e-4 --seed 11";
    REQUIRE(run("train " + data.string() + " -o " + a.string() + flags) == 0);
    REQUIRE(run("train " + data.string() + " -o " + b.string() + flags) == 0);
    CHECK(same_bytes(a / "checkpoint.bin", b / "checkpoint.bin"));
    CHECK(same_bytes(a / "report.jsonl", b / "report.jsonl"));
    CHECK(same_bytes(a / "metrics.json", b / "metrics.json"));
}

TEST_CASE("--from-manifest reproduces a run exactly") {
    const fs::path data = fresh("fm_data"), a = fresh("fm_a"), b = fresh("fm_b");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + a.string() + " " + kTrainFlags +
                " --lambda 1e-5 --seed 9") == 0);
    REQUIRE(run("train --from-manifest " + (a / "manifest.json").string() + " -o " + b.string()) ==
            0);
    CHECK(same_bytes(a / "checkpoint.bin", b / "checkpoint.bin"));
    CHECK(same_bytes(a / "report.jsonl", b / "report.jsonl"));
    CHECK(same_bytes(a / "metrics.json", b / "metrics.json"));
}

TEST_CASE("ablation flags run the softmax baseline") {
    const fs::path data = fresh("bl_data"), out = fresh("bl_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + out.string() + " " + kTrainFlags +
                " --no-prototype-classifier --no-regularizer") == 0);
    const json metrics = json::parse(slurp(out / "metrics.json"));
    CHECK(metrics.at("runs").size() == 1);
    // every epoch line carries lambda 0 under the full ablation
    std::ifstream report(out / "report.jsonl");
    std::string line;
    while (std::getline(report, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        if (rec.contains("lambda")) CHECK(rec.at("lambda").get<double>() == 0.0);
    }
}

TEST_CASE("dump flags write attention, prototype and embedding artifacts") {
    const fs::path data = fresh("dump_data"), out = fresh("dump_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    REQUIRE(run("train " + data.string() + " -o " + out.string() + " " + kTrainFlags +
                " --layers 2 --dump-attention --dump-prototypes --dump-embeddings") == 0);

    for (int l = 0; l < 2; ++l) {
        CHECK(fs::exists(out / ("attention_l" + std::to_string(l) + "_h0_alpha.tsv")));
        CHECK(fs::exists(out / ("attention_l" + std::to_string(l) + "_h0_beta.tsv")));
    }
    CHECK(fs::exists(out / "prototypes.tsv"));

    std::vector<std::string> ids;
    const protohat::Matrix emb = protohat::read_embeddings(out / "embeddings.tsv", &ids);
    const protohat::HinDataset ds = protohat::load_dataset(data);
    CHECK(emb.rows() == ds.n_nodes());
    CHECK(emb.cols() == 8);
    CHECK(ids == ds.node_ids);

    // prototypes.tsv names train nodes
    const std::string protos = slurp(out / "prototypes.tsv");
    CHECK(protos.find("nearest_train_nodes") != std::string::npos);
    CHECK(protos.find("t") != std::string::npos);
}

TEST_CASE("presets resolve the published hyperparameters") {
    const fs::path data = fresh("preset_data"), out = fresh("preset_out");
    REQUIRE(run("gen " + kGenFlags + " -o " + data.string()) == 0);
    // acm preset: hidden 64, 3 layers, lambda 1e-6; shrink epochs to keep it quick
    REQUIRE(run("train " + data.string() + " -o " + out.string() +
                " --preset acm --max-epochs 3 --patience 3") == 0);
    const json manifest = json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.at("config").at("hidden_dim").get<int>() == 64);
    CHECK(manifest.at("config").at("n_layers").get<int>() == 3);
    CHECK(manifest.at("config").at("lambda").get<double>() == 1e-6);
    CHECK(manifest.at("config").at("learning_rate").get<double>() == 1e-3);
    CHECK(manifest.at("config").at("patience").get<int>() == 3);

    const json summary = last_json_line(out / "report.jsonl");
    CHECK(summary.contains("test_micro_f1"));
}

TEST_CASE("missing dataset directory exits with code 2") {
    const fs::path out = fresh("missing_out");
    CHECK(run("train /definitely/not/here -o " + out.string()) == 2);
}

// protohat command line: generate synthetic datasets, train, evaluate.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "protohat/dataset.hpp"
#include "protohat/errors.hpp"
#include "protohat/train.hpp"
#include "protohat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace protohat;

namespace {

std::string join_command(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        if (i) cmd += ' ';
        const std::string arg = argv[i];
        cmd += arg.find(' ') == std::string::npos ? arg : "'" + arg + "'";
    }
    return cmd;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix_tsv(const fs::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << '\t';
            out << fmt_g17(m(i, j));
        }
        out << '\n';
    }
}

struct GenOptions {
    SyntheticConfig cfg;
    std::string out_dir;
};

int run_gen(const GenOptions& opt, const std::string& command) {
    HinDataset ds = generate_synthetic(opt.cfg);
    save_dataset(ds, opt.out_dir);

    json manifest;
    manifest["command"] = command;
    manifest["tool_version"] = kVersion;
    manifest["kind"] = "gen";
    manifest["config"] = json{{"n_classes", opt.cfg.n_classes},
                              {"targets_per_class", opt.cfg.targets_per_class},
                              {"n_attr_nodes_per_type", opt.cfg.n_attr_nodes_per_type},
                              {"target_feature_dim", opt.cfg.target_feature_dim},
                              {"attr_feature_dims", opt.cfg.attr_feature_dims},
                              {"label_signal", opt.cfg.label_signal},
                              {"edge_purity", opt.cfg.edge_purity},
                              {"seed", opt.cfg.seed}};
    manifest["schema_hash"] = ds.schema_hash();
    write_json_file(fs::path(opt.out_dir) / "manifest.json", manifest);

    std::cout << "wrote dataset to " << opt.out_dir << " (n=" << ds.n_nodes()
              << ", m=" << ds.graph.n_edges() << ", c=" << ds.n_classes
              << ", hash=" << ds.schema_hash() << ")\n";
    return 0;
}

struct TrainOptions {
    std::string dataset_dir;
    std::string out_dir;
    std::string from_manifest;
    TrainConfig cfg;
    int n_seeds = 1;
    bool parallel = false;
    bool dump_attention = false;
    bool dump_prototypes = false;
    bool dump_embeddings = false;
    std::vector<uint64_t> seeds;  // resolved
};

void dump_attention_maps(const fs::path& dir, const HinDataset& ds, const IncidenceMatrix& inc,
                         ModelParams& params, const ModelConfig& mc) {
    Tape t;
    ForwardResult fr = forward_model(t, ds, inc, params, mc, nullptr);
    for (size_t l = 0; l < fr.layers.size(); ++l)
        for (size_t h = 0; h < fr.layers[l].heads.size(); ++h) {
            const std::string base = "attention_l" + std::to_string(l) + "_h" + std::to_string(h);
            write_matrix_tsv(dir / (base + "_alpha.tsv"), t.value(fr.layers[l].heads[h].alpha));
            write_matrix_tsv(dir / (base + "_beta.tsv"), t.value(fr.layers[l].heads[h].beta));
        }
}

void dump_prototype_table(const fs::path& path, const HinDataset& ds, const IncidenceMatrix& inc,
                          ModelParams& params, const ModelConfig& mc) {
    if (!params.proto_head) return;
    Tape t;
    ForwardResult fr = forward_model(t, ds, inc, params, mc, nullptr);
    const Matrix& f = t.value(fr.F_final);

    Matrix train_rows(static_cast<int>(ds.train_idx.size()), f.cols());
    for (size_t i = 0; i < ds.train_idx.size(); ++i)
        for (int j = 0; j < f.cols(); ++j)
            train_rows(static_cast<int>(i), j) = f(ds.train_idx[i], j);
    Matrix z = matmul(train_rows, transpose(params.proto_head->theta.value));
    if (params.proto_head->bias)
        for (int i = 0; i < z.rows(); ++i)
            for (int j = 0; j < z.cols(); ++j) z(i, j) += params.proto_head->bias->value(0, j);

    const Matrix& protos = params.proto_head->bank.prototypes.value;
    const int k = params.proto_head->bank.k;
    const Matrix d2 = pairwise_sq_dist(protos, z);  // (c*k) x n_train

    std::ofstream out(path);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    out << "class\tprototype";
    for (int j = 0; j < protos.cols(); ++j) out << "\tdim" << j;
    out << "\tnearest_train_nodes\n";
    for (int r = 0; r < protos.rows(); ++r) {
        out << (r / k) << '\t' << (r % k);
        for (int j = 0; j < protos.cols(); ++j) out << '\t' << fmt_g17(protos(r, j));
        std::vector<int> order(ds.train_idx.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return d2(r, a) < d2(r, b); });
        out << '\t';
        const size_t top = std::min<size_t>(5, order.size());
        for (size_t i = 0; i < top; ++i) {
            if (i) out << ';';
            const int v = ds.train_idx[static_cast<size_t>(order[i])];
            char dist[32];
            std::snprintf(dist, sizeof(dist), "%.6g", std::sqrt(d2(r, order[i])));
            out << ds.node_ids[static_cast<size_t>(v)] << ':' << dist;
        }
        out << '\n';
    }
}

json run_metrics_json(const SeedRun& run) {
    return json{{"seed", run.seed},
                {"best_epoch", run.report.best_epoch},
                {"best_val_metric", run.report.best_val_metric},
                {"test_micro_f1", run.report.test_micro_f1},
                {"test_macro_f1", run.report.test_macro_f1},
                {"epochs_run", run.report.epochs.size()}};
}

void write_run_artifacts(const fs::path& dir, const HinDataset& ds, const IncidenceMatrix& inc,
                         const TrainOptions& opt, const TrainConfig& cfg, SeedRun& run,
                         ModelParams& params, const std::string& hash) {
    fs::create_directories(dir);
    save_checkpoint(dir / "checkpoint.bin", cfg, hash, params);
    write_report_jsonl(dir / "report.jsonl", run.report, cfg.monitor);
    write_json_file(dir / "metrics.json", run_metrics_json(run));
    write_json_file(dir / "timing.json", json{{"wall_time_s", run.report.wall_time_s}});
    if (opt.dump_attention) dump_attention_maps(dir, ds, inc, params, cfg.model);
    if (opt.dump_prototypes) dump_prototype_table(dir / "prototypes.tsv", ds, inc, params, cfg.model);
    if (opt.dump_embeddings) {
        Tape t;
        ForwardResult fr = forward_model(t, ds, inc, params, cfg.model, nullptr);
        write_embeddings(dir / "embeddings.tsv", t.value(fr.F_final), ds.node_ids);
    }
}

int run_train(TrainOptions& opt, const std::string& command) {
    if (!opt.from_manifest.empty()) {
        const json manifest = [&] {
            std::ifstream in(opt.from_manifest);
            if (!in) throw LoadError(opt.from_manifest + ": cannot open manifest");
            json j;
            in >> j;
            return j;
        }();
        if (opt.dataset_dir.empty()) opt.dataset_dir = manifest.at("dataset").at("path");
        opt.cfg = config_from_json(manifest.at("config"));
        opt.seeds = manifest.at("seeds").get<std::vector<uint64_t>>();
    }
    if (opt.dataset_dir.empty()) throw ConfigError("train: no dataset directory given");
    opt.cfg.check();

    HinDataset ds = load_dataset(opt.dataset_dir);
    const std::string hash = ds.schema_hash();
    if (!opt.from_manifest.empty()) {
        std::ifstream in(opt.from_manifest);
        json manifest;
        in >> manifest;
        const std::string recorded = manifest.at("dataset").at("hash");
        if (recorded != hash)
            throw LoadError("manifest dataset hash " + recorded + " does not match " + hash);
    }

    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir);

    json manifest;
    manifest["command"] = command;
    manifest["tool_version"] = kVersion;
    manifest["kind"] = "train";
    manifest["dataset"] = json{{"path", opt.dataset_dir}, {"hash", hash}};
    manifest["config"] = config_to_json(opt.cfg);
    manifest["seeds"] = opt.seeds;
    manifest["output_dir"] = opt.out_dir;
    write_json_file(out_dir / "manifest.json", manifest);

    const IncidenceMatrix inc = build_incidence(ds.graph);

    SeedSummary summary;
    summary.runs.resize(opt.seeds.size());
    std::vector<ModelParams> trained(opt.seeds.size());
    auto run_one = [&](size_t i) {
        TrainConfig c = opt.cfg;
        c.seed = opt.seeds[i];
        auto [params, report] = train(ds, c);
        trained[i] = std::move(params);
        summary.runs[i] = SeedRun{opt.seeds[i], std::move(report)};
    };
    if (opt.parallel && opt.seeds.size() > 1) {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < opt.seeds.size(); ++i) pool.emplace_back(run_one, i);
        for (auto& th : pool) th.join();
    } else {
        for (size_t i = 0; i < opt.seeds.size(); ++i) run_one(i);
    }

    auto mean_std = [&](auto pick) {
        double mean = 0.0;
        for (const SeedRun& r : summary.runs) mean += pick(r);
        mean /= static_cast<double>(summary.runs.size());
        double var = 0.0;
        if (summary.runs.size() > 1) {
            for (const SeedRun& r : summary.runs) var += (pick(r) - mean) * (pick(r) - mean);
            var /= static_cast<double>(summary.runs.size() - 1);
        }
        return std::make_pair(mean, std::sqrt(var));
    };
    std::tie(summary.mean_micro_f1, summary.std_micro_f1) =
        mean_std([](const SeedRun& r) { return r.report.test_micro_f1; });
    std::tie(summary.mean_macro_f1, summary.std_macro_f1) =
        mean_std([](const SeedRun& r) { return r.report.test_macro_f1; });

    json metrics;
    metrics["seeds"] = opt.seeds;
    json runs = json::array();
    for (const SeedRun& r : summary.runs) runs.push_back(run_metrics_json(r));
    metrics["runs"] = runs;
    metrics["mean_test_micro_f1"] = summary.mean_micro_f1;
    metrics["std_test_micro_f1"] = summary.std_micro_f1;
    metrics["mean_test_macro_f1"] = summary.mean_macro_f1;
    metrics["std_test_macro_f1"] = summary.std_macro_f1;
    write_json_file(out_dir / "metrics.json", metrics);

    if (opt.seeds.size() == 1) {
        TrainConfig c = opt.cfg;
        c.seed = opt.seeds[0];
        write_run_artifacts(out_dir, ds, inc, opt, c, summary.runs[0], trained[0], hash);
    } else {
        double total_time = 0.0;
        for (size_t i = 0; i < opt.seeds.size(); ++i) {
            TrainConfig c = opt.cfg;
            c.seed = opt.seeds[i];
            write_run_artifacts(out_dir / ("seed" + std::to_string(opt.seeds[i])), ds, inc, opt, c,
                                summary.runs[i], trained[i], hash);
            total_time += summary.runs[i].report.wall_time_s;
        }
        write_json_file(out_dir / "timing.json", json{{"total_wall_time_s", total_time}});
    }

    for (const SeedRun& r : summary.runs)
        std::cout << "seed " << r.seed << ": best_epoch " << r.report.best_epoch << ", test micro-F1 "
                  << r.report.test_micro_f1 << ", test macro-F1 " << r.report.test_macro_f1 << "\n";
    std::printf("test micro-F1 %.4f +/- %.4f | test macro-F1 %.4f +/- %.4f\n",
                summary.mean_micro_f1, summary.std_micro_f1, summary.mean_macro_f1,
                summary.std_macro_f1);
    return 0;
}

struct EvalOptions {
    std::string checkpoint;
    std::string dataset_dir;
    std::string split = "test";
};

int run_eval(const EvalOptions& opt) {
    fs::path ckpt_path(opt.checkpoint);
    if (fs::is_directory(ckpt_path)) ckpt_path /= "checkpoint.bin";
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    HinDataset ds = load_dataset(opt.dataset_dir);
    if (ds.schema_hash() != ckpt.schema_hash)
        throw LoadError("schema-hash mismatch: checkpoint was trained on " + ckpt.schema_hash +
                        ", dataset is " + ds.schema_hash());

    ModelParams params = init_model_params(ds, ckpt.config.model, ckpt.config.seed);
    apply_checkpoint(ckpt, params);
    const IncidenceMatrix inc = build_incidence(ds.graph);

    const std::vector<int>* split = &ds.test_idx;
    if (opt.split == "train")
        split = &ds.train_idx;
    else if (opt.split == "val")
        split = &ds.val_idx;
    else if (opt.split != "test")
        throw ConfigError("eval: split must be train, val or test");

    const Evaluation ev = evaluate_split(ds, inc, params, ckpt.config.model, *split);
    json out{{"split", opt.split},
             {"n", split->size()},
             {"micro_f1", ev.micro_f1},
             {"macro_f1", ev.macro_f1}};
    std::cout << out.dump() << "\n";
    return 0;
}

void apply_preset(TrainConfig& cfg, const std::string& preset) {
    if (preset == "wikiart") {
        cfg.model.hidden_dim = 512;
        cfg.model.n_layers = 2;
        cfg.model.n_heads = 1;
        cfg.lambda = 1e-6;
    } else if (preset == "acm") {
        cfg.model.hidden_dim = 64;
        cfg.model.n_layers = 3;
        cfg.model.n_heads = 1;
        cfg.lambda = 1e-6;
    } else if (preset == "dblp") {
        cfg.model.hidden_dim = 64;
        cfg.model.n_layers = 3;
        cfg.model.n_heads = 1;
        cfg.lambda = 1e-3;
    } else {
        throw ConfigError("unknown preset '" + preset + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"protohat: prototype-enhanced hypergraph learning for node classification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    const std::string command = join_command(argc, argv);

    // gen
    GenOptions gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic planted-partition dataset");
    cmd_gen->add_option("-o,--out", gen.out_dir, "output dataset directory")->required();
    cmd_gen->add_option("--classes", gen.cfg.n_classes, "number of classes");
    cmd_gen->add_option("--targets", gen.cfg.targets_per_class, "target nodes per class");
    cmd_gen->add_option("--attr-nodes", gen.cfg.n_attr_nodes_per_type,
                        "attribute node counts (two values)");
    cmd_gen->add_option("--target-dim", gen.cfg.target_feature_dim, "target feature width");
    cmd_gen->add_option("--attr-dims", gen.cfg.attr_feature_dims,
                        "attribute feature widths (two values)");
    cmd_gen->add_option("--signal", gen.cfg.label_signal, "fraction of dims carrying class signal")
        ->check(CLI::Range(0.0, 1.0));
    cmd_gen->add_option("--purity", gen.cfg.edge_purity, "P(attribute node is class-aligned)")
        ->check(CLI::Range(0.0, 1.0));
    cmd_gen->add_option("--seed", gen.cfg.seed, "generator seed");

    // train
    TrainOptions tr;
    std::string preset;
    uint64_t base_seed = 1;
    CLI::App* cmd_train = app.add_subcommand("train", "train on a dataset directory");
    cmd_train->add_option("dataset", tr.dataset_dir, "dataset directory");
    cmd_train->add_option("-o,--out", tr.out_dir, "run output directory")->required();
    cmd_train->add_option("--from-manifest", tr.from_manifest,
                          "reproduce a previous run from its manifest.json");
    cmd_train->add_option("--preset", preset, "hyperparameter preset: wikiart, acm or dblp");
    cmd_train->add_option("--seeds", tr.n_seeds, "number of consecutive seeds to run")
        ->check(CLI::PositiveNumber);
    cmd_train->add_option("--seed", base_seed, "base seed");
    cmd_train->add_flag("--parallel", tr.parallel, "run seeds in parallel threads");
    auto* o_hidden = cmd_train->add_option("--hidden", tr.cfg.model.hidden_dim, "hidden dimension");
    auto* o_layers = cmd_train->add_option("--layers", tr.cfg.model.n_layers, "attention layers");
    auto* o_heads = cmd_train->add_option("--heads", tr.cfg.model.n_heads, "attention heads");
    auto* o_kproto =
        cmd_train->add_option("--k-prototypes", tr.cfg.model.k_prototypes, "prototypes per class");
    auto* o_pdim = cmd_train->add_option("--prototype-dim", tr.cfg.model.prototype_dim,
                                         "prototype width (0 = hidden)");
    auto* o_slope =
        cmd_train->add_option("--leaky-slope", tr.cfg.model.leaky_slope, "LeakyReLU slope");
    std::string activation = "leaky_relu";
    auto* o_act = cmd_train->add_option("--activation", activation,
                                        "output nonlinearity: leaky_relu, relu, tanh, identity");
    auto* o_dropout = cmd_train->add_option("--dropout", tr.cfg.model.dropout, "input dropout rate");
    auto* o_bias =
        cmd_train->add_flag("--classifier-bias", tr.cfg.model.classifier_bias, "bias in g(.;theta)");
    auto* o_pstd = cmd_train->add_option("--proto-init-std", tr.cfg.model.proto_init_std,
                                         "prototype init stddev");
    auto* o_lr = cmd_train->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate");
    auto* o_lambda = cmd_train->add_option("--lambda", tr.cfg.lambda, "regularizer weight");
    auto* o_epochs = cmd_train->add_option("--max-epochs", tr.cfg.max_epochs, "epoch budget");
    auto* o_patience = cmd_train->add_option("--patience", tr.cfg.patience, "early-stop patience");
    std::string monitor = "val_micro_f1";
    auto* o_monitor =
        cmd_train->add_option("--monitor", monitor, "early-stop monitor: val_micro_f1 or val_loss");
    std::string reg_red = "mean";
    auto* o_regred =
        cmd_train->add_option("--reg-reduction", reg_red, "regularizer reduction: mean or sum");
    auto* o_reglayer = cmd_train->add_option("--reg-layer", tr.cfg.reg_layer,
                                             "layer whose F is regularized (-1 = final)");
    auto* o_wd = cmd_train->add_option("--weight-decay", tr.cfg.weight_decay, "L2 weight decay");
    auto* o_clip = cmd_train->add_option("--grad-clip", tr.cfg.grad_clip, "global grad-norm clip");
    bool no_proto = false, no_reg = false;
    cmd_train->add_flag("--no-prototype-classifier", no_proto,
                        "ablation: plain softmax classifier");
    cmd_train->add_flag("--no-regularizer", no_reg, "ablation: drop the hyperedge regularizer");
    cmd_train->add_flag("--dump-attention", tr.dump_attention, "write alpha/beta maps");
    cmd_train->add_flag("--dump-prototypes", tr.dump_prototypes,
                        "write prototypes and nearest train nodes");
    cmd_train->add_flag("--dump-embeddings", tr.dump_embeddings, "write final node embeddings");

    // eval
    EvalOptions ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    cmd_eval->add_option("checkpoint", ev.checkpoint, "checkpoint file or run directory")
        ->required();
    cmd_eval->add_option("dataset", ev.dataset_dir, "dataset directory")->required();
    cmd_eval->add_option("--split", ev.split, "train, val or test");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_gen->parsed()) return run_gen(gen, command);
        if (cmd_train->parsed()) {
            // Precedence: defaults < preset < explicit flags. --from-manifest
            // is reproduction mode and takes config and seeds wholesale from
            // the recorded manifest instead.
            TrainConfig parsed = tr.cfg;
            if (!preset.empty()) {
                TrainConfig base;
                apply_preset(base, preset);
                if (!o_hidden->count()) parsed.model.hidden_dim = base.model.hidden_dim;
                if (!o_layers->count()) parsed.model.n_layers = base.model.n_layers;
                if (!o_heads->count()) parsed.model.n_heads = base.model.n_heads;
                if (!o_lambda->count()) parsed.lambda = base.lambda;
            }
            tr.cfg = parsed;
            if (o_act->count()) tr.cfg.model.activation = activation_from_string(activation);
            if (o_monitor->count()) tr.cfg.monitor = monitor_from_string(monitor);
            if (o_regred->count()) tr.cfg.reg_reduction = reg_reduction_from_string(reg_red);
            if (no_proto) tr.cfg.model.use_prototype_classifier = false;
            if (no_reg) tr.cfg.use_regularizer = false;
            tr.seeds.clear();
            for (int i = 0; i < tr.n_seeds; ++i) tr.seeds.push_back(base_seed + static_cast<uint64_t>(i));
            // silence unused warnings for options consulted only via cfg
            (void)o_kproto; (void)o_pdim; (void)o_slope; (void)o_dropout; (void)o_bias;
            (void)o_pstd; (void)o_lr; (void)o_epochs; (void)o_patience; (void)o_reglayer;
            (void)o_wd; (void)o_clip;
            return run_train(tr, command);
        }
        if (cmd_eval->parsed()) return run_eval(ev);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

#include "protohat/train.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>
#include <tuple>

#include "protohat/errors.hpp"

namespace protohat {

using nlohmann::json;

std::string to_string(Monitor m) { return m == Monitor::ValMicroF1 ? "val_micro_f1" : "val_loss"; }

Monitor monitor_from_string(const std::string& s) {
    if (s == "val_micro_f1") return Monitor::ValMicroF1;
    if (s == "val_loss") return Monitor::ValLoss;
    throw ConfigError("unknown monitor '" + s + "'");
}

std::string to_string(RegReduction r) { return r == RegReduction::Mean ? "mean" : "sum"; }

RegReduction reg_reduction_from_string(const std::string& s) {
    if (s == "mean") return RegReduction::Mean;
    if (s == "sum") return RegReduction::Sum;
    throw ConfigError("unknown reg reduction '" + s + "'");
}

void TrainConfig::check() const {
    model.check();
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (reg_layer < -1 || reg_layer > model.n_layers)
        throw ConfigError("reg_layer must be -1 or in [0, n_layers]");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

json config_to_json(const TrainConfig& cfg) {
    return json{{"hidden_dim", cfg.model.hidden_dim},
                {"n_layers", cfg.model.n_layers},
                {"n_heads", cfg.model.n_heads},
                {"k_prototypes", cfg.model.k_prototypes},
                {"prototype_dim", cfg.model.prototype_dim},
                {"leaky_slope", cfg.model.leaky_slope},
                {"activation", to_string(cfg.model.activation)},
                {"use_prototype_classifier", cfg.model.use_prototype_classifier},
                {"classifier_bias", cfg.model.classifier_bias},
                {"dropout", cfg.model.dropout},
                {"proto_init_std", cfg.model.proto_init_std},
                {"learning_rate", cfg.learning_rate},
                {"lambda", cfg.lambda},
                {"max_epochs", cfg.max_epochs},
                {"patience", cfg.patience},
                {"seed", cfg.seed},
                {"use_regularizer", cfg.use_regularizer},
                {"monitor", to_string(cfg.monitor)},
                {"reg_reduction", to_string(cfg.reg_reduction)},
                {"reg_layer", cfg.reg_layer},
                {"weight_decay", cfg.weight_decay},
                {"grad_clip", cfg.grad_clip}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.model.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.model.n_layers = j.at("n_layers").get<int>();
    cfg.model.n_heads = j.at("n_heads").get<int>();
    cfg.model.k_prototypes = j.at("k_prototypes").get<int>();
    cfg.model.prototype_dim = j.at("prototype_dim").get<int>();
    cfg.model.leaky_slope = j.at("leaky_slope").get<double>();
    cfg.model.activation = activation_from_string(j.at("activation").get<std::string>());
    cfg.model.use_prototype_classifier = j.at("use_prototype_classifier").get<bool>();
    cfg.model.classifier_bias = j.at("classifier_bias").get<bool>();
    cfg.model.dropout = j.at("dropout").get<double>();
    cfg.model.proto_init_std = j.at("proto_init_std").get<double>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.patience = j.at("patience").get<int>();
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.use_regularizer = j.at("use_regularizer").get<bool>();
    cfg.monitor = monitor_from_string(j.at("monitor").get<std::string>());
    cfg.reg_reduction = reg_reduction_from_string(j.at("reg_reduction").get<std::string>());
    cfg.reg_layer = j.at("reg_layer").get<int>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.grad_clip = j.at("grad_clip").get<double>();
    return cfg;
}

Var hyperedge_prototype_reg(Tape& t, Var F, const IncidenceMatrix& inc, RegReduction reduction) {
    const Matrix& fv = t.value(F);
    if (fv.rows() != inc.n_nodes())
        throw DimensionError("hyperedge_prototype_reg: F has " + std::to_string(fv.rows()) +
                             " rows, incidence has " + std::to_string(inc.n_nodes()) + " nodes");
    std::vector<double> inv_deg;
    inv_deg.reserve(inc.degree.size());
    for (int d : inc.degree) {
        if (d < 1) throw StructuralError("hyperedge_prototype_reg: zero-degree hyperedge");
        inv_deg.push_back(1.0 / d);
    }
    // F F' I computed as F (F' I) to stay n x m throughout.
    Var fti = t.matmul(t.transpose(F), t.constant(inc.I));  // d x m
    Var reconstructed = t.col_scale(t.matmul(F, fti), std::move(inv_deg));
    Var residual = t.sub(t.constant(inc.I), reconstructed);
    Var ss = t.sum_sq(residual);
    if (reduction == RegReduction::Sum) return ss;
    return t.scale(ss, 1.0 / static_cast<double>(t.value(residual).size()));
}

TotalLossResult total_loss(Tape& t, const HinDataset& ds, const IncidenceMatrix& inc,
                           ModelParams& params, const TrainConfig& cfg,
                           const std::vector<int>& rows, Rng* dropout_rng) {
    cfg.check();
    if (rows.empty()) throw ConfigError("total_loss: empty supervision split");

    TotalLossResult result;
    result.forward = forward_model(t, ds, inc, params, cfg.model, dropout_rng);

    std::vector<int> row_labels;
    row_labels.reserve(rows.size());
    for (int v : rows) {
        const int y = ds.labels[static_cast<size_t>(v)];
        if (y < 0) throw ConfigError("total_loss: unlabeled node in supervision split");
        row_labels.push_back(y);
    }

    Var f_rows = t.row_select(result.forward.F_final, rows);
    Var cls_loss;
    if (params.proto_head) {
        Var z = integrate(t, f_rows, params.proto_head->theta,
                          params.proto_head->bias ? &*params.proto_head->bias : nullptr);
        cls_loss = dce_loss(t, z, row_labels, params.proto_head->bank);
    } else if (params.softmax_head) {
        Var logits = t.matmul(f_rows, t.transpose(t.leaf(params.softmax_head->W)));
        cls_loss = softmax_ce_loss(t, logits, row_labels);
    } else {
        throw ConfigError("total_loss: params carry no classifier head");
    }

    const double lam = cfg.effective_lambda();
    result.breakdown.lambda = lam;
    result.breakdown.l_dce = t.scalar(cls_loss);
    if (lam != 0.0) {
        Var f_reg = result.forward.F_final;
        if (cfg.reg_layer == 0)
            f_reg = result.forward.F_projected;
        else if (cfg.reg_layer > 0)
            f_reg = result.forward.layers[static_cast<size_t>(cfg.reg_layer - 1)].F;
        Var reg = hyperedge_prototype_reg(t, f_reg, inc, cfg.reg_reduction);
        result.breakdown.l_theta = t.scalar(reg);
        result.l_s = t.add(cls_loss, t.scale(reg, lam));
    } else {
        result.breakdown.l_theta = 0.0;
        result.l_s = cls_loss;
    }
    result.breakdown.l_s = t.scalar(result.l_s);
    return result;
}

void AdamState::init(const ParamSet& params) {
    m.clear();
    v.clear();
    t = 0;
    for (const Parameter* p : params) {
        m.push_back(Matrix::zeros_like(p->value));
        v.push_back(Matrix::zeros_like(p->value));
    }
}

void adam_step(ParamSet& params, AdamState& state, double lr, double weight_decay,
               double grad_clip) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    if (state.m.size() != params.size()) throw ConfigError("adam_step: state/params mismatch");

    for (Parameter* p : params)
        if (!p->grad.all_finite())
            throw NumericError("adam_step: non-finite gradient in parameter '" + p->name + "'");

    double clip_factor = 1.0;
    if (grad_clip > 0.0) {
        double sq = 0.0;
        for (Parameter* p : params)
            for (double g : p->grad.data()) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > grad_clip) clip_factor = grad_clip / norm;
    }

    ++state.t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (long long k = 0; k < p.value.size(); ++k) {
            double g = p.grad.data()[static_cast<size_t>(k)] * clip_factor;
            if (weight_decay > 0.0) g += weight_decay * p.value.data()[static_cast<size_t>(k)];
            double& mk = m.data()[static_cast<size_t>(k)];
            double& vk = v.data()[static_cast<size_t>(k)];
            mk = kBeta1 * mk + (1.0 - kBeta1) * g;
            vk = kBeta2 * vk + (1.0 - kBeta2) * g * g;
            const double mhat = mk / bc1;
            const double vhat = vk / bc2;
            p.value.data()[static_cast<size_t>(k)] -= lr * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

Evaluation evaluate_split(const HinDataset& ds, const IncidenceMatrix& inc, ModelParams& params,
                          const ModelConfig& cfg, const std::vector<int>& split) {
    if (split.empty()) throw ConfigError("evaluate_split: empty split");
    Tape t;
    ForwardResult fr = forward_model(t, ds, inc, params, cfg, nullptr);
    const Matrix& f = t.value(fr.F_final);

    Matrix rows(static_cast<int>(split.size()), f.cols());
    std::vector<int> y_true;
    for (size_t i = 0; i < split.size(); ++i) {
        const int v = split[i];
        for (int j = 0; j < f.cols(); ++j) rows(static_cast<int>(i), j) = f(v, j);
        y_true.push_back(ds.labels[static_cast<size_t>(v)]);
    }

    std::vector<int> y_pred;
    if (params.proto_head) {
        Matrix z = matmul(rows, transpose(params.proto_head->theta.value));
        if (params.proto_head->bias) {
            const Matrix& b = params.proto_head->bias->value;
            for (int i = 0; i < z.rows(); ++i)
                for (int j = 0; j < z.cols(); ++j) z(i, j) += b(0, j);
        }
        y_pred = predict(z, params.proto_head->bank.prototypes.value,
                         params.proto_head->bank.n_classes, params.proto_head->bank.k);
    } else {
        Matrix logits = matmul(rows, transpose(params.softmax_head->W.value));
        y_pred = predict_argmax(logits);
    }

    Evaluation ev;
    ev.cm = confusion(y_true, y_pred, ds.n_classes);
    ev.micro_f1 = micro_f1(ev.cm);
    ev.macro_f1 = macro_f1(ev.cm);
    return ev;
}

namespace {

std::vector<Matrix> snapshot_values(ParamSet& params) {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (Parameter* p : params) out.push_back(p->value);
    return out;
}

void restore_values(ParamSet& params, const std::vector<Matrix>& values) {
    for (size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

double validation_loss(const HinDataset& ds, const IncidenceMatrix& inc, ModelParams& params,
                       const TrainConfig& cfg) {
    Tape t;
    TotalLossResult r = total_loss(t, ds, inc, params, cfg, ds.val_idx, nullptr);
    return r.breakdown.l_s;
}

}  // namespace

std::pair<ModelParams, TrainReport> train(const HinDataset& ds, const TrainConfig& cfg) {
    cfg.check();
    if (ds.train_idx.empty()) throw ConfigError("train: empty train split");
    if (ds.val_idx.empty()) throw ConfigError("train: empty val split");

    const auto t0 = std::chrono::steady_clock::now();
    const IncidenceMatrix inc = build_incidence(ds.graph);
    ModelParams params = init_model_params(ds, cfg.model, cfg.seed);
    ParamSet pset = params.param_set();
    AdamState adam;
    adam.init(pset);
    Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    Rng* drng = cfg.model.dropout > 0.0 ? &dropout_rng : nullptr;

    TrainReport report;
    std::vector<Matrix> best_values = snapshot_values(pset);
    double best_metric = -std::numeric_limits<double>::infinity();
    int since_improve = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        pset.zero_grads();
        EpochRecord rec;
        rec.epoch = epoch;
        {
            Tape t;
            TotalLossResult loss = total_loss(t, ds, inc, params, cfg, ds.train_idx, drng);
            rec.train_loss = loss.breakdown;
            if (epoch == 1) report.warnings = loss.forward.warnings;
            if (!std::isfinite(loss.breakdown.l_s))
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
            t.backward(loss.l_s);
        }
        adam_step(pset, adam, cfg.learning_rate, cfg.weight_decay, cfg.grad_clip);

        const Evaluation val = evaluate_split(ds, inc, params, cfg.model, ds.val_idx);
        rec.val_micro_f1 = val.micro_f1;
        rec.val_macro_f1 = val.macro_f1;
        double metric = val.micro_f1;
        if (cfg.monitor == Monitor::ValLoss) {
            rec.val_loss = validation_loss(ds, inc, params, cfg);
            metric = -rec.val_loss;
        }
        report.epochs.push_back(rec);

        if (metric > best_metric) {
            best_metric = metric;
            best_values = snapshot_values(pset);
            report.best_epoch = epoch;
            since_improve = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= cfg.patience) break;
    }

    restore_values(pset, best_values);
    report.best_val_metric = cfg.monitor == Monitor::ValLoss ? -best_metric : best_metric;

    if (!ds.test_idx.empty()) {
        const Evaluation test = evaluate_split(ds, inc, params, cfg.model, ds.test_idx);
        report.test_micro_f1 = test.micro_f1;
        report.test_macro_f1 = test.macro_f1;
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(params), std::move(report)};
}

SeedSummary run_seeds(const HinDataset& ds, const TrainConfig& cfg,
                      const std::vector<uint64_t>& seeds, bool parallel) {
    if (seeds.empty()) throw ConfigError("run_seeds: need at least one seed");
    SeedSummary summary;
    summary.runs.resize(seeds.size());

    auto run_one = [&](size_t i) {
        TrainConfig c = cfg;
        c.seed = seeds[i];
        auto [params, report] = train(ds, c);
        summary.runs[i] = SeedRun{seeds[i], std::move(report)};
    };

    if (parallel && seeds.size() > 1) {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < seeds.size(); ++i) pool.emplace_back(run_one, i);
        for (auto& th : pool) th.join();
    } else {
        for (size_t i = 0; i < seeds.size(); ++i) run_one(i);
    }

    auto mean_std = [&](auto pick) {
        double mean = 0.0;
        for (const SeedRun& r : summary.runs) mean += pick(r);
        mean /= static_cast<double>(summary.runs.size());
        double var = 0.0;
        if (summary.runs.size() > 1) {
            for (const SeedRun& r : summary.runs) {
                const double d = pick(r) - mean;
                var += d * d;
            }
            var /= static_cast<double>(summary.runs.size() - 1);
        }
        return std::make_pair(mean, std::sqrt(var));
    };
    std::tie(summary.mean_micro_f1, summary.std_micro_f1) =
        mean_std([](const SeedRun& r) { return r.report.test_micro_f1; });
    std::tie(summary.mean_macro_f1, summary.std_macro_f1) =
        mean_std([](const SeedRun& r) { return r.report.test_macro_f1; });
    return summary;
}

namespace {

void write_le_doubles(std::ofstream& out, const Matrix& m) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(m.data().data()),
                  static_cast<std::streamsize>(m.data().size() * sizeof(double)));
    } else {
        for (double v : m.data()) {
            uint64_t bits;
            std::memcpy(&bits, &v, 8);
            char buf[8];
            for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
            out.write(buf, 8);
        }
    }
}

void read_le_doubles(std::ifstream& in, Matrix& m) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(m.data().data()),
                static_cast<std::streamsize>(m.data().size() * sizeof(double)));
    } else {
        for (double& v : m.data()) {
            char buf[8];
            in.read(buf, 8);
            uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
            std::memcpy(&v, &bits, 8);
        }
    }
}

constexpr const char* kCheckpointFormat = "protohat-checkpoint-v1";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const std::string& schema_hash, ModelParams& params) {
    ParamSet pset = params.param_set();
    json header;
    header["format"] = kCheckpointFormat;
    header["schema_hash"] = schema_hash;
    header["config"] = config_to_json(cfg);
    json dir = json::array();
    for (Parameter* p : pset)
        dir.push_back(json{{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    header["params"] = dir;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    out << header.dump() << '\n';
    for (Parameter* p : pset) write_le_doubles(out, p->value);
    if (!out) throw LoadError(path.string() + ": write failure");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string() + ": cannot open file");
    std::string header_line;
    if (!std::getline(in, header_line)) throw LoadError(path.string() + ": missing header");
    json header;
    try {
        header = json::parse(header_line);
        if (header.at("format").get<std::string>() != kCheckpointFormat)
            throw LoadError(path.string() + ": unknown checkpoint format");
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": bad header: " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.schema_hash = header.at("schema_hash").get<std::string>();
        ckpt.config = config_from_json(header.at("config"));
        for (const auto& entry : header.at("params")) {
            const std::string name = entry.at("name").get<std::string>();
            Matrix m(entry.at("rows").get<int>(), entry.at("cols").get<int>());
            read_le_doubles(in, m);
            if (!in) throw LoadError(path.string() + ": truncated payload at '" + name + "'");
            ckpt.params.emplace_back(name, std::move(m));
        }
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": bad header: " + e.what());
    }
    return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, ModelParams& params) {
    ParamSet pset = params.param_set();
    if (pset.size() != ckpt.params.size())
        throw LoadError("checkpoint: expected " + std::to_string(pset.size()) +
                        " parameters, file has " + std::to_string(ckpt.params.size()));
    for (const auto& [name, value] : ckpt.params) {
        Parameter* p = pset.find(name);
        if (!p) throw LoadError("checkpoint: unknown parameter '" + name + "'");
        if (!p->value.same_shape(value))
            throw LoadError("checkpoint: parameter '" + name + "' has shape " + value.shape_str() +
                            ", expected " + p->value.shape_str());
        p->value = value;
    }
}

json epoch_to_json(const EpochRecord& rec, Monitor monitor) {
    json j{{"epoch", rec.epoch},
           {"l_dce", rec.train_loss.l_dce},
           {"l_theta", rec.train_loss.l_theta},
           {"lambda", rec.train_loss.lambda},
           {"l_s", rec.train_loss.l_s},
           {"val_micro_f1", rec.val_micro_f1},
           {"val_macro_f1", rec.val_macro_f1}};
    if (monitor == Monitor::ValLoss) j["val_loss"] = rec.val_loss;
    return j;
}

void write_report_jsonl(const std::filesystem::path& path, const TrainReport& report,
                        Monitor monitor) {
    std::ofstream out(path);
    if (!out) throw LoadError(path.string() + ": cannot open for writing");
    for (const EpochRecord& rec : report.epochs)
        out << epoch_to_json(rec, monitor).dump() << '\n';
    json summary{{"best_epoch", report.best_epoch},
                 {"best_val_metric", report.best_val_metric},
                 {"test_micro_f1", report.test_micro_f1},
                 {"test_macro_f1", report.test_macro_f1},
                 {"epochs_run", report.epochs.size()}};
    out << summary.dump() << '\n';
}

}  // namespace protohat

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "protohat/dataset.hpp"
#include "protohat/layers.hpp"
#include "protohat/metrics.hpp"

namespace protohat {

enum class Monitor { ValMicroF1, ValLoss };
enum class RegReduction { Mean, Sum };

std::string to_string(Monitor m);
Monitor monitor_from_string(const std::string& s);
std::string to_string(RegReduction r);
RegReduction reg_reduction_from_string(const std::string& s);

struct TrainConfig {
    ModelConfig model;
    double learning_rate = 1e-3;
    double lambda = 0.0;
    int max_epochs = 1000;
    int patience = 60;
    uint64_t seed = 1;
    bool use_regularizer = true;
    Monitor monitor = Monitor::ValMicroF1;
    RegReduction reg_reduction = RegReduction::Mean;
    int reg_layer = -1;  // -1 = final layer, 0 = projected features, i = after layer i
    double weight_decay = 0.0;
    double grad_clip = 0.0;  // 0 = off

    void check() const;
    /// The regularizer weight that is actually applied; 0 whenever the
    /// regularizer is ablated, so the two ways of turning it off are
    /// indistinguishable in every computed number.
    double effective_lambda() const { return use_regularizer ? lambda : 0.0; }
};

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

/// L_s = L_DCE + lambda * L_theta, recorded term by term.
struct LossBreakdown {
    double l_dce = 0.0;
    double l_theta = 0.0;
    double lambda = 0.0;
    double l_s = 0.0;
};

/// Hyperedge prototype regularizer: residual R = I - F F' I D_e^{-1},
/// reduced to the mean (or sum) of squared entries.
Var hyperedge_prototype_reg(Tape& t, Var F, const IncidenceMatrix& inc,
                            RegReduction reduction = RegReduction::Mean);

struct TotalLossResult {
    Var l_s;
    LossBreakdown breakdown;
    ForwardResult forward;
};

/// Classification loss on the given labeled rows plus the weighted
/// regularizer on the full node representations. The ablation flags swap in
/// a plain softmax classifier and/or zero the regularizer.
TotalLossResult total_loss(Tape& t, const HinDataset& ds, const IncidenceMatrix& inc,
                           ModelParams& params, const TrainConfig& cfg,
                           const std::vector<int>& rows, Rng* dropout_rng = nullptr);

struct AdamState {
    std::vector<Matrix> m, v;
    long t = 0;

    void init(const ParamSet& params);
};

/// Standard Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) with bias
/// correction. Throws NumericError naming the parameter on non-finite
/// gradients.
void adam_step(ParamSet& params, AdamState& state, double lr, double weight_decay = 0.0,
               double grad_clip = 0.0);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown train_loss;
    double val_micro_f1 = 0.0;
    double val_macro_f1 = 0.0;
    double val_loss = 0.0;  // only populated when monitored
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_metric = 0.0;  // monitored quantity at best_epoch
    double test_micro_f1 = 0.0;
    double test_macro_f1 = 0.0;
    double wall_time_s = 0.0;
    std::vector<std::string> warnings;
};

struct Evaluation {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    ConfusionMatrix cm;
};

Evaluation evaluate_split(const HinDataset& ds, const IncidenceMatrix& inc, ModelParams& params,
                          const ModelConfig& cfg, const std::vector<int>& split);

/// Full-batch transductive training with early stopping on the monitored
/// validation metric; restores and returns the best-epoch parameters.
/// Deterministic for a fixed seed and config.
std::pair<ModelParams, TrainReport> train(const HinDataset& ds, const TrainConfig& cfg);

struct SeedRun {
    uint64_t seed = 0;
    TrainReport report;
};

struct SeedSummary {
    std::vector<SeedRun> runs;
    double mean_micro_f1 = 0.0, std_micro_f1 = 0.0;
    double mean_macro_f1 = 0.0, std_macro_f1 = 0.0;
};

/// Trains once per seed and reports mean and sample standard deviation of the
/// test metrics. With parallel=true the runs execute in fully isolated
/// threads; results are identical either way.
SeedSummary run_seeds(const HinDataset& ds, const TrainConfig& cfg,
                      const std::vector<uint64_t>& seeds, bool parallel = false);

/// Checkpoint: one JSON header line (format tag, schema hash, config,
/// parameter directory) followed by the little-endian 64-bit payload of every
/// parameter in directory order.
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const std::string& schema_hash, ModelParams& params);

struct Checkpoint {
    TrainConfig config;
    std::string schema_hash;
    std::vector<std::pair<std::string, Matrix>> params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into freshly initialized params; names and
/// shapes must match exactly.
void apply_checkpoint(const Checkpoint& ckpt, ModelParams& params);

/// report.jsonl: one epoch record per line, then one summary line.
void write_report_jsonl(const std::filesystem::path& path, const TrainReport& report,
                        Monitor monitor);

nlohmann::json epoch_to_json(const EpochRecord& rec, Monitor monitor);

}  // namespace protohat

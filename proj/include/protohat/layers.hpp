#pragma once

#include <optional>
#include <string>
#include <vector>

#include "protohat/dataset.hpp"
#include "protohat/hypergraph.hpp"
#include "protohat/param.hpp"
#include "protohat/prototype.hpp"
#include "protohat/tape.hpp"

namespace protohat {

/// Nonlinearity applied at the hyperedge aggregation and at each head output.
/// The in-attention nonlinearities (u_k, v_k and the node update) are always
/// LeakyReLU with leaky_slope.
enum class Activation { LeakyRelu, Relu, Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ModelConfig {
    int hidden_dim = 16;
    int n_layers = 2;
    int n_heads = 1;
    int k_prototypes = 1;
    int prototype_dim = 0;  // 0 -> hidden_dim
    double leaky_slope = 0.01;
    Activation activation = Activation::LeakyRelu;
    bool use_prototype_classifier = true;
    bool classifier_bias = false;
    double dropout = 0.0;
    double proto_init_std = 0.1;

    int head_dim() const { return hidden_dim / n_heads; }
    int proto_dim() const { return prototype_dim > 0 ? prototype_dim : hidden_dim; }
    void check() const;
};

/// One attention head: W_h and a1 drive node-level attention, W_e and a2
/// hyperedge-level attention. a2 stacks the two halves of the concatenated
/// score ([W_h f | W_e h]), so its length is 2 * head_dim.
struct AttentionHeadParams {
    Parameter W_h;  // d' x d
    Parameter a1;   // d' x 1
    Parameter W_e;  // d' x d'
    Parameter a2;   // 2d' x 1
};

struct LayerParams {
    std::vector<AttentionHeadParams> heads;
};

struct PrototypeHeadParams {
    Parameter theta;  // p x d
    std::optional<Parameter> bias;
    PrototypeBank bank;
};

struct SoftmaxHeadParams {
    Parameter W;  // c x d
};

/// Every learnable of a run. Exactly one of proto_head / softmax_head is
/// populated, driven by the use_prototype_classifier flag.
struct ModelParams {
    std::vector<Parameter> projections;  // per type: hidden x d_t
    std::vector<LayerParams> layers;
    std::optional<PrototypeHeadParams> proto_head;
    std::optional<SoftmaxHeadParams> softmax_head;

    /// Registration order is fixed; it defines Adam state, grad-check and
    /// checkpoint layout.
    ParamSet param_set();
};

ModelParams init_model_params(const HinDataset& ds, const ModelConfig& cfg, uint64_t seed);

Var apply_activation(Tape& t, Var x, Activation act, double slope);

/// Row i = M_{type(i)} x_i; unifies the per-type feature widths to hidden_dim.
Var project_features(Tape& t, const HinDataset& ds, std::vector<Parameter>& projections);

struct NodeLevelResult {
    Var H;      // m x d', hyperedge representations
    Var alpha;  // m x n, row j is a distribution over members of e_j
};

/// Aggregates member nodes into hyperedge representations with attention
/// weights alpha from a1' LeakyReLU(W_h f).
NodeLevelResult node_level_attention(Tape& t, Var F_prev, const IncidenceMatrix& inc,
                                     AttentionHeadParams& head, double slope, Activation act);

struct HyperedgeLevelResult {
    Var F_new;  // n x d'
    Var beta;   // n x m, row i is a distribution over s_i
};

/// Updates node representations from incident hyperedges. A node with no
/// incident hyperedge falls back to its W_h-projected input (through the
/// update nonlinearity) and a warning is recorded.
HyperedgeLevelResult hyperedge_level_attention(Tape& t, Var F_prev, Var H,
                                               const IncidenceMatrix& inc,
                                               AttentionHeadParams& head, double slope,
                                               std::vector<std::string>* warnings = nullptr);

struct HeadState {
    Var H;
    Var alpha;
    Var beta;
};

/// Multi-head hypergraph attention: concatenation over heads of
/// activation(HAT_i(F, I)). With one head this is exactly the activated
/// single-head output.
Var mh_hat(Tape& t, Var F_prev, const IncidenceMatrix& inc, LayerParams& layer, double slope,
           Activation act, std::vector<std::string>* warnings = nullptr,
           std::vector<HeadState>* states = nullptr);

struct LayerState {
    std::vector<HeadState> heads;
    Var F;  // layer output, n x hidden
};

struct ForwardResult {
    Var F_projected;  // after type-specific projection
    Var F_final;      // after all layers (== F_projected when n_layers = 0)
    std::vector<LayerState> layers;
    std::vector<std::string> warnings;
};

/// Projection followed by n_layers stacked MH-HAT applications. dropout_rng
/// enables input dropout per layer (training mode); pass nullptr for
/// evaluation or when dropout is 0.
ForwardResult forward_model(Tape& t, const HinDataset& ds, const IncidenceMatrix& inc,
                            ModelParams& params, const ModelConfig& cfg,
                            Rng* dropout_rng = nullptr);

}  // namespace protohat

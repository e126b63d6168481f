#include "protohat/layers.hpp"

#include <memory>

#include "protohat/errors.hpp"

namespace protohat {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "leaky_relu";
}

Activation activation_from_string(const std::string& s) {
    if (s == "leaky_relu") return Activation::LeakyRelu;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + s + "'");
}

void ModelConfig::check() const {
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
    if (n_layers < 0) throw ConfigError("n_layers must be >= 0");
    if (n_heads < 1) throw ConfigError("n_heads must be >= 1");
    if (hidden_dim % n_heads != 0)
        throw ConfigError("hidden_dim (" + std::to_string(hidden_dim) +
                          ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
    if (k_prototypes < 1) throw ConfigError("k_prototypes must be >= 1");
    if (prototype_dim < 0) throw ConfigError("prototype_dim must be >= 0");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in (0,1)");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
    if (!(proto_init_std > 0.0)) throw ConfigError("proto_init_std must be > 0");
}

ParamSet ModelParams::param_set() {
    ParamSet set;
    for (Parameter& p : projections) set.add(p);
    for (LayerParams& layer : layers)
        for (AttentionHeadParams& head : layer.heads) {
            set.add(head.W_h);
            set.add(head.a1);
            set.add(head.W_e);
            set.add(head.a2);
        }
    if (proto_head) {
        set.add(proto_head->theta);
        if (proto_head->bias) set.add(*proto_head->bias);
        set.add(proto_head->bank.prototypes);
    }
    if (softmax_head) set.add(softmax_head->W);
    return set;
}

ModelParams init_model_params(const HinDataset& ds, const ModelConfig& cfg, uint64_t seed) {
    cfg.check();
    Rng rng(seed);
    ModelParams params;

    for (int t = 0; t < ds.graph.types.n_types(); ++t) {
        Matrix m(cfg.hidden_dim, ds.feature_dim(t));
        glorot_init(m, rng);
        params.projections.emplace_back("proj." + ds.graph.types.type_names[static_cast<size_t>(t)],
                                        std::move(m));
    }

    const int dp = cfg.head_dim();
    for (int l = 0; l < cfg.n_layers; ++l) {
        LayerParams layer;
        for (int h = 0; h < cfg.n_heads; ++h) {
            const std::string base =
                "layer" + std::to_string(l) + ".head" + std::to_string(h) + ".";
            Matrix wh(dp, cfg.hidden_dim), a1(dp, 1), we(dp, dp), a2(2 * dp, 1);
            glorot_init(wh, rng);
            glorot_init(a1, rng);
            glorot_init(we, rng);
            glorot_init(a2, rng);
            layer.heads.push_back(AttentionHeadParams{Parameter(base + "W_h", std::move(wh)),
                                                      Parameter(base + "a1", std::move(a1)),
                                                      Parameter(base + "W_e", std::move(we)),
                                                      Parameter(base + "a2", std::move(a2))});
        }
        params.layers.push_back(std::move(layer));
    }

    if (cfg.use_prototype_classifier) {
        PrototypeHeadParams head;
        Matrix theta(cfg.proto_dim(), cfg.hidden_dim);
        glorot_init(theta, rng);
        head.theta = Parameter("head.theta", std::move(theta));
        if (cfg.classifier_bias)
            head.bias = Parameter("head.bias", Matrix(1, cfg.proto_dim()));
        Matrix protos(ds.n_classes * cfg.k_prototypes, cfg.proto_dim());
        gaussian_init(protos, rng, cfg.proto_init_std);
        head.bank = PrototypeBank{Parameter("head.prototypes", std::move(protos)), ds.n_classes,
                                  cfg.k_prototypes};
        params.proto_head = std::move(head);
    } else {
        Matrix w(ds.n_classes, cfg.hidden_dim);
        glorot_init(w, rng);
        params.softmax_head = SoftmaxHeadParams{Parameter("head.softmax_W", std::move(w))};
    }
    return params;
}

Var apply_activation(Tape& t, Var x, Activation act, double slope) {
    switch (act) {
        case Activation::LeakyRelu: return t.leaky_relu(x, slope);
        case Activation::Relu: return t.leaky_relu(x, 0.0);
        case Activation::Tanh: return t.tanh_act(x);
        case Activation::Identity: return x;
    }
    return x;
}

Var project_features(Tape& t, const HinDataset& ds, std::vector<Parameter>& projections) {
    const int n_types = ds.graph.types.n_types();
    if (static_cast<int>(projections.size()) != n_types)
        throw DimensionError("project_features: one projection per type required");

    // indices[t][local_row] = global node index, honoring type_local_row
    std::vector<Var> parts;
    std::vector<std::vector<int>> indices(static_cast<size_t>(n_types));
    for (int type = 0; type < n_types; ++type)
        indices[static_cast<size_t>(type)].assign(
            static_cast<size_t>(ds.features[static_cast<size_t>(type)].rows()), -1);
    for (int v = 0; v < ds.n_nodes(); ++v) {
        const int type = ds.graph.types.node_type[static_cast<size_t>(v)];
        indices[static_cast<size_t>(type)][static_cast<size_t>(
            ds.type_local_row[static_cast<size_t>(v)])] = v;
    }

    for (int type = 0; type < n_types; ++type) {
        const Matrix& x = ds.features[static_cast<size_t>(type)];
        Parameter& m = projections[static_cast<size_t>(type)];
        if (m.value.cols() != x.cols())
            throw DimensionError("project_features: projection for type '" +
                                 ds.graph.types.type_names[static_cast<size_t>(type)] +
                                 "' expects width " + std::to_string(m.value.cols()) + ", got " +
                                 std::to_string(x.cols()));
        // rows of x are in type-local order == order of indices[type]
        parts.push_back(t.matmul(t.constant(x), t.transpose(t.leaf(m))));
    }
    return t.assemble_rows(parts, std::move(indices), ds.n_nodes());
}

namespace {

void check_head_shapes(const AttentionHeadParams& head, int in_width) {
    const int dp = head.W_h.value.rows();
    if (head.W_h.value.cols() != in_width)
        throw DimensionError("attention head: W_h expects input width " +
                             std::to_string(head.W_h.value.cols()) + ", got " +
                             std::to_string(in_width));
    if (head.a1.value.rows() != dp || head.a1.value.cols() != 1)
        throw DimensionError("attention head: a1 must be " + std::to_string(dp) + "x1");
    if (head.W_e.value.rows() != dp || head.W_e.value.cols() != dp)
        throw DimensionError("attention head: W_e must be " + std::to_string(dp) + "x" +
                             std::to_string(dp));
    if (head.a2.value.rows() != 2 * dp || head.a2.value.cols() != 1)
        throw DimensionError("attention head: a2 must be " + std::to_string(2 * dp) + "x1");
}

}  // namespace

NodeLevelResult node_level_attention(Tape& t, Var F_prev, const IncidenceMatrix& inc,
                                     AttentionHeadParams& head, double slope, Activation act) {
    check_head_shapes(head, t.value(F_prev).cols());
    const int m = inc.n_edges();

    Var wh = t.leaf(head.W_h);
    Var p = t.matmul(F_prev, t.transpose(wh));  // n x d'
    Var u = t.leaky_relu(p, slope);             // u_k
    Var scores = t.matmul(u, t.leaf(head.a1));  // n x 1, a1' u_k
    // Broadcast the per-node scores to every edge row, then normalize within
    // each edge's members.
    Var logits = t.outer_add(t.constant(Matrix(m, 1)), scores);  // m x n
    Var alpha = t.masked_row_softmax(logits, borrow_groups(inc.members));
    Var h_pre = t.group_weighted_sum(alpha, p, borrow_groups(inc.members));  // m x d'
    Var h = apply_activation(t, h_pre, act, slope);
    return {h, alpha};
}

HyperedgeLevelResult hyperedge_level_attention(Tape& t, Var F_prev, Var H,
                                               const IncidenceMatrix& inc,
                                               AttentionHeadParams& head, double slope,
                                               std::vector<std::string>* warnings) {
    check_head_shapes(head, t.value(F_prev).cols());
    const int dp = head.W_h.value.rows();
    if (t.value(H).cols() != dp)
        throw DimensionError("hyperedge_level_attention: H width " +
                             std::to_string(t.value(H).cols()) + " != head width " +
                             std::to_string(dp));

    Var wh = t.leaf(head.W_h);
    Var p = t.matmul(F_prev, t.transpose(wh));            // n x d', W_h f_i
    Var we = t.leaf(head.W_e);
    Var q = t.matmul(H, t.transpose(we));                 // m x d', W_e h_k
    Var a2 = t.leaf(head.a2);
    Var a2_node = t.slice_rows(a2, 0, dp);
    Var a2_edge = t.slice_rows(a2, dp, 2 * dp);
    // a2' LeakyReLU([W_h f_i | W_e h_k]) splits into a node part and an edge
    // part because the nonlinearity is elementwise over the concatenation.
    Var node_score = t.matmul(t.leaky_relu(p, slope), a2_node);  // n x 1
    Var edge_score = t.matmul(t.leaky_relu(q, slope), a2_edge);  // m x 1
    Var logits = t.outer_add(node_score, edge_score);            // n x m
    Var beta = t.masked_row_softmax(logits, borrow_groups(inc.incident), true);
    Var f_pre = t.group_weighted_sum(beta, q, borrow_groups(inc.incident));  // n x d'

    std::vector<uint8_t> isolated(static_cast<size_t>(inc.n_nodes()), 0);
    int n_isolated = 0;
    for (int v = 0; v < inc.n_nodes(); ++v)
        if (inc.incident[static_cast<size_t>(v)].empty()) {
            isolated[static_cast<size_t>(v)] = 1;
            ++n_isolated;
        }
    if (n_isolated > 0) {
        // Isolated nodes keep their projected input instead of an aggregate.
        f_pre = t.add(f_pre, t.select_rows_mask(p, isolated));
        if (warnings)
            warnings->push_back(std::to_string(n_isolated) +
                                " node(s) have no incident hyperedge; using projection fallback");
    }
    Var f_new = t.leaky_relu(f_pre, slope);
    return {f_new, beta};
}

Var mh_hat(Tape& t, Var F_prev, const IncidenceMatrix& inc, LayerParams& layer, double slope,
           Activation act, std::vector<std::string>* warnings, std::vector<HeadState>* states) {
    if (layer.heads.empty()) throw ConfigError("mh_hat: need at least one head");
    const int width = layer.heads.front().W_h.value.rows();
    std::vector<Var> outs;
    for (AttentionHeadParams& head : layer.heads) {
        if (head.W_h.value.rows() != width)
            throw DimensionError("mh_hat: heads with mismatched widths");
        NodeLevelResult nl = node_level_attention(t, F_prev, inc, head, slope, act);
        HyperedgeLevelResult hl =
            hyperedge_level_attention(t, F_prev, nl.H, inc, head, slope, warnings);
        outs.push_back(apply_activation(t, hl.F_new, act, slope));
        if (states) states->push_back(HeadState{nl.H, nl.alpha, hl.beta});
    }
    return outs.size() == 1 ? outs.front() : t.concat_cols(outs);
}

ForwardResult forward_model(Tape& t, const HinDataset& ds, const IncidenceMatrix& inc,
                            ModelParams& params, const ModelConfig& cfg, Rng* dropout_rng) {
    cfg.check();
    if (static_cast<int>(params.layers.size()) != cfg.n_layers)
        throw ConfigError("forward_model: params have " + std::to_string(params.layers.size()) +
                          " layers, config says " + std::to_string(cfg.n_layers));

    ForwardResult result;
    Var f = project_features(t, ds, params.projections);
    result.F_projected = f;

    for (int l = 0; l < cfg.n_layers; ++l) {
        if (dropout_rng && cfg.dropout > 0.0) {
            const Matrix& fv = t.value(f);
            Matrix mask(fv.rows(), fv.cols());
            const double keep = 1.0 - cfg.dropout;
            for (double& v : mask.data()) v = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            f = t.hadamard_const(f, std::move(mask));
        }
        LayerState state;
        f = mh_hat(t, f, inc, params.layers[static_cast<size_t>(l)], cfg.leaky_slope,
                   cfg.activation, &result.warnings, &state.heads);
        state.F = f;
        result.layers.push_back(std::move(state));
    }
    result.F_final = f;
    return result;
}

}  // namespace protohat

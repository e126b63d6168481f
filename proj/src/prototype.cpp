#include "protohat/prototype.hpp"

#include <memory>

#include "protohat/errors.hpp"

namespace protohat {

void PrototypeBank::check() const {
    if (n_classes < 1 || k < 1) throw ConfigError("prototype bank: need c >= 1 and k >= 1");
    if (prototypes.value.rows() != n_classes * k)
        throw DimensionError("prototype bank: expected " + std::to_string(n_classes * k) +
                             " rows, got " + std::to_string(prototypes.value.rows()));
}

Var integrate(Tape& t, Var F, Parameter& theta, Parameter* bias) {
    if (t.value(F).cols() != theta.value.cols())
        throw DimensionError("integrate: representation width " +
                             std::to_string(t.value(F).cols()) + " != theta input width " +
                             std::to_string(theta.value.cols()));
    Var z = t.matmul(F, t.transpose(t.leaf(theta)));
    if (bias) z = t.add_row_broadcast(z, t.leaf(*bias));
    return z;
}

std::vector<int> predict(const Matrix& Z, const Matrix& prototypes, int n_classes, int k) {
    const Matrix d2 = pairwise_sq_dist(Z, prototypes);
    std::vector<int> out(static_cast<size_t>(Z.rows()));
    for (int i = 0; i < Z.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < d2.cols(); ++j)
            if (d2(i, j) < d2(i, best)) best = j;
        (void)n_classes;
        out[static_cast<size_t>(i)] = best / k;
    }
    return out;
}

Var dce_loss(Tape& t, Var Z, const std::vector<int>& labels, PrototypeBank& bank) {
    bank.check();
    const Matrix& zv = t.value(Z);
    if (zv.cols() != bank.width())
        throw DimensionError("dce_loss: sample width " + std::to_string(zv.cols()) +
                             " != prototype width " + std::to_string(bank.width()));
    if (static_cast<int>(labels.size()) != zv.rows())
        throw DimensionError("dce_loss: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(zv.rows()) + " samples");

    auto class_groups = std::make_shared<Groups>();
    class_groups->reserve(labels.size());
    for (int y : labels) {
        if (y < 0 || y >= bank.n_classes)
            throw DimensionError("dce_loss: label " + std::to_string(y) + " out of range [0," +
                                 std::to_string(bank.n_classes) + ")");
        std::vector<int> cols(static_cast<size_t>(bank.k));
        for (int j = 0; j < bank.k; ++j) cols[static_cast<size_t>(j)] = y * bank.k + j;
        class_groups->push_back(std::move(cols));
    }

    Var protos = t.leaf(bank.prototypes);
    Var neg_d2 = t.scale(t.pairwise_sq_dist(Z, protos), -1.0);
    Var lse_all = t.masked_row_logsumexp(neg_d2, nullptr);
    Var lse_true = t.masked_row_logsumexp(neg_d2, class_groups);
    return t.mean_all(t.sub(lse_all, lse_true));
}

double dce_loss_value(const Matrix& Z, const std::vector<int>& labels, const Matrix& prototypes,
                      int n_classes, int k) {
    Tape t;
    PrototypeBank bank{Parameter("tmp.prototypes", prototypes), n_classes, k};
    return t.scalar(dce_loss(t, t.constant(Z), labels, bank));
}

Var softmax_ce_loss(Tape& t, Var logits, const std::vector<int>& labels) {
    const Matrix& lv = t.value(logits);
    if (static_cast<int>(labels.size()) != lv.rows())
        throw DimensionError("softmax_ce_loss: label count mismatch");
    auto true_groups = std::make_shared<Groups>();
    for (int y : labels) {
        if (y < 0 || y >= lv.cols())
            throw DimensionError("softmax_ce_loss: label " + std::to_string(y) + " out of range");
        true_groups->push_back({y});
    }
    // logsumexp over a single column is exactly that logit
    Var lse_all = t.masked_row_logsumexp(logits, nullptr);
    Var true_logit = t.masked_row_logsumexp(logits, true_groups);
    return t.mean_all(t.sub(lse_all, true_logit));
}

std::vector<int> predict_argmax(const Matrix& logits) {
    std::vector<int> out(static_cast<size_t>(logits.rows()));
    for (int i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        out[static_cast<size_t>(i)] = best;
    }
    return out;
}

}  // namespace protohat

#pragma once

#include <vector>

#include "protohat/param.hpp"
#include "protohat/tape.hpp"

namespace protohat {

/// Learnable class prototypes. Every class owns exactly k prototypes;
/// prototype (i, j) lives at row i*k + j of the bank.
struct PrototypeBank {
    Parameter prototypes;  // (c*k) x p
    int n_classes = 0;
    int k = 1;

    int width() const { return prototypes.value.cols(); }
    void check() const;
};

/// z = g(f; theta): bias-free linear map by default, with an optional bias
/// row when the classifier_bias knob is on.
Var integrate(Tape& t, Var F, Parameter& theta, Parameter* bias = nullptr);

/// Nearest-prototype prediction: the class of the argmin distance prototype.
/// Ties break toward the lowest (class, prototype) index.
std::vector<int> predict(const Matrix& Z, const Matrix& prototypes, int n_classes, int k);

/// Distance-based cross-entropy: prototype logits are negative squared
/// distances, class posteriors sum the prototype softmax within each class,
/// and the loss is the mean negative log posterior of the true class.
Var dce_loss(Tape& t, Var Z, const std::vector<int>& labels, PrototypeBank& bank);

/// Value-only convenience around dce_loss for callers without a tape.
double dce_loss_value(const Matrix& Z, const std::vector<int>& labels, const Matrix& prototypes,
                      int n_classes, int k);

/// Mean cross-entropy of row-wise softmax over logits; the classifier used
/// by the no-prototype ablation.
Var softmax_ce_loss(Tape& t, Var logits, const std::vector<int>& labels);

/// Row-wise argmax with ties toward the lowest class index.
std::vector<int> predict_argmax(const Matrix& logits);

}  // namespace protohat

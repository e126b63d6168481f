#include "protohat/metrics.hpp"

#include <string>

#include "protohat/errors.hpp"

namespace protohat {

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          int n_classes) {
    if (y_true.size() != y_pred.size())
        throw DimensionError("confusion: length mismatch: " + std::to_string(y_true.size()) +
                             " vs " + std::to_string(y_pred.size()));
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(static_cast<size_t>(n_classes) * n_classes, 0);
    for (size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw DimensionError("confusion: class index out of range at position " +
                                 std::to_string(i));
        ++cm.at(t, p);
    }
    return cm;
}

double micro_f1(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total == 0) throw DimensionError("micro_f1: empty confusion matrix");
    long long trace = 0;
    for (int c = 0; c < cm.n_classes; ++c) trace += cm.at(c, c);
    return static_cast<double>(trace) / static_cast<double>(total);
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DimensionError("macro_f1: empty confusion matrix");
    double acc = 0.0;
    for (int c = 0; c < cm.n_classes; ++c) {
        long long tp = cm.at(c, c);
        long long pred = 0, truth = 0;
        for (int k = 0; k < cm.n_classes; ++k) {
            pred += cm.at(k, c);
            truth += cm.at(c, k);
        }
        if (pred + truth == 0) continue;  // zero-support class contributes 0
        // 2PR/(P+R) == 2tp / (pred + truth)
        acc += 2.0 * static_cast<double>(tp) / static_cast<double>(pred + truth);
    }
    return acc / cm.n_classes;
}

}  // namespace protohat

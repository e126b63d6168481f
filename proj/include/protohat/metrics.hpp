#pragma once

#include <vector>

namespace protohat {

/// c x c counts, rows = true class, cols = predicted class.
struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<long long> counts;  // row-major

    long long& at(int t, int p) { return counts[static_cast<size_t>(t) * n_classes + p]; }
    long long at(int t, int p) const { return counts[static_cast<size_t>(t) * n_classes + p]; }
    long long total() const;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          int n_classes);

/// Micro-averaged F1; equals accuracy (trace/total) for single-label
/// multiclass predictions.
double micro_f1(const ConfusionMatrix& cm);

/// Unweighted mean of per-class F1 = 2PR/(P+R). Classes with P+R = 0
/// contribute 0.
double macro_f1(const ConfusionMatrix& cm);

}  // namespace protohat

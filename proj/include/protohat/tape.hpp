#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "protohat/matrix.hpp"
#include "protohat/param.hpp"

namespace protohat {

/// Column-index lists, one per row. Used to restrict row-wise ops (softmax,
/// logsumexp, weighted sums) to the structurally admissible entries. The
/// stored order of each list is the summation order, which keeps results
/// bitwise stable under node relabeling.
using Groups = std::vector<std::vector<int>>;

/// Wraps a Groups value that outlives the tape without copying it.
std::shared_ptr<const Groups> borrow_groups(const Groups& g);

struct Var {
    int idx = -1;
};

/// Reverse-mode tape over dense matrices. A forward pass appends nodes in
/// topological order; backward() walks them in reverse and accumulates leaf
/// gradients into the referenced Parameters.
///
/// One tape serves one loss evaluation; build a fresh tape per step.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Parameter& p);
    Var constant(Matrix value);

    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);
    /// x: n*p plus a 1*p row broadcast down all rows.
    Var add_row_broadcast(Var x, Var row);
    /// slope in [0,1); the value-level public op restricts to (0,1), the tape
    /// also accepts 0 so ReLU can reuse the kernel.
    Var leaky_relu(Var x, double slope);
    Var tanh_act(Var x);
    /// out(i,j) = a(i,0) + b(j,0) for column vectors a (p*1) and b (q*1).
    Var outer_add(Var a, Var b);
    /// Row-wise softmax over groups[r]; entries outside the group are exactly
    /// 0. Empty groups raise DegenerateRowError unless allow_empty_rows, in
    /// which case the row is all zeros.
    Var masked_row_softmax(Var logits, std::shared_ptr<const Groups> groups,
                           bool allow_empty_rows = false);
    /// Row-wise log-sum-exp over groups[r] (all columns when groups is null).
    /// Returns an n*1 column.
    Var masked_row_logsumexp(Var x, std::shared_ptr<const Groups> groups);
    /// out row r = sum_{k in groups[r]} w(r,k) * x row k, accumulated in group
    /// order. w is r*c dense, x is c*d.
    Var group_weighted_sum(Var w, Var x, std::shared_ptr<const Groups> groups);
    Var pairwise_sq_dist(Var z, Var m);
    Var row_select(Var x, std::vector<int> rows);
    /// Keeps row i iff keep[i], zeroing the others.
    Var select_rows_mask(Var x, std::vector<uint8_t> keep);
    /// Scatter row blocks into an n-row matrix; indices[p][i] is the target
    /// row of part p's row i. Every target row must be written exactly once.
    Var assemble_rows(const std::vector<Var>& parts, std::vector<std::vector<int>> indices,
                      int n_rows);
    Var concat_cols(const std::vector<Var>& xs);
    Var slice_rows(Var x, int row_begin, int row_end);
    /// Elementwise product with a fixed matrix (dropout masks).
    Var hadamard_const(Var x, Matrix mask);
    /// Scales column j by s[j].
    Var col_scale(Var x, std::vector<double> s);
    Var sum_sq(Var x);    // 1x1
    Var mean_all(Var x);  // 1x1

    const Matrix& value(Var v) const { return nodes_[v.idx].value; }
    double scalar(Var v) const;
    int n_nodes() const { return static_cast<int>(nodes_.size()); }

    /// Seeds d(root)/d(root) = 1 (root must be 1x1), sweeps the tape in
    /// reverse, then adds each leaf's accumulated gradient into its
    /// Parameter::grad.
    void backward(Var root);

    /// Gradient of `node` as accumulated by the last backward() call.
    const Matrix& grad(Var v) const { return grads_[v.idx]; }

private:
    using BackFn = std::function<void(Tape&, int)>;

    struct Node {
        Matrix value;
        std::vector<int> parents;
        BackFn back;
        Parameter* param = nullptr;
    };

    Var push(Matrix value, std::vector<int> parents, BackFn back, Parameter* param = nullptr);
    Matrix& g(int idx) { return grads_[idx]; }
    const Matrix& v(int idx) const { return nodes_[idx].value; }
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
};

}  // namespace protohat

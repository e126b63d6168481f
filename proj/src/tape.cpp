#include "protohat/tape.hpp"

#include <cmath>
#include <utility>

#include "protohat/errors.hpp"

namespace protohat {

std::shared_ptr<const Groups> borrow_groups(const Groups& g) {
    return std::shared_ptr<const Groups>(std::shared_ptr<void>(), &g);
}

void Tape::check(Var var) const {
    if (var.idx < 0 || var.idx >= static_cast<int>(nodes_.size()))
        throw Error("tape: invalid Var handle");
}

Var Tape::push(Matrix value, std::vector<int> parents, BackFn back, Parameter* param) {
    nodes_.push_back(Node{std::move(value), std::move(parents), std::move(back), param});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

double Tape::scalar(Var var) const {
    check(var);
    const Matrix& m = value(var);
    if (m.rows() != 1 || m.cols() != 1)
        throw DimensionError("scalar: node is " + m.shape_str() + ", expected 1x1");
    return m(0, 0);
}

Var Tape::leaf(Parameter& p) {
    return push(p.value, {}, nullptr, &p);
}

Var Tape::constant(Matrix value) {
    return push(std::move(value), {}, nullptr);
}

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    Matrix out = protohat::matmul(v(a.idx), v(b.idx));
    return push(std::move(out), {a.idx, b.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const int ia = node.parents[0], ib = node.parents[1];
        const Matrix& G = t.g(self);
        const Matrix& A = t.v(ia);
        const Matrix& B = t.v(ib);
        // gA += G * B^T
        {
            Matrix& gA = t.g(ia);
            for (int i = 0; i < A.rows(); ++i)
                for (int k = 0; k < A.cols(); ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < B.cols(); ++j) acc += G(i, j) * B(k, j);
                    gA(i, k) += acc;
                }
        }
        // gB += A^T * G
        {
            Matrix& gB = t.g(ib);
            for (int k = 0; k < B.rows(); ++k)
                for (int j = 0; j < B.cols(); ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < A.rows(); ++i) acc += A(i, k) * G(i, j);
                    gB(k, j) += acc;
                }
        }
    });
}

Var Tape::transpose(Var a) {
    check(a);
    Matrix out = protohat::transpose(v(a.idx));
    return push(std::move(out), {a.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gA = t.g(node.parents[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) gA(j, i) += G(i, j);
    });
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    const Matrix& A = v(a.idx);
    const Matrix& B = v(b.idx);
    if (!A.same_shape(B))
        throw DimensionError("add: shapes differ: " + A.shape_str() + " vs " + B.shape_str());
    Matrix out = A;
    for (long long i = 0; i < out.size(); ++i) out.data()[i] += B.data()[i];
    return push(std::move(out), {a.idx, b.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gA = t.g(node.parents[0]);
        Matrix& gB = t.g(node.parents[1]);
        for (long long i = 0; i < G.size(); ++i) {
            gA.data()[i] += G.data()[i];
            gB.data()[i] += G.data()[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    const Matrix& A = v(a.idx);
    const Matrix& B = v(b.idx);
    if (!A.same_shape(B))
        throw DimensionError("sub: shapes differ: " + A.shape_str() + " vs " + B.shape_str());
    Matrix out = A;
    for (long long i = 0; i < out.size(); ++i) out.data()[i] -= B.data()[i];
    return push(std::move(out), {a.idx, b.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gA = t.g(node.parents[0]);
        Matrix& gB = t.g(node.parents[1]);
        for (long long i = 0; i < G.size(); ++i) {
            gA.data()[i] += G.data()[i];
            gB.data()[i] -= G.data()[i];
        }
    });
}

Var Tape::scale(Var a, double s) {
    check(a);
    Matrix out = v(a.idx);
    for (double& x : out.data()) x *= s;
    return push(std::move(out), {a.idx}, [s](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gA = t.g(node.parents[0]);
        for (long long i = 0; i < G.size(); ++i) gA.data()[i] += s * G.data()[i];
    });
}

Var Tape::add_row_broadcast(Var x, Var row) {
    check(x);
    check(row);
    const Matrix& X = v(x.idx);
    const Matrix& R = v(row.idx);
    if (R.rows() != 1 || R.cols() != X.cols())
        throw DimensionError("add_row_broadcast: row is " + R.shape_str() + ", expected 1x" +
                             std::to_string(X.cols()));
    Matrix out = X;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) += R(0, j);
    return push(std::move(out), {x.idx, row.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        Matrix& gR = t.g(node.parents[1]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) {
                gX(i, j) += G(i, j);
                gR(0, j) += G(i, j);
            }
    });
}

Var Tape::leaky_relu(Var x, double slope) {
    check(x);
    if (!(slope >= 0.0 && slope < 1.0))
        throw ConfigError("tape leaky_relu: slope must be in [0,1)");
    Matrix out = v(x.idx);
    for (double& val : out.data())
        if (val < 0.0) val *= slope;
    return push(std::move(out), {x.idx}, [slope](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& X = t.v(node.parents[0]);
        Matrix& gX = t.g(node.parents[0]);
        for (long long i = 0; i < G.size(); ++i)
            gX.data()[i] += G.data()[i] * (X.data()[i] > 0.0 ? 1.0 : slope);
    });
}

Var Tape::tanh_act(Var x) {
    check(x);
    Matrix out = v(x.idx);
    for (double& val : out.data()) val = std::tanh(val);
    return push(std::move(out), {x.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& Y = t.v(self);
        Matrix& gX = t.g(node.parents[0]);
        for (long long i = 0; i < G.size(); ++i)
            gX.data()[i] += G.data()[i] * (1.0 - Y.data()[i] * Y.data()[i]);
    });
}

Var Tape::outer_add(Var a, Var b) {
    check(a);
    check(b);
    const Matrix& A = v(a.idx);
    const Matrix& B = v(b.idx);
    if (A.cols() != 1 || B.cols() != 1)
        throw DimensionError("outer_add: expects column vectors, got " + A.shape_str() + " and " +
                             B.shape_str());
    Matrix out(A.rows(), B.rows());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < B.rows(); ++j) out(i, j) = A(i, 0) + B(j, 0);
    return push(std::move(out), {a.idx, b.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gA = t.g(node.parents[0]);
        Matrix& gB = t.g(node.parents[1]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) {
                gA(i, 0) += G(i, j);
                gB(j, 0) += G(i, j);
            }
    });
}

Var Tape::masked_row_softmax(Var logits, std::shared_ptr<const Groups> groups,
                             bool allow_empty_rows) {
    check(logits);
    const Matrix& X = v(logits.idx);
    if (!groups || static_cast<int>(groups->size()) != X.rows())
        throw DimensionError("masked_row_softmax: groups size must equal row count");
    Matrix out(X.rows(), X.cols());
    for (int r = 0; r < X.rows(); ++r) {
        const auto& group = (*groups)[r];
        if (group.empty()) {
            if (allow_empty_rows) continue;
            throw DegenerateRowError("masked_row_softmax: row " + std::to_string(r) +
                                     " has no masked-in entries");
        }
        double rowmax = X(r, group[0]);
        for (int k : group) rowmax = std::max(rowmax, X(r, k));
        double denom = 0.0;
        for (int k : group) {
            const double e = std::exp(X(r, k) - rowmax);
            out(r, k) = e;
            denom += e;
        }
        for (int k : group) out(r, k) /= denom;
    }
    return push(std::move(out), {logits.idx}, [groups](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& Y = t.v(self);
        Matrix& gX = t.g(node.parents[0]);
        for (int r = 0; r < Y.rows(); ++r) {
            const auto& group = (*groups)[r];
            double dot = 0.0;
            for (int k : group) dot += G(r, k) * Y(r, k);
            for (int k : group) gX(r, k) += Y(r, k) * (G(r, k) - dot);
        }
    });
}

Var Tape::masked_row_logsumexp(Var x, std::shared_ptr<const Groups> groups) {
    check(x);
    const Matrix& X = v(x.idx);
    if (groups && static_cast<int>(groups->size()) != X.rows())
        throw DimensionError("masked_row_logsumexp: groups size must equal row count");
    Matrix out(X.rows(), 1);
    for (int r = 0; r < X.rows(); ++r) {
        double rowmax = 0.0;
        bool any = false;
        auto visit = [&](int k) {
            if (!any || X(r, k) > rowmax) rowmax = X(r, k);
            any = true;
        };
        if (groups)
            for (int k : (*groups)[r]) visit(k);
        else
            for (int k = 0; k < X.cols(); ++k) visit(k);
        if (!any)
            throw DegenerateRowError("masked_row_logsumexp: row " + std::to_string(r) +
                                     " has no masked-in entries");
        double acc = 0.0;
        if (groups)
            for (int k : (*groups)[r]) acc += std::exp(X(r, k) - rowmax);
        else
            for (int k = 0; k < X.cols(); ++k) acc += std::exp(X(r, k) - rowmax);
        out(r, 0) = rowmax + std::log(acc);
    }
    return push(std::move(out), {x.idx}, [groups](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& Y = t.v(self);
        const Matrix& X = t.v(node.parents[0]);
        Matrix& gX = t.g(node.parents[0]);
        for (int r = 0; r < X.rows(); ++r) {
            const double gr = G(r, 0);
            if (gr == 0.0) continue;
            if (groups)
                for (int k : (*groups)[r]) gX(r, k) += gr * std::exp(X(r, k) - Y(r, 0));
            else
                for (int k = 0; k < X.cols(); ++k) gX(r, k) += gr * std::exp(X(r, k) - Y(r, 0));
        }
    });
}

Var Tape::group_weighted_sum(Var w, Var x, std::shared_ptr<const Groups> groups) {
    check(w);
    check(x);
    const Matrix& W = v(w.idx);
    const Matrix& X = v(x.idx);
    if (!groups || static_cast<int>(groups->size()) != W.rows())
        throw DimensionError("group_weighted_sum: groups size must equal weight row count");
    if (W.cols() != X.rows())
        throw DimensionError("group_weighted_sum: weight cols " + std::to_string(W.cols()) +
                             " != value rows " + std::to_string(X.rows()));
    Matrix out(W.rows(), X.cols());
    for (int r = 0; r < W.rows(); ++r) {
        double* orow = out.row(r);
        for (int k : (*groups)[r]) {
            const double wrk = W(r, k);
            const double* xk = X.row(k);
            for (int d = 0; d < X.cols(); ++d) orow[d] += wrk * xk[d];
        }
    }
    return push(std::move(out), {w.idx, x.idx}, [groups](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& W = t.v(node.parents[0]);
        const Matrix& X = t.v(node.parents[1]);
        Matrix& gW = t.g(node.parents[0]);
        Matrix& gX = t.g(node.parents[1]);
        for (int r = 0; r < W.rows(); ++r) {
            const double* grow = G.row(r);
            for (int k : (*groups)[r]) {
                const double* xk = X.row(k);
                double* gxk = gX.row(k);
                const double wrk = W(r, k);
                double acc = 0.0;
                for (int d = 0; d < X.cols(); ++d) {
                    acc += grow[d] * xk[d];
                    gxk[d] += wrk * grow[d];
                }
                gW(r, k) += acc;
            }
        }
    });
}

Var Tape::pairwise_sq_dist(Var z, Var m) {
    check(z);
    check(m);
    Matrix out = protohat::pairwise_sq_dist(v(z.idx), v(m.idx));
    return push(std::move(out), {z.idx, m.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        const Matrix& Z = t.v(node.parents[0]);
        const Matrix& M = t.v(node.parents[1]);
        Matrix& gZ = t.g(node.parents[0]);
        Matrix& gM = t.g(node.parents[1]);
        for (int i = 0; i < Z.rows(); ++i)
            for (int j = 0; j < M.rows(); ++j) {
                const double gij = G(i, j);
                if (gij == 0.0) continue;
                for (int d = 0; d < Z.cols(); ++d) {
                    const double diff = 2.0 * gij * (Z(i, d) - M(j, d));
                    gZ(i, d) += diff;
                    gM(j, d) -= diff;
                }
            }
    });
}

Var Tape::row_select(Var x, std::vector<int> rows) {
    check(x);
    const Matrix& X = v(x.idx);
    Matrix out(static_cast<int>(rows.size()), X.cols());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= X.rows())
            throw DimensionError("row_select: row index out of range");
        for (int j = 0; j < X.cols(); ++j) out(static_cast<int>(i), j) = X(rows[i], j);
    }
    return push(std::move(out), {x.idx}, [rows = std::move(rows)](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        for (size_t i = 0; i < rows.size(); ++i)
            for (int j = 0; j < G.cols(); ++j) gX(rows[i], j) += G(static_cast<int>(i), j);
    });
}

Var Tape::select_rows_mask(Var x, std::vector<uint8_t> keep) {
    check(x);
    const Matrix& X = v(x.idx);
    if (static_cast<int>(keep.size()) != X.rows())
        throw DimensionError("select_rows_mask: flag count must equal row count");
    Matrix out(X.rows(), X.cols());
    for (int i = 0; i < X.rows(); ++i)
        if (keep[static_cast<size_t>(i)])
            for (int j = 0; j < X.cols(); ++j) out(i, j) = X(i, j);
    return push(std::move(out), {x.idx}, [keep = std::move(keep)](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        for (int i = 0; i < G.rows(); ++i)
            if (keep[static_cast<size_t>(i)])
                for (int j = 0; j < G.cols(); ++j) gX(i, j) += G(i, j);
    });
}

Var Tape::assemble_rows(const std::vector<Var>& parts, std::vector<std::vector<int>> indices,
                        int n_rows) {
    if (parts.empty() || parts.size() != indices.size())
        throw DimensionError("assemble_rows: parts/indices mismatch");
    const int cols = v(parts[0].idx).cols();
    Matrix out(n_rows, cols);
    std::vector<uint8_t> written(static_cast<size_t>(n_rows), 0);
    std::vector<int> parent_ids;
    for (size_t p = 0; p < parts.size(); ++p) {
        check(parts[p]);
        const Matrix& P = v(parts[p].idx);
        if (P.cols() != cols) throw DimensionError("assemble_rows: column widths differ");
        if (static_cast<int>(indices[p].size()) != P.rows())
            throw DimensionError("assemble_rows: index count must equal part rows");
        for (int i = 0; i < P.rows(); ++i) {
            const int r = indices[p][static_cast<size_t>(i)];
            if (r < 0 || r >= n_rows || written[static_cast<size_t>(r)])
                throw DimensionError("assemble_rows: bad or duplicate target row");
            written[static_cast<size_t>(r)] = 1;
            for (int j = 0; j < cols; ++j) out(r, j) = P(i, j);
        }
        parent_ids.push_back(parts[p].idx);
    }
    for (uint8_t w : written)
        if (!w) throw DimensionError("assemble_rows: uncovered target row");
    return push(std::move(out), std::move(parent_ids),
                [indices = std::move(indices)](Tape& t, int self) {
                    const auto& node = t.nodes_[self];
                    const Matrix& G = t.g(self);
                    for (size_t p = 0; p < node.parents.size(); ++p) {
                        Matrix& gP = t.g(node.parents[p]);
                        for (int i = 0; i < gP.rows(); ++i) {
                            const int r = indices[p][static_cast<size_t>(i)];
                            for (int j = 0; j < G.cols(); ++j) gP(i, j) += G(r, j);
                        }
                    }
                });
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw DimensionError("concat_cols: empty input");
    const int rows = v(xs[0].idx).rows();
    int total = 0;
    std::vector<int> parent_ids;
    for (Var x : xs) {
        check(x);
        if (v(x.idx).rows() != rows) throw DimensionError("concat_cols: row counts differ");
        total += v(x.idx).cols();
        parent_ids.push_back(x.idx);
    }
    Matrix out(rows, total);
    int off = 0;
    for (Var x : xs) {
        const Matrix& X = v(x.idx);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < X.cols(); ++j) out(i, off + j) = X(i, j);
        off += X.cols();
    }
    return push(std::move(out), std::move(parent_ids), [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        int off = 0;
        for (int parent : node.parents) {
            Matrix& gX = t.g(parent);
            for (int i = 0; i < gX.rows(); ++i)
                for (int j = 0; j < gX.cols(); ++j) gX(i, j) += G(i, off + j);
            off += gX.cols();
        }
    });
}

Var Tape::slice_rows(Var x, int row_begin, int row_end) {
    check(x);
    const Matrix& X = v(x.idx);
    if (row_begin < 0 || row_end > X.rows() || row_begin >= row_end)
        throw DimensionError("slice_rows: bad range");
    Matrix out(row_end - row_begin, X.cols());
    for (int i = row_begin; i < row_end; ++i)
        for (int j = 0; j < X.cols(); ++j) out(i - row_begin, j) = X(i, j);
    return push(std::move(out), {x.idx}, [row_begin](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) gX(row_begin + i, j) += G(i, j);
    });
}

Var Tape::hadamard_const(Var x, Matrix mask) {
    check(x);
    const Matrix& X = v(x.idx);
    if (!X.same_shape(mask)) throw DimensionError("hadamard_const: shapes differ");
    Matrix out = X;
    for (long long i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
    auto shared_mask = std::make_shared<Matrix>(std::move(mask));
    return push(std::move(out), {x.idx}, [shared_mask](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        for (long long i = 0; i < G.size(); ++i)
            gX.data()[i] += G.data()[i] * shared_mask->data()[i];
    });
}

Var Tape::col_scale(Var x, std::vector<double> s) {
    check(x);
    const Matrix& X = v(x.idx);
    if (static_cast<int>(s.size()) != X.cols())
        throw DimensionError("col_scale: scale count must equal column count");
    Matrix out = X;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) *= s[static_cast<size_t>(j)];
    return push(std::move(out), {x.idx}, [s = std::move(s)](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const Matrix& G = t.g(self);
        Matrix& gX = t.g(node.parents[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) gX(i, j) += G(i, j) * s[static_cast<size_t>(j)];
    });
}

Var Tape::sum_sq(Var x) {
    check(x);
    const Matrix& X = v(x.idx);
    double acc = 0.0;
    for (double val : X.data()) acc += val * val;
    Matrix out(1, 1);
    out(0, 0) = acc;
    return push(std::move(out), {x.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const double gr = t.g(self)(0, 0);
        const Matrix& X = t.v(node.parents[0]);
        Matrix& gX = t.g(node.parents[0]);
        for (long long i = 0; i < X.size(); ++i) gX.data()[i] += 2.0 * gr * X.data()[i];
    });
}

Var Tape::mean_all(Var x) {
    check(x);
    const Matrix& X = v(x.idx);
    if (X.size() == 0) throw DimensionError("mean_all: empty matrix");
    double acc = 0.0;
    for (double val : X.data()) acc += val;
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<double>(X.size());
    return push(std::move(out), {x.idx}, [](Tape& t, int self) {
        const auto& node = t.nodes_[self];
        const double gr = t.g(self)(0, 0);
        Matrix& gX = t.g(node.parents[0]);
        const double w = gr / static_cast<double>(gX.size());
        for (long long i = 0; i < gX.size(); ++i) gX.data()[i] += w;
    });
}

void Tape::backward(Var root) {
    check(root);
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1)
        throw DimensionError("backward: root must be 1x1, got " + rv.shape_str());
    if (!std::isfinite(rv(0, 0))) throw NumericError("backward: loss is not finite");

    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const Node& n : nodes_) grads_.push_back(Matrix::zeros_like(n.value));
    grads_[root.idx](0, 0) = 1.0;

    for (int i = root.idx; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this, i);

    for (int i = 0; i <= root.idx; ++i) {
        Parameter* p = nodes_[i].param;
        if (!p) continue;
        Matrix& gp = p->grad;
        const Matrix& gn = grads_[i];
        for (long long k = 0; k < gn.size(); ++k) gp.data()[k] += gn.data()[k];
    }
}

}  // namespace protohat

#include "protohat/matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "protohat/errors.hpp"

namespace protohat {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw DimensionError("matrix dimensions must be non-negative");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::zeros_like(const Matrix& other) { return Matrix(other.rows_, other.cols_); }

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw DimensionError("from_rows: ragged initializer");
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
}

int dense_thread_count() {
    static const int n = [] {
        const char* env = std::getenv("PROTOHAT_THREADS");
        if (!env) return 1;
        const int v = std::atoi(env);
        return v < 1 ? 1 : v;
    }();
    return n;
}

namespace {

void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out, int r0, int r1) {
    const int inner = a.cols();
    const int nc = b.cols();
    for (int i = r0; i < r1; ++i) {
        double* oi = out.row(i);
        const double* ai = a.row(i);
        for (int k = 0; k < inner; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k);
            for (int j = 0; j < nc; ++j) oi[j] += aik * bk[j];
        }
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions differ: " + a.shape_str() + " * " +
                             b.shape_str());
    Matrix out(a.rows(), b.cols());
    const int threads = dense_thread_count();
    const long long work = static_cast<long long>(a.rows()) * a.cols() * b.cols();
    if (threads > 1 && a.rows() >= 2 * threads && work > (1 << 20)) {
        std::vector<std::thread> pool;
        const int chunk = (a.rows() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int r0 = t * chunk;
            const int r1 = std::min(a.rows(), r0 + chunk);
            if (r0 >= r1) break;
            pool.emplace_back(matmul_rows, std::cref(a), std::cref(b), std::ref(out), r0, r1);
        }
        for (auto& th : pool) th.join();
    } else {
        matmul_rows(a, b, out, 0, a.rows());
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix leaky_relu(const Matrix& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0))
        throw ConfigError("leaky_relu: slope must be in (0,1), got " + std::to_string(slope));
    Matrix out = x;
    for (double& v : out.data())
        if (v < 0.0) v *= slope;
    return out;
}

Matrix masked_row_softmax(const Matrix& logits, const Matrix& mask) {
    if (!logits.same_shape(mask))
        throw DimensionError("masked_row_softmax: mask shape " + mask.shape_str() +
                             " differs from logits shape " + logits.shape_str());
    Matrix out(logits.rows(), logits.cols());
    for (int i = 0; i < logits.rows(); ++i) {
        double rowmax = 0.0;
        bool any = false;
        for (int j = 0; j < logits.cols(); ++j) {
            if (mask(i, j) == 0.0) continue;
            if (!any || logits(i, j) > rowmax) rowmax = logits(i, j);
            any = true;
        }
        if (!any)
            throw DegenerateRowError("masked_row_softmax: row " + std::to_string(i) +
                                     " has no masked-in entries");
        double denom = 0.0;
        for (int j = 0; j < logits.cols(); ++j) {
            if (mask(i, j) == 0.0) continue;
            const double e = std::exp(logits(i, j) - rowmax);
            out(i, j) = e;
            denom += e;
        }
        for (int j = 0; j < logits.cols(); ++j)
            if (mask(i, j) != 0.0) out(i, j) /= denom;
    }
    return out;
}

Matrix pairwise_sq_dist(const Matrix& z, const Matrix& m) {
    if (z.cols() != m.cols())
        throw DimensionError("pairwise_sq_dist: width mismatch: " + z.shape_str() + " vs " +
                             m.shape_str());
    Matrix out(z.rows(), m.rows());
    for (int i = 0; i < z.rows(); ++i) {
        const double* zi = z.row(i);
        for (int j = 0; j < m.rows(); ++j) {
            const double* mj = m.row(j);
            double acc = 0.0;
            for (int d = 0; d < z.cols(); ++d) {
                const double diff = zi[d] - mj[d];
                acc += diff * diff;
            }
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace protohat

#pragma once

#include <string>
#include <vector>

#include "protohat/errors.hpp"
#include "protohat/matrix.hpp"
#include "protohat/rng.hpp"

namespace protohat {

/// A named learnable with its gradient accumulator. grad always has the same
/// shape as value and is all-zeros right after zero_grads.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(Matrix::zeros_like(value)) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Non-owning, ordered registry of parameters. The order fixes gradient
/// checking, Adam state layout, and checkpoint serialization.
class ParamSet {
public:
    void add(Parameter& p) {
        for (const Parameter* q : items_)
            if (q->name == p.name)
                throw ConfigError("duplicate parameter name: " + p.name);
        items_.push_back(&p);
    }

    size_t size() const { return items_.size(); }
    Parameter& operator[](size_t i) { return *items_[i]; }
    const Parameter& operator[](size_t i) const { return *items_[i]; }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    Parameter* find(const std::string& name) {
        for (Parameter* p : items_)
            if (p->name == name) return p;
        return nullptr;
    }

    void zero_grads() {
        for (Parameter* p : items_) p->zero_grad();
    }

    long long n_coords() const {
        long long n = 0;
        for (const Parameter* p : items_) n += p->value.size();
        return n;
    }

private:
    std::vector<Parameter*> items_;
};

/// Glorot-uniform fill: U(-L, L) with L = sqrt(6 / (fan_in + fan_out)),
/// fan_in = cols, fan_out = rows.
inline void glorot_init(Matrix& m, Rng& rng) {
    const double limit = std::sqrt(6.0 / (m.rows() + m.cols()));
    for (double& v : m.data()) v = rng.uniform(-limit, limit);
}

inline void gaussian_init(Matrix& m, Rng& rng, double stddev) {
    for (double& v : m.data()) v = rng.normal(0.0, stddev);
}

}  // namespace protohat

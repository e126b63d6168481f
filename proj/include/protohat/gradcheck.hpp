#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "protohat/param.hpp"

namespace protohat {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::map<std::string, double> per_parameter_errors;
};

/// Compares analytic gradients against central finite differences.
///
/// loss_fn(true) must recompute the loss at the current parameter values and
/// accumulate gradients into Parameter::grad (grads are zeroed here first);
/// loss_fn(false) must only return the loss value. h must lie in [1e-6, 1e-4].
/// At most coords_per_param coordinates are probed per parameter (all of them
/// when the parameter is at least that small), chosen by a seeded draw.
///
/// Relative error is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckReport grad_check(ParamSet& params, const std::function<double(bool)>& loss_fn, double h,
                           int coords_per_param = 32, uint64_t seed = 0x5eedc0de);

}  // namespace protohat

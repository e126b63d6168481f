#include "protohat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "protohat/errors.hpp"
#include "protohat/rng.hpp"

namespace protohat {

GradCheckReport grad_check(ParamSet& params, const std::function<double(bool)>& loss_fn, double h,
                           int coords_per_param, uint64_t seed) {
    if (!(h >= 1e-6 && h <= 1e-4))
        throw ConfigError("grad_check: h must be in [1e-6, 1e-4], got " + std::to_string(h));
    if (coords_per_param < 1) throw ConfigError("grad_check: coords_per_param must be >= 1");

    params.zero_grads();
    const double base = loss_fn(true);
    if (!std::isfinite(base)) throw NumericError("grad_check: loss is not finite");

    Rng rng(seed);
    GradCheckReport report;
    for (Parameter* p : params) {
        const long long n = p->value.size();
        std::vector<long long> coords;
        if (n <= coords_per_param) {
            coords.resize(static_cast<size_t>(n));
            for (long long i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
        } else {
            // sample distinct coordinates
            std::vector<long long> all(static_cast<size_t>(n));
            for (long long i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
            rng.shuffle(all);
            coords.assign(all.begin(), all.begin() + coords_per_param);
        }

        double worst = 0.0;
        for (long long c : coords) {
            double& x = p->value.data()[static_cast<size_t>(c)];
            const double saved = x;
            x = saved + h;
            const double up = loss_fn(false);
            x = saved - h;
            const double down = loss_fn(false);
            x = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("grad_check: perturbed loss is not finite for " + p->name);
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad.data()[static_cast<size_t>(c)];
            const double rel = std::abs(analytic - numeric) /
                               std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
        report.per_parameter_errors[p->name] = worst;
        report.max_relative_error = std::max(report.max_relative_error, worst);
    }
    return report;
}

}  // namespace protohat

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "archtx/error.hpp"
#include "archtx/tensor.hpp"

namespace archtx {

// Compares analytic gradients (already populated on params by a backward pass)
// against central differences of loss_fn, coordinate by coordinate. loss_fn
// must evaluate the loss from the parameters' current values and must not
// touch their grads. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
inline double finite_diff_check(const std::function<double()>& loss_fn,
                                const std::vector<Parameter*>& params, double eps) {
    if (eps <= 0.0) {
        throw Error("finite_diff_check requires eps > 0");
    }
    double worst = 0.0;
    for (Parameter* p : params) {
        for (size_t i = 0; i < p->value.data.size(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + eps;
            const double up = loss_fn();
            p->value.data[i] = saved - eps;
            const double down = loss_fn();
            p->value.data[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw Error("finite_diff_check: non-finite loss at " + p->id);
            }
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p->grad.data[i];
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
            worst = std::max(worst, std::fabs(analytic - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace archtx

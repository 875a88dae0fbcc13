#include "asd/adam.hpp"

#include <cmath>
#include <sstream>

#include "asd/error.hpp"

namespace asd {

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const AdamOptions& opts) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw ConfigError("adam: parameter, gradient and moment sizes differ");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            std::ostringstream msg;
            msg << "adam: non-finite gradient at coordinate " << i << " (value " << grads[i]
                << ", step " << state.step << ")";
            throw NumericError(msg.str());
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(opts.beta1, t);
    const double c2 = 1.0 - std::pow(opts.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * g;
        state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
    }
}

}  // namespace asd

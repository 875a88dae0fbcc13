#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace asd {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected adaptive-moment step, in place. Throws NumericError (naming
// the offending coordinate) on a non-finite gradient, leaving params and
// state untouched; ConfigError on a size mismatch.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const AdamOptions& opts);

}  // namespace asd

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asd/param_vector.hpp"
#include "asd/rng.hpp"

namespace asd {

// Fully-connected net: tanh on every hidden layer, linear output layer.
// widths = {input, hidden..., output}. Layer k owns segments "W<k>" (out x in,
// row-major) and "b<k>".
struct MlpArch {
    std::vector<std::size_t> widths;

    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    std::size_t num_layers() const { return widths.size() - 1; }
    // Width of the last hidden activation (the input itself for a single layer).
    std::size_t feature_width() const { return widths[widths.size() - 2]; }
    std::size_t param_count() const;
};

void validate_arch(const MlpArch& arch);
ParamVector make_mlp_params(const MlpArch& arch);
// W ~ N(0, gain^2 / fan_in), b = 0.
void init_mlp_params(ParamVector& params, const MlpArch& arch, Rng& rng, double gain = 1.0);
void check_layout(const ParamVector& params, const MlpArch& arch);

// Per-layer activations recorded during a forward pass: acts[0] is the
// input, acts[k] the output of layer k.
struct MlpCache {
    std::vector<std::vector<double>> acts;

    std::span<const double> output() const { return acts.back(); }
    std::span<const double> feature() const { return acts[acts.size() - 2]; }
};

void mlp_forward(const ParamVector& params, const MlpArch& arch, std::span<const double> input,
                 MlpCache& cache);
std::vector<double> mlp_forward(const ParamVector& params, std::span<const double> input,
                                const MlpArch& arch);

// Reverse pass for the cotangent (out_grad on the output, feature_grad on the
// last hidden activation). Either cotangent may be empty. Gradients are
// accumulated (+=) into param_grad and input_grad; pass an empty span to skip
// one (skipping param_grad avoids the outer products for frozen nets).
void mlp_backward(const ParamVector& params, const MlpArch& arch, const MlpCache& cache,
                  std::span<const double> out_grad, std::span<const double> feature_grad,
                  std::span<double> param_grad, std::span<double> input_grad);

struct BackwardResult {
    ParamVector param_grads;
    std::vector<double> input_grad;
};

// Exact gradients of <upstream, mlp_forward(params, input)>.
BackwardResult backward(const ParamVector& params, std::span<const double> input,
                        const MlpArch& arch, std::span<const double> upstream);

}  // namespace asd

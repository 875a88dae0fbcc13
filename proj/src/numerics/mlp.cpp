#include "asd/mlp.hpp"

#include <cmath>
#include <string>

#include "asd/error.hpp"
#include "asd/kernels.hpp"

namespace asd {
namespace {

std::string w_name(std::size_t k) { return "W" + std::to_string(k); }
std::string b_name(std::size_t k) { return "b" + std::to_string(k); }

}  // namespace

std::size_t MlpArch::param_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) n += widths[k + 1] * widths[k] + widths[k + 1];
    return n;
}

void validate_arch(const MlpArch& arch) {
    if (arch.widths.size() < 2) throw ConfigError("MLP needs at least an input and an output width");
    for (std::size_t w : arch.widths) {
        if (w == 0) throw ConfigError("MLP layer widths must be positive");
    }
}

ParamVector make_mlp_params(const MlpArch& arch) {
    validate_arch(arch);
    ParamVector p;
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
        p.add_segment(w_name(k), {arch.widths[k + 1], arch.widths[k]});
        p.add_segment(b_name(k), {arch.widths[k + 1]});
    }
    return p;
}

void init_mlp_params(ParamVector& params, const MlpArch& arch, Rng& rng, double gain) {
    check_layout(params, arch);
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
        const double scale = gain / std::sqrt(static_cast<double>(arch.widths[k]));
        for (double& w : params.view(w_name(k))) w = scale * rng.normal();
        for (double& b : params.view(b_name(k))) b = 0.0;
    }
}

void check_layout(const ParamVector& params, const MlpArch& arch) {
    validate_arch(arch);
    if (params.layout().size() != 2 * arch.num_layers()) {
        throw ConfigError("parameter layout does not match MLP depth");
    }
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
        const Segment& w = params.layout()[2 * k];
        const Segment& b = params.layout()[2 * k + 1];
        const std::vector<std::size_t> ws{arch.widths[k + 1], arch.widths[k]};
        const std::vector<std::size_t> bs{arch.widths[k + 1]};
        if (w.name != w_name(k) || w.shape != ws || b.name != b_name(k) || b.shape != bs) {
            throw ConfigError("parameter layout does not match MLP layer " + std::to_string(k));
        }
    }
}

void mlp_forward(const ParamVector& params, const MlpArch& arch, std::span<const double> input,
                 MlpCache& cache) {
    if (input.size() != arch.input_width()) {
        throw ConfigError("MLP input has width " + std::to_string(input.size()) + ", expected " +
                          std::to_string(arch.input_width()));
    }
    const auto& kern = kernels::active();
    const std::size_t layers = arch.num_layers();
    cache.acts.resize(layers + 1);
    cache.acts[0].assign(input.begin(), input.end());
    const double* base = params.values().data();
    const auto& layout = params.layout();
    for (std::size_t k = 0; k < layers; ++k) {
        const std::size_t rows = arch.widths[k + 1];
        const std::size_t cols = arch.widths[k];
        auto& out = cache.acts[k + 1];
        out.resize(rows);
        kern.gemv(out.data(), base + layout[2 * k].offset, cache.acts[k].data(),
                  base + layout[2 * k + 1].offset, rows, cols);
        if (k + 1 < layers) {
            for (double& v : out) v = std::tanh(v);
        }
    }
}

std::vector<double> mlp_forward(const ParamVector& params, std::span<const double> input,
                                const MlpArch& arch) {
    check_layout(params, arch);
    MlpCache cache;
    mlp_forward(params, arch, input, cache);
    return cache.acts.back();
}

void mlp_backward(const ParamVector& params, const MlpArch& arch, const MlpCache& cache,
                  std::span<const double> out_grad, std::span<const double> feature_grad,
                  std::span<double> param_grad, std::span<double> input_grad) {
    const std::size_t layers = arch.num_layers();
    if (cache.acts.size() != layers + 1) throw ConfigError("MLP cache does not match architecture");
    if (!out_grad.empty() && out_grad.size() != arch.output_width()) {
        throw ConfigError("upstream gradient width does not match MLP output");
    }
    if (!feature_grad.empty() && feature_grad.size() != arch.feature_width()) {
        throw ConfigError("feature gradient width does not match MLP feature");
    }
    if (!param_grad.empty() && param_grad.size() != params.size()) {
        throw ConfigError("parameter gradient buffer has the wrong size");
    }
    if (!input_grad.empty() && input_grad.size() != arch.input_width()) {
        throw ConfigError("input gradient buffer has the wrong size");
    }
    const auto& kern = kernels::active();
    const double* base = params.values().data();
    const auto& layout = params.layout();

    // delta = gradient w.r.t. the pre-activation of layer k.
    std::vector<double> delta(arch.output_width(), 0.0);
    if (!out_grad.empty()) delta.assign(out_grad.begin(), out_grad.end());
    std::vector<double> below;
    for (std::size_t k = layers; k-- > 0;) {
        const std::size_t rows = arch.widths[k + 1];
        const std::size_t cols = arch.widths[k];
        const double* W = base + layout[2 * k].offset;
        if (!param_grad.empty()) {
            kern.ger_acc(param_grad.data() + layout[2 * k].offset, delta.data(), cache.acts[k].data(),
                         rows, cols);
            kern.axpy(param_grad.data() + layout[2 * k + 1].offset, 1.0, delta.data(), rows);
        }
        if (k == 0 && input_grad.empty()) break;
        below.assign(cols, 0.0);
        kern.gemv_t_acc(below.data(), W, delta.data(), rows, cols);
        if (k == layers - 1 && !feature_grad.empty()) {
            for (std::size_t c = 0; c < cols; ++c) below[c] += feature_grad[c];
        }
        if (k == 0) {
            for (std::size_t c = 0; c < cols; ++c) input_grad[c] += below[c];
            break;
        }
        const auto& act = cache.acts[k];
        for (std::size_t c = 0; c < cols; ++c) below[c] *= 1.0 - act[c] * act[c];
        delta.swap(below);
    }
}

BackwardResult backward(const ParamVector& params, std::span<const double> input,
                        const MlpArch& arch, std::span<const double> upstream) {
    check_layout(params, arch);
    MlpCache cache;
    mlp_forward(params, arch, input, cache);
    BackwardResult r{params.zeros_like(), std::vector<double>(arch.input_width(), 0.0)};
    mlp_backward(params, arch, cache, upstream, {}, r.param_grads.values(), r.input_grad);
    return r;
}

}  // namespace asd

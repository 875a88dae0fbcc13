#include "asd/models.hpp"

#include <algorithm>
#include <string>

#include "asd/error.hpp"

namespace asd {

OutputMap eps_map(OutputKind kind, double t) {
    if (kind == OutputKind::velocity) return {1.0, 1.0 - t};
    return {0.0, 1.0};
}

OutputMap x0_map(OutputKind kind, double t, double t_clamp) {
    if (kind == OutputKind::velocity) return {1.0, -t};
    const double tc = std::min(t, t_clamp);
    return {1.0 / (1.0 - tc), -tc / (1.0 - tc)};
}

DenoiserNet make_denoiser(std::size_t frame_dim, const std::vector<std::size_t>& hidden,
                          OutputKind output, Rng& rng) {
    if (frame_dim == 0) throw ConfigError("frame dimension must be positive");
    DenoiserNet net;
    net.frame_dim = frame_dim;
    net.arch.widths.push_back(2 * frame_dim + 2);
    for (std::size_t h : hidden) net.arch.widths.push_back(h);
    net.arch.widths.push_back(frame_dim);
    net.params = make_mlp_params(net.arch);
    init_mlp_params(net.params, net.arch, rng);
    net.output = output;
    return net;
}

void assemble_input(std::span<const double> x_t, std::span<const double> context, double t,
                    std::span<double> out) {
    const std::size_t D = x_t.size();
    if (out.size() != 2 * D + 2) throw ConfigError("denoiser input buffer has the wrong width");
    if (!context.empty() && context.size() != D) throw ConfigError("context has the wrong dimension");
    std::copy(x_t.begin(), x_t.end(), out.begin());
    if (context.empty()) {
        std::fill(out.begin() + D, out.begin() + 2 * D, 0.0);
    } else {
        std::copy(context.begin(), context.end(), out.begin() + D);
    }
    out[2 * D] = t;
    out[2 * D + 1] = 1.0 - t;
}

void denoiser_forward(const DenoiserNet& net, std::span<const double> x_t, double t,
                      std::span<const double> context, MlpCache& cache) {
    if (x_t.size() != net.frame_dim) {
        throw ConfigError("x_t has dimension " + std::to_string(x_t.size()) + ", net expects " +
                          std::to_string(net.frame_dim));
    }
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("denoiser: t must lie in [0, 1]");
    std::vector<double> input(2 * net.frame_dim + 2);
    assemble_input(x_t, context, t, input);
    mlp_forward(net.params, net.arch, input, cache);
}

void denoiser_backward(const DenoiserNet& net, const MlpCache& cache, const OutputMap& map,
                       std::span<const double> out_grad, std::span<const double> feature_grad,
                       std::span<double> param_grad, std::span<double> x_grad,
                       std::span<double> context_grad) {
    const std::size_t D = net.frame_dim;
    std::vector<double> f_grad;
    if (!out_grad.empty()) {
        f_grad.resize(D);
        for (std::size_t k = 0; k < D; ++k) f_grad[k] = map.scale * out_grad[k];
    }
    const bool need_input = !x_grad.empty() || !context_grad.empty();
    std::vector<double> in_grad(need_input ? 2 * D + 2 : 0, 0.0);
    mlp_backward(net.params, net.arch, cache, f_grad, feature_grad, param_grad, in_grad);
    if (!x_grad.empty()) {
        for (std::size_t k = 0; k < D; ++k) {
            x_grad[k] += in_grad[k] + (out_grad.empty() ? 0.0 : map.skip * out_grad[k]);
        }
    }
    if (!context_grad.empty()) {
        for (std::size_t k = 0; k < D; ++k) context_grad[k] += in_grad[D + k];
    }
}

EpsPrediction eps_predict(const EpsNet& net, std::span<const double> x_t, double t,
                          std::span<const double> context) {
    MlpCache cache;
    denoiser_forward(net.net, x_t, t, context, cache);
    const OutputMap m = eps_map(net.net.output, t);
    const auto F = cache.output();
    EpsPrediction p;
    p.eps.resize(x_t.size());
    for (std::size_t k = 0; k < x_t.size(); ++k) p.eps[k] = m.skip * x_t[k] + m.scale * F[k];
    const auto feat = cache.feature();
    p.feature.assign(feat.begin(), feat.end());
    return p;
}

std::vector<double> student_predict_x0(const StudentNet& net, std::span<const double> x_t, double t,
                                       std::span<const double> context) {
    MlpCache cache;
    denoiser_forward(net.net, x_t, t, context, cache);
    const OutputMap m = x0_map(net.net.output, t, net.net.t_clamp);
    const auto F = cache.output();
    std::vector<double> x0(x_t.size());
    for (std::size_t k = 0; k < x_t.size(); ++k) x0[k] = m.skip * x_t[k] + m.scale * F[k];
    return x0;
}

DiscriminatorHead make_discriminator_head(std::size_t feature_width,
                                          const std::vector<std::size_t>& hidden, std::size_t steps,
                                          Rng& rng, double output_gain) {
    if (steps == 0) throw ConfigError("discriminator head needs at least one logit");
    DiscriminatorHead head;
    head.arch.widths.push_back(feature_width);
    for (std::size_t h : hidden) head.arch.widths.push_back(h);
    head.arch.widths.push_back(steps);
    head.params = make_mlp_params(head.arch);
    init_mlp_params(head.params, head.arch, rng);
    for (double& w : head.params.view("W" + std::to_string(head.arch.num_layers() - 1))) w *= output_gain;
    return head;
}

std::vector<double> discriminator_logits(const DiscriminatorHead& head, std::span<const double> feature) {
    return mlp_forward(head.params, feature, head.arch);
}

double discriminator_logit(const DiscriminatorHead& head, std::span<const double> feature, std::size_t n) {
    if (n < 1 || n > head.steps()) {
        throw DomainError("discriminator logit index " + std::to_string(n) + " outside 1.." +
                          std::to_string(head.steps()));
    }
    return discriminator_logits(head, feature)[n - 1];
}

StudentNet init_student_from_teacher(const EpsNet& teacher) { return StudentNet{teacher.net}; }

std::vector<double> rollout_noise(std::uint64_t frame_seed, std::size_t step, std::size_t dim) {
    Rng rng(derive_seed(frame_seed, {step}));
    return rng.normal_vector(dim);
}

std::vector<double> rollout_frame(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                                  std::span<const double> context, std::uint64_t frame_seed,
                                  std::vector<TrajectoryStep>* trace, RolloutCounts* counts) {
    if (n < 1 || n > schedule.steps()) {
        throw DomainError("rollout needs 1 <= n <= " + std::to_string(schedule.steps()));
    }
    const std::size_t D = net.net.frame_dim;
    std::vector<double> x = rollout_noise(frame_seed, 0, D);
    std::vector<double> x0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = schedule.at(j);
        x0 = student_predict_x0(net, x, t, context);
        if (counts) ++counts->predict_calls;
        if (trace) trace->push_back({t, x, x0});
        if (j + 1 < n) {
            const std::vector<double> eps = rollout_noise(frame_seed, j + 1, D);
            x = add_noise(x0, eps, schedule.at(j + 1));
            if (counts) ++counts->renoise_calls;
        }
    }
    return x0;
}

VideoTape VideoTape::record(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                            std::size_t L, std::span<const std::uint64_t> video_seeds) {
    if (n < 1 || n > schedule.steps()) {
        throw DomainError("rollout needs 1 <= n <= " + std::to_string(schedule.steps()));
    }
    const std::size_t D = net.net.frame_dim;
    VideoTape tape;
    tape.steps_ = n;
    tape.out_ = VideoBatch(video_seeds.size(), L, D);
    tape.calls_.reserve(video_seeds.size() * L * n);
    std::vector<double> x(D);
    std::vector<double> x0(D);
    for (std::size_t b = 0; b < video_seeds.size(); ++b) {
        for (std::size_t i = 0; i < L; ++i) {
            const std::uint64_t frame_seed = derive_seed(video_seeds[b], {i});
            const auto context = tape.out_.context(b, i);
            x = rollout_noise(frame_seed, 0, D);
            for (std::size_t j = 0; j < n; ++j) {
                const double t = schedule.at(j);
                Call call{b, i, j, t, {}};
                denoiser_forward(net.net, x, t, context, call.cache);
                const OutputMap m = x0_map(net.net.output, t, net.net.t_clamp);
                const auto F = call.cache.output();
                for (std::size_t k = 0; k < D; ++k) x0[k] = m.skip * x[k] + m.scale * F[k];
                tape.calls_.push_back(std::move(call));
                if (j + 1 < n) {
                    const std::vector<double> eps = rollout_noise(frame_seed, j + 1, D);
                    add_noise_into(x0, eps, schedule.at(j + 1), x);
                }
            }
            std::copy(x0.begin(), x0.end(), tape.out_.frame(b, i).begin());
        }
    }
    return tape;
}

void VideoTape::backward(const StudentNet& net, const NoiseSchedule& schedule,
                         std::span<const double> upstream, std::span<double> param_grad) const {
    const std::size_t B = out_.B, L = out_.L, D = out_.D, n = steps_;
    if (upstream.size() != out_.x0.size()) throw ConfigError("upstream gradient has the wrong shape");
    if (param_grad.size() != net.net.params.size()) throw ConfigError("parameter gradient has the wrong size");
    std::vector<double> g(upstream.begin(), upstream.end());
    std::vector<double> gx(D);
    std::vector<double> gin(D);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = L; i-- > 0;) {
            std::copy_n(g.begin() + (b * L + i) * D, D, gx.begin());
            std::span<double> ctx_grad;
            if (i > 0) ctx_grad = std::span<double>(g).subspan((b * L + i - 1) * D, D);
            for (std::size_t j = n; j-- > 0;) {
                const Call& call = calls_[(b * L + i) * n + j];
                const OutputMap m = x0_map(net.net.output, call.t, net.net.t_clamp);
                std::fill(gin.begin(), gin.end(), 0.0);
                denoiser_backward(net.net, call.cache, m, gx, {}, param_grad, j > 0 ? std::span<double>(gin) : std::span<double>{},
                                  ctx_grad);
                if (j > 0) {
                    // x entering step j is (1 - t_j) x0_{j-1} + t_j eps.
                    const double keep = 1.0 - schedule.at(j);
                    for (std::size_t k = 0; k < D; ++k) gx[k] = keep * gin[k];
                }
            }
        }
    }
}

VideoBatch rollout_videos(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                          std::size_t L, std::span<const std::uint64_t> video_seeds) {
    const std::size_t D = net.net.frame_dim;
    VideoBatch out(video_seeds.size(), L, D);
    for (std::size_t b = 0; b < video_seeds.size(); ++b) {
        for (std::size_t i = 0; i < L; ++i) {
            const auto x0 = rollout_frame(net, schedule, n, out.context(b, i), derive_seed(video_seeds[b], {i}));
            std::copy(x0.begin(), x0.end(), out.frame(b, i).begin());
        }
    }
    return out;
}

}  // namespace asd

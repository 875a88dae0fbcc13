#include "asd/sampler.hpp"

#include <functional>
#include <string>

#include "asd/error.hpp"

namespace asd {
namespace {

// x0_hat and eps_hat at (x, t, context); eps_hat may be left empty at t = 1.
using Denoiser = std::function<void(std::span<const double> x, double t, std::span<const double> ctx,
                                    std::vector<double>& x0, std::vector<double>& eps)>;

VideoBatch ddim_videos(const Denoiser& den, std::size_t D, std::size_t steps, std::size_t L, std::size_t count,
                       std::uint64_t seed) {
    if (steps < 1) throw ConfigError("sampler needs at least one step");
    VideoBatch out(count, L, D);
    std::vector<double> x(D), x0, eps;
    for (std::size_t b = 0; b < count; ++b) {
        const std::uint64_t video_seed = derive_seed(seed, {b});
        for (std::size_t i = 0; i < L; ++i) {
            Rng rng(derive_seed(video_seed, {i}));
            rng.fill_normal(x);
            const auto ctx = out.context(b, i);
            for (std::size_t k = 0; k < steps; ++k) {
                const double t = 1.0 - static_cast<double>(k) / static_cast<double>(steps);
                const double t_next = 1.0 - static_cast<double>(k + 1) / static_cast<double>(steps);
                den(x, t, ctx, x0, eps);
                for (std::size_t d = 0; d < D; ++d) x[d] = (1.0 - t_next) * x0[d] + t_next * eps[d];
            }
            std::copy(x.begin(), x.end(), out.frame(b, i).begin());
        }
    }
    return out;
}

}  // namespace

void InferencePlan::validate() const {
    if (L < 1) throw ConfigError("inference plan needs L >= 1");
    if (!(R_reduced >= 1 && R_reduced <= T_intensive && T_intensive <= schedule.steps())) {
        throw ConfigError("inference plan needs 1 <= R <= T <= " + std::to_string(schedule.steps()) + ", got T = " +
                          std::to_string(T_intensive) + ", R = " + std::to_string(R_reduced));
    }
}

InferencePlan uniform_plan(std::size_t n, const NoiseSchedule& schedule, std::size_t L) {
    return ffe_plan(n, n, schedule, L);
}

InferencePlan ffe_plan(std::size_t T, std::size_t R, const NoiseSchedule& schedule, std::size_t L) {
    InferencePlan p{T, R, schedule, L};
    p.validate();
    return p;
}

std::size_t step_budget(const InferencePlan& plan) {
    plan.validate();
    return plan.T_intensive + (plan.L - 1) * plan.R_reduced;
}

GeneratedVideo generate_video(const StudentNet& student, const InferencePlan& plan, std::uint64_t seed) {
    plan.validate();
    const std::size_t D = student.net.frame_dim;
    GeneratedVideo v;
    v.frames.L = plan.L;
    v.frames.D = D;
    v.frames.seed = seed;
    v.frames.frames.assign(plan.L * D, 0.0);
    v.trajectory.frames.resize(plan.L);
    for (std::size_t i = 0; i < plan.L; ++i) {
        const auto ctx = i == 0 ? std::span<const double>{} : std::span<const double>(v.frames.frame(i - 1));
        const auto x0 = rollout_frame(student, plan.schedule, plan.steps_for_frame(i), ctx, derive_seed(seed, {i}),
                                      &v.trajectory.frames[i], &v.counts);
        std::copy(x0.begin(), x0.end(), v.frames.frame(i).begin());
    }
    return v;
}

VideoBatch generate_videos(const StudentNet& student, const InferencePlan& plan, std::size_t count,
                           std::uint64_t seed, std::vector<DenoiseTrajectory>* trajectories) {
    plan.validate();
    VideoBatch out(count, plan.L, student.net.frame_dim);
    if (trajectories) trajectories->clear();
    for (std::size_t b = 0; b < count; ++b) {
        GeneratedVideo v = generate_video(student, plan, derive_seed(seed, {b}));
        std::copy(v.frames.frames.begin(), v.frames.frames.end(), out.x0.begin() + b * plan.L * out.D);
        if (trajectories) trajectories->push_back(std::move(v.trajectory));
    }
    return out;
}

VideoBatch teacher_sample_videos(const EpsNet& teacher, std::size_t steps, std::size_t L, std::size_t count,
                                 std::uint64_t seed) {
    const std::size_t D = teacher.net.frame_dim;
    MlpCache cache;
    Denoiser den = [&](std::span<const double> x, double t, std::span<const double> ctx, std::vector<double>& x0,
                       std::vector<double>& eps) {
        denoiser_forward(teacher.net, x, t, ctx, cache);
        const OutputMap me = eps_map(teacher.net.output, t);
        const OutputMap mx = x0_map(teacher.net.output, t, teacher.net.t_clamp);
        const auto F = cache.output();
        x0.resize(D);
        eps.resize(D);
        for (std::size_t k = 0; k < D; ++k) {
            eps[k] = me.skip * x[k] + me.scale * F[k];
            x0[k] = mx.skip * x[k] + mx.scale * F[k];
        }
    };
    return ddim_videos(den, D, steps, L, count, seed);
}

VideoBatch analytic_sample_videos(const WorldSpec& world, std::size_t steps, std::size_t count,
                                  std::uint64_t seed) {
    const std::size_t D = world.D;
    Denoiser den = [&](std::span<const double> x, double t, std::span<const double> ctx, std::vector<double>& x0,
                       std::vector<double>& eps) {
        x0 = analytic_posterior_mean(world, ctx, x, t);
        eps.resize(D);
        // x = (1 - t) x0 + t eps
        for (std::size_t k = 0; k < D; ++k) eps[k] = (x[k] - (1.0 - t) * x0[k]) / t;
    };
    return ddim_videos(den, D, steps, world.L, count, seed);
}

VideoBatch world_videos(const WorldSpec& world, std::size_t count, std::uint64_t seed) {
    VideoBatch out(count, world.L, world.D);
    for (std::size_t b = 0; b < count; ++b) {
        const FrameSequence s = sample_sequence(world, derive_seed(seed, {b}));
        std::copy(s.frames.begin(), s.frames.end(), out.x0.begin() + b * world.L * world.D);
    }
    return out;
}

}  // namespace asd

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asd/mlp.hpp"
#include "asd/param_vector.hpp"
#include "asd/rng.hpp"
#include "asd/schedule.hpp"

namespace asd {

// How the raw MLP output F maps to the reported quantities. Both are affine
// in (x_t, F): out = skip * x_t + scale * F.
//   velocity: eps = x_t + (1 - t) F,          x0 = x_t - t F
//   epsilon:  eps = F,                        x0 = (x_t - t' F) / (1 - t'), t' = min(t, t_clamp)
// The two agree on x0 = (x_t - t eps) / (1 - t) for t < 1; the velocity form
// stays well conditioned at t = 1.
enum class OutputKind { velocity, epsilon };

struct OutputMap {
    double skip;
    double scale;
};

OutputMap eps_map(OutputKind kind, double t);
OutputMap x0_map(OutputKind kind, double t, double t_clamp);

// Shared trunk for the student and the score nets. Input is
// x_t (D) ++ context (D, zeros for the first frame) ++ (t, 1 - t).
struct DenoiserNet {
    std::size_t frame_dim = 0;
    MlpArch arch;
    ParamVector params;
    OutputKind output = OutputKind::velocity;
    double t_clamp = 0.999;
};

DenoiserNet make_denoiser(std::size_t frame_dim, const std::vector<std::size_t>& hidden,
                          OutputKind output, Rng& rng);
void assemble_input(std::span<const double> x_t, std::span<const double> context, double t,
                    std::span<double> out);
// Runs the trunk; F is cache.output().
void denoiser_forward(const DenoiserNet& net, std::span<const double> x_t, double t,
                      std::span<const double> context, MlpCache& cache);
// Backward through out = skip * x_t + scale * F(x_t, context, t). Accumulates
// into param_grad / x_grad / context_grad; empty spans are skipped.
void denoiser_backward(const DenoiserNet& net, const MlpCache& cache, const OutputMap& map,
                       std::span<const double> out_grad, std::span<const double> feature_grad,
                       std::span<double> param_grad, std::span<double> x_grad,
                       std::span<double> context_grad);

// Teacher (s_data) and fake / teaching-assistant (s_gen) noise predictors.
struct EpsNet {
    DenoiserNet net;
};

// Few-step generator predicting clean frames.
struct StudentNet {
    DenoiserNet net;
};

// Per-step critic on the fake net's backbone feature; logit n belongs to D_n.
struct DiscriminatorHead {
    MlpArch arch;  // feature_width -> ... -> steps
    ParamVector params;

    std::size_t steps() const { return arch.output_width(); }
};

struct EpsPrediction {
    std::vector<double> eps;
    std::vector<double> feature;
};

EpsPrediction eps_predict(const EpsNet& net, std::span<const double> x_t, double t,
                          std::span<const double> context);
std::vector<double> student_predict_x0(const StudentNet& net, std::span<const double> x_t, double t,
                                       std::span<const double> context);

// output_gain scales the initial last-layer weights; 0 starts from a
// constant critic.
DiscriminatorHead make_discriminator_head(std::size_t feature_width,
                                          const std::vector<std::size_t>& hidden, std::size_t steps,
                                          Rng& rng, double output_gain = 1.0);
std::vector<double> discriminator_logits(const DiscriminatorHead& head, std::span<const double> feature);
// n is 1-based; DomainError unless 1 <= n <= steps.
double discriminator_logit(const DiscriminatorHead& head, std::span<const double> feature, std::size_t n);

// Same weights, reinterpreted as a clean-frame predictor: at initialisation
// student x0 equals the teacher's converted (x_t - t eps) / (1 - t).
StudentNet init_student_from_teacher(const EpsNet& teacher);

// ---------------------------------------------------------------------------
// Rollouts

// One recorded denoising step of one frame.
struct TrajectoryStep {
    double t;
    std::vector<double> x_t;  // state entering the step
    std::vector<double> x0;   // prediction at the step
};

// DenoiseTrajectory: frames[i] holds the steps of frame i.
struct DenoiseTrajectory {
    std::vector<std::vector<TrajectoryStep>> frames;
};

struct RolloutCounts {
    std::size_t predict_calls = 0;
    std::size_t renoise_calls = 0;
};

// Noise for frame-level rollouts: step 0 draws the starting z, step j >= 1 the
// fresh eps used to renoise before step j + 1.
std::vector<double> rollout_noise(std::uint64_t frame_seed, std::size_t step, std::size_t dim);

// x <- z at t_1; for j = 1..n: x0 <- G(x, t_j, context); if j < n: x <- (1 - t_{j+1}) x0 + t_{j+1} eps.
std::vector<double> rollout_frame(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                                  std::span<const double> context, std::uint64_t frame_seed,
                                  std::vector<TrajectoryStep>* trace = nullptr,
                                  RolloutCounts* counts = nullptr);

// B videos of L frames with D dims, row-major [video][frame][dim]. The
// context of frame i is frame i - 1 of the same video.
struct VideoBatch {
    std::size_t B = 0;
    std::size_t L = 0;
    std::size_t D = 0;
    std::vector<double> x0;

    VideoBatch() = default;
    VideoBatch(std::size_t b, std::size_t l, std::size_t d) : B(b), L(l), D(d), x0(b * l * d, 0.0) {}

    std::span<const double> frame(std::size_t b, std::size_t i) const {
        return {x0.data() + (b * L + i) * D, D};
    }
    std::span<double> frame(std::size_t b, std::size_t i) { return {x0.data() + (b * L + i) * D, D}; }
    // Empty for the first frame.
    std::span<const double> context(std::size_t b, std::size_t i) const {
        return i == 0 ? std::span<const double>{} : frame(b, i - 1);
    }
};

// Autoregressive rollout of whole videos with every student call recorded,
// so gradients can be pulled back to the parameters.
class VideoTape {
public:
    struct Call {
        std::size_t video, frame, step;
        double t;
        MlpCache cache;
    };

    VideoTape() = default;

    std::size_t steps() const { return steps_; }
    const VideoBatch& output() const { return out_; }
    const std::vector<Call>& calls() const { return calls_; }

    // video_seeds[b] keys the noise of video b; frame i uses derive_seed(video_seeds[b], {i}).
    static VideoTape record(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                            std::size_t L, std::span<const std::uint64_t> video_seeds);

    // upstream: dLoss/d(output frame), same layout as output().x0. Includes
    // any gradient a loss placed on a frame through its use as context.
    // Accumulates into param_grad.
    void backward(const StudentNet& net, const NoiseSchedule& schedule, std::span<const double> upstream,
                  std::span<double> param_grad) const;

private:
    std::size_t steps_ = 0;
    VideoBatch out_;
    std::vector<Call> calls_;  // video-major, frame-major, step-major
};

// Values only (no tape).
VideoBatch rollout_videos(const StudentNet& net, const NoiseSchedule& schedule, std::size_t n,
                          std::size_t L, std::span<const std::uint64_t> video_seeds);

}  // namespace asd

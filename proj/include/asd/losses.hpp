#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "asd/models.hpp"
#include "asd/param_vector.hpp"
#include "asd/rng.hpp"
#include "asd/schedule.hpp"
#include "asd/toyworld.hpp"

namespace asd {

// ---------------------------------------------------------------------------
// Score sources

// Something that predicts eps for a noised frame; the score is -eps / t.
class ScoreSource {
public:
    virtual ~ScoreSource() = default;
    virtual void eps(std::span<const double> x_t, double t, std::span<const double> context,
                     std::span<double> out) const = 0;
    void score(std::span<const double> x_t, double t, std::span<const double> context,
               std::span<double> out) const;
};

class NetScore final : public ScoreSource {
public:
    explicit NetScore(const EpsNet& net) : net_(net) {}
    void eps(std::span<const double> x_t, double t, std::span<const double> context,
             std::span<double> out) const override;

private:
    const EpsNet& net_;
};

// Closed-form score of the noised toy world.
class AnalyticScore final : public ScoreSource {
public:
    explicit AnalyticScore(const WorldSpec& world) : world_(world) {}
    void eps(std::span<const double> x_t, double t, std::span<const double> context,
             std::span<double> out) const override;

private:
    const WorldSpec& world_;
};

// base score + g(x_t, t, context).
class ShiftedScore final : public ScoreSource {
public:
    using Shift = std::function<void(std::span<const double> x_t, double t, std::span<const double> context,
                                     std::span<double> out)>;
    ShiftedScore(const ScoreSource& base, Shift g) : base_(base), g_(std::move(g)) {}
    void eps(std::span<const double> x_t, double t, std::span<const double> context,
             std::span<double> out) const override;

private:
    const ScoreSource& base_;
    Shift g_;
};

// ---------------------------------------------------------------------------
// Noise tapes: every random draw a loss makes, so that the loss becomes a
// deterministic function of the parameters.

// One timestep and one eps per frame, layout [video][frame](dim).
struct NoiseTape {
    std::vector<double> t;    // B * L
    std::vector<double> eps;  // B * L * D
};

// t drawn uniformly from the schedule's timesteps.
NoiseTape draw_schedule_tape(std::size_t B, std::size_t L, std::size_t D, const NoiseSchedule& schedule,
                             Rng& rng);
// t drawn uniformly from (0, 1].
NoiseTape draw_continuous_tape(std::size_t B, std::size_t L, std::size_t D, Rng& rng);

// ---------------------------------------------------------------------------
// DMD

struct DmdOptions {
    // Divide each frame's delta by its mean absolute value.
    bool normalize = false;
};

struct DmdResult {
    double loss = 0.0;              // 0.5 * mean over frames of |delta|^2 (reporting only)
    std::vector<double> delta;      // s_data - s_gen per frame
    std::vector<double> upstream;   // d surrogate / d x0, = -delta / (B L)
};

// Delta = s_data(x_t) - s_gen(x_t) at x_t = add_noise(x0, eps, t), with the
// previous generated frame as context. Both sources are treated as constants.
// Throws NumericError on a non-finite delta.
DmdResult dmd_delta(const VideoBatch& x0, const NoiseTape& tape, const ScoreSource& data,
                    const ScoreSource& gen, const DmdOptions& opts = {});

// Surrogate value <-delta_detached, x0> / (B L).
double dmd_surrogate(const DmdResult& r, const VideoBatch& x0);

struct DmdGrad {
    DmdResult result;
    ParamVector grad;
};

// Gradient of the surrogate through the recorded rollout.
DmdGrad dmd_generator_grad(const StudentNet& student, const NoiseSchedule& schedule, const VideoTape& tape,
                           const ScoreSource& data, const ScoreSource& gen, Rng& rng,
                           const DmdOptions& opts = {});

// ---------------------------------------------------------------------------
// Denoising loss for the score nets

struct FakeResult {
    double loss = 0.0;  // mean over frames of |eps_hat - eps|^2
    ParamVector grad;
};

// x0 is treated as data (gradient-blocked). Context is the previous frame of x0.
FakeResult fake_score_loss(const EpsNet& net, const VideoBatch& x0, const NoiseTape& tape,
                           bool want_grad = true);

// ---------------------------------------------------------------------------
// ASD

// Draws for one ASD evaluation: a single t shared by both branches, the
// noising eps and the regulariser perturbation of each branch.
struct AsdTape {
    double t = 1.0;
    std::vector<double> eps_n, eps_n1;
    std::vector<double> pert_n, pert_n1;
};

// Timestep set for ASD: t_1..t_{N-1} when exclude_last, else all N.
std::vector<double> asd_timesteps(const NoiseSchedule& schedule, bool exclude_last);
AsdTape draw_asd_tape(std::size_t B, std::size_t L, std::size_t D, const NoiseSchedule& schedule,
                      bool exclude_last, Rng& rng);

struct AsdOptions {
    double lambda = 600.0;
    double sigma = 0.05;
    bool want_gen_grad = true;
    bool want_head_grad = true;
};

struct AsdResult {
    double gen = 0.0;       // L_G
    double disc_adv = 0.0;  // adversarial part of L_D
    double reg = 0.0;       // L_reg
    double disc = 0.0;      // disc_adv + lambda * reg
    double t = 0.0;
    std::vector<double> upstream_n;  // d L_G / d x0_n, layout of x0_n
    ParamVector head_grad;           // d L_D / d head params
};

// Relativistic pairing losses on logit n of the head, evaluated on the fake
// net's last hidden feature. The (n + 1)-step batch is the real side and
// receives no gradient; the fake net's parameters receive none either.
// ContractViolation unless 1 <= n <= head.steps() - 1.
AsdResult asd_losses(const DiscriminatorHead& head, const EpsNet& fake, const VideoBatch& x0_n,
                     const VideoBatch& x0_n1, std::size_t n, const AsdTape& tape, const AsdOptions& opts);

// ---------------------------------------------------------------------------
// Combined objective

struct LossWeights {
    double alpha = 1.0;
    double lambda = 600.0;
    double sigma = 0.05;
};

struct LossBreakdown {
    double dmd = 0.0;
    double asd_gen = 0.0;
    double asd_disc = 0.0;
    double reg = 0.0;
    double fake_score = 0.0;
    double total_gen = 0.0;
    LossWeights weights;

    // NumericError naming the first non-finite field.
    void check_finite() const;
};

double total_generator_loss(double dmd_part, double asd_gen_part, double alpha, bool asd_active);

}  // namespace asd

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asd/adam.hpp"
#include "asd/checkpoint.hpp"
#include "asd/kvconfig.hpp"
#include "asd/losses.hpp"
#include "asd/models.hpp"
#include "asd/schedule.hpp"
#include "asd/toyworld.hpp"

namespace asd {

enum class TeacherMode { learned, analytic };

struct TeacherConfig {
    std::vector<std::size_t> hidden{64, 64};
    std::size_t iterations = 10000;
    std::size_t batch_size = 32;  // videos per step
    double lr = 2e-3;
    double lr_final = 1e-4;  // cosine decay target
    std::uint64_t seed = 1;
};

struct DistillConfig {
    WorldSpec world;
    std::uint64_t seed = 0;
    std::size_t N = 4;
    LossWeights weights;
    std::size_t iterations = 3000;
    std::size_t batch_size = 8;
    std::size_t ratio_gen = 1;
    std::size_t ratio_fake = 4;
    std::size_t ratio_disc = 1;
    AdamOptions student_adam{1e-4, 0.0, 0.99, 1e-8};
    AdamOptions fake_adam{1e-3, 0.0, 0.99, 1e-8};
    AdamOptions disc_adam{1e-3, 0.0, 0.99, 1e-8};
    std::size_t chunk_size = 1;
    TeacherMode teacher_mode = TeacherMode::learned;
    TeacherConfig teacher;
    OutputKind output = OutputKind::velocity;
    double t_clamp = 0.999;
    std::vector<std::size_t> head_hidden{32};
    double head_output_gain = 0.0;
    // Cosine decay of all three learning rates to lr * lr_final_ratio.
    bool lr_cosine = true;
    double lr_final_ratio = 0.1;
    bool asd_exclude_last = true;
    bool dmd_normalize = false;
    // Generator n drawn from 1..N (ASD skipped at n = N) instead of 1..N-1.
    bool gen_n_includes_last = true;
    std::size_t checkpoint_every = 200;

    // ConfigError on inconsistent settings.
    void validate() const;
    NoiseSchedule schedule() const { return make_schedule(N); }

    // Defaults < cfg. Unknown `distill.*` / `teacher.*` / `model.*` keys are rejected.
    static DistillConfig from_kv(const KvConfig& cfg);
    // Complete snapshot: every field materialised.
    KvConfig to_kv() const;
};

// ---------------------------------------------------------------------------
// Teacher

struct TeacherResult {
    EpsNet net;
    double final_loss = 0.0;
};

// Denoising regression on world sequences with ground-truth context,
// t uniform in (0, 1].
TeacherResult train_teacher(const WorldSpec& world, const DistillConfig& cfg);

// Mean over a held-out grid of |eps_hat - eps*|^2, eps* the closed-form
// optimum; t in {0.05, 0.1, 0.2, ..., 1}.
double teacher_oracle_mse(const EpsNet& teacher, const WorldSpec& world, std::uint64_t seed,
                          std::size_t sequences = 64);

// ---------------------------------------------------------------------------
// Distillation

struct UpdateCounts {
    std::uint64_t gen = 0;
    std::uint64_t fake = 0;
    std::uint64_t disc = 0;
};

struct TrainState {
    std::uint64_t iteration = 0;
    StudentNet student;
    EpsNet teacher;
    EpsNet fake;
    DiscriminatorHead head;
    AdamState student_opt;
    AdamState fake_opt;
    AdamState head_opt;
    UpdateCounts counts;
};

// Student and fake net copied from the teacher; head freshly initialised.
TrainState init_state(const DistillConfig& cfg, const EpsNet& teacher);

// One row of the training log.
struct StepRecord {
    std::uint64_t iteration = 0;
    LossBreakdown loss;
    std::size_t n = 0;        // generator step count
    bool asd_active = false;  // ASD term in the generator update
    double t = 0.0;           // ASD timestep of the generator update (0 when inactive)
    std::size_t disc_n = 0;
    double disc_t = 0.0;
    UpdateCounts counts;
};

// Learning-rate multiplier for the macro-iteration following `iteration`.
double distill_lr_scale(const DistillConfig& cfg, std::uint64_t iteration);

// One macro-iteration: ratio_gen generator updates, ratio_fake fake-score
// updates, ratio_disc discriminator updates, each on fresh rollouts. Throws
// NumericError with the loss breakdown on divergence.
StepRecord distill_step(TrainState& state, const DistillConfig& cfg, const ScoreSource& data);

// Score source for s_data under the configured teacher mode.
std::unique_ptr<ScoreSource> make_data_score(const DistillConfig& cfg, const TrainState& state);

struct DistillResult {
    TrainState state;
    std::vector<StepRecord> log;
};

struct RunHooks {
    // Called after each macro-iteration.
    std::function<void(const StepRecord&)> on_step;
};

// Runs cfg.iterations macro-iterations. With out_dir set, writes
// teacher/student/fake/disc checkpoints every checkpoint_every iterations
// and at the end, plus train_log.csv.
DistillResult run_distillation(const DistillConfig& cfg, const EpsNet& teacher,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                               const RunHooks& hooks = {});

std::string train_log_header();
std::string train_log_row(const StepRecord& r);
void write_train_log(const std::filesystem::path& path, const std::vector<StepRecord>& log);

// Checkpoint helpers; meta carries the architecture so nets can be rebuilt.
Checkpoint net_checkpoint(const DenoiserNet& net, const std::string& role, std::uint64_t iteration);
DenoiserNet net_from_checkpoint(const Checkpoint& ckpt, const std::string& role);
Checkpoint head_checkpoint(const DiscriminatorHead& head, std::uint64_t iteration);
DiscriminatorHead head_from_checkpoint(const Checkpoint& ckpt);

std::vector<std::size_t> parse_sizes(const std::string& text);
std::string format_sizes(const std::vector<std::size_t>& v);

}  // namespace asd

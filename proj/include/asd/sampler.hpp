#pragma once

#include <cstdint>
#include <vector>

#include "asd/models.hpp"
#include "asd/schedule.hpp"
#include "asd/toyworld.hpp"

namespace asd {

// T steps for the first frame, R for every later one; both use prefixes of
// the schedule. T = R is plain n-step generation, T > R is "n*" (FFE).
struct InferencePlan {
    std::size_t T_intensive = 4;
    std::size_t R_reduced = 4;
    NoiseSchedule schedule = make_schedule(4);
    std::size_t L = 8;

    // ConfigError unless 1 <= R <= T <= schedule.steps() and L >= 1.
    void validate() const;
    std::size_t steps_for_frame(std::size_t i) const { return i == 0 ? T_intensive : R_reduced; }
};

InferencePlan uniform_plan(std::size_t n, const NoiseSchedule& schedule, std::size_t L);
InferencePlan ffe_plan(std::size_t T, std::size_t R, const NoiseSchedule& schedule, std::size_t L);

// Student evaluations for one video: T + (L - 1) R.
std::size_t step_budget(const InferencePlan& plan);

struct GeneratedVideo {
    FrameSequence frames;
    DenoiseTrajectory trajectory;
    RolloutCounts counts;
};

// Frame i draws its noise from derive_seed(seed, {i}) and is conditioned on
// the generated frame i - 1.
GeneratedVideo generate_video(const StudentNet& student, const InferencePlan& plan, std::uint64_t seed);

// Video k uses seed derive_seed(seed, {k}). Throws ConfigError on a bad plan.
VideoBatch generate_videos(const StudentNet& student, const InferencePlan& plan, std::size_t count,
                           std::uint64_t seed, std::vector<DenoiseTrajectory>* trajectories = nullptr);

// Deterministic many-step sampler for an eps-net: on the grid
// 1, 1 - 1/K, ..., 1/K, 0, x <- (1 - t') x0_hat + t' eps_hat.
VideoBatch teacher_sample_videos(const EpsNet& teacher, std::size_t steps, std::size_t L, std::size_t count,
                                 std::uint64_t seed);
// The same sampler driven by the closed-form posterior mean.
VideoBatch analytic_sample_videos(const WorldSpec& world, std::size_t steps, std::size_t count,
                                  std::uint64_t seed);
// Exact draws from the world.
VideoBatch world_videos(const WorldSpec& world, std::size_t count, std::uint64_t seed);

}  // namespace asd

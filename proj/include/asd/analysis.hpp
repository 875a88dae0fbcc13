#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asd/models.hpp"
#include "asd/schedule.hpp"
#include "asd/toyworld.hpp"

namespace asd {

// ---------------------------------------------------------------------------
// Cross-step similarity

struct SimilarityMatrix {
    std::size_t frame = 0;
    std::size_t K = 0;
    std::vector<double> S;            // K x K, mean cosine similarity
    std::vector<std::size_t> counts;  // samples contributing to each entry

    double at(std::size_t j, std::size_t k) const { return S[j * K + k]; }
    // Mean over j != k; NaN for K = 1.
    double mean_off_diagonal() const;
};

// NaN when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// One matrix per frame. ConfigError if the trajectories disagree on step
// counts; pairs with a zero-norm prediction are left out of the average.
std::vector<SimilarityMatrix> cosine_similarity_matrices(const std::vector<DenoiseTrajectory>& trajectories);

// ---------------------------------------------------------------------------
// Two-sample distances. Sample sets are row-major (count x dim).

// 2 E|a - b| - E|a - a'| - E|b - b'| over all pairs (diagonal included).
double energy_distance(std::span<const double> a, std::span<const double> b, std::size_t dim);

// Energy distance against a fixed reference with its self term cached.
class EnergyReference {
public:
    EnergyReference(std::vector<double> samples, std::size_t dim);
    double distance(std::span<const double> a) const;
    std::size_t dim() const { return dim_; }
    std::size_t count() const { return samples_.size() / dim_; }
    const std::vector<double>& samples() const { return samples_; }

private:
    std::vector<double> samples_;
    std::size_t dim_;
    double self_term_;
};

// Squared MMD (V-statistic) with k(x, y) = exp(-|x - y|^2 / (2 h^2)). h <= 0
// selects the median pairwise distance of the pooled sample (first 500 rows
// of each set).
double mmd_gaussian(std::span<const double> a, std::span<const double> b, std::size_t dim, double h = 0.0);
double median_bandwidth(std::span<const double> a, std::span<const double> b, std::size_t dim);

// Frame i of every video, count x D.
std::vector<double> frame_samples(const VideoBatch& v, std::size_t i);

// Per-frame energy distance between generated and world marginals; the world
// side is `reference_count` fresh world sequences. ConfigError for fewer
// than 100 generated videos.
std::vector<double> frame_drift(const VideoBatch& generated, const WorldSpec& world, std::uint64_t seed,
                                std::size_t reference_count = 2000);

struct MomentGaps {
    std::vector<double> mean_gap;  // |mean_i - m_i| per frame
    std::vector<double> cov_gap;   // |Cov_i - Sigma_i|_F per frame
};
MomentGaps moment_gaps(const VideoBatch& generated, const WorldSpec& world);

// ---------------------------------------------------------------------------
// Evaluation table

struct EvalRow {
    std::string group;       // "grid" or "alpha_sweep"
    std::string label;       // e.g. "asd+ffe"
    bool present = true;     // false when the checkpoint is missing
    bool asd = false;
    double alpha = 0.0;
    std::size_t T = 0;
    std::size_t R = 0;
    std::size_t budget = 0;  // student evaluations per video
    double ed_teacher = 0.0; // joint (whole-video) energy distance to the teacher reference
    double ed_world = 0.0;   // same, against world samples
    double mmd_teacher = 0.0;
    double mean_gap = 0.0;   // averaged over frames
    double cov_gap = 0.0;
    std::vector<double> ed_frames;  // per-frame energy distance to the teacher reference
};

struct EvalContext {
    WorldSpec world;
    NoiseSchedule schedule = make_schedule(4);
    std::size_t count = 2000;  // generated videos per row
    std::uint64_t seed = 7;
    const EnergyReference* teacher_ref = nullptr;  // flattened videos
    const EnergyReference* world_ref = nullptr;
    const VideoBatch* teacher_videos = nullptr;    // for per-frame distances and MMD
};

EvalRow evaluate_student(const StudentNet& student, std::size_t T, std::size_t R, const EvalContext& ctx);

struct AblationInputs {
    std::optional<StudentNet> asd_student;   // full run
    std::optional<StudentNet> base_student;  // alpha = 0
    double asd_alpha = 1.0;
    std::vector<std::pair<double, std::optional<StudentNet>>> sweep;
    std::vector<std::size_t> budgets{1, 2};
};

// Per budget n: neither (n), ffe only (N then n), asd only (n), asd+ffe;
// then one uniform row per sweep entry and budget.
std::vector<EvalRow> ablation_grid(const AblationInputs& in, const EvalContext& ctx);

std::string eval_csv(const std::vector<EvalRow>& rows);
std::string similarity_csv(const std::vector<SimilarityMatrix>& mats);
// Plain (P2) graymap, entries mapped from [-1, 1] to [0, 255], each cell
// drawn as a cell x cell block.
std::string similarity_pgm(const SimilarityMatrix& m, std::size_t cell = 32);
std::string videos_csv(const VideoBatch& v);
VideoBatch read_videos_csv(const std::filesystem::path& path);
std::string trajectories_csv(const std::vector<DenoiseTrajectory>& trajectories);

// Writes text through a temp file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace asd

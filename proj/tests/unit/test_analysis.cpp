#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "asd/analysis.hpp"
#include "asd/error.hpp"
#include "asd/kernels.hpp"
#include "fixtures.hpp"

using namespace asd;
using namespace asd::testing;
namespace fs = std::filesystem;

namespace {

double naive_energy(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
    auto dist = [d](const double* x, const double* y) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        return std::sqrt(s);
    };
    const std::size_t na = a.size() / d, nb = b.size() / d;
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) ab += dist(&a[i * d], &b[j * d]);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) aa += dist(&a[i * d], &a[j * d]);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) bb += dist(&b[i * d], &b[j * d]);
    return 2.0 * ab / (na * nb) - aa / (na * na) - bb / (nb * nb);
}

// E|Z| for Z ~ N(m, s^2).
double folded_mean(double m, double s) {
    const double phi = 0.5 * std::erfc(m / (s * std::numbers::sqrt2));
    return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-m * m / (2 * s * s)) + m * (1 - 2 * phi);
}

}  // namespace

TEST(EnergyDistance, MatchesNaiveDefinition) {
    Rng rng(1);
    const auto a = rng.normal_vector(37 * 5), b = rng.normal_vector(23 * 5);
    EXPECT_NEAR(energy_distance(a, b, 5), naive_energy(a, b, 5), 1e-11);
    EnergyReference ref(b, 5);
    EXPECT_NEAR(ref.distance(a), energy_distance(a, b, 5), 1e-12);
    EXPECT_EQ(ref.count(), 23u);
}

TEST(EnergyDistance, SymmetricNonNegativeZeroOnSelf) {
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        const auto a = rng.normal_vector(40 * 3), b = rng.normal_vector(25 * 3);
        EXPECT_NEAR(energy_distance(a, b, 3), energy_distance(b, a, 3), 1e-12);
        EXPECT_GE(energy_distance(a, b, 3), 0.0);
        EXPECT_NEAR(energy_distance(a, a, 3), 0.0, 1e-12);
    }
    EXPECT_THROW(energy_distance({}, std::vector<double>(3), 3), ConfigError);
    EXPECT_THROW(energy_distance(std::vector<double>(4), std::vector<double>(3), 3), ConfigError);
}

TEST(EnergyDistance, GaussianShiftClosedForm) {
    Rng rng(3);
    const std::size_t n = 3000;
    for (double mu : {0.5, 1.0, 2.0}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = mu + rng.normal();
        }
        const double want = 2.0 * folded_mean(mu, std::numbers::sqrt2) - 2.0 * folded_mean(0.0, std::numbers::sqrt2);
        EXPECT_NEAR(energy_distance(a, b, 1), want, 0.05 * want + 0.01) << "mu = " << mu;
    }
}

TEST(EnergyDistance, AgreesAcrossKernelVariants) {
    Rng rng(4);
    const auto a = rng.normal_vector(101 * 7), b = rng.normal_vector(99 * 7);
    const kernels::Isa before = kernels::active().isa;
    kernels::select(kernels::Isa::scalar);
    const double scalar = energy_distance(a, b, 7);
    for (kernels::Isa isa : {kernels::Isa::avx2, kernels::Isa::neon}) {
        if (!kernels::isa_available(isa)) continue;
        kernels::select(isa);
        EXPECT_NEAR(energy_distance(a, b, 7), scalar, 1e-12);
    }
    kernels::select(before);
}

TEST(Mmd, BasicProperties) {
    Rng rng(5);
    const auto a = rng.normal_vector(200 * 2), b = rng.normal_vector(200 * 2);
    std::vector<double> c = b;
    for (double& v : c) v += 1.5;
    EXPECT_NEAR(mmd_gaussian(a, a, 2), 0.0, 1e-12);
    EXPECT_GT(mmd_gaussian(a, c, 2), mmd_gaussian(a, b, 2));
    EXPECT_NEAR(mmd_gaussian(a, c, 2, 1.0), mmd_gaussian(c, a, 2, 1.0), 1e-12);
    EXPECT_GT(median_bandwidth(a, b, 2), 0.0);
}

TEST(Similarity, Cosine) {
    EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 2}), 0.0, 1e-15);
    EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{-2, -2}), -1.0, 1e-15);
    EXPECT_TRUE(std::isnan(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 2})));
}

TEST(Similarity, MatricesAreSymmetricUnitDiagonal) {
    const StudentNet st{random_denoiser(3, {6}, 6)};
    std::vector<DenoiseTrajectory> trajs;
    generate_videos(st, uniform_plan(4, make_schedule(4), 3), 20, 7, &trajs);
    const auto mats = cosine_similarity_matrices(trajs);
    ASSERT_EQ(mats.size(), 3u);
    for (const auto& m : mats) {
        EXPECT_EQ(m.K, 4u);
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(m.at(j, j), 1.0, 1e-12);
            for (std::size_t k = 0; k < 4; ++k) {
                EXPECT_NEAR(m.at(j, k), m.at(k, j), 1e-15);
                EXPECT_LE(std::abs(m.at(j, k)), 1.0 + 1e-12);
                EXPECT_EQ(m.counts[j * 4 + k], 20u);
            }
        }
        double off = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k)
                if (j != k) off += m.at(j, k);
        EXPECT_NEAR(m.mean_off_diagonal(), off / 12.0, 1e-12);
    }
    std::vector<DenoiseTrajectory> mixed = trajs;
    mixed[0].frames[1].pop_back();
    EXPECT_THROW(cosine_similarity_matrices(mixed), ConfigError);
}

TEST(Drift, WorldSamplesHaveSmallGaps) {
    const WorldSpec w = tiny_world(3, 4);
    const VideoBatch v = world_videos(w, 2000, 8);
    const auto drift = frame_drift(v, w, 9, 2000);
    ASSERT_EQ(drift.size(), 4u);
    for (double d : drift) EXPECT_LT(d, 0.02);
    const MomentGaps g = moment_gaps(v, w);
    for (double m : g.mean_gap) EXPECT_LT(m, 0.15);
    EXPECT_THROW(frame_drift(world_videos(w, 50, 1), w, 1), ConfigError);
}

TEST(Drift, BiasedGeneratorShowsUp) {
    const WorldSpec w = tiny_world(3, 4);
    VideoBatch v = world_videos(w, 1000, 10);
    for (std::size_t b = 0; b < v.B; ++b)
        for (double& x : v.frame(b, 3)) x += 0.5;
    const auto drift = frame_drift(v, w, 11, 1000);
    EXPECT_GT(drift[3], 5.0 * drift[0]);
}

TEST(Eval, AblationGridLayout) {
    const WorldSpec w = tiny_world(3, 3);
    const StudentNet st{random_denoiser(3, {6}, 12)};
    const VideoBatch tv = world_videos(w, 120, 13);
    EnergyReference tref(tv.x0, 9), wref(world_videos(w, 120, 14).x0, 9);
    EvalContext ctx;
    ctx.world = w;
    ctx.schedule = make_schedule(4);
    ctx.count = 100;
    ctx.teacher_ref = &tref;
    ctx.world_ref = &wref;
    ctx.teacher_videos = &tv;
    AblationInputs in;
    in.asd_student = st;
    in.base_student = std::nullopt;
    in.asd_alpha = 2.0;
    in.sweep = {{0.5, st}};
    const auto rows = ablation_grid(in, ctx);
    ASSERT_EQ(rows.size(), 2u * 4u + 2u);
    EXPECT_EQ(rows[0].label, "neither");
    EXPECT_FALSE(rows[0].present);
    EXPECT_EQ(rows[1].label, "ffe");
    EXPECT_EQ(rows[1].T, 4u);
    EXPECT_EQ(rows[1].budget, 4u + 2u * 1u);
    EXPECT_EQ(rows[3].label, "asd+ffe");
    EXPECT_TRUE(rows[3].present);
    EXPECT_EQ(rows[3].ed_frames.size(), 3u);
    EXPECT_EQ(rows[8].group, "alpha_sweep");
    // Same student, same plan, same seed.
    EXPECT_EQ(rows[2].ed_teacher, evaluate_student(st, 1, 1, ctx).ed_teacher);
    EXPECT_EQ(rows[2].ed_teacher, rows[8].ed_teacher);
    const std::string csv = eval_csv(rows);
    EXPECT_EQ(csv.substr(0, 15), "group,label,pre");
    EXPECT_NE(csv.find("neither,0,"), std::string::npos);
}

TEST(Artifacts, VideoCsvRoundTrip) {
    const WorldSpec w = tiny_world(3, 4);
    const VideoBatch v = world_videos(w, 5, 15);
    const fs::path p = fs::temp_directory_path() / "asd_videos_test.csv";
    write_text_atomic(p, videos_csv(v));
    const VideoBatch back = read_videos_csv(p);
    EXPECT_EQ(back.B, v.B);
    EXPECT_EQ(back.L, v.L);
    EXPECT_EQ(back.x0, v.x0);
    fs::remove(p);
    EXPECT_THROW(read_videos_csv(p), MissingInput);
}

TEST(Artifacts, PgmAndSimilarityCsv) {
    SimilarityMatrix m;
    m.K = 2;
    m.S = {1.0, -1.0, -1.0, 1.0};
    m.counts = {3, 3, 3, 3};
    const std::string pgm = similarity_pgm(m, 2);
    EXPECT_EQ(pgm.substr(0, 13), "P2\n4 4\n255\n25");
    EXPECT_NE(pgm.find("255 255 0 0"), std::string::npos);
    const std::string csv = similarity_csv({m});
    EXPECT_NE(csv.find("1,1,2,-1,3"), std::string::npos);
}

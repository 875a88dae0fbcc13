#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "asd/checkpoint.hpp"
#include "asd/error.hpp"
#include "asd/trainer.hpp"
#include "fixtures.hpp"

using namespace asd;
using namespace asd::testing;
namespace fs = std::filesystem;

namespace {

DistillConfig small_config() {
    DistillConfig c;
    c.world = tiny_world(3, 3);
    c.N = 3;
    c.batch_size = 2;
    c.iterations = 6;
    c.head_hidden = {4};
    c.teacher.hidden = {6};
    c.teacher.iterations = 30;
    c.teacher.batch_size = 4;
    c.checkpoint_every = 4;
    return c;
}

EpsNet small_teacher(const DistillConfig& c) { return EpsNet{random_denoiser(c.world.D, c.teacher.hidden, 31)}; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST(DistillConfig, DefaultsAndValidation) {
    DistillConfig c = DistillConfig::from_kv(KvConfig{});
    EXPECT_EQ(c.world.D, 8u);
    EXPECT_EQ(c.world.L, 8u);
    EXPECT_EQ(c.N, 4u);
    EXPECT_EQ(c.batch_size, 8u);
    EXPECT_EQ(c.iterations, 3000u);
    EXPECT_EQ(c.weights.lambda, 600.0);
    EXPECT_EQ(c.weights.sigma, 0.05);
    EXPECT_EQ(c.ratio_gen, 1u);
    EXPECT_EQ(c.ratio_fake, 4u);
    EXPECT_EQ(c.ratio_disc, 1u);
    c.validate();
    DistillConfig bad = c;
    bad.chunk_size = 3;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.N = 1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.weights.sigma = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(DistillConfig, KvRoundTrip) {
    DistillConfig c = small_config();
    c.weights.alpha = 2.5;
    c.student_adam.lr = 3e-5;
    c.gen_n_includes_last = false;
    const DistillConfig d = DistillConfig::from_kv(KvConfig::parse(c.to_kv().to_text()));
    EXPECT_EQ(d.to_kv().entries(), c.to_kv().entries());
    EXPECT_EQ(d.world.A, c.world.A);
    EXPECT_EQ(d.weights.alpha, 2.5);
    EXPECT_FALSE(d.gen_n_includes_last);
    KvConfig typo;
    typo.set("distill.alhpa", "1");
    EXPECT_THROW(DistillConfig::from_kv(typo), ConfigError);
    KvConfig chunk;
    chunk.set("distill.chunk_size", "3");
    EXPECT_THROW(DistillConfig::from_kv(chunk), ConfigError);
}

TEST(Trainer, LearningRateSchedule) {
    DistillConfig c;
    c.iterations = 100;
    c.lr_final_ratio = 0.2;
    EXPECT_DOUBLE_EQ(distill_lr_scale(c, 0), 1.0);
    EXPECT_NEAR(distill_lr_scale(c, 50), 0.6, 1e-12);
    EXPECT_NEAR(distill_lr_scale(c, 100), 0.2, 1e-12);
    c.lr_cosine = false;
    EXPECT_EQ(distill_lr_scale(c, 70), 1.0);
}

TEST(Trainer, AlternationCountsAndAsdRange) {
    const DistillConfig c = small_config();
    TrainState s = init_state(c, small_teacher(c));
    const auto data = make_data_score(c, s);
    const std::vector<double> teacher_before = to_vector(s.teacher.net.params.values());
    bool saw_last = false;
    for (std::uint64_t k = 1; k <= 12; ++k) {
        const StepRecord r = distill_step(s, c, *data);
        EXPECT_EQ(r.counts.gen, k);
        EXPECT_EQ(r.counts.fake, 4 * k);
        EXPECT_EQ(r.counts.disc, k);
        EXPECT_GE(r.n, 1u);
        EXPECT_LE(r.n, c.N);
        EXPECT_EQ(r.asd_active, r.n < c.N);
        saw_last = saw_last || r.n == c.N;
        EXPECT_GE(r.disc_n, 1u);
        EXPECT_LE(r.disc_n, c.N - 1);
        EXPECT_NE(r.disc_t, 0.0);
        EXPECT_NE(r.disc_t, c.schedule().at(c.N - 1));
        if (r.asd_active) {
            EXPECT_NE(r.t, c.schedule().at(c.N - 1));
        }
    }
    EXPECT_TRUE(saw_last);
    EXPECT_EQ(to_vector(s.teacher.net.params.values()), teacher_before);
}

TEST(Trainer, InitialStateCopiesTeacher) {
    const DistillConfig c = small_config();
    const EpsNet t = small_teacher(c);
    const TrainState s = init_state(c, t);
    EXPECT_EQ(to_vector(s.fake.net.params.values()), to_vector(t.net.params.values()));
    EXPECT_EQ(to_vector(s.student.net.params.values()), to_vector(t.net.params.values()));
    EXPECT_EQ(s.head.steps(), c.N);
    EXPECT_EQ(s.head.arch.input_width(), t.net.arch.feature_width());
    EXPECT_EQ(s.iteration, 0u);
}

TEST(Trainer, DeterministicAcrossRuns) {
    const DistillConfig c = small_config();
    const EpsNet t = small_teacher(c);
    const DistillResult a = run_distillation(c, t), b = run_distillation(c, t);
    EXPECT_EQ(to_vector(a.state.student.net.params.values()), to_vector(b.state.student.net.params.values()));
    EXPECT_EQ(to_vector(a.state.head.params.values()), to_vector(b.state.head.params.values()));
    std::string la, lb;
    for (const auto& r : a.log) la += train_log_row(r);
    for (const auto& r : b.log) lb += train_log_row(r);
    EXPECT_EQ(la, lb);
    DistillConfig other = c;
    other.seed = 5;
    EXPECT_NE(to_vector(run_distillation(other, t).state.student.net.params.values()),
              to_vector(a.state.student.net.params.values()));
}

TEST(Trainer, ZeroAlphaIgnoresCritic) {
    DistillConfig c = small_config();
    c.weights.alpha = 0.0;
    c.iterations = 3;
    const EpsNet t = small_teacher(c);
    DistillConfig c2 = c;
    c2.head_output_gain = 1.0;  // different critic, same generator path
    EXPECT_EQ(to_vector(run_distillation(c, t).state.student.net.params.values()),
              to_vector(run_distillation(c2, t).state.student.net.params.values()));
}

TEST(Trainer, RunWritesArtifacts) {
    const DistillConfig c = small_config();
    const fs::path dir = fs::temp_directory_path() / "asd_trainer_run";
    fs::remove_all(dir);
    const DistillResult r = run_distillation(c, small_teacher(c), dir);
    for (const char* f : {"teacher.ckpt", "student.ckpt", "fake.ckpt", "disc.ckpt", "train_log.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const Checkpoint sc = load_checkpoint(dir / "student.ckpt");
    EXPECT_EQ(sc.role, "student");
    EXPECT_EQ(sc.meta.at("schedule"), c.schedule().to_string());
    const DenoiserNet back = net_from_checkpoint(sc, "student");
    EXPECT_EQ(to_vector(back.params.values()), to_vector(r.state.student.net.params.values()));
    EXPECT_THROW(net_from_checkpoint(sc, "teacher"), ConfigError);
    const DiscriminatorHead h = head_from_checkpoint(load_checkpoint(dir / "disc.ckpt"));
    EXPECT_EQ(to_vector(h.params.values()), to_vector(r.state.head.params.values()));

    std::istringstream log(slurp(dir / "train_log.csv"));
    std::string line;
    std::getline(log, line);
    EXPECT_EQ(line, train_log_header());
    std::size_t rows = 0;
    while (std::getline(log, line)) ++rows;
    EXPECT_EQ(rows, c.iterations);
    fs::remove_all(dir);
}

TEST(Trainer, TeacherLearnsTowardOracle) {
    DistillConfig c = small_config();
    c.teacher.iterations = 400;
    c.teacher.batch_size = 16;
    const TeacherResult tr = train_teacher(c.world, c);
    const DenoiserNet fresh = random_denoiser(c.world.D, c.teacher.hidden, 1);
    const double trained = teacher_oracle_mse(tr.net, c.world, 3, 32);
    const double untrained = teacher_oracle_mse(EpsNet{fresh}, c.world, 3, 32);
    EXPECT_TRUE(std::isfinite(tr.final_loss));
    EXPECT_LT(trained, 0.5 * untrained);
}

TEST(Trainer, SizeListHelpers) {
    EXPECT_EQ(parse_sizes("64,32"), (std::vector<std::size_t>{64, 32}));
    EXPECT_EQ(format_sizes({8, 4, 2}), "8,4,2");
    EXPECT_THROW(parse_sizes("4,x"), ConfigError);
}

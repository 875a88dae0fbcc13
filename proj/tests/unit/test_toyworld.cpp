#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "asd/error.hpp"
#include "asd/gradcheck.hpp"
#include "asd/rng.hpp"
#include "asd/toyworld.hpp"
#include "fixtures.hpp"

using namespace asd;
using asd::testing::tiny_world;

namespace {

Eigen::VectorXd vec(std::span<const double> s) { return Eigen::Map<const Eigen::VectorXd>(s.data(), s.size()); }

// Gaussian posterior mean written out directly.
Eigen::VectorXd posterior_oracle(const WorldSpec& w, std::span<const double> ctx, std::span<const double> x_t, double t) {
    Eigen::VectorXd m;
    Eigen::MatrixXd S;
    if (ctx.empty()) {
        m = w.init_mean;
        S = w.init_cov_chol * w.init_cov_chol.transpose();
    } else {
        m = w.A * vec(ctx) + w.b;
        S = w.Q_chol * w.Q_chol.transpose();
    }
    const double a = 1.0 - t;
    const Eigen::MatrixXd C = a * a * S + t * t * Eigen::MatrixXd::Identity(w.D, w.D);
    return m + a * S * C.ldlt().solve(vec(x_t) - a * m);
}

}  // namespace

TEST(ToyWorld, DefaultWorldShape) {
    const WorldSpec w = make_world(WorldDefaults{});
    EXPECT_EQ(w.D, 8u);
    EXPECT_EQ(w.L, 8u);
    w.validate();
    // A = 0.9 * orthogonal
    const Eigen::MatrixXd AtA = w.A.transpose() * w.A;
    EXPECT_LT((AtA - 0.81 * Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-12);
    EXPECT_NEAR(w.spectral_radius(), 0.9, 1e-12);
    EXPECT_LT((w.Q_chol * w.Q_chol.transpose() - 0.19 * Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-14);
    EXPECT_EQ(w.init_mean.norm(), 0.0);
    // Same seed, same world.
    EXPECT_EQ(make_world(WorldDefaults{}).A, w.A);
}

TEST(ToyWorld, ValidateRejectsBadSpecs) {
    WorldSpec w = tiny_world();
    WorldSpec bad = w;
    bad.A *= 1.2;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = w;
    bad.Q_chol(0, 1) = 0.1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = w;
    bad.init_cov_chol(1, 1) = -1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = w;
    bad.b.resize(2);
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ToyWorld, ConfigRoundTripIsExact) {
    const WorldSpec w = tiny_world(4, 5, 99);
    const WorldSpec back = world_from_config(KvConfig::parse(world_to_config(w).to_text()));
    EXPECT_EQ(back.D, w.D);
    EXPECT_EQ(back.L, w.L);
    EXPECT_EQ(back.A, w.A);
    EXPECT_EQ(back.Q_chol, w.Q_chol);
    EXPECT_EQ(back.init_cov_chol, w.init_cov_chol);
    EXPECT_EQ(back.b, w.b);
    KvConfig c;
    c.set("world.D", "3");
    c.set("world.A", "1,2");
    EXPECT_THROW(world_from_config(c), ConfigError);
}

TEST(ToyWorld, SequencesAreSeeded) {
    const WorldSpec w = tiny_world();
    EXPECT_EQ(sample_sequence(w, 5).frames, sample_sequence(w, 5).frames);
    EXPECT_NE(sample_sequence(w, 5).frames, sample_sequence(w, 6).frames);
    EXPECT_EQ(sample_sequence(w, 5).frames.size(), w.L * w.D);
}

TEST(ToyWorld, ScoreMatchesLogDensityGradient) {
    const WorldSpec w = tiny_world();
    Rng rng(3);
    for (double t : {0.05, 0.3, 0.7, 1.0}) {
        for (bool first : {true, false}) {
            const auto ctx = rng.normal_vector(first ? 0 : w.D);
            const auto x_t = rng.normal_vector(w.D);
            const auto s = analytic_noisy_score(w, ctx, x_t, t);
            auto f = [&](std::span<const double> x) { return analytic_noisy_log_density(w, ctx, x, t); };
            const auto r = compare_gradients(s, finite_difference_grad(f, x_t, 1e-5));
            EXPECT_LT(r.max_rel_err, 1e-7) << "t = " << t;
            const auto e = analytic_optimal_eps(w, ctx, x_t, t);
            for (std::size_t k = 0; k < w.D; ++k) EXPECT_NEAR(e[k], -t * s[k], 1e-14);
        }
    }
    EXPECT_THROW(analytic_noisy_score(w, {}, std::vector<double>(w.D), 0.0), DomainError);
    EXPECT_THROW(analytic_noisy_score(w, {}, std::vector<double>(w.D), 1.5), DomainError);
}

TEST(ToyWorld, PosteriorMeanOracleAndTweedie) {
    const WorldSpec w = tiny_world();
    Rng rng(4);
    for (double t : {0.1, 0.5, 0.95}) {
        const auto ctx = rng.normal_vector(w.D);
        const auto x_t = rng.normal_vector(w.D);
        const auto pm = analytic_posterior_mean(w, ctx, x_t, t);
        const Eigen::VectorXd want = posterior_oracle(w, ctx, x_t, t);
        const auto eps = analytic_optimal_eps(w, ctx, x_t, t);
        for (std::size_t k = 0; k < w.D; ++k) {
            EXPECT_NEAR(pm[k], want[k], 1e-12);
            EXPECT_NEAR(pm[k], (x_t[k] - t * eps[k]) / (1 - t), 1e-10);
        }
    }
    const auto ctx = rng.normal_vector(w.D);
    const auto at_one = analytic_posterior_mean(w, ctx, rng.normal_vector(w.D), 1.0);
    const Eigen::VectorXd m = w.A * vec(ctx) + w.b;
    for (std::size_t k = 0; k < w.D; ++k) EXPECT_NEAR(at_one[k], m[k], 1e-14);
}

// E[score] = 0 and E[score (x_t - mean)^T] = -I under p_t.
TEST(ToyWorld, ScoreMomentsMonteCarlo) {
    const WorldSpec w = tiny_world();
    Rng rng(5);
    const std::size_t n = 20000, D = w.D;
    const auto ctx = rng.normal_vector(D);
    const GaussianStats g = conditional_stats(w, ctx);
    for (double t : {0.2, 0.8}) {
        std::vector<double> first(n * D), second(n * D * D);
        for (std::size_t r = 0; r < n; ++r) {
            const Eigen::VectorXd x0 = g.mean + g.cov_chol * vec(rng.normal_vector(D));
            const Eigen::VectorXd e = vec(rng.normal_vector(D));
            const Eigen::VectorXd x_t = (1 - t) * x0 + t * e;
            const auto s = analytic_noisy_score(w, ctx, std::span<const double>(x_t.data(), D), t);
            const Eigen::VectorXd c = x_t - (1 - t) * g.mean;
            for (std::size_t a = 0; a < D; ++a) {
                first[r * D + a] = s[a];
                for (std::size_t b = 0; b < D; ++b) second[(r * D + a) * D + b] = s[a] * c[b];
            }
        }
        const auto m1 = asd::testing::column_stats(first, D);
        const auto m2 = asd::testing::column_stats(second, D * D);
        for (std::size_t a = 0; a < D; ++a) EXPECT_LT(std::abs(m1.mean[a]), 3.0 * m1.se[a] + 1e-12);
        for (std::size_t a = 0; a < D * D; ++a) {
            const double want = (a / D == a % D) ? -1.0 : 0.0;
            EXPECT_LT(std::abs(m2.mean[a] - want), 3.0 * m2.se[a] + 1e-12) << "entry " << a << " t " << t;
        }
    }
}

TEST(ToyWorld, StationaryAndMarginals) {
    const WorldSpec w = tiny_world(3, 6);
    const Eigen::MatrixXd S = stationary_covariance(w);
    const Eigen::MatrixXd Q = w.Q_chol * w.Q_chol.transpose();
    EXPECT_LT((S - (w.A * S * w.A.transpose() + Q)).norm(), 1e-10);

    const FrameMarginals fm = frame_marginals(w);
    ASSERT_EQ(fm.cov.size(), w.L);
    Eigen::MatrixXd C = w.init_cov_chol * w.init_cov_chol.transpose();
    Eigen::VectorXd m = w.init_mean;
    for (std::size_t i = 0; i < w.L; ++i) {
        EXPECT_LT((fm.cov[i] - C).norm(), 1e-12);
        EXPECT_LT((fm.mean[i] - m).norm(), 1e-12);
        C = w.A * C * w.A.transpose() + Q;
        m = w.A * m + w.b;
    }
}

TEST(ToyWorld, SampledMarginalsMatch) {
    const WorldSpec w = tiny_world(3, 4);
    const FrameMarginals fm = frame_marginals(w);
    const std::size_t n = 8000;
    std::vector<double> last(n * w.D);
    for (std::size_t r = 0; r < n; ++r) {
        const auto s = sample_sequence(w, derive_seed(11, {r}));
        for (std::size_t k = 0; k < w.D; ++k) last[r * w.D + k] = s.frame(w.L - 1)[k];
    }
    const auto st = asd::testing::column_stats(last, w.D);
    for (std::size_t k = 0; k < w.D; ++k) {
        EXPECT_LT(std::abs(st.mean[k] - fm.mean.back()[k]), 3.5 * st.se[k]);
        const double var = st.se[k] * st.se[k] * n;
        EXPECT_NEAR(var, fm.cov.back()(k, k), 4.0 * fm.cov.back()(k, k) * std::sqrt(2.0 / n));
    }
}

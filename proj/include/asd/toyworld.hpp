#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asd/kvconfig.hpp"

namespace asd {

// Linear-Gaussian autoregressive frame process:
//   frame_1 ~ N(init_mean, C0 C0^T)
//   frame_i = A frame_{i-1} + b + Q_chol eta,  eta ~ N(0, I)
struct WorldSpec {
    std::size_t D = 0;
    std::size_t L = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd Q_chol;
    Eigen::VectorXd init_mean;
    Eigen::MatrixXd init_cov_chol;

    // Shapes, lower-triangular factors with non-negative diagonals, spectral
    // radius of A below one. Throws ConfigError.
    void validate() const;
    double spectral_radius() const;
};

struct WorldDefaults {
    std::size_t D = 8;
    std::size_t L = 8;
    double rho = 0.9;       // A = rho * (random orthogonal)
    double q_var = 0.19;    // Q = q_var * I
    double init_var = 1.0;  // init covariance = init_var * I
    std::uint64_t seed = 1234;
};

WorldSpec make_world(const WorldDefaults& d);

// Reads `world.*` keys. Explicit matrices (`world.A`, `world.Q_chol`, ... as
// row-major comma lists) override the generated defaults.
WorldSpec world_from_config(const KvConfig& cfg);
// Explicit key-value block that world_from_config reads back exactly.
KvConfig world_to_config(const WorldSpec& spec);

// frames is L x D row-major.
struct FrameSequence {
    std::size_t L = 0;
    std::size_t D = 0;
    std::vector<double> frames;
    std::uint64_t seed = 0;

    std::span<const double> frame(std::size_t i) const { return {frames.data() + i * D, D}; }
    std::span<double> frame(std::size_t i) { return {frames.data() + i * D, D}; }
};

FrameSequence sample_sequence(const WorldSpec& spec, std::uint64_t seed);

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov_chol;
};

// Empty context = first frame (init distribution); otherwise the transition
// conditional given the previous frame.
GaussianStats conditional_stats(const WorldSpec& spec, std::span<const double> context);

// Exact grad log p_t(x_t | context) for x_t = (1 - t) x0 + t eps.
// DomainError if t is outside (0, 1] or the noised covariance is singular.
std::vector<double> analytic_noisy_score(const WorldSpec& spec, std::span<const double> context,
                                         std::span<const double> x_t, double t);
// eps* = -t * score.
std::vector<double> analytic_optimal_eps(const WorldSpec& spec, std::span<const double> context,
                                         std::span<const double> x_t, double t);
// E[x0 | x_t, context]; well defined on [0, 1] including t = 1 (conditional mean).
std::vector<double> analytic_posterior_mean(const WorldSpec& spec, std::span<const double> context,
                                            std::span<const double> x_t, double t);
// log N(x_t; (1 - t) m, (1 - t)^2 Sigma + t^2 I); used as a finite-difference oracle.
double analytic_noisy_log_density(const WorldSpec& spec, std::span<const double> context,
                                  std::span<const double> x_t, double t);

// Solves Sigma = A Sigma A^T + Q.
Eigen::MatrixXd stationary_covariance(const WorldSpec& spec);

// Mean / covariance of each frame's marginal, i = 1..L.
struct FrameMarginals {
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> cov;
};
FrameMarginals frame_marginals(const WorldSpec& spec);

}  // namespace asd

#include "asd/toyworld.hpp"

#include <cmath>
#include <numbers>

#include "asd/error.hpp"
#include "asd/rng.hpp"

namespace asd {
namespace {

Eigen::MatrixXd matrix_from_list(const std::vector<double>& v, std::size_t rows, std::size_t cols,
                                 const std::string& key) {
    if (v.size() != rows * cols) {
        throw ConfigError(key + ": expected " + std::to_string(rows * cols) + " values, got " +
                          std::to_string(v.size()));
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = v[r * cols + c];
    return m;
}

std::vector<double> list_from_matrix(const Eigen::MatrixXd& m) {
    std::vector<double> v;
    v.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
}

void check_factor(const Eigen::MatrixXd& m, std::size_t D, const char* name) {
    if (static_cast<std::size_t>(m.rows()) != D || static_cast<std::size_t>(m.cols()) != D) {
        throw ConfigError(std::string(name) + " must be D x D");
    }
    for (std::size_t r = 0; r < D; ++r) {
        if (m(r, r) < 0.0) throw ConfigError(std::string(name) + " needs a non-negative diagonal");
        for (std::size_t c = r + 1; c < D; ++c) {
            if (m(r, c) != 0.0) throw ConfigError(std::string(name) + " must be lower-triangular");
        }
    }
}

Eigen::Map<const Eigen::VectorXd> as_vec(std::span<const double> s) {
    return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct NoisedGaussian {
    Eigen::VectorXd mean;  // (1 - t) m
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd sigma;  // data covariance
    Eigen::VectorXd data_mean;
};

NoisedGaussian noised(const WorldSpec& spec, std::span<const double> context, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("t must lie in [0, 1]");
    const GaussianStats st = conditional_stats(spec, context);
    NoisedGaussian ng;
    ng.data_mean = st.mean;
    ng.sigma = st.cov_chol * st.cov_chol.transpose();
    ng.mean = (1.0 - t) * st.mean;
    const Eigen::MatrixXd cov =
        (1.0 - t) * (1.0 - t) * ng.sigma +
        t * t * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(spec.D), static_cast<Eigen::Index>(spec.D));
    ng.llt.compute(cov);
    if (ng.llt.info() != Eigen::Success) throw DomainError("noised covariance is singular");
    const Eigen::MatrixXd L = ng.llt.matrixL();
    double min_diag = L.diagonal().minCoeff();
    if (!(min_diag > 0.0)) throw DomainError("noised covariance is singular");
    return ng;
}

void check_point(const WorldSpec& spec, std::span<const double> context, std::span<const double> x_t) {
    if (x_t.size() != spec.D) throw ConfigError("x_t has the wrong dimension");
    if (!context.empty() && context.size() != spec.D) throw ConfigError("context has the wrong dimension");
}

}  // namespace

void WorldSpec::validate() const {
    if (D == 0 || L == 0) throw ConfigError("world needs D >= 1 and L >= 1");
    if (static_cast<std::size_t>(A.rows()) != D || static_cast<std::size_t>(A.cols()) != D) {
        throw ConfigError("world A must be D x D");
    }
    if (static_cast<std::size_t>(b.size()) != D || static_cast<std::size_t>(init_mean.size()) != D) {
        throw ConfigError("world drift and init mean must have length D");
    }
    check_factor(Q_chol, D, "Q_chol");
    check_factor(init_cov_chol, D, "init_cov_chol");
    if (!(spectral_radius() < 1.0)) throw ConfigError("world transition must have spectral radius < 1");
}

double WorldSpec::spectral_radius() const {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

WorldSpec make_world(const WorldDefaults& d) {
    const auto n = static_cast<Eigen::Index>(d.D);
    Rng rng(derive_seed(d.seed, {0x776f726c64ULL}));
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g(r, c) = rng.normal();
    // Haar-distributed orthogonal factor: Q from QR with the signs of diag(R) folded in.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < n; ++c) {
        if (rmat(c, c) < 0.0) q.col(c) *= -1.0;
    }
    WorldSpec w;
    w.D = d.D;
    w.L = d.L;
    w.A = d.rho * q;
    w.b = Eigen::VectorXd::Zero(n);
    w.Q_chol = std::sqrt(d.q_var) * Eigen::MatrixXd::Identity(n, n);
    w.init_mean = Eigen::VectorXd::Zero(n);
    w.init_cov_chol = std::sqrt(d.init_var) * Eigen::MatrixXd::Identity(n, n);
    w.validate();
    return w;
}

WorldSpec world_from_config(const KvConfig& cfg) {
    WorldDefaults d;
    d.D = cfg.get_uint("world.D", d.D);
    d.L = cfg.get_uint("world.L", d.L);
    d.rho = cfg.get_double("world.rho", d.rho);
    d.q_var = cfg.get_double("world.q_var", d.q_var);
    d.init_var = cfg.get_double("world.init_var", d.init_var);
    d.seed = cfg.get_uint("world.seed", d.seed);
    WorldSpec w = make_world(d);
    const std::size_t D = w.D;
    if (cfg.has("world.A")) w.A = matrix_from_list(cfg.get_doubles("world.A", {}), D, D, "world.A");
    if (cfg.has("world.b")) w.b = matrix_from_list(cfg.get_doubles("world.b", {}), D, 1, "world.b");
    if (cfg.has("world.Q_chol")) {
        w.Q_chol = matrix_from_list(cfg.get_doubles("world.Q_chol", {}), D, D, "world.Q_chol");
    }
    if (cfg.has("world.init_mean")) {
        w.init_mean = matrix_from_list(cfg.get_doubles("world.init_mean", {}), D, 1, "world.init_mean");
    }
    if (cfg.has("world.init_cov_chol")) {
        w.init_cov_chol =
            matrix_from_list(cfg.get_doubles("world.init_cov_chol", {}), D, D, "world.init_cov_chol");
    }
    w.validate();
    return w;
}

KvConfig world_to_config(const WorldSpec& spec) {
    KvConfig cfg;
    cfg.set("world.D", std::to_string(spec.D));
    cfg.set("world.L", std::to_string(spec.L));
    cfg.set("world.A", format_doubles(list_from_matrix(spec.A)));
    cfg.set("world.b", format_doubles(list_from_matrix(spec.b)));
    cfg.set("world.Q_chol", format_doubles(list_from_matrix(spec.Q_chol)));
    cfg.set("world.init_mean", format_doubles(list_from_matrix(spec.init_mean)));
    cfg.set("world.init_cov_chol", format_doubles(list_from_matrix(spec.init_cov_chol)));
    return cfg;
}

FrameSequence sample_sequence(const WorldSpec& spec, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(spec.D);
    FrameSequence seq{spec.L, spec.D, std::vector<double>(spec.L * spec.D), seed};
    Rng rng(seed);
    Eigen::VectorXd eta(n);
    Eigen::VectorXd prev(n);
    for (std::size_t i = 0; i < spec.L; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) eta(k) = rng.normal();
        Eigen::VectorXd x = i == 0 ? Eigen::VectorXd(spec.init_mean + spec.init_cov_chol * eta)
                                   : Eigen::VectorXd(spec.A * prev + spec.b + spec.Q_chol * eta);
        for (Eigen::Index k = 0; k < n; ++k) seq.frames[i * spec.D + k] = x(k);
        prev = x;
    }
    return seq;
}

GaussianStats conditional_stats(const WorldSpec& spec, std::span<const double> context) {
    if (context.empty()) return {spec.init_mean, spec.init_cov_chol};
    if (context.size() != spec.D) throw ConfigError("context has the wrong dimension");
    return {spec.A * as_vec(context) + spec.b, spec.Q_chol};
}

std::vector<double> analytic_noisy_score(const WorldSpec& spec, std::span<const double> context,
                                         std::span<const double> x_t, double t) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("analytic_noisy_score: t must lie in (0, 1]");
    check_point(spec, context, x_t);
    const NoisedGaussian ng = noised(spec, context, t);
    return to_std(-ng.llt.solve(as_vec(x_t) - ng.mean));
}

std::vector<double> analytic_optimal_eps(const WorldSpec& spec, std::span<const double> context,
                                         std::span<const double> x_t, double t) {
    std::vector<double> s = analytic_noisy_score(spec, context, x_t, t);
    for (double& v : s) v *= -t;
    return s;
}

std::vector<double> analytic_posterior_mean(const WorldSpec& spec, std::span<const double> context,
                                            std::span<const double> x_t, double t) {
    check_point(spec, context, x_t);
    const NoisedGaussian ng = noised(spec, context, t);
    // E[x0 | x_t] = m + (1 - t) Sigma C^{-1} (x_t - (1 - t) m)
    const Eigen::VectorXd w = ng.llt.solve(as_vec(x_t) - ng.mean);
    return to_std(ng.data_mean + (1.0 - t) * ng.sigma * w);
}

double analytic_noisy_log_density(const WorldSpec& spec, std::span<const double> context,
                                  std::span<const double> x_t, double t) {
    check_point(spec, context, x_t);
    const NoisedGaussian ng = noised(spec, context, t);
    const Eigen::VectorXd r = as_vec(x_t) - ng.mean;
    const Eigen::MatrixXd L = ng.llt.matrixL();
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(r);
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    return -0.5 * z.squaredNorm() - 0.5 * logdet -
           0.5 * static_cast<double>(spec.D) * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd stationary_covariance(const WorldSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spec.D);
    const Eigen::MatrixXd Q = spec.Q_chol * spec.Q_chol.transpose();
    // vec(Sigma) = (I - A (x) A)^{-1} vec(Q), column-major vec.
    Eigen::MatrixXd K(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = spec.A(i, j) * spec.A;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n * n, n * n) - K;
    const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
    const Eigen::VectorXd s = M.partialPivLu().solve(q);
    Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(s.data(), n, n);
    return 0.5 * (sigma + sigma.transpose());
}

FrameMarginals frame_marginals(const WorldSpec& spec) {
    FrameMarginals fm;
    Eigen::VectorXd m = spec.init_mean;
    Eigen::MatrixXd S = spec.init_cov_chol * spec.init_cov_chol.transpose();
    const Eigen::MatrixXd Q = spec.Q_chol * spec.Q_chol.transpose();
    for (std::size_t i = 0; i < spec.L; ++i) {
        if (i > 0) {
            m = spec.A * m + spec.b;
            S = spec.A * S * spec.A.transpose() + Q;
        }
        fm.mean.push_back(m);
        fm.cov.push_back(S);
    }
    return fm;
}

}  // namespace asd

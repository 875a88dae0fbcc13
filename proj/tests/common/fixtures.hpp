#pragma once

// Small worlds, nets and the frozen-tape gradient checks shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asd/gradcheck.hpp"
#include "asd/losses.hpp"
#include "asd/models.hpp"
#include "asd/rng.hpp"
#include "asd/sampler.hpp"
#include "asd/schedule.hpp"
#include "asd/toyworld.hpp"

namespace asd::testing {

inline WorldSpec tiny_world(std::size_t D = 3, std::size_t L = 3, std::uint64_t seed = 7) {
    WorldDefaults d;
    d.D = D;
    d.L = L;
    d.seed = seed;
    return make_world(d);
}

inline DenoiserNet random_denoiser(std::size_t D, const std::vector<std::size_t>& hidden, std::uint64_t seed,
                                   OutputKind kind = OutputKind::velocity) {
    Rng rng(seed);
    DenoiserNet net = make_denoiser(D, hidden, kind, rng);
    // Non-zero biases so every parameter has a generic gradient.
    for (double& v : net.params.values()) v += 0.1 * rng.normal();
    return net;
}

inline std::vector<std::uint64_t> seeds_from(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t k = 0; k < count; ++k) s[k] = derive_seed(base, {k});
    return s;
}

template <class Net>
Net with_params(const Net& net, std::span<const double> p) {
    Net copy = net;
    std::copy(p.begin(), p.end(), copy.net.params.values().begin());
    return copy;
}

inline DiscriminatorHead with_head_params(const DiscriminatorHead& head, std::span<const double> p) {
    DiscriminatorHead copy = head;
    std::copy(p.begin(), p.end(), copy.params.values().begin());
    return copy;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

enum class GradCase { dmd_surrogate, fake_score, asd_generator, asd_disc_adv, asd_reg, asd_disc, total };

inline const char* grad_case_name(GradCase c) {
    switch (c) {
        case GradCase::dmd_surrogate: return "dmd_surrogate";
        case GradCase::fake_score: return "fake_score";
        case GradCase::asd_generator: return "asd_generator";
        case GradCase::asd_disc_adv: return "asd_disc_adv";
        case GradCase::asd_reg: return "asd_reg";
        case GradCase::asd_disc: return "asd_disc";
        case GradCase::total: return "total";
    }
    return "?";
}

inline constexpr GradCase kAllGradCases[] = {GradCase::dmd_surrogate, GradCase::fake_score,   GradCase::asd_generator,
                                             GradCase::asd_disc_adv,  GradCase::asd_reg,      GradCase::asd_disc,
                                             GradCase::total};

// Everything a gradient check at one random parameter point needs.
struct GradPoint {
    std::size_t D = 3, L = 3, B = 2, N = 3;
    NoiseSchedule schedule = make_schedule(3);
    StudentNet student;
    EpsNet teacher;
    EpsNet fake;
    DiscriminatorHead head;
    std::size_t n = 1;
    std::vector<std::uint64_t> seeds_n, seeds_n1;
    VideoBatch x0_n1;
    AsdTape asd_tape;
    double alpha = 1.7;

    explicit GradPoint(std::uint64_t seed) {
        student.net = random_denoiser(D, {6}, derive_seed(seed, {1}));
        teacher.net = random_denoiser(D, {6}, derive_seed(seed, {2}));
        fake.net = random_denoiser(D, {6}, derive_seed(seed, {3}));
        Rng hr(derive_seed(seed, {4}));
        head = make_discriminator_head(fake.net.arch.feature_width(), {5}, N, hr, 1.0);
        for (double& v : head.params.values()) v += 0.1 * hr.normal();
        n = 1 + seed % (N - 1);
        seeds_n = seeds_from(derive_seed(seed, {5}), B);
        seeds_n1 = seeds_from(derive_seed(seed, {6}), B);
        x0_n1 = rollout_videos(student, schedule, n + 1, L, seeds_n1);
        Rng ar(derive_seed(seed, {7}));
        asd_tape = draw_asd_tape(B, L, D, schedule, true, ar);
    }

    VideoBatch rollout(std::span<const double> p) const {
        return rollout_videos(with_params(student, p), schedule, n, L, seeds_n);
    }
};

struct GradCheckOutcome {
    double max_rel_err = 0.0;
    std::size_t params = 0;
};

// Analytic gradient of one loss against central differences of an
// independently assembled objective in which every random draw is frozen.
inline GradCheckOutcome check_loss_gradient(GradCase which, std::uint64_t seed, double h = 1e-5) {
    GradPoint gp(seed);
    const double M = static_cast<double>(gp.B * gp.L);
    std::vector<double> analytic, numeric;

    auto student_grad = [&](const VideoTape& tape, const std::vector<double>& upstream) {
        ParamVector g = gp.student.net.params.zeros_like();
        tape.backward(gp.student, gp.schedule, upstream, g.values());
        return to_vector(g.values());
    };
    auto asd_opts = [](double lambda) { return AsdOptions{lambda, 0.05, true, true}; };

    switch (which) {
        case GradCase::dmd_surrogate:
        case GradCase::total: {
            const VideoTape tape = VideoTape::record(gp.student, gp.schedule, gp.n, gp.L, gp.seeds_n);
            const NetScore data(gp.teacher), gen(gp.fake);
            Rng rng(derive_seed(seed, {8}));
            const DmdGrad dg = dmd_generator_grad(gp.student, gp.schedule, tape, data, gen, rng);
            const std::vector<double> delta = dg.result.delta;
            const bool total = which == GradCase::total;
            if (total) {
                const AsdResult ar = asd_losses(gp.head, gp.fake, tape.output(), gp.x0_n1, gp.n, gp.asd_tape, asd_opts(600));
                std::vector<double> up = dg.result.upstream;
                for (std::size_t k = 0; k < up.size(); ++k) up[k] += gp.alpha * ar.upstream_n[k];
                analytic = student_grad(tape, up);
            } else {
                analytic = to_vector(dg.grad.values());
            }
            auto f = [&](std::span<const double> p) {
                const VideoBatch x0 = gp.rollout(p);
                double s = 0.0;
                for (std::size_t k = 0; k < x0.x0.size(); ++k) s -= delta[k] * x0.x0[k];
                s /= M;
                if (total) {
                    AsdOptions o = asd_opts(600);
                    o.want_gen_grad = o.want_head_grad = false;
                    s += gp.alpha * asd_losses(gp.head, gp.fake, x0, gp.x0_n1, gp.n, gp.asd_tape, o).gen;
                }
                return s;
            };
            numeric = finite_difference_grad(f, gp.student.net.params.values(), h);
            break;
        }
        case GradCase::fake_score: {
            const VideoBatch x0 = gp.x0_n1;
            Rng rng(derive_seed(seed, {9}));
            const NoiseTape tape = draw_continuous_tape(gp.B, gp.L, gp.D, rng);
            analytic = to_vector(fake_score_loss(gp.fake, x0, tape, true).grad.values());
            auto f = [&](std::span<const double> p) {
                const EpsNet net = with_params(gp.fake, p);
                double s = 0.0;
                for (std::size_t b = 0; b < x0.B; ++b) {
                    for (std::size_t i = 0; i < x0.L; ++i) {
                        const std::size_t r = b * x0.L + i;
                        const std::span<const double> eps(tape.eps.data() + r * gp.D, gp.D);
                        const auto x_t = add_noise(x0.frame(b, i), eps, tape.t[r]);
                        const auto pred = eps_predict(net, x_t, tape.t[r], x0.context(b, i)).eps;
                        for (std::size_t k = 0; k < gp.D; ++k) s += (pred[k] - eps[k]) * (pred[k] - eps[k]);
                    }
                }
                return s / M;
            };
            numeric = finite_difference_grad(f, gp.fake.net.params.values(), h);
            break;
        }
        case GradCase::asd_generator: {
            const VideoTape tape = VideoTape::record(gp.student, gp.schedule, gp.n, gp.L, gp.seeds_n);
            const AsdResult ar = asd_losses(gp.head, gp.fake, tape.output(), gp.x0_n1, gp.n, gp.asd_tape, asd_opts(600));
            analytic = student_grad(tape, ar.upstream_n);
            auto f = [&](std::span<const double> p) {
                return asd_losses(gp.head, gp.fake, gp.rollout(p), gp.x0_n1, gp.n, gp.asd_tape, asd_opts(600)).gen;
            };
            numeric = finite_difference_grad(f, gp.student.net.params.values(), h);
            break;
        }
        case GradCase::asd_disc_adv:
        case GradCase::asd_reg:
        case GradCase::asd_disc: {
            const VideoBatch x0_n = gp.rollout(gp.student.net.params.values());
            const double lambda = which == GradCase::asd_disc ? 600.0 : 0.0;
            const AsdResult a0 = asd_losses(gp.head, gp.fake, x0_n, gp.x0_n1, gp.n, gp.asd_tape, asd_opts(lambda));
            analytic = to_vector(a0.head_grad.values());
            if (which == GradCase::asd_reg) {
                const AsdResult a1 = asd_losses(gp.head, gp.fake, x0_n, gp.x0_n1, gp.n, gp.asd_tape, asd_opts(1.0));
                for (std::size_t k = 0; k < analytic.size(); ++k) analytic[k] = a1.head_grad.values()[k] - analytic[k];
            }
            auto f = [&](std::span<const double> p) {
                const AsdResult r =
                    asd_losses(with_head_params(gp.head, p), gp.fake, x0_n, gp.x0_n1, gp.n, gp.asd_tape, asd_opts(lambda));
                if (which == GradCase::asd_reg) return r.reg;
                return r.disc;
            };
            numeric = finite_difference_grad(f, gp.head.params.values(), h);
            break;
        }
    }
    GradCheckOutcome out;
    out.params = analytic.size();
    out.max_rel_err = compare_gradients(std::move(analytic), std::move(numeric)).max_rel_err;
    return out;
}

// Sample mean and standard error per column of a row-major table.
struct ColumnStats {
    std::vector<double> mean, se;
};

inline ColumnStats column_stats(const std::vector<double>& rows, std::size_t dim) {
    const std::size_t n = rows.size() / dim;
    ColumnStats s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < dim; ++k) s.mean[k] += rows[r * dim + k];
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = rows[r * dim + k] - s.mean[k];
            s.se[k] += d * d;
        }
    for (double& v : s.se) v = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
    return s;
}

}  // namespace asd::testing

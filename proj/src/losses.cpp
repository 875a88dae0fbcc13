#include "asd/losses.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "asd/error.hpp"

namespace asd {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_tape(const VideoBatch& x0, const NoiseTape& tape) {
    const std::size_t frames = x0.B * x0.L;
    if (tape.t.size() != frames || tape.eps.size() != frames * x0.D) {
        throw ConfigError("noise tape does not match the batch shape");
    }
}

std::span<const double> eps_of(const std::vector<double>& eps, std::size_t frame, std::size_t D) {
    return {eps.data() + frame * D, D};
}

}  // namespace

void ScoreSource::score(std::span<const double> x_t, double t, std::span<const double> context,
                        std::span<double> out) const {
    if (!(t > 0.0)) throw DomainError("score needs t > 0");
    eps(x_t, t, context, out);
    for (double& v : out) v = -v / t;
}

void NetScore::eps(std::span<const double> x_t, double t, std::span<const double> context,
                   std::span<double> out) const {
    MlpCache cache;
    denoiser_forward(net_.net, x_t, t, context, cache);
    const OutputMap m = eps_map(net_.net.output, t);
    const auto F = cache.output();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = m.skip * x_t[k] + m.scale * F[k];
}

void AnalyticScore::eps(std::span<const double> x_t, double t, std::span<const double> context,
                        std::span<double> out) const {
    const auto e = analytic_optimal_eps(world_, context, x_t, t);
    std::copy(e.begin(), e.end(), out.begin());
}

void ShiftedScore::eps(std::span<const double> x_t, double t, std::span<const double> context,
                       std::span<double> out) const {
    base_.eps(x_t, t, context, out);
    std::vector<double> g(out.size(), 0.0);
    g_(x_t, t, context, g);
    // score + g  <=>  eps - t g
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= t * g[k];
}

NoiseTape draw_schedule_tape(std::size_t B, std::size_t L, std::size_t D, const NoiseSchedule& schedule,
                             Rng& rng) {
    NoiseTape tape;
    tape.t.resize(B * L);
    tape.eps.resize(B * L * D);
    for (std::size_t f = 0; f < B * L; ++f) {
        tape.t[f] = schedule.at(rng.uniform_int(0, schedule.steps() - 1));
        rng.fill_normal(std::span<double>(tape.eps).subspan(f * D, D));
    }
    return tape;
}

NoiseTape draw_continuous_tape(std::size_t B, std::size_t L, std::size_t D, Rng& rng) {
    NoiseTape tape;
    tape.t.resize(B * L);
    tape.eps.resize(B * L * D);
    for (std::size_t f = 0; f < B * L; ++f) {
        tape.t[f] = 1.0 - rng.uniform(0.0, 1.0);
        rng.fill_normal(std::span<double>(tape.eps).subspan(f * D, D));
    }
    return tape;
}

DmdResult dmd_delta(const VideoBatch& x0, const NoiseTape& tape, const ScoreSource& data,
                    const ScoreSource& gen, const DmdOptions& opts) {
    check_tape(x0, tape);
    const std::size_t D = x0.D;
    const std::size_t frames = x0.B * x0.L;
    DmdResult r;
    r.delta.assign(frames * D, 0.0);
    r.upstream.assign(frames * D, 0.0);
    std::vector<double> x_t(D), s_data(D), s_gen(D);
    double sq = 0.0;
    for (std::size_t b = 0; b < x0.B; ++b) {
        for (std::size_t i = 0; i < x0.L; ++i) {
            const std::size_t f = b * x0.L + i;
            const double t = tape.t[f];
            add_noise_into(x0.frame(b, i), eps_of(tape.eps, f, D), t, x_t);
            data.score(x_t, t, x0.context(b, i), s_data);
            gen.score(x_t, t, x0.context(b, i), s_gen);
            double* d = r.delta.data() + f * D;
            double mean_abs = 0.0;
            for (std::size_t k = 0; k < D; ++k) {
                d[k] = s_data[k] - s_gen[k];
                if (!std::isfinite(d[k])) {
                    std::ostringstream msg;
                    msg << "non-finite score difference at video " << b << ", frame " << i << ", dim " << k
                        << " (t = " << t << ", s_data = " << s_data[k] << ", s_gen = " << s_gen[k] << ")";
                    throw NumericError(msg.str());
                }
                mean_abs += std::abs(d[k]);
            }
            mean_abs /= static_cast<double>(D);
            if (opts.normalize && mean_abs > 0.0) {
                for (std::size_t k = 0; k < D; ++k) d[k] /= mean_abs;
            }
            for (std::size_t k = 0; k < D; ++k) sq += d[k] * d[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(frames);
    for (std::size_t k = 0; k < r.delta.size(); ++k) r.upstream[k] = -r.delta[k] * inv;
    r.loss = 0.5 * sq * inv;
    return r;
}

double dmd_surrogate(const DmdResult& r, const VideoBatch& x0) {
    if (r.upstream.size() != x0.x0.size()) throw ConfigError("DMD result does not match the batch");
    double s = 0.0;
    for (std::size_t k = 0; k < x0.x0.size(); ++k) s += r.upstream[k] * x0.x0[k];
    return s;
}

DmdGrad dmd_generator_grad(const StudentNet& student, const NoiseSchedule& schedule, const VideoTape& tape,
                           const ScoreSource& data, const ScoreSource& gen, Rng& rng, const DmdOptions& opts) {
    const VideoBatch& x0 = tape.output();
    const NoiseTape noise = draw_schedule_tape(x0.B, x0.L, x0.D, schedule, rng);
    DmdGrad out{dmd_delta(x0, noise, data, gen, opts), student.net.params.zeros_like()};
    tape.backward(student, schedule, out.result.upstream, out.grad.values());
    return out;
}

FakeResult fake_score_loss(const EpsNet& net, const VideoBatch& x0, const NoiseTape& tape, bool want_grad) {
    check_tape(x0, tape);
    const std::size_t D = x0.D;
    const std::size_t frames = x0.B * x0.L;
    const double inv = 1.0 / static_cast<double>(frames);
    FakeResult r{0.0, want_grad ? net.net.params.zeros_like() : ParamVector{}};
    std::vector<double> x_t(D), resid(D);
    MlpCache cache;
    for (std::size_t b = 0; b < x0.B; ++b) {
        for (std::size_t i = 0; i < x0.L; ++i) {
            const std::size_t f = b * x0.L + i;
            const double t = tape.t[f];
            const auto eps = eps_of(tape.eps, f, D);
            add_noise_into(x0.frame(b, i), eps, t, x_t);
            denoiser_forward(net.net, x_t, t, x0.context(b, i), cache);
            const OutputMap m = eps_map(net.net.output, t);
            const auto F = cache.output();
            for (std::size_t k = 0; k < D; ++k) {
                resid[k] = m.skip * x_t[k] + m.scale * F[k] - eps[k];
                r.loss += resid[k] * resid[k];
                resid[k] *= 2.0 * inv;
            }
            if (want_grad) denoiser_backward(net.net, cache, m, resid, {}, r.grad.values(), {}, {});
        }
    }
    r.loss *= inv;
    if (!std::isfinite(r.loss)) throw NumericError("non-finite denoising loss");
    return r;
}

std::vector<double> asd_timesteps(const NoiseSchedule& schedule, bool exclude_last) {
    std::vector<double> ts = schedule.timesteps();
    if (exclude_last) {
        if (ts.size() < 2) throw ConfigError("ASD needs a schedule with at least two steps");
        ts.pop_back();
    }
    return ts;
}

AsdTape draw_asd_tape(std::size_t B, std::size_t L, std::size_t D, const NoiseSchedule& schedule,
                      bool exclude_last, Rng& rng) {
    const auto ts = asd_timesteps(schedule, exclude_last);
    AsdTape tape;
    tape.t = ts[rng.uniform_int(0, ts.size() - 1)];
    const std::size_t n = B * L * D;
    tape.eps_n = rng.normal_vector(n);
    tape.eps_n1 = rng.normal_vector(n);
    tape.pert_n = rng.normal_vector(n);
    tape.pert_n1 = rng.normal_vector(n);
    return tape;
}

AsdResult asd_losses(const DiscriminatorHead& head, const EpsNet& fake, const VideoBatch& x0_n,
                     const VideoBatch& x0_n1, std::size_t n, const AsdTape& tape, const AsdOptions& opts) {
    if (n < 1 || n + 1 > head.steps()) {
        throw ContractViolation("ASD needs 1 <= n <= " + std::to_string(head.steps() - 1) + ", got n = " +
                                std::to_string(n));
    }
    if (x0_n.B != x0_n1.B || x0_n.L != x0_n1.L || x0_n.D != x0_n1.D) {
        throw ConfigError("ASD batches differ in shape");
    }
    if (x0_n.B * x0_n.L == 0) throw ConfigError("ASD batches are empty");
    const std::size_t D = x0_n.D;
    const std::size_t total = x0_n.x0.size();
    if (tape.eps_n.size() != total || tape.eps_n1.size() != total || tape.pert_n.size() != total ||
        tape.pert_n1.size() != total) {
        throw ConfigError("ASD tape does not match the batch shape");
    }
    if (head.arch.input_width() != fake.net.arch.feature_width()) {
        throw ConfigError("discriminator head width does not match the fake net feature");
    }

    const double t = tape.t;
    const double M = static_cast<double>(x0_n.B * x0_n.L);
    AsdResult r;
    r.t = t;
    if (opts.want_gen_grad) r.upstream_n.assign(total, 0.0);
    if (opts.want_head_grad) r.head_grad = head.params.zeros_like();

    const std::size_t steps = head.steps();
    const std::size_t idx = n - 1;
    std::vector<double> x_t(D), x_p(D), onehot(steps, 0.0), fgrad(head.arch.input_width()), xg(D);
    MlpCache base_n, base_tmp, h_n, h_n1, h_pn, h_pn1;

    // Logit n of the head at (x_t + shift, context); keeps the head cache.
    auto logit = [&](std::span<const double> x, std::span<const double> ctx, MlpCache& backbone,
                     MlpCache& head_cache) {
        denoiser_forward(fake.net, x, t, ctx, backbone);
        mlp_forward(head.params, head.arch, backbone.feature(), head_cache);
        return head_cache.output()[idx];
    };
    auto head_back = [&](const MlpCache& head_cache, double coef) {
        onehot[idx] = coef;
        mlp_backward(head.params, head.arch, head_cache, onehot, {}, r.head_grad.values(), {});
    };

    for (std::size_t b = 0; b < x0_n.B; ++b) {
        for (std::size_t i = 0; i < x0_n.L; ++i) {
            const std::size_t off = (b * x0_n.L + i) * D;
            const auto ctx_n = x0_n.context(b, i);
            const auto ctx_n1 = x0_n1.context(b, i);

            add_noise_into(x0_n.frame(b, i), {tape.eps_n.data() + off, D}, t, x_t);
            for (std::size_t k = 0; k < D; ++k) x_p[k] = x_t[k] + opts.sigma * tape.pert_n[off + k];
            const double f_n = logit(x_t, ctx_n, base_n, h_n);
            const double fp_n = logit(x_p, ctx_n, base_tmp, h_pn);

            add_noise_into(x0_n1.frame(b, i), {tape.eps_n1.data() + off, D}, t, x_t);
            for (std::size_t k = 0; k < D; ++k) x_p[k] = x_t[k] + opts.sigma * tape.pert_n1[off + k];
            const double f_n1 = logit(x_t, ctx_n1, base_tmp, h_n1);
            const double fp_n1 = logit(x_p, ctx_n1, base_tmp, h_pn1);

            const double d = f_n - f_n1;
            const double rn = f_n - fp_n;
            const double rn1 = f_n1 - fp_n1;
            r.gen += softplus(-d);
            r.disc_adv += softplus(d);
            r.reg += rn * rn + rn1 * rn1;

            if (opts.want_head_grad) {
                const double sd = sigmoid(d) / M;
                const double lam = opts.lambda / M;
                head_back(h_n, sd + lam * rn);
                head_back(h_pn, -lam * rn);
                head_back(h_n1, -sd + lam * rn1);
                head_back(h_pn1, -lam * rn1);
            }
            if (opts.want_gen_grad) {
                onehot[idx] = -sigmoid(-d) / M;
                std::fill(fgrad.begin(), fgrad.end(), 0.0);
                mlp_backward(head.params, head.arch, h_n, onehot, {}, {}, fgrad);
                std::fill(xg.begin(), xg.end(), 0.0);
                std::span<double> ctx_grad;
                if (i > 0) ctx_grad = std::span<double>(r.upstream_n).subspan(off - D, D);
                denoiser_backward(fake.net, base_n, OutputMap{0.0, 0.0}, {}, fgrad, {}, xg, ctx_grad);
                // x_t = (1 - t) x0 + t eps
                for (std::size_t k = 0; k < D; ++k) r.upstream_n[off + k] += (1.0 - t) * xg[k];
            }
        }
    }
    r.gen /= M;
    r.disc_adv /= M;
    r.reg /= 2.0 * M;
    r.disc = r.disc_adv + opts.lambda * r.reg;
    if (!std::isfinite(r.gen) || !std::isfinite(r.disc)) {
        std::ostringstream msg;
        msg << "non-finite ASD loss (gen = " << r.gen << ", adv = " << r.disc_adv << ", reg = " << r.reg
            << ", n = " << n << ", t = " << t << ")";
        throw NumericError(msg.str());
    }
    return r;
}

void LossBreakdown::check_finite() const {
    const std::pair<const char*, double> fields[] = {{"dmd", dmd},   {"asd_gen", asd_gen},
                                                     {"asd_disc", asd_disc}, {"reg", reg},
                                                     {"fake_score", fake_score}, {"total_gen", total_gen}};
    for (const auto& [name, v] : fields) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "non-finite loss '" << name << "': dmd=" << dmd << " asd_gen=" << asd_gen
                << " asd_disc=" << asd_disc << " reg=" << reg << " fake_score=" << fake_score
                << " total_gen=" << total_gen;
            throw NumericError(msg.str());
        }
    }
}

double total_generator_loss(double dmd_part, double asd_gen_part, double alpha, bool asd_active) {
    return asd_active ? dmd_part + alpha * asd_gen_part : dmd_part;
}

}  // namespace asd

#include "asd/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "asd/error.hpp"

namespace asd {
namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "distill.N",           "distill.alpha",          "distill.lambda",
        "distill.sigma",       "distill.iterations",     "distill.batch_size",
        "distill.ratio",       "distill.lr_student",     "distill.lr_fake",
        "distill.lr_disc",     "distill.beta1",          "distill.beta2",
        "distill.adam_eps",    "distill.chunk_size",     "distill.teacher_mode",
        "distill.asd_exclude_last", "distill.dmd_normalize", "distill.gen_n_includes_last",
        "distill.checkpoint_every", "distill.head_hidden", "distill.head_output_gain", "distill.lr_cosine", "distill.lr_final_ratio",
        "model.hidden",        "model.output",           "model.t_clamp",
        "teacher.iterations",  "teacher.batch_size",     "teacher.lr",
        "teacher.lr_final",    "teacher.seed",
    };
    return keys;
}

std::string output_name(OutputKind k) { return k == OutputKind::velocity ? "velocity" : "epsilon"; }

OutputKind parse_output(const std::string& s) {
    if (s == "velocity") return OutputKind::velocity;
    if (s == "epsilon") return OutputKind::epsilon;
    throw ConfigError("model.output must be velocity or epsilon, got '" + s + "'");
}

std::vector<std::uint64_t> draw_seeds(Rng& rng, std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (auto& v : s) v = rng.engine()();
    return s;
}

VideoBatch batch_from_sequences(const std::vector<FrameSequence>& seqs) {
    VideoBatch out(seqs.size(), seqs.front().L, seqs.front().D);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
        std::copy(seqs[b].frames.begin(), seqs[b].frames.end(), out.x0.begin() + b * out.L * out.D);
    }
    return out;
}

std::string breakdown_text(const LossBreakdown& l) {
    std::ostringstream s;
    s << "dmd=" << l.dmd << " asd_gen=" << l.asd_gen << " asd_disc=" << l.asd_disc << " reg=" << l.reg
      << " fake_score=" << l.fake_score << " total_gen=" << l.total_gen;
    return s.str();
}

}  // namespace

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : parse_doubles(text)) {
        if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("expected positive integers, got '" + text + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::string format_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

void DistillConfig::validate() const {
    world.validate();
    if (N < 2) throw ConfigError("distill.N must be at least 2 (ASD pairs n with n + 1 steps)");
    if (ratio_gen < 1 || ratio_fake < 1 || ratio_disc < 1) throw ConfigError("update ratio entries must be >= 1");
    if (batch_size < 1) throw ConfigError("distill.batch_size must be >= 1");
    if (chunk_size != 1) throw ConfigError("distill.chunk_size other than 1 is not supported");
    if (!(weights.alpha >= 0.0)) throw ConfigError("distill.alpha must be >= 0");
    if (!(weights.lambda >= 0.0)) throw ConfigError("distill.lambda must be >= 0");
    if (!(weights.sigma > 0.0)) throw ConfigError("distill.sigma must be > 0");
    for (const AdamOptions* o : {&student_adam, &fake_adam, &disc_adam}) {
        if (!(o->lr > 0.0)) throw ConfigError("learning rates must be > 0");
        if (!(o->beta1 >= 0.0 && o->beta1 < 1.0 && o->beta2 >= 0.0 && o->beta2 < 1.0)) {
            throw ConfigError("Adam betas must lie in [0, 1)");
        }
    }
    if (!(t_clamp > 0.0 && t_clamp < 1.0)) throw ConfigError("model.t_clamp must lie in (0, 1)");
    if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0)) throw ConfigError("distill.lr_final_ratio must lie in (0, 1]");
    if (checkpoint_every < 1) throw ConfigError("distill.checkpoint_every must be >= 1");
    if (teacher.hidden.empty() || teacher.iterations < 1 || teacher.batch_size < 1) {
        throw ConfigError("teacher needs hidden layers, iterations and a batch size");
    }
    if (!(teacher.lr > 0.0 && teacher.lr_final > 0.0)) throw ConfigError("teacher learning rates must be > 0");
}

DistillConfig DistillConfig::from_kv(const KvConfig& cfg) {
    for (const auto& [key, value] : cfg.entries()) {
        const bool scoped = key.rfind("distill.", 0) == 0 || key.rfind("teacher.", 0) == 0 ||
                            key.rfind("model.", 0) == 0;
        if (scoped && known_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
    }
    DistillConfig c;
    c.world = world_from_config(cfg);
    c.seed = cfg.get_uint("seed", c.seed);
    c.N = cfg.get_uint("distill.N", c.N);
    c.weights.alpha = cfg.get_double("distill.alpha", c.weights.alpha);
    c.weights.lambda = cfg.get_double("distill.lambda", c.weights.lambda);
    c.weights.sigma = cfg.get_double("distill.sigma", c.weights.sigma);
    c.iterations = cfg.get_uint("distill.iterations", c.iterations);
    c.batch_size = cfg.get_uint("distill.batch_size", c.batch_size);
    if (cfg.has("distill.ratio")) {
        const auto r = parse_sizes(cfg.get_string("distill.ratio", ""));
        if (r.size() != 3) throw ConfigError("distill.ratio needs three entries gen,fake,disc");
        c.ratio_gen = r[0];
        c.ratio_fake = r[1];
        c.ratio_disc = r[2];
    }
    c.student_adam.lr = cfg.get_double("distill.lr_student", c.student_adam.lr);
    c.fake_adam.lr = cfg.get_double("distill.lr_fake", c.fake_adam.lr);
    c.disc_adam.lr = cfg.get_double("distill.lr_disc", c.disc_adam.lr);
    for (AdamOptions* o : {&c.student_adam, &c.fake_adam, &c.disc_adam}) {
        o->beta1 = cfg.get_double("distill.beta1", o->beta1);
        o->beta2 = cfg.get_double("distill.beta2", o->beta2);
        o->eps = cfg.get_double("distill.adam_eps", o->eps);
    }
    c.chunk_size = cfg.get_uint("distill.chunk_size", c.chunk_size);
    const std::string mode = cfg.get_string("distill.teacher_mode", "learned");
    if (mode == "learned") {
        c.teacher_mode = TeacherMode::learned;
    } else if (mode == "analytic") {
        c.teacher_mode = TeacherMode::analytic;
    } else {
        throw ConfigError("distill.teacher_mode must be learned or analytic, got '" + mode + "'");
    }
    c.asd_exclude_last = cfg.get_bool("distill.asd_exclude_last", c.asd_exclude_last);
    c.dmd_normalize = cfg.get_bool("distill.dmd_normalize", c.dmd_normalize);
    c.gen_n_includes_last = cfg.get_bool("distill.gen_n_includes_last", c.gen_n_includes_last);
    c.checkpoint_every = cfg.get_uint("distill.checkpoint_every", c.checkpoint_every);
    if (cfg.has("distill.head_hidden")) {
        const std::string h = cfg.get_string("distill.head_hidden", "");
        c.head_hidden = h.empty() || h == "none" ? std::vector<std::size_t>{} : parse_sizes(h);
    }
    c.head_output_gain = cfg.get_double("distill.head_output_gain", c.head_output_gain);
    c.lr_cosine = cfg.get_bool("distill.lr_cosine", c.lr_cosine);
    c.lr_final_ratio = cfg.get_double("distill.lr_final_ratio", c.lr_final_ratio);
    if (cfg.has("model.hidden")) c.teacher.hidden = parse_sizes(cfg.get_string("model.hidden", ""));
    c.output = parse_output(cfg.get_string("model.output", output_name(c.output)));
    c.t_clamp = cfg.get_double("model.t_clamp", c.t_clamp);
    c.teacher.iterations = cfg.get_uint("teacher.iterations", c.teacher.iterations);
    c.teacher.batch_size = cfg.get_uint("teacher.batch_size", c.teacher.batch_size);
    c.teacher.lr = cfg.get_double("teacher.lr", c.teacher.lr);
    c.teacher.lr_final = cfg.get_double("teacher.lr_final", c.teacher.lr_final);
    c.teacher.seed = cfg.get_uint("teacher.seed", c.teacher.seed);
    c.validate();
    return c;
}

KvConfig DistillConfig::to_kv() const {
    KvConfig k = world_to_config(world);
    k.set("seed", std::to_string(seed));
    k.set("distill.N", std::to_string(N));
    k.set("distill.alpha", format_double(weights.alpha));
    k.set("distill.lambda", format_double(weights.lambda));
    k.set("distill.sigma", format_double(weights.sigma));
    k.set("distill.iterations", std::to_string(iterations));
    k.set("distill.batch_size", std::to_string(batch_size));
    k.set("distill.ratio", format_sizes({ratio_gen, ratio_fake, ratio_disc}));
    k.set("distill.lr_student", format_double(student_adam.lr));
    k.set("distill.lr_fake", format_double(fake_adam.lr));
    k.set("distill.lr_disc", format_double(disc_adam.lr));
    k.set("distill.beta1", format_double(student_adam.beta1));
    k.set("distill.beta2", format_double(student_adam.beta2));
    k.set("distill.adam_eps", format_double(student_adam.eps));
    k.set("distill.chunk_size", std::to_string(chunk_size));
    k.set("distill.teacher_mode", teacher_mode == TeacherMode::learned ? "learned" : "analytic");
    k.set("distill.asd_exclude_last", asd_exclude_last ? "true" : "false");
    k.set("distill.dmd_normalize", dmd_normalize ? "true" : "false");
    k.set("distill.gen_n_includes_last", gen_n_includes_last ? "true" : "false");
    k.set("distill.checkpoint_every", std::to_string(checkpoint_every));
    k.set("distill.head_hidden", head_hidden.empty() ? "none" : format_sizes(head_hidden));
    k.set("distill.head_output_gain", format_double(head_output_gain));
    k.set("distill.lr_cosine", lr_cosine ? "true" : "false");
    k.set("distill.lr_final_ratio", format_double(lr_final_ratio));
    k.set("model.hidden", format_sizes(teacher.hidden));
    k.set("model.output", output_name(output));
    k.set("model.t_clamp", format_double(t_clamp));
    k.set("teacher.iterations", std::to_string(teacher.iterations));
    k.set("teacher.batch_size", std::to_string(teacher.batch_size));
    k.set("teacher.lr", format_double(teacher.lr));
    k.set("teacher.lr_final", format_double(teacher.lr_final));
    k.set("teacher.seed", std::to_string(teacher.seed));
    return k;
}

TeacherResult train_teacher(const WorldSpec& world, const DistillConfig& cfg) {
    world.validate();
    const TeacherConfig& tc = cfg.teacher;
    Rng init_rng(derive_seed(tc.seed, {0x7465616368ULL}));
    TeacherResult out{EpsNet{make_denoiser(world.D, tc.hidden, cfg.output, init_rng)}, 0.0};
    out.net.net.t_clamp = cfg.t_clamp;
    AdamState opt(out.net.net.params.size());
    AdamOptions adam{tc.lr, 0.9, 0.999, 1e-8};
    std::vector<FrameSequence> seqs(tc.batch_size);
    for (std::size_t it = 0; it < tc.iterations; ++it) {
        const double progress = static_cast<double>(it) / static_cast<double>(tc.iterations);
        adam.lr = tc.lr_final + (tc.lr - tc.lr_final) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
        for (std::size_t b = 0; b < tc.batch_size; ++b) {
            seqs[b] = sample_sequence(world, derive_seed(tc.seed, {1, it, b}));
        }
        const VideoBatch batch = batch_from_sequences(seqs);
        Rng rng(derive_seed(tc.seed, {2, it}));
        const NoiseTape tape = draw_continuous_tape(batch.B, batch.L, batch.D, rng);
        const FakeResult r = fake_score_loss(out.net, batch, tape);
        adam_update(out.net.net.params.values(), r.grad.values(), opt, adam);
        out.final_loss = r.loss;
    }
    return out;
}

double teacher_oracle_mse(const EpsNet& teacher, const WorldSpec& world, std::uint64_t seed,
                          std::size_t sequences) {
    static const double grid[] = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const std::size_t D = world.D;
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<double> x_t(D);
    for (std::size_t s = 0; s < sequences; ++s) {
        const FrameSequence seq = sample_sequence(world, derive_seed(seed, {3, s}));
        for (std::size_t i = 0; i < seq.L; ++i) {
            const auto ctx = i == 0 ? std::span<const double>{} : seq.frame(i - 1);
            for (std::size_t g = 0; g < std::size(grid); ++g) {
                const double t = grid[g];
                Rng rng(derive_seed(seed, {4, s, i, g}));
                const auto eps = rng.normal_vector(D);
                add_noise_into(seq.frame(i), eps, t, x_t);
                const auto pred = eps_predict(teacher, x_t, t, ctx).eps;
                const auto opt = analytic_optimal_eps(world, ctx, x_t, t);
                for (std::size_t k = 0; k < D; ++k) sum += (pred[k] - opt[k]) * (pred[k] - opt[k]);
                ++count;
            }
        }
    }
    return sum / static_cast<double>(count);
}

TrainState init_state(const DistillConfig& cfg, const EpsNet& teacher) {
    if (teacher.net.frame_dim != cfg.world.D) throw ConfigError("teacher frame dimension does not match the world");
    TrainState s;
    s.teacher = teacher;
    s.student = init_student_from_teacher(teacher);
    s.student.net.t_clamp = cfg.t_clamp;
    s.fake = teacher;
    Rng head_rng(derive_seed(cfg.seed, {0x68656164ULL}));
    s.head = make_discriminator_head(teacher.net.arch.feature_width(), cfg.head_hidden, cfg.N, head_rng,
                                     cfg.head_output_gain);
    s.student_opt = AdamState(s.student.net.params.size());
    s.fake_opt = AdamState(s.fake.net.params.size());
    s.head_opt = AdamState(s.head.params.size());
    return s;
}

std::unique_ptr<ScoreSource> make_data_score(const DistillConfig& cfg, const TrainState& state) {
    if (cfg.teacher_mode == TeacherMode::analytic) return std::make_unique<AnalyticScore>(cfg.world);
    return std::make_unique<NetScore>(state.teacher);
}

double distill_lr_scale(const DistillConfig& cfg, std::uint64_t iteration) {
    if (!cfg.lr_cosine) return 1.0;
    const double progress = std::min(1.0, static_cast<double>(iteration) / static_cast<double>(cfg.iterations));
    return cfg.lr_final_ratio + (1.0 - cfg.lr_final_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

StepRecord distill_step(TrainState& state, const DistillConfig& cfg, const ScoreSource& data) {
    const NoiseSchedule schedule = cfg.schedule();
    const std::size_t N = cfg.N;
    const std::size_t B = cfg.batch_size;
    const std::size_t L = cfg.world.L;
    const std::size_t D = cfg.world.D;
    const std::size_t gen_hi = cfg.gen_n_includes_last ? N : N - 1;
    const std::uint64_t it = state.iteration + 1;
    const double lr_scale = distill_lr_scale(cfg, state.iteration);
    AdamOptions student_adam = cfg.student_adam, fake_adam = cfg.fake_adam, disc_adam = cfg.disc_adam;
    student_adam.lr *= lr_scale;
    fake_adam.lr *= lr_scale;
    disc_adam.lr *= lr_scale;
    const AsdOptions gen_opts{cfg.weights.lambda, cfg.weights.sigma, true, false};
    const AsdOptions disc_opts{cfg.weights.lambda, cfg.weights.sigma, false, true};

    StepRecord rec;
    rec.iteration = it;
    rec.loss.weights = cfg.weights;
    try {
        for (std::size_t g = 0; g < cfg.ratio_gen; ++g) {
            Rng rng(derive_seed(cfg.seed, {it, 1, g}));
            const std::size_t n = rng.uniform_int(1, gen_hi);
            const auto seeds = draw_seeds(rng, B);
            const VideoTape tape = VideoTape::record(state.student, schedule, n, L, seeds);
            const NoiseTape noise = draw_schedule_tape(B, L, D, schedule, rng);
            const NetScore gen_score(state.fake);
            const DmdResult dmd = dmd_delta(tape.output(), noise, data, gen_score, {cfg.dmd_normalize});
            std::vector<double> upstream = dmd.upstream;
            const bool active = n < N;
            double asd_gen = 0.0, t = 0.0;
            if (active) {
                if (n < 1 || n > N - 1) throw ContractViolation("ASD evaluated with n outside 1..N-1");
                const auto seeds1 = draw_seeds(rng, B);
                const VideoBatch x0_n1 = rollout_videos(state.student, schedule, n + 1, L, seeds1);
                const AsdTape at = draw_asd_tape(B, L, D, schedule, cfg.asd_exclude_last, rng);
                const AsdResult ar = asd_losses(state.head, state.fake, tape.output(), x0_n1, n, at, gen_opts);
                for (std::size_t k = 0; k < upstream.size(); ++k) upstream[k] += cfg.weights.alpha * ar.upstream_n[k];
                asd_gen = ar.gen;
                t = ar.t;
            }
            rec.n = n;
            rec.asd_active = active;
            rec.t = t;
            rec.loss.dmd = dmd.loss;
            rec.loss.asd_gen = asd_gen;
            rec.loss.total_gen = total_generator_loss(dmd.loss, asd_gen, cfg.weights.alpha, active);
            ParamVector grad = state.student.net.params.zeros_like();
            tape.backward(state.student, schedule, upstream, grad.values());
            adam_update(state.student.net.params.values(), grad.values(), state.student_opt, student_adam);
            ++state.counts.gen;
        }

        double fake_sum = 0.0;
        for (std::size_t k = 0; k < cfg.ratio_fake; ++k) {
            Rng rng(derive_seed(cfg.seed, {it, 2, k}));
            const std::size_t n = rng.uniform_int(1, gen_hi);
            const auto seeds = draw_seeds(rng, B);
            const VideoBatch x0 = rollout_videos(state.student, schedule, n, L, seeds);
            const NoiseTape noise = draw_schedule_tape(B, L, D, schedule, rng);
            const FakeResult fr = fake_score_loss(state.fake, x0, noise);
            adam_update(state.fake.net.params.values(), fr.grad.values(), state.fake_opt, fake_adam);
            fake_sum += fr.loss;
            ++state.counts.fake;
        }
        rec.loss.fake_score = fake_sum / static_cast<double>(cfg.ratio_fake);

        for (std::size_t k = 0; k < cfg.ratio_disc; ++k) {
            Rng rng(derive_seed(cfg.seed, {it, 3, k}));
            const std::size_t n = rng.uniform_int(1, N - 1);
            const auto seeds = draw_seeds(rng, B);
            const auto seeds1 = draw_seeds(rng, B);
            const VideoBatch x0_n = rollout_videos(state.student, schedule, n, L, seeds);
            const VideoBatch x0_n1 = rollout_videos(state.student, schedule, n + 1, L, seeds1);
            const AsdTape at = draw_asd_tape(B, L, D, schedule, cfg.asd_exclude_last, rng);
            const AsdResult ar = asd_losses(state.head, state.fake, x0_n, x0_n1, n, at, disc_opts);
            adam_update(state.head.params.values(), ar.head_grad.values(), state.head_opt, disc_adam);
            rec.disc_n = n;
            rec.disc_t = ar.t;
            rec.loss.asd_disc = ar.disc;
            rec.loss.reg = ar.reg;
            ++state.counts.disc;
        }
        rec.loss.check_finite();
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(it) + " [" +
                           breakdown_text(rec.loss) + "]");
    }
    state.iteration = it;
    rec.counts = state.counts;
    return rec;
}

std::string train_log_header() {
    return "iteration,dmd,asd_gen,asd_disc,reg,fake_score,total_gen,n,t,asd_active,disc_n,disc_t,"
           "gen_updates,fake_updates,disc_updates";
}

std::string train_log_row(const StepRecord& r) {
    std::ostringstream s;
    s << r.iteration << ',' << format_double(r.loss.dmd) << ',' << format_double(r.loss.asd_gen) << ','
      << format_double(r.loss.asd_disc) << ',' << format_double(r.loss.reg) << ','
      << format_double(r.loss.fake_score) << ',' << format_double(r.loss.total_gen) << ',' << r.n << ','
      << format_double(r.t) << ',' << (r.asd_active ? 1 : 0) << ',' << r.disc_n << ','
      << format_double(r.disc_t) << ',' << r.counts.gen << ',' << r.counts.fake << ',' << r.counts.disc;
    return s.str();
}

void write_train_log(const std::filesystem::path& path, const std::vector<StepRecord>& log) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + path.string());
        f << train_log_header() << '\n';
        for (const auto& r : log) f << train_log_row(r) << '\n';
        if (!f) throw ConfigError("failed writing " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint net_checkpoint(const DenoiserNet& net, const std::string& role, std::uint64_t iteration) {
    Checkpoint c;
    c.role = role;
    c.params = net.params;
    c.meta["arch"] = format_sizes(net.arch.widths);
    c.meta["frame_dim"] = std::to_string(net.frame_dim);
    c.meta["output"] = output_name(net.output);
    c.meta["t_clamp"] = format_double(net.t_clamp);
    c.meta["iteration"] = std::to_string(iteration);
    return c;
}

DenoiserNet net_from_checkpoint(const Checkpoint& ckpt, const std::string& role) {
    if (ckpt.role != role) throw ConfigError("checkpoint role is '" + ckpt.role + "', expected '" + role + "'");
    auto get = [&](const std::string& key) {
        auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end()) throw ConfigError("checkpoint is missing meta key '" + key + "'");
        return it->second;
    };
    DenoiserNet net;
    net.arch.widths = parse_sizes(get("arch"));
    net.frame_dim = parse_sizes(get("frame_dim")).at(0);
    net.output = parse_output(get("output"));
    net.t_clamp = parse_doubles(get("t_clamp")).at(0);
    if (net.arch.input_width() != 2 * net.frame_dim + 2 || net.arch.output_width() != net.frame_dim) {
        throw ConfigError("checkpoint architecture does not fit its frame dimension");
    }
    check_layout(ckpt.params, net.arch);
    net.params = ckpt.params;
    return net;
}

Checkpoint head_checkpoint(const DiscriminatorHead& head, std::uint64_t iteration) {
    Checkpoint c;
    c.role = "disc_head";
    c.params = head.params;
    c.meta["arch"] = format_sizes(head.arch.widths);
    c.meta["iteration"] = std::to_string(iteration);
    return c;
}

DiscriminatorHead head_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.role != "disc_head") throw ConfigError("checkpoint role is '" + ckpt.role + "', expected 'disc_head'");
    auto it = ckpt.meta.find("arch");
    if (it == ckpt.meta.end()) throw ConfigError("checkpoint is missing meta key 'arch'");
    DiscriminatorHead head;
    head.arch.widths = parse_sizes(it->second);
    check_layout(ckpt.params, head.arch);
    head.params = ckpt.params;
    return head;
}

DistillResult run_distillation(const DistillConfig& cfg, const EpsNet& teacher,
                               const std::optional<std::filesystem::path>& out_dir, const RunHooks& hooks) {
    cfg.validate();
    DistillResult res{init_state(cfg, teacher), {}};
    const auto data = make_data_score(cfg, res.state);
    auto save = [&](bool final) {
        if (!out_dir) return;
        const std::uint64_t it = res.state.iteration;
        Checkpoint student = net_checkpoint(res.state.student.net, "student", it);
        student.meta["schedule"] = cfg.schedule().to_string();
        save_checkpoint(*out_dir / "student.ckpt", student);
        save_checkpoint(*out_dir / "fake.ckpt", net_checkpoint(res.state.fake.net, "fake", it));
        save_checkpoint(*out_dir / "disc.ckpt", head_checkpoint(res.state.head, it));
        if (final) write_train_log(*out_dir / "train_log.csv", res.log);
    };
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        save_checkpoint(*out_dir / "teacher.ckpt", net_checkpoint(teacher.net, "teacher", 0));
    }
    res.log.reserve(cfg.iterations);
    for (std::size_t i = 0; i < cfg.iterations; ++i) {
        res.log.push_back(distill_step(res.state, cfg, *data));
        if (hooks.on_step) hooks.on_step(res.log.back());
        if (res.state.iteration % cfg.checkpoint_every == 0 && i + 1 < cfg.iterations) save(false);
    }
    save(true);
    return res;
}

}  // namespace asd

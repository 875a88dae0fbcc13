#include "asd/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "asd/analysis.hpp"
#include "asd/checkpoint.hpp"
#include "asd/error.hpp"
#include "asd/sampler.hpp"
#include "asd/trainer.hpp"

namespace asd {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingInput("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw MissingInput(what + " not found: " + path.string());
}

StudentNet load_student(const fs::path& path) {
    require_file(path, "student checkpoint");
    return StudentNet{net_from_checkpoint(load_checkpoint(path), "student")};
}

EpsNet load_teacher(const fs::path& path) {
    require_file(path, "teacher checkpoint");
    return EpsNet{net_from_checkpoint(load_checkpoint(path), "teacher")};
}

NoiseSchedule schedule_of(const fs::path& student_path, std::size_t fallback_steps) {
    const Checkpoint c = load_checkpoint(student_path);
    auto it = c.meta.find("schedule");
    return it == c.meta.end() ? make_schedule(fallback_steps) : NoiseSchedule::parse(it->second);
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "flat key = value config file");
    sub->add_option("--set", c.overrides, "override a config entry (key=value), repeatable");
    sub->add_option("--seed", c.seed, "base seed");
}

DistillConfig typed_config(const Common& c, const std::vector<std::string>& extra = {}) {
    std::vector<std::string> ov = c.overrides;
    ov.insert(ov.end(), extra.begin(), extra.end());
    if (c.seed) ov.push_back("seed=" + std::to_string(*c.seed));
    return DistillConfig::from_kv(resolve_config(c.config_path, ov));
}

int cmd_gen_data(const Common& c, std::size_t sequences, const fs::path& out) {
    const auto t0 = Clock::now();
    const DistillConfig cfg = typed_config(c);
    fs::create_directories(out);
    const VideoBatch v = world_videos(cfg.world, sequences, derive_seed(cfg.seed, {0x64617461ULL}));
    write_text_atomic(out / "world.csv", videos_csv(v));
    write_text_atomic(out / "world.cfg", world_to_config(cfg.world).to_text());
    RunManifest m{"gen-data", cfg.to_kv(), {{"seed", cfg.seed}}, {out / "world.csv", out / "world.cfg"}, {}};
    m.timings["total"] = seconds_since(t0);
    m.write(out / "manifest.json");
    std::cout << "wrote " << sequences << " sequences x " << cfg.world.L << " frames to " << (out / "world.csv") << '\n';
    return exit_ok;
}

int cmd_train_teacher(const Common& c, const fs::path& out) {
    const auto t0 = Clock::now();
    const DistillConfig cfg = typed_config(c);
    fs::create_directories(out);
    const TeacherResult t = train_teacher(cfg.world, cfg);
    const double mse = teacher_oracle_mse(t.net, cfg.world, derive_seed(cfg.teacher.seed, {0x686f6c64ULL}));
    save_checkpoint(out / "teacher.ckpt", net_checkpoint(t.net.net, "teacher", cfg.teacher.iterations));
    write_text_atomic(out / "teacher_report.csv", "final_loss,oracle_mse,oracle_mse_per_dim\n" +
                                                      format_double(t.final_loss) + ',' + format_double(mse) + ',' +
                                                      format_double(mse / static_cast<double>(cfg.world.D)) + '\n');
    RunManifest m{"train-teacher", cfg.to_kv(), {{"teacher.seed", cfg.teacher.seed}},
                  {out / "teacher.ckpt", out / "teacher_report.csv"}, {}};
    m.timings["total"] = seconds_since(t0);
    m.write(out / "manifest.json");
    std::cout << "teacher oracle MSE " << mse << " (threshold " << 0.05 * static_cast<double>(cfg.world.D) << ")\n";
    return exit_ok;
}

int cmd_distill(const Common& c, std::optional<double> alpha, std::optional<std::size_t> iterations,
                const std::string& teacher_path, const fs::path& out, bool quiet) {
    const auto t0 = Clock::now();
    std::vector<std::string> extra;
    if (alpha) extra.push_back("distill.alpha=" + format_double(*alpha));
    if (iterations) extra.push_back("distill.iterations=" + std::to_string(*iterations));
    const DistillConfig cfg = typed_config(c, extra);
    fs::create_directories(out);
    RunManifest m{"distill", cfg.to_kv(), {{"seed", cfg.seed}, {"teacher.seed", cfg.teacher.seed}}, {}, {}};
    EpsNet teacher;
    if (!teacher_path.empty()) {
        teacher = load_teacher(teacher_path);
    } else {
        const auto tt = Clock::now();
        teacher = train_teacher(cfg.world, cfg).net;
        m.timings["teacher"] = seconds_since(tt);
    }
    write_text_atomic(out / "config.cfg", cfg.to_kv().to_text());
    RunHooks hooks;
    if (!quiet) {
        hooks.on_step = [&](const StepRecord& r) {
            if (r.iteration % 100 == 0) {
                std::cerr << "iter " << r.iteration << " dmd " << r.loss.dmd << " asd_gen " << r.loss.asd_gen
                          << " disc " << r.loss.asd_disc << " fake " << r.loss.fake_score << '\n';
            }
        };
    }
    const auto td = Clock::now();
    run_distillation(cfg, teacher, out, hooks);
    m.timings["distill"] = seconds_since(td);
    for (const char* f : {"config.cfg", "teacher.ckpt", "student.ckpt", "fake.ckpt", "disc.ckpt", "train_log.csv"}) {
        m.outputs.push_back(out / f);
    }
    m.timings["total"] = seconds_since(t0);
    m.write(out / "manifest.json");
    std::cout << "distilled " << cfg.iterations << " iterations into " << out << '\n';
    return exit_ok;
}

int cmd_sample(const Common& c, const std::string& student_path, std::size_t T, std::size_t R,
               std::optional<std::size_t> L, std::size_t count, const std::string& out,
               const std::string& traj) {
    const auto t0 = Clock::now();
    const DistillConfig cfg = typed_config(c);
    const StudentNet student = load_student(student_path);
    const InferencePlan plan = ffe_plan(T, R, schedule_of(student_path, cfg.N), L.value_or(cfg.world.L));
    std::vector<DenoiseTrajectory> trajectories;
    const VideoBatch v = generate_videos(student, plan, count, cfg.seed, traj.empty() ? nullptr : &trajectories);
    write_text_atomic(out, videos_csv(v));
    RunManifest m{"sample", cfg.to_kv(), {{"seed", cfg.seed}}, {out}, {}};
    m.config.set("sample.T", std::to_string(T));
    m.config.set("sample.R", std::to_string(R));
    m.config.set("sample.L", std::to_string(plan.L));
    m.config.set("sample.count", std::to_string(count));
    m.config.set("sample.student", student_path);
    if (!traj.empty()) {
        write_text_atomic(traj, trajectories_csv(trajectories));
        m.outputs.push_back(traj);
    }
    m.timings["total"] = seconds_since(t0);
    m.write(fs::path(out).string() + ".manifest.json");
    std::cout << count << " videos, " << step_budget(plan) << " student evaluations each\n";
    return exit_ok;
}

struct References {
    VideoBatch teacher_videos;
    std::optional<EnergyReference> teacher_ref;
    std::optional<EnergyReference> world_ref;
};

References make_references(const DistillConfig& cfg, const std::string& teacher_path, std::size_t count) {
    References r;
    if (cfg.teacher_mode == TeacherMode::analytic || teacher_path.empty()) {
        r.teacher_videos = analytic_sample_videos(cfg.world, 32, count, derive_seed(cfg.seed, {0x726566ULL}));
    } else {
        r.teacher_videos = teacher_sample_videos(load_teacher(teacher_path), 32, cfg.world.L, count,
                                                 derive_seed(cfg.seed, {0x726566ULL}));
    }
    const std::size_t dim = cfg.world.L * cfg.world.D;
    r.teacher_ref.emplace(r.teacher_videos.x0, dim);
    r.world_ref.emplace(world_videos(cfg.world, count, derive_seed(cfg.seed, {0x776f726cULL})).x0, dim);
    return r;
}

EvalContext eval_context(const DistillConfig& cfg, const References& r, std::size_t count) {
    EvalContext ctx;
    ctx.world = cfg.world;
    ctx.schedule = cfg.schedule();
    ctx.count = count;
    ctx.seed = derive_seed(cfg.seed, {0x6576616cULL});
    ctx.teacher_ref = &*r.teacher_ref;
    ctx.world_ref = &*r.world_ref;
    ctx.teacher_videos = &r.teacher_videos;
    return ctx;
}

int cmd_analyze(const Common& c, const std::string& student_path, const std::string& teacher_path,
                std::size_t count, const fs::path& out) {
    const auto t0 = Clock::now();
    const DistillConfig cfg = typed_config(c);
    const StudentNet student = load_student(student_path);
    fs::create_directories(out);
    RunManifest m{"analyze", cfg.to_kv(), {{"seed", cfg.seed}}, {}, {}};

    std::vector<DenoiseTrajectory> trajs;
    const NoiseSchedule schedule = schedule_of(student_path, cfg.N);
    const InferencePlan full = uniform_plan(schedule.steps(), schedule, cfg.world.L);
    const VideoBatch full_videos = generate_videos(student, full, count, derive_seed(cfg.seed, {0x73696dULL}), &trajs);
    const auto mats = cosine_similarity_matrices(trajs);
    write_text_atomic(out / "similarity.csv", similarity_csv(mats));
    m.outputs.push_back(out / "similarity.csv");
    for (const auto& mat : mats) {
        const fs::path p = out / ("similarity_frame" + std::to_string(mat.frame + 1) + ".pgm");
        write_text_atomic(p, similarity_pgm(mat));
        m.outputs.push_back(p);
    }

    const References refs = make_references(cfg, teacher_path, count);
    const EvalContext ctx = eval_context(cfg, refs, count);
    std::vector<EvalRow> rows;
    for (std::size_t n = 1; n <= schedule.steps(); ++n) {
        rows.push_back(evaluate_student(student, n, n, ctx));
        rows.back().group = "uniform";
        rows.back().label = std::to_string(n) + "-step";
        if (n < schedule.steps()) {
            rows.push_back(evaluate_student(student, schedule.steps(), n, ctx));
            rows.back().group = "ffe";
            rows.back().label = std::to_string(n) + "*";
        }
    }
    write_text_atomic(out / "eval.csv", eval_csv(rows));
    m.outputs.push_back(out / "eval.csv");

    const auto drift = frame_drift(full_videos, cfg.world, derive_seed(cfg.seed, {0x64726966ULL}), count);
    std::string d = "frame,ed_world\n";
    for (std::size_t i = 0; i < drift.size(); ++i) d += std::to_string(i + 1) + ',' + format_double(drift[i]) + '\n';
    write_text_atomic(out / "drift.csv", d);
    m.outputs.push_back(out / "drift.csv");
    m.timings["total"] = seconds_since(t0);
    m.write(out / "manifest.json");
    std::cout << "analysis written to " << out << '\n';
    return exit_ok;
}

std::optional<std::pair<StudentNet, double>> load_run(const std::string& dir) {
    if (dir.empty()) return std::nullopt;
    const fs::path ckpt = fs::path(dir) / "student.ckpt";
    if (!fs::exists(ckpt)) {
        std::cerr << "missing run: " << ckpt << " (row reported as absent)\n";
        return std::nullopt;
    }
    double alpha = 1.0;
    const fs::path cfg = fs::path(dir) / "config.cfg";
    if (fs::exists(cfg)) alpha = KvConfig::load(cfg).get_double("distill.alpha", alpha);
    return std::make_pair(load_student(ckpt), alpha);
}

int cmd_ablate(const Common& c, const std::string& asd_run, const std::string& base_run,
               const std::vector<std::string>& sweep_runs, const std::string& teacher_path, std::size_t count,
               const fs::path& out) {
    const auto t0 = Clock::now();
    const DistillConfig cfg = typed_config(c);
    RunManifest m{"ablate", cfg.to_kv(), {{"seed", cfg.seed}}, {}, {}};
    AblationInputs in;
    if (auto r = load_run(asd_run)) {
        in.asd_student = r->first;
        in.asd_alpha = r->second;
    }
    if (auto r = load_run(base_run)) in.base_student = r->first;
    for (const auto& dir : sweep_runs) {
        auto r = load_run(dir);
        double alpha = std::numeric_limits<double>::quiet_NaN();
        if (r) alpha = r->second;
        in.sweep.emplace_back(alpha, r ? std::optional<StudentNet>(r->first) : std::nullopt);
    }
    const References refs = make_references(cfg, teacher_path, count);
    const auto rows = ablation_grid(in, eval_context(cfg, refs, count));
    write_text_atomic(out, eval_csv(rows));
    m.outputs.push_back(out);
    m.timings["total"] = seconds_since(t0);
    m.write(fs::path(out).string() + ".manifest.json");
    std::cout << rows.size() << " rows written to " << out << '\n';
    return exit_ok;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config.entries()) j["config"][k] = v;
    j["seeds"] = seeds;
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& p : outputs) {
        j["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    }
    j["timings_seconds"] = timings;
    return j.dump(2) + "\n";
}

void RunManifest::write(const fs::path& path) const { write_text_atomic(path, to_json()); }

KvConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    KvConfig merged;
    if (const char* env = std::getenv("ASD_SEED"); env && *env) merged.set("seed", env);
    if (!config_path.empty()) merged.merge(KvConfig::load(config_path));
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        merged.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    return merged;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Adversarial self-distillation on a toy causal sequence world"};
    app.require_subcommand(1);

    Common common;
    std::string out;
    std::size_t sequences = 100;
    auto* gen = app.add_subcommand("gen-data", "sample world sequences");
    add_common(gen, common);
    gen->add_option("--sequences", sequences, "number of sequences");
    gen->add_option("--out", out, "output directory")->required();

    auto* teach = app.add_subcommand("train-teacher", "train the teacher eps-net");
    add_common(teach, common);
    teach->add_option("--out", out, "output directory")->required();

    std::optional<double> alpha;
    std::optional<std::size_t> iterations;
    std::string teacher_path;
    bool quiet = false;
    auto* dist = app.add_subcommand("distill", "run adversarial self-distillation");
    add_common(dist, common);
    dist->add_option("--alpha", alpha, "ASD weight (0 = DMD only)");
    dist->add_option("--iterations", iterations, "macro-iterations");
    dist->add_option("--teacher", teacher_path, "existing teacher.ckpt (trained from scratch if absent)");
    dist->add_flag("--quiet", quiet, "no progress output");
    dist->add_option("--out", out, "output directory")->required();

    std::string student_path, traj;
    std::size_t T = 4, R = 4, count = 1000;
    std::optional<std::size_t> L;
    auto* samp = app.add_subcommand("sample", "generate videos with a student");
    add_common(samp, common);
    samp->add_option("--student", student_path, "student.ckpt")->required();
    samp->add_option("--T", T, "steps for the first frame");
    samp->add_option("--R", R, "steps for later frames");
    samp->add_option("--L", L, "frames per video");
    samp->add_option("--count", count, "videos");
    samp->add_option("--out", out, "samples CSV")->required();
    samp->add_option("--traj", traj, "trajectory CSV");

    std::size_t eval_count = 2000;
    auto* ana = app.add_subcommand("analyze", "similarity matrices, distances and drift for one student");
    add_common(ana, common);
    ana->add_option("--student", student_path, "student.ckpt")->required();
    ana->add_option("--teacher", teacher_path, "teacher.ckpt for the reference (analytic sampler if absent)");
    ana->add_option("--count", eval_count, "videos per evaluation");
    ana->add_option("--out", out, "output directory")->required();

    std::string asd_run, base_run;
    std::vector<std::string> sweep_runs;
    auto* abl = app.add_subcommand("ablate", "ASD x FFE grid and alpha sweep");
    add_common(abl, common);
    abl->add_option("--asd-run", asd_run, "distill output directory of the full run");
    abl->add_option("--base-run", base_run, "distill output directory of the alpha = 0 run");
    abl->add_option("--sweep-run", sweep_runs, "further distill output directories, repeatable");
    abl->add_option("--teacher", teacher_path, "teacher.ckpt for the reference (analytic sampler if absent)");
    abl->add_option("--count", eval_count, "videos per evaluation");
    abl->add_option("--out", out, "ablation CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*gen) return cmd_gen_data(common, sequences, out);
        if (*teach) return cmd_train_teacher(common, out);
        if (*dist) return cmd_distill(common, alpha, iterations, teacher_path, out, quiet);
        if (*samp) return cmd_sample(common, student_path, T, R, L, count, out, traj);
        if (*ana) return cmd_analyze(common, student_path, teacher_path, eval_count, out);
        if (*abl) return cmd_ablate(common, asd_run, base_run, sweep_runs, teacher_path, eval_count, out);
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_missing;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

}  // namespace asd

#include "asd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "asd/error.hpp"
#include "asd/kernels.hpp"
#include "asd/kvconfig.hpp"
#include "asd/sampler.hpp"

namespace asd {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t rows_of(std::span<const double> s, std::size_t dim) {
    if (dim == 0 || s.size() % dim != 0) throw ConfigError("sample set size is not a multiple of its dimension");
    return s.size() / dim;
}

// Mean of |a_i - b_j| over all pairs.
double mean_pair_distance(std::span<const double> a, std::span<const double> b, std::size_t dim) {
    const std::size_t na = rows_of(a, dim), nb = rows_of(b, dim);
    if (na == 0 || nb == 0) throw ConfigError("energy distance needs nonempty sample sets");
    const auto& k = kernels::active();
    double total = 0.0;
    for (std::size_t i = 0; i < na; ++i) total += k.dist_sum_row(a.data() + i * dim, b.data(), nb, dim);
    return total / (static_cast<double>(na) * static_cast<double>(nb));
}

double mean_kernel(std::span<const double> a, std::span<const double> b, std::size_t dim, double inv_2h2) {
    const std::size_t na = rows_of(a, dim), nb = rows_of(b, dim);
    const auto& k = kernels::active();
    std::vector<double> row(nb);
    double total = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        k.sq_dist_row(row.data(), a.data() + i * dim, b.data(), nb, dim);
        for (double d2 : row) total += std::exp(-d2 * inv_2h2);
    }
    return total / (static_cast<double>(na) * static_cast<double>(nb));
}

std::string fmt(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

double SimilarityMatrix::mean_off_diagonal() const {
    if (K < 2) return kNaN;
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t j = 0; j < K; ++j) {
        for (std::size_t k = 0; k < K; ++k) {
            if (j == k || std::isnan(at(j, k))) continue;
            s += at(j, k);
            ++c;
        }
    }
    return c ? s / static_cast<double>(c) : kNaN;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("cosine similarity of vectors with different lengths");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    if (aa == 0.0 || bb == 0.0) return kNaN;
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

std::vector<SimilarityMatrix> cosine_similarity_matrices(const std::vector<DenoiseTrajectory>& trajectories) {
    if (trajectories.empty()) return {};
    const std::size_t L = trajectories.front().frames.size();
    std::vector<SimilarityMatrix> out(L);
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t K = trajectories.front().frames[i].size();
        out[i].frame = i;
        out[i].K = K;
        out[i].S.assign(K * K, 0.0);
        out[i].counts.assign(K * K, 0);
    }
    for (const auto& tr : trajectories) {
        if (tr.frames.size() != L) throw ConfigError("trajectories disagree on frame count");
        for (std::size_t i = 0; i < L; ++i) {
            SimilarityMatrix& m = out[i];
            if (tr.frames[i].size() != m.K) throw ConfigError("trajectories disagree on step counts");
            for (std::size_t j = 0; j < m.K; ++j) {
                for (std::size_t k = 0; k < m.K; ++k) {
                    const double c = cosine_similarity(tr.frames[i][j].x0, tr.frames[i][k].x0);
                    if (std::isnan(c)) continue;
                    m.S[j * m.K + k] += c;
                    ++m.counts[j * m.K + k];
                }
            }
        }
    }
    for (auto& m : out) {
        for (std::size_t e = 0; e < m.S.size(); ++e) {
            m.S[e] = m.counts[e] ? m.S[e] / static_cast<double>(m.counts[e]) : kNaN;
        }
    }
    return out;
}

double energy_distance(std::span<const double> a, std::span<const double> b, std::size_t dim) {
    return 2.0 * mean_pair_distance(a, b, dim) - mean_pair_distance(a, a, dim) - mean_pair_distance(b, b, dim);
}

EnergyReference::EnergyReference(std::vector<double> samples, std::size_t dim)
    : samples_(std::move(samples)), dim_(dim), self_term_(mean_pair_distance(samples_, samples_, dim)) {}

double EnergyReference::distance(std::span<const double> a) const {
    return 2.0 * mean_pair_distance(a, samples_, dim_) - mean_pair_distance(a, a, dim_) - self_term_;
}

double median_bandwidth(std::span<const double> a, std::span<const double> b, std::size_t dim) {
    const std::size_t na = std::min<std::size_t>(rows_of(a, dim), 500);
    const std::size_t nb = std::min<std::size_t>(rows_of(b, dim), 500);
    std::vector<double> pooled(a.begin(), a.begin() + na * dim);
    pooled.insert(pooled.end(), b.begin(), b.begin() + nb * dim);
    const std::size_t n = na + nb;
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    std::vector<double> row(n);
    const auto& k = kernels::active();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        k.sq_dist_row(row.data(), pooled.data() + i * dim, pooled.data() + (i + 1) * dim, n - i - 1, dim);
        d2.insert(d2.end(), row.begin(), row.begin() + (n - i - 1));
    }
    if (d2.empty()) return 1.0;
    auto mid = d2.begin() + d2.size() / 2;
    std::nth_element(d2.begin(), mid, d2.end());
    const double h = std::sqrt(*mid);
    return h > 0.0 ? h : 1.0;
}

double mmd_gaussian(std::span<const double> a, std::span<const double> b, std::size_t dim, double h) {
    if (h <= 0.0) h = median_bandwidth(a, b, dim);
    const double inv = 1.0 / (2.0 * h * h);
    return mean_kernel(a, a, dim, inv) + mean_kernel(b, b, dim, inv) - 2.0 * mean_kernel(a, b, dim, inv);
}

std::vector<double> frame_samples(const VideoBatch& v, std::size_t i) {
    if (i >= v.L) throw ConfigError("frame index out of range");
    std::vector<double> out(v.B * v.D);
    for (std::size_t b = 0; b < v.B; ++b) {
        const auto f = v.frame(b, i);
        std::copy(f.begin(), f.end(), out.begin() + b * v.D);
    }
    return out;
}

std::vector<double> frame_drift(const VideoBatch& generated, const WorldSpec& world, std::uint64_t seed,
                                std::size_t reference_count) {
    if (generated.B < 100) throw ConfigError("frame drift needs at least 100 generated videos");
    if (generated.L != world.L || generated.D != world.D) throw ConfigError("videos do not match the world shape");
    const VideoBatch ref = world_videos(world, reference_count, seed);
    std::vector<double> out(world.L);
    for (std::size_t i = 0; i < world.L; ++i) {
        out[i] = energy_distance(frame_samples(generated, i), frame_samples(ref, i), world.D);
    }
    return out;
}

MomentGaps moment_gaps(const VideoBatch& generated, const WorldSpec& world) {
    if (generated.L != world.L || generated.D != world.D) throw ConfigError("videos do not match the world shape");
    if (generated.B < 2) throw ConfigError("moment gaps need at least two videos");
    const FrameMarginals fm = frame_marginals(world);
    const std::size_t D = world.D;
    MomentGaps g;
    for (std::size_t i = 0; i < world.L; ++i) {
        Eigen::MatrixXd X(generated.B, D);
        for (std::size_t b = 0; b < generated.B; ++b) {
            const auto f = generated.frame(b, i);
            for (std::size_t k = 0; k < D; ++k) X(b, k) = f[k];
        }
        const Eigen::VectorXd mean = X.colwise().mean();
        const Eigen::MatrixXd C = X.rowwise() - mean.transpose();
        const Eigen::MatrixXd cov = (C.transpose() * C) / static_cast<double>(generated.B - 1);
        g.mean_gap.push_back((mean - fm.mean[i]).norm());
        g.cov_gap.push_back((cov - fm.cov[i]).norm());
    }
    return g;
}

EvalRow evaluate_student(const StudentNet& student, std::size_t T, std::size_t R, const EvalContext& ctx) {
    if (!ctx.teacher_ref || !ctx.world_ref || !ctx.teacher_videos) {
        throw ConfigError("evaluation needs teacher and world references");
    }
    const InferencePlan plan = ffe_plan(T, R, ctx.schedule, ctx.world.L);
    const VideoBatch v = generate_videos(student, plan, ctx.count, ctx.seed);
    EvalRow row;
    row.T = T;
    row.R = R;
    row.budget = step_budget(plan);
    row.ed_teacher = ctx.teacher_ref->distance(v.x0);
    row.ed_world = ctx.world_ref->distance(v.x0);
    row.mmd_teacher = mmd_gaussian(v.x0, ctx.teacher_videos->x0, v.L * v.D);
    const MomentGaps mg = moment_gaps(v, ctx.world);
    for (std::size_t i = 0; i < v.L; ++i) {
        row.mean_gap += mg.mean_gap[i] / static_cast<double>(v.L);
        row.cov_gap += mg.cov_gap[i] / static_cast<double>(v.L);
        row.ed_frames.push_back(energy_distance(frame_samples(v, i), frame_samples(*ctx.teacher_videos, i), v.D));
    }
    return row;
}

std::vector<EvalRow> ablation_grid(const AblationInputs& in, const EvalContext& ctx) {
    const std::size_t N = ctx.schedule.steps();
    std::vector<EvalRow> rows;
    auto add = [&](const std::string& group, const std::string& label, const std::optional<StudentNet>& s,
                   bool asd, double alpha, std::size_t T, std::size_t R) {
        EvalRow row;
        if (s) {
            row = evaluate_student(*s, T, R, ctx);
        } else {
            row.present = false;
            row.T = T;
            row.R = R;
            row.budget = T + (ctx.world.L - 1) * R;
            row.ed_teacher = row.ed_world = row.mmd_teacher = row.mean_gap = row.cov_gap = kNaN;
        }
        row.group = group;
        row.label = label;
        row.asd = asd;
        row.alpha = alpha;
        rows.push_back(std::move(row));
    };
    for (std::size_t n : in.budgets) {
        add("grid", "neither", in.base_student, false, 0.0, n, n);
        add("grid", "ffe", in.base_student, false, 0.0, N, n);
        add("grid", "asd", in.asd_student, true, in.asd_alpha, n, n);
        add("grid", "asd+ffe", in.asd_student, true, in.asd_alpha, N, n);
    }
    for (const auto& [alpha, s] : in.sweep) {
        for (std::size_t n : in.budgets) add("alpha_sweep", "alpha=" + format_double(alpha), s, alpha > 0.0, alpha, n, n);
    }
    return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
    std::size_t L = 0;
    for (const auto& r : rows) L = std::max(L, r.ed_frames.size());
    std::ostringstream s;
    s << "group,label,present,asd,alpha,T,R,budget,ed_teacher,ed_world,mmd_teacher,mean_gap,cov_gap";
    for (std::size_t i = 0; i < L; ++i) s << ",ed_frame" << i + 1;
    s << '\n';
    for (const auto& r : rows) {
        s << r.group << ',' << r.label << ',' << (r.present ? 1 : 0) << ',' << (r.asd ? 1 : 0) << ','
          << fmt(r.alpha) << ',' << r.T << ',' << r.R << ',' << r.budget << ',' << fmt(r.ed_teacher) << ','
          << fmt(r.ed_world) << ',' << fmt(r.mmd_teacher) << ',' << fmt(r.mean_gap) << ',' << fmt(r.cov_gap);
        for (std::size_t i = 0; i < L; ++i) s << ',' << (i < r.ed_frames.size() ? fmt(r.ed_frames[i]) : "nan");
        s << '\n';
    }
    return s.str();
}

std::string similarity_csv(const std::vector<SimilarityMatrix>& mats) {
    std::ostringstream s;
    s << "frame,j,k,similarity,count\n";
    for (const auto& m : mats) {
        for (std::size_t j = 0; j < m.K; ++j) {
            for (std::size_t k = 0; k < m.K; ++k) {
                s << m.frame + 1 << ',' << j + 1 << ',' << k + 1 << ',' << fmt(m.at(j, k)) << ','
                  << m.counts[j * m.K + k] << '\n';
            }
        }
    }
    return s.str();
}

std::string similarity_pgm(const SimilarityMatrix& m, std::size_t cell) {
    const std::size_t side = m.K * cell;
    std::ostringstream s;
    s << "P2\n" << side << ' ' << side << "\n255\n";
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const double v = m.at(y / cell, x / cell);
            const int g = std::isnan(v) ? 0 : static_cast<int>(std::lround((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5));
            s << g << (x + 1 < side ? ' ' : '\n');
        }
    }
    return s.str();
}

std::string videos_csv(const VideoBatch& v) {
    std::ostringstream s;
    s << "video,frame";
    for (std::size_t k = 0; k < v.D; ++k) s << ",x" << k;
    s << '\n';
    for (std::size_t b = 0; b < v.B; ++b) {
        for (std::size_t i = 0; i < v.L; ++i) {
            s << b << ',' << i + 1;
            for (double x : v.frame(b, i)) s << ',' << format_double(x);
            s << '\n';
        }
    }
    return s.str();
}

VideoBatch read_videos_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw MissingInput("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path.string() + " is empty");
    const std::size_t D = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = parse_doubles(line);
        if (fields.size() != D + 2) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
        keys.emplace_back(static_cast<std::size_t>(fields[0]), static_cast<std::size_t>(fields[1]));
        values.insert(values.end(), fields.begin() + 2, fields.end());
    }
    if (keys.empty()) throw ConfigError(path.string() + " has no rows");
    std::size_t L = 0, B = 0;
    for (const auto& [b, i] : keys) {
        L = std::max(L, i);
        B = std::max(B, b + 1);
    }
    if (B * L != keys.size()) throw ConfigError(path.string() + " is not a complete video table");
    VideoBatch v(B, L, D);
    for (std::size_t r = 0; r < keys.size(); ++r) {
        const auto [b, i] = keys[r];
        if (i < 1) throw ConfigError(path.string() + ": frame indices start at 1");
        std::copy_n(values.begin() + r * D, D, v.frame(b, i - 1).begin());
    }
    return v;
}

std::string trajectories_csv(const std::vector<DenoiseTrajectory>& trajectories) {
    std::ostringstream s;
    std::size_t D = 0;
    for (const auto& tr : trajectories) {
        for (const auto& fr : tr.frames) {
            if (!fr.empty()) D = fr.front().x0.size();
        }
    }
    s << "video,frame,step,t";
    for (std::size_t k = 0; k < D; ++k) s << ",x_t" << k;
    for (std::size_t k = 0; k < D; ++k) s << ",x0_" << k;
    s << '\n';
    for (std::size_t b = 0; b < trajectories.size(); ++b) {
        for (std::size_t i = 0; i < trajectories[b].frames.size(); ++i) {
            const auto& steps = trajectories[b].frames[i];
            for (std::size_t j = 0; j < steps.size(); ++j) {
                s << b << ',' << i + 1 << ',' << j + 1 << ',' << format_double(steps[j].t);
                for (double x : steps[j].x_t) s << ',' << format_double(x);
                for (double x : steps[j].x0) s << ',' << format_double(x);
                s << '\n';
            }
        }
    }
    return s.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + path.string());
        f << text;
        if (!f) throw ConfigError("failed writing " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace asd

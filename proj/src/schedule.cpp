#include "asd/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "asd/error.hpp"

namespace asd {

NoiseSchedule::NoiseSchedule(std::vector<double> timesteps) : timesteps_(std::move(timesteps)) {
    if (timesteps_.empty()) throw DomainError("schedule needs at least one timestep");
    if (timesteps_.front() != 1.0) throw DomainError("schedule must start at t = 1");
    for (std::size_t j = 0; j < timesteps_.size(); ++j) {
        const double t = timesteps_[j];
        if (!(t > 0.0 && t <= 1.0)) throw DomainError("schedule timesteps must lie in (0, 1]");
        if (j > 0 && !(t < timesteps_[j - 1])) throw DomainError("schedule must be strictly decreasing");
    }
}

NoiseSchedule NoiseSchedule::prefix(std::size_t n) const {
    if (n < 1 || n > timesteps_.size()) {
        throw DomainError("schedule prefix of " + std::to_string(n) + " steps requested from a " +
                          std::to_string(timesteps_.size()) + "-step schedule");
    }
    return NoiseSchedule(std::vector<double>(timesteps_.begin(), timesteps_.begin() + n));
}

std::string NoiseSchedule::to_string() const {
    std::string out;
    char buf[64];
    for (std::size_t j = 0; j < timesteps_.size(); ++j) {
        if (j) out += ',';
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), timesteps_[j]);
        out.append(buf, end);
    }
    return out;
}

NoiseSchedule NoiseSchedule::parse(const std::string& text) {
    std::vector<double> ts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("empty entry in timestep list '" + text + "'");
        const std::string tok = item.substr(b, e - b + 1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw ConfigError("bad timestep '" + tok + "'");
        }
        ts.push_back(v);
    }
    return NoiseSchedule(std::move(ts));
}

NoiseSchedule make_schedule(std::size_t steps) {
    if (steps < 1) throw DomainError("schedule step count must be >= 1");
    std::vector<double> ts(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        ts[j] = 1.0 - static_cast<double>(j) / static_cast<double>(steps);
    }
    return NoiseSchedule(std::move(ts));
}

void add_noise_into(std::span<const double> x0, std::span<const double> eps, double t,
                    std::span<double> out) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("add_noise: t must lie in [0, 1]");
    if (x0.size() != eps.size() || out.size() != x0.size()) {
        throw ConfigError("add_noise: dimension mismatch");
    }
    // Endpoints are exact: t = 0 returns x0, t = 1 returns eps.
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = (1.0 - t) * x0[i] + t * eps[i];
}

std::vector<double> add_noise(std::span<const double> x0, std::span<const double> eps, double t) {
    std::vector<double> out(x0.size());
    add_noise_into(x0, eps, t, out);
    return out;
}

std::vector<double> score_from_eps(std::span<const double> eps_pred, double sigma_t) {
    if (!(sigma_t > 0.0)) throw DomainError("score_from_eps: sigma_t must be positive");
    std::vector<double> s(eps_pred.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = -eps_pred[i] / sigma_t;
    return s;
}

std::vector<double> x0_from_eps(std::span<const double> x_t, std::span<const double> eps, double t,
                                double t_clamp) {
    if (x_t.size() != eps.size()) throw ConfigError("x0_from_eps: dimension mismatch");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("x0_from_eps: t must lie in [0, 1]");
    const double tc = std::min(t, t_clamp);
    std::vector<double> x0(x_t.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = (x_t[i] - tc * eps[i]) / (1.0 - tc);
    return x0;
}

}  // namespace asd

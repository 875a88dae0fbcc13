#pragma once

#include <span>
#include <string>
#include <vector>

namespace asd {

// Denoising timesteps t_1 > t_2 > ... > t_N in (0, 1], t_1 = 1 (pure noise).
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> timesteps);

    std::size_t steps() const { return timesteps_.size(); }
    double at(std::size_t j) const { return timesteps_.at(j); }  // 0-based
    const std::vector<double>& timesteps() const { return timesteps_; }
    // First n timesteps (t_1..t_n).
    NoiseSchedule prefix(std::size_t n) const;

    // "1,0.75,0.5,0.25"; shortest round-trip formatting.
    std::string to_string() const;
    static NoiseSchedule parse(const std::string& text);

    bool operator==(const NoiseSchedule&) const = default;

private:
    std::vector<double> timesteps_;
};

// Uniform grid t_j = 1 - (j - 1) / N.
NoiseSchedule make_schedule(std::size_t steps);

// x_t = (1 - t) x0 + t eps.
std::vector<double> add_noise(std::span<const double> x0, std::span<const double> eps, double t);
void add_noise_into(std::span<const double> x0, std::span<const double> eps, double t,
                    std::span<double> out);

// s = -eps_pred / sigma_t. Under the interpolation above sigma_t = t.
std::vector<double> score_from_eps(std::span<const double> eps_pred, double sigma_t);

// x0 = (x_t - t eps) / (1 - t) with t clamped to t_clamp.
std::vector<double> x0_from_eps(std::span<const double> x_t, std::span<const double> eps, double t,
                                double t_clamp = 0.999);

}  // namespace asd

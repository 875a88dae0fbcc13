#pragma once

#include <functional>
#include <span>
#include <vector>

namespace asd {

using Objective = std::function<double(std::span<const double>)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
// Throws DomainError for h <= 0 and NumericError if f returns a non-finite value.
std::vector<double> finite_difference_grad(const Objective& objective, std::span<const double> params,
                                           double h);

struct GradReport {
    std::vector<double> analytic;
    std::vector<double> numeric;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
};

// Relative error per coordinate is |a - n| / max(|a|, |n|, floor); the floor
// keeps coordinates whose true gradient is ~0 from dominating.
GradReport compare_gradients(std::vector<double> analytic, std::vector<double> numeric,
                             double floor = 1e-6);

}  // namespace asd

#include "asd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asd/error.hpp"

namespace asd {

std::vector<double> finite_difference_grad(const Objective& objective, std::span<const double> params,
                                           double h) {
    if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double fp = objective(p);
        p[i] = orig - h;
        const double fm = objective(p);
        p[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            std::ostringstream msg;
            msg << "objective is non-finite while differencing coordinate " << i << " (f+ = " << fp
                << ", f- = " << fm << ")";
            throw NumericError(msg.str());
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

GradReport compare_gradients(std::vector<double> analytic, std::vector<double> numeric, double floor) {
    if (analytic.size() != numeric.size()) {
        throw ConfigError("analytic and numeric gradients differ in length");
    }
    GradReport r{std::move(analytic), std::move(numeric), 0.0, 0};
    for (std::size_t i = 0; i < r.analytic.size(); ++i) {
        const double a = r.analytic[i];
        const double n = r.numeric[i];
        const double denom = std::max({std::abs(a), std::abs(n), floor});
        const double err = std::abs(a - n) / denom;
        if (err > r.max_rel_err) {
            r.max_rel_err = err;
            r.worst_index = i;
        }
    }
    return r;
}

}  // namespace asd

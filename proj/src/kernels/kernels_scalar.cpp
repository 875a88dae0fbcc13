#include "asd/kernels.hpp"

#include <cmath>

namespace asd::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(double* out, const double* W, const double* x, const double* bias,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (bias ? bias[r] : 0.0) + dot_scalar(W + r * cols, x, cols);
    }
}

void gemv_t_acc_scalar(double* x_grad, const double* W, const double* u, std::size_t rows,
                       std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_scalar(x_grad, u[r], W + r * cols, cols);
}

void ger_acc_scalar(double* dW, const double* u, const double* x, std::size_t rows,
                    std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_scalar(dW + r * cols, u[r], x, cols);
}

void sq_dist_row_scalar(double* out, const double* a, const double* B, std::size_t n_b,
                        std::size_t d) {
    for (std::size_t j = 0; j < n_b; ++j) {
        const double* b = B + j * d;
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = a[k] - b[k];
            acc += diff * diff;
        }
        out[j] = acc;
    }
}

double dist_sum_row_scalar(const double* a, const double* B, std::size_t n_b, std::size_t d) {
    double total = 0.0;
    for (std::size_t j = 0; j < n_b; ++j) {
        const double* b = B + j * d;
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = a[k] - b[k];
            acc += diff * diff;
        }
        total += std::sqrt(acc);
    }
    return total;
}

constexpr KernelTable kScalar{
    Isa::scalar,     dot_scalar,         axpy_scalar,         gemv_scalar, gemv_t_acc_scalar,
    ger_acc_scalar,  sq_dist_row_scalar, dist_sum_row_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace asd::kernels

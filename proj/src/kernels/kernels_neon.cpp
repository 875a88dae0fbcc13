#include "asd/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace asd::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_neon(double* y, double alpha, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(double* out, const double* W, const double* x, const double* bias,
               std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (bias ? bias[r] : 0.0) + dot_neon(W + r * cols, x, cols);
    }
}

void gemv_t_acc_neon(double* x_grad, const double* W, const double* u, std::size_t rows,
                     std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_neon(x_grad, u[r], W + r * cols, cols);
}

void ger_acc_neon(double* dW, const double* u, const double* x, std::size_t rows,
                  std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_neon(dW + r * cols, u[r], x, cols);
}

inline double sq_dist_neon(const double* a, const double* b, std::size_t d) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= d; k += 2) {
        const float64x2_t diff = vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k));
        acc = vfmaq_f64(acc, diff, diff);
    }
    double s = vaddvq_f64(acc);
    for (; k < d; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

void sq_dist_row_neon(double* out, const double* a, const double* B, std::size_t n_b,
                      std::size_t d) {
    for (std::size_t j = 0; j < n_b; ++j) out[j] = sq_dist_neon(a, B + j * d, d);
}

double dist_sum_row_neon(const double* a, const double* B, std::size_t n_b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_b; ++j) s += std::sqrt(sq_dist_neon(a, B + j * d, d));
    return s;
}

constexpr KernelTable kNeon{
    Isa::neon,    dot_neon,         axpy_neon,         gemv_neon, gemv_t_acc_neon,
    ger_acc_neon, sq_dist_row_neon, dist_sum_row_neon,
};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace asd::kernels

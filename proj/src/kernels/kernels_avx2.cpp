// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "asd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace asd::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_avx2(double* out, const double* W, const double* x, const double* bias,
               std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (bias ? bias[r] : 0.0) + dot_avx2(W + r * cols, x, cols);
    }
}

void gemv_t_acc_avx2(double* x_grad, const double* W, const double* u, std::size_t rows,
                     std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_avx2(x_grad, u[r], W + r * cols, cols);
}

void ger_acc_avx2(double* dW, const double* u, const double* x, std::size_t rows,
                  std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_avx2(dW + r * cols, u[r], x, cols);
}

inline double sq_dist_avx2(const double* a, const double* b, std::size_t d) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= d; k += 4) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double s = hsum(acc);
    for (; k < d; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

void sq_dist_row_avx2(double* out, const double* a, const double* B, std::size_t n_b,
                      std::size_t d) {
    for (std::size_t j = 0; j < n_b; ++j) out[j] = sq_dist_avx2(a, B + j * d, d);
}

double dist_sum_row_avx2(const double* a, const double* B, std::size_t n_b, std::size_t d) {
    __m256d total = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n_b; j += 4) {
        const __m256d sq = _mm256_setr_pd(sq_dist_avx2(a, B + j * d, d),
                                          sq_dist_avx2(a, B + (j + 1) * d, d),
                                          sq_dist_avx2(a, B + (j + 2) * d, d),
                                          sq_dist_avx2(a, B + (j + 3) * d, d));
        total = _mm256_add_pd(total, _mm256_sqrt_pd(sq));
    }
    double s = hsum(total);
    for (; j < n_b; ++j) s += std::sqrt(sq_dist_avx2(a, B + j * d, d));
    return s;
}

constexpr KernelTable kAvx2{
    Isa::avx2,    dot_avx2,         axpy_avx2,         gemv_avx2, gemv_t_acc_avx2,
    ger_acc_avx2, sq_dist_row_avx2, dist_sum_row_avx2,
};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace asd::kernels

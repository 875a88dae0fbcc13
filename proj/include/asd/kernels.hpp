#pragma once

// Dense double-precision inner loops used by the networks and the sample
// statistics. Each kernel has a scalar reference implementation and, where
// the target supports it, an AVX2/FMA (x86-64) or NEON (aarch64) variant.
// The active table is chosen once at startup from the CPU features and the
// ASD_KERNELS environment variable ("scalar", "avx2", "neon", "auto").
//
// Variants differ only in summation order, so results agree to rounding but
// are not bit-identical across ISAs. Within one ISA every kernel is
// deterministic.

#include <cstddef>
#include <string_view>

namespace asd::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
    // out[r] = bias[r] + sum_c W[r, c] * x[c]; W is rows x cols, row-major.
    // bias may be null.
    void (*gemv)(double* out, const double* W, const double* x, const double* bias,
                 std::size_t rows, std::size_t cols);
    // x_grad[c] += sum_r W[r, c] * u[r]
    void (*gemv_t_acc)(double* x_grad, const double* W, const double* u,
                       std::size_t rows, std::size_t cols);
    // dW[r, c] += u[r] * x[c]
    void (*ger_acc)(double* dW, const double* u, const double* x,
                    std::size_t rows, std::size_t cols);
    // out[j] = || a - B[j] ||^2 for each of the n_b rows of B (row-major, dim d)
    void (*sq_dist_row)(double* out, const double* a, const double* B,
                        std::size_t n_b, std::size_t d);
    // sum_j || a - B[j] ||
    double (*dist_sum_row)(const double* a, const double* B, std::size_t n_b, std::size_t d);
};

const KernelTable& scalar_table();
// Null when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

// Active table. First call resolves ASD_KERNELS / CPU detection.
const KernelTable& active();

// Overrides the active table; throws ConfigError if the ISA is unavailable.
// Not thread-safe: call before evaluation starts.
void select(Isa isa);

}  // namespace asd::kernels

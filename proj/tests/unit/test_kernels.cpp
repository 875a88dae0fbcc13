#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "asd/error.hpp"
#include "asd/kernels.hpp"
#include "asd/rng.hpp"

using namespace asd;
using kernels::Isa;
using kernels::KernelTable;

namespace {

std::vector<const KernelTable*> simd_tables() {
    std::vector<const KernelTable*> out;
    if (const auto* t = kernels::avx2_table()) out.push_back(t);
    if (const auto* t = kernels::neon_table()) out.push_back(t);
    return out;
}

void expect_close(double a, double b, double scale) { EXPECT_NEAR(a, b, 1e-12 * (1.0 + scale)); }

// Odd lengths exercise the remainder loops.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 67};

}  // namespace

TEST(Kernels, ScalarDotMatchesNaiveSum) {
    Rng rng(1);
    for (std::size_t n : kSizes) {
        auto a = rng.normal_vector(n), b = rng.normal_vector(n);
        double ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
        EXPECT_EQ(kernels::scalar_table().dot(a.data(), b.data(), n), ref);
    }
}

TEST(Kernels, SimdVariantsMatchScalar) {
    const auto& ref = kernels::scalar_table();
    auto tables = simd_tables();
    if (tables.empty()) GTEST_SKIP() << "no SIMD variant on this target";
    Rng rng(2);
    for (const auto* k : tables) {
        SCOPED_TRACE(std::string(kernels::isa_name(k->isa)));
        for (std::size_t rows : {1, 3, 8}) {
            for (std::size_t n : kSizes) {
                auto a = rng.normal_vector(n), b = rng.normal_vector(n);
                expect_close(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), n);

                auto y1 = rng.normal_vector(n), y2 = y1;
                k->axpy(y1.data(), 0.37, a.data(), n);
                ref.axpy(y2.data(), 0.37, a.data(), n);
                for (std::size_t i = 0; i < n; ++i) expect_close(y1[i], y2[i], 1.0);

                auto W = rng.normal_vector(rows * n), bias = rng.normal_vector(rows), u = rng.normal_vector(rows);
                std::vector<double> o1(rows), o2(rows);
                k->gemv(o1.data(), W.data(), a.data(), bias.data(), rows, n);
                ref.gemv(o2.data(), W.data(), a.data(), bias.data(), rows, n);
                for (std::size_t r = 0; r < rows; ++r) expect_close(o1[r], o2[r], n);
                k->gemv(o1.data(), W.data(), a.data(), nullptr, rows, n);
                ref.gemv(o2.data(), W.data(), a.data(), nullptr, rows, n);
                for (std::size_t r = 0; r < rows; ++r) expect_close(o1[r], o2[r], n);

                auto g1 = rng.normal_vector(n), g2 = g1;
                k->gemv_t_acc(g1.data(), W.data(), u.data(), rows, n);
                ref.gemv_t_acc(g2.data(), W.data(), u.data(), rows, n);
                for (std::size_t i = 0; i < n; ++i) expect_close(g1[i], g2[i], rows);

                auto d1 = rng.normal_vector(rows * n), d2 = d1;
                k->ger_acc(d1.data(), u.data(), a.data(), rows, n);
                ref.ger_acc(d2.data(), u.data(), a.data(), rows, n);
                for (std::size_t i = 0; i < rows * n; ++i) expect_close(d1[i], d2[i], 1.0);

                auto B = rng.normal_vector(rows * n);
                std::vector<double> s1(rows), s2(rows);
                k->sq_dist_row(s1.data(), a.data(), B.data(), rows, n);
                ref.sq_dist_row(s2.data(), a.data(), B.data(), rows, n);
                for (std::size_t r = 0; r < rows; ++r) expect_close(s1[r], s2[r], 4.0 * n);
                expect_close(k->dist_sum_row(a.data(), B.data(), rows, n), ref.dist_sum_row(a.data(), B.data(), rows, n),
                             rows * std::sqrt(4.0 * n));
            }
        }
    }
}

TEST(Kernels, DistanceKernelsMatchDefinition) {
    Rng rng(3);
    const std::size_t d = 5, nb = 4;
    auto a = rng.normal_vector(d), B = rng.normal_vector(nb * d);
    std::vector<double> sq(nb);
    kernels::scalar_table().sq_dist_row(sq.data(), a.data(), B.data(), nb, d);
    double sum = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += (a[k] - B[j * d + k]) * (a[k] - B[j * d + k]);
        EXPECT_NEAR(sq[j], s, 1e-14);
        sum += std::sqrt(s);
    }
    EXPECT_NEAR(kernels::scalar_table().dist_sum_row(a.data(), B.data(), nb, d), sum, 1e-13);
}

TEST(Kernels, EachVariantIsDeterministic) {
    Rng rng(4);
    auto a = rng.normal_vector(67), b = rng.normal_vector(67);
    std::vector<const KernelTable*> all{&kernels::scalar_table()};
    for (const auto* t : simd_tables()) all.push_back(t);
    for (const auto* k : all) EXPECT_EQ(k->dot(a.data(), b.data(), 67), k->dot(a.data(), b.data(), 67));
}

TEST(Kernels, SelectRejectsUnavailableIsa) {
    const Isa before = kernels::active().isa;
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (kernels::isa_available(isa)) {
            kernels::select(isa);
            EXPECT_EQ(kernels::active().isa, isa);
        } else {
            EXPECT_THROW(kernels::select(isa), ConfigError);
        }
    }
    kernels::select(Isa::scalar);
    EXPECT_EQ(kernels::active().isa, Isa::scalar);
    kernels::select(before);
}

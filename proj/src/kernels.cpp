#include "selqa/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <vector>

namespace selqa::kernels {

namespace {

std::atomic<int> g_threads{1};

// Below this many multiply-adds the thread start-up cost dominates.
constexpr std::size_t kParallelWork = 1 << 15;

template <typename T>
inline T at_a(const GemmShape& s, std::span<const T> a, std::size_t i, std::size_t p) {
    return s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
}

template <typename T>
inline T at_b(const GemmShape& s, std::span<const T> b, std::size_t p, std::size_t j) {
    return s.trans_b ? b[j * s.k + p] : b[p * s.n + j];
}

// One output row; the accumulation order over p is the same for every variant.
template <typename T>
void gemm_row(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t i,
              std::vector<double>& acc) {
    acc.assign(s.n, 0.0);
    for (std::size_t p = 0; p < s.k; ++p) {
        const double aip = static_cast<double>(at_a(s, a, i, p));
        if (aip == 0.0) continue;
        if (s.trans_b) {
            for (std::size_t j = 0; j < s.n; ++j) acc[j] += aip * static_cast<double>(b[j * s.k + p]);
        } else {
            const T* brow = b.data() + p * s.n;
            for (std::size_t j = 0; j < s.n; ++j) acc[j] += aip * static_cast<double>(brow[j]);
        }
    }
    T* crow = c.data() + i * s.n;
    if (s.accumulate) {
        for (std::size_t j = 0; j < s.n; ++j) crow[j] = static_cast<T>(static_cast<double>(crow[j]) + acc[j]);
    } else {
        for (std::size_t j = 0; j < s.n; ++j) crow[j] = static_cast<T>(acc[j]);
    }
}

}  // namespace

int threads() { return g_threads.load(); }

void set_threads(int n) { g_threads.store(std::max(1, n)); }

namespace serial {

// Reference: textbook triple loop, skipping zero multiplicands exactly like
// the row kernel (adding +0.0 never changes a double sum except -0.0 → +0.0).
template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    for (std::size_t i = 0; i < s.m; ++i) {
        for (std::size_t j = 0; j < s.n; ++j) {
            double sum = 0.0;
            for (std::size_t p = 0; p < s.k; ++p) {
                const double aip = static_cast<double>(at_a(s, a, i, p));
                if (aip == 0.0) continue;
                sum += aip * static_cast<double>(at_b(s, b, p, j));
            }
            T& out = c[i * s.n + j];
            out = s.accumulate ? static_cast<T>(static_cast<double>(out) + sum) : static_cast<T>(sum);
        }
    }
}

template void gemm<float>(const GemmShape&, std::span<const float>, std::span<const float>, std::span<float>);
template void gemm<double>(const GemmShape&, std::span<const double>, std::span<const double>, std::span<double>);

}  // namespace serial

namespace omp {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    const int nt = std::max(1, threads());
#pragma omp parallel num_threads(nt)
    {
        std::vector<double> acc;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.m); ++i) {
            gemm_row(s, a, b, c, static_cast<std::size_t>(i), acc);
        }
    }
}

template void gemm<float>(const GemmShape&, std::span<const float>, std::span<const float>, std::span<float>);
template void gemm<double>(const GemmShape&, std::span<const double>, std::span<const double>, std::span<double>);

}  // namespace omp

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    if (threads() > 1 && s.m > 1 && s.m * s.n * s.k >= kParallelWork) {
        omp::gemm(s, a, b, c);
        return;
    }
    std::vector<double> acc;
    for (std::size_t i = 0; i < s.m; ++i) gemm_row(s, a, b, c, i, acc);
}

template void gemm<float>(const GemmShape&, std::span<const float>, std::span<const float>, std::span<float>);
template void gemm<double>(const GemmShape&, std::span<const double>, std::span<const double>, std::span<double>);

}  // namespace selqa::kernels

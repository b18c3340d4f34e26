#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>

namespace selqa::kernels {

/// Worker threads used by the dispatching kernels. Default 1 (serial).
int threads();
void set_threads(int n);

/// Row-major C[m,n] (+)= op(A) * op(B), op = optional transpose. Every output
/// element is summed over k in ascending order with a 64-bit accumulator, so
/// the serial and OpenMP variants produce identical bits.
struct GemmShape {
    std::size_t m = 0, n = 0, k = 0;
    bool trans_a = false;
    bool trans_b = false;
    bool accumulate = false;
};

namespace serial {
template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c);
}  // namespace serial

namespace omp {
template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c);
}  // namespace omp

/// Picks the OpenMP variant when threads() > 1 and the product is large enough.
template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c);

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs. The
/// first exception thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const int nt = threads();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace selqa::kernels

#pragma once

#include <cstddef>

// Data-parallel inner loops used throughout the library. Every kernel has a
// scalar reference implementation and an AVX2 variant; the active variant is
// selected once at startup (or forced, see below). The AVX2 variants may
// reassociate sums and use FMA, so results can differ from the scalar path by
// a few ulps; equivalence is pinned down in tests/test_kernels.cpp.
namespace diffopt::kern {

enum class Isa { Scalar, Avx2 };

// Returns the variant currently in use.
Isa active() noexcept;

// Force a variant (throws std::invalid_argument if unsupported on this CPU).
// Intended for tests and benchmarking; selection is process-wide.
void force(Isa isa);

bool cpu_has_avx2() noexcept;

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n) noexcept;

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;

// sum_i x[i]^2
double sum_sq(const double* x, std::size_t n) noexcept;

// sum_i (a[i] - b[i])^2
double diff_sq(const double* a, const double* b, std::size_t n) noexcept;

// x[i] = cx * x[i] + cs * s[i] + ce * e[i]   (one backward-SDE step per row)
void ou_step(double cx, double cs, const double* s, double ce, const double* e,
             double* x, std::size_t n) noexcept;

}  // namespace diffopt::kern

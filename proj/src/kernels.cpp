#include "diffopt/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace diffopt::kern {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq(const double* x, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double diff_sq(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = a[i] - b[i];
    acc += r * r;
  }
  return acc;
}

void ou_step(double cx, double cs, const double* s, double ce, const double* e,
             double* x, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) x[i] = cx * x[i] + cs * s[i] + ce * e[i];
}

}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
double dot(const double*, const double*, std::size_t) noexcept;
void axpy(double, const double*, double*, std::size_t) noexcept;
double sum_sq(const double*, std::size_t) noexcept;
double diff_sq(const double*, const double*, std::size_t) noexcept;
void ou_step(double, double, const double*, double, const double*, double*,
             std::size_t) noexcept;
}  // namespace avx2
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
  double (*sum_sq)(const double*, std::size_t) noexcept;
  double (*diff_sq)(const double*, const double*, std::size_t) noexcept;
  void (*ou_step)(double, double, const double*, double, const double*,
                  double*, std::size_t) noexcept;
  Isa isa;
};

constexpr Table kScalarTable = {scalar::dot, scalar::axpy, scalar::sum_sq,
                                scalar::diff_sq, scalar::ou_step, Isa::Scalar};

#if defined(__x86_64__) || defined(__i386__)
constexpr Table kAvx2Table = {avx2::dot, avx2::axpy, avx2::sum_sq,
                              avx2::diff_sq, avx2::ou_step, Isa::Avx2};
#endif

bool detect_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* pick_default() noexcept {
  if (const char* env = std::getenv("DIFFOPT_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
  }
#if defined(__x86_64__) || defined(__i386__)
  if (detect_avx2()) return &kAvx2Table;
#endif
  return &kScalarTable;
}

std::atomic<const Table*> g_table{nullptr};

const Table* table() noexcept {
  const Table* t = g_table.load(std::memory_order_acquire);
  if (!t) {
    t = pick_default();
    g_table.store(t, std::memory_order_release);
  }
  return t;
}

}  // namespace

Isa active() noexcept { return table()->isa; }

bool cpu_has_avx2() noexcept { return detect_avx2(); }

void force(Isa isa) {
  if (isa == Isa::Scalar) {
    g_table.store(&kScalarTable, std::memory_order_release);
    return;
  }
#if defined(__x86_64__) || defined(__i386__)
  if (isa == Isa::Avx2 && detect_avx2()) {
    g_table.store(&kAvx2Table, std::memory_order_release);
    return;
  }
#endif
  throw std::invalid_argument("kern::force: requested ISA not supported");
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  return table()->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  table()->axpy(alpha, x, y, n);
}

double sum_sq(const double* x, std::size_t n) noexcept {
  return table()->sum_sq(x, n);
}

double diff_sq(const double* a, const double* b, std::size_t n) noexcept {
  return table()->diff_sq(a, b, n);
}

void ou_step(double cx, double cs, const double* s, double ce, const double* e,
             double* x, std::size_t n) noexcept {
  table()->ou_step(cx, cs, s, ce, e, x, n);
}

}  // namespace diffopt::kern

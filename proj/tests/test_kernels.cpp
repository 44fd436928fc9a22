#include <doctest.h>

#include <cmath>
#include <vector>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

using namespace diffopt;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Sizes straddling the 4-lane vector width and the unrolled 8-lane path.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17,
                              31, 64, 100, 1000, 4097};

}  // namespace

TEST_CASE("scalar and avx2 variants agree") {
  if (!kern::cpu_has_avx2()) return;  // nothing to compare on this machine

  Rng rng(20240817);
  for (std::size_t n : kSizes) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    auto c = random_vec(n, rng);

    kern::force(kern::Isa::Scalar);
    const double dot_s = kern::dot(a.data(), b.data(), n);
    const double ss_s = kern::sum_sq(a.data(), n);
    const double dq_s = kern::diff_sq(a.data(), b.data(), n);
    auto y_s = c;
    kern::axpy(0.37, a.data(), y_s.data(), n);
    auto x_s = a;
    kern::ou_step(1.01, 0.02, b.data(), 0.1, c.data(), x_s.data(), n);

    kern::force(kern::Isa::Avx2);
    const double dot_v = kern::dot(a.data(), b.data(), n);
    const double ss_v = kern::sum_sq(a.data(), n);
    const double dq_v = kern::diff_sq(a.data(), b.data(), n);
    auto y_v = c;
    kern::axpy(0.37, a.data(), y_v.data(), n);
    auto x_v = a;
    kern::ou_step(1.01, 0.02, b.data(), 0.1, c.data(), x_v.data(), n);

    const double scale = static_cast<double>(n) + 1.0;
    CHECK(std::abs(dot_s - dot_v) <= 1e-13 * scale);
    CHECK(std::abs(ss_s - ss_v) <= 1e-13 * scale);
    CHECK(std::abs(dq_s - dq_v) <= 1e-13 * scale);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(y_s[i] - y_v[i]) <= 1e-13);
      CHECK(std::abs(x_s[i] - x_v[i]) <= 1e-13);
    }
  }
  kern::force(kern::cpu_has_avx2() ? kern::Isa::Avx2 : kern::Isa::Scalar);
}

TEST_CASE("kernel reference values") {
  kern::force(kern::Isa::Scalar);
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, -5.0, 6.0};
  CHECK(kern::dot(a, b, 3) == doctest::Approx(12.0));
  CHECK(kern::sum_sq(a, 3) == doctest::Approx(14.0));
  CHECK(kern::diff_sq(a, b, 3) == doctest::Approx(9.0 + 49.0 + 9.0));

  double y[] = {1.0, 1.0, 1.0};
  kern::axpy(2.0, a, y, 3);
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[1] == doctest::Approx(5.0));
  CHECK(y[2] == doctest::Approx(7.0));

  double x[] = {1.0, 2.0, 3.0};
  const double s[] = {0.5, 0.5, 0.5};
  const double e[] = {1.0, 0.0, -1.0};
  kern::ou_step(2.0, 4.0, s, 3.0, e, x, 3);
  CHECK(x[0] == doctest::Approx(2.0 + 2.0 + 3.0));
  CHECK(x[1] == doctest::Approx(4.0 + 2.0));
  CHECK(x[2] == doctest::Approx(6.0 + 2.0 - 3.0));
  kern::force(kern::cpu_has_avx2() ? kern::Isa::Avx2 : kern::Isa::Scalar);
}

TEST_CASE("rng substreams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= (a.next_u64() != c.next_u64());
  CHECK(differs);

  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1, 2) != derive_seed(7, 2, 1));
}

TEST_CASE("rng normals have the right first moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 0.02);
}

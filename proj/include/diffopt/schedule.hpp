#pragma once

#include <cmath>
#include <cstdint>

namespace diffopt {

// Forward-process time grid and noise scales for the variance-preserving
// Ornstein-Uhlenbeck schedule: alpha(t)^2 + h(t) = 1 for all t.
struct DiffusionSchedule {
  double terminal = 10.0;    // T
  double early_stop = 0.01;  // t0 > 0, backward integration stops here
  double step = 5e-3;        // eta

  static double alpha(double t) noexcept { return std::exp(-0.5 * t); }
  static double h(double t) noexcept { return -std::expm1(-t); }
};

DiffusionSchedule make_schedule(double terminal, double early_stop,
                                double step);

// Early-stopping rule ((D d^2 + D^2 d) / n1)^(1/6).
double default_t0(int ambient_dim, int latent_dim, std::int64_t n1);

}  // namespace diffopt

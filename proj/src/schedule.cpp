#include "diffopt/schedule.hpp"

#include <stdexcept>

namespace diffopt {

DiffusionSchedule make_schedule(double terminal, double early_stop,
                                double step) {
  if (!(early_stop > 0.0) || !(early_stop < terminal))
    throw std::invalid_argument("make_schedule: need 0 < t0 < T");
  if (!(step > 0.0)) throw std::invalid_argument("make_schedule: need eta > 0");
  DiffusionSchedule s;
  s.terminal = terminal;
  s.early_stop = early_stop;
  s.step = step;
  return s;
}

double default_t0(int ambient_dim, int latent_dim, std::int64_t n1) {
  if (n1 <= 0) throw std::invalid_argument("default_t0: n1 must be positive");
  const double D = ambient_dim;
  const double d = latent_dim;
  return std::pow((D * d * d + D * D * d) / static_cast<double>(n1),
                  1.0 / 6.0);
}

}  // namespace diffopt

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace fbsg {

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive Simpson on [a,b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, int max_depth = 50);

// Adaptive integration over [0, inf): dyadic panels, stops once panel
// contributions fall below tolerance. Throws QuadratureFailure if the panel
// sums keep growing (non-integrable integrand).
double integrate_half_line(const std::function<double(double)>& f,
                           double rel_tol = 1e-10);

}  // namespace fbsg

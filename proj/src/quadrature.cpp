#include "fbsg/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace fbsg {

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double m, double fm, double whole,
                double eps, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  if (depth <= 0) throw QuadratureFailure("adaptive Simpson: max depth reached");
  if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
         adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson(f, a, fa, b, fb, m, fm);
  const double scale = std::max(std::abs(whole), 1e-30);
  return adaptive(f, a, fa, b, fb, m, fm, whole, rel_tol * scale, max_depth);
}

double integrate_half_line(const std::function<double(double)>& f,
                           double rel_tol) {
  double total = integrate(f, 0.0, 1.0, rel_tol);
  double lo = 1.0;
  int growing = 0;
  for (int k = 0; k < 64; ++k) {
    const double hi = 2.0 * lo;
    const double panel = integrate(f, lo, hi, rel_tol);
    total += panel;
    const double scale = std::max(std::abs(total), 1e-30);
    if (std::abs(panel) < rel_tol * scale && lo > 8.0) return total;
    if (k > 0 && std::abs(panel) > scale) {
      if (++growing > 6) throw QuadratureFailure("half-line integral does not converge");
    } else {
      growing = 0;
    }
    lo = hi;
  }
  throw QuadratureFailure("half-line integral: tail did not settle");
}

}  // namespace fbsg

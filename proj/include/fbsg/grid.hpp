#pragma once

#include <cassert>
#include <vector>

namespace fbsg {

// Uniform time grid 0 = t_0 < ... < t_M = T.
class TimeGrid {
 public:
  TimeGrid() : horizon_(1.0), steps_(1) {}
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    assert(horizon > 0.0 && steps > 0);
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int points() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  double time(int i) const { return horizon_ * i / steps_; }

  std::vector<double> times() const {
    std::vector<double> t(points());
    for (int i = 0; i < points(); ++i) t[i] = time(i);
    return t;
  }

 private:
  double horizon_;
  int steps_;
};

}  // namespace fbsg

#pragma once

#include <functional>

namespace fraclab {

struct QuadratureResult {
  double value;
  double error_estimate;
  int evaluations;
};

/// Globally adaptive Gauss-Kronrod (7/15) on [a, b]. Stops when the summed
/// error estimate is below max(abs_tol, rel_tol * |value|) or after
/// max_intervals subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-10, double abs_tol = 0.0, int max_intervals = 2000);

}  // namespace fraclab

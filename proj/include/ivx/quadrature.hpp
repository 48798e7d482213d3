#pragma once

#include <functional>
#include <span>

#include "ivx/common.hpp"

namespace ivx {

// Nodes and weights of an n-point Gauss-Legendre rule mapped to [a, b].
// Supported sizes: 16 and 24.
struct GLRule {
  int n = 0;
  std::array<double, 24> x{};
  std::array<double, 24> w{};
};
GLRule gauss_legendre(int n, double a, double b);

// Adaptive Gauss-Kronrod 7/15 integration of f over [a, b]. Subdivides until
// the local error estimate satisfies the mixed tolerance
// err <= max(abs_tol_local, rel_tol * |I|), throws QuadratureFailure past the
// depth budget.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol = 1e-12, int max_depth = 48);

// Same, splitting the range at the given interior breakpoints first.
double integrate_adaptive_segments(const std::function<double(double)>& f,
                                   std::span<const double> points, double abs_tol,
                                   double rel_tol = 1e-12, int max_depth = 48);

}  // namespace ivx

#include "ivx/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ivx {

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

GLRule reference_rule(int n) {
  GLRule r;
  r.n = n;
  for (int k = 1; k <= n; ++k) {
    double x = std::cos(std::numbers::pi * (k - 0.25) / (n + 0.5));
    for (int it = 0; it < 64; ++it) {
      auto [p, dp] = legendre(n, x);
      double step = p / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    auto [p, dp] = legendre(n, x);
    (void)p;
    r.x[static_cast<size_t>(k - 1)] = x;
    r.w[static_cast<size_t>(k - 1)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Gauss-Kronrod 7/15 pair on [-1, 1].
constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kGK15WK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kG7W[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double value = 0.0;
  double error = 0.0;
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      resk += kGK15WK[7] * fv;
      resg += kG7W[3] * fv;
    } else {
      double fp = f(c + h * kGK15Nodes[i]);
      double fm = f(c - h * kGK15Nodes[i]);
      resk += kGK15WK[i] * (fp + fm);
      if (i % 2 == 1) resg += kG7W[i / 2] * (fp + fm);
    }
  }
  return {resk * h, std::fabs(resk - resg) * std::fabs(h)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double abs_tol,
             double rel_tol, int depth, int max_depth) {
  Segment s = gk15(f, a, b);
  if (s.error <= std::max(abs_tol, rel_tol * std::fabs(s.value))) return s.value;
  if (depth >= max_depth)
    throw QuadratureFailure("adaptive quadrature exhausted its depth budget");
  double mid = 0.5 * (a + b);
  return adapt(f, a, mid, 0.5 * abs_tol, rel_tol, depth + 1, max_depth) +
         adapt(f, mid, b, 0.5 * abs_tol, rel_tol, depth + 1, max_depth);
}

}  // namespace

GLRule gauss_legendre(int n, double a, double b) {
  if (n != 16 && n != 24) throw ValidationError("supported Gauss-Legendre sizes are 16 and 24");
  static const GLRule ref16 = reference_rule(16);
  static const GLRule ref24 = reference_rule(24);
  const GLRule& ref = n == 16 ? ref16 : ref24;
  GLRule out;
  out.n = n;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    out.x[static_cast<size_t>(i)] = c + h * ref.x[static_cast<size_t>(i)];
    out.w[static_cast<size_t>(i)] = h * ref.w[static_cast<size_t>(i)];
  }
  return out;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol, int max_depth) {
  if (!(abs_tol > 0.0)) throw ValidationError("quadrature needs a positive tolerance");
  if (a == b) return 0.0;
  return adapt(f, a, b, abs_tol, rel_tol, 0, max_depth);
}

double integrate_adaptive_segments(const std::function<double(double)>& f,
                                   std::span<const double> points, double abs_tol,
                                   double rel_tol, int max_depth) {
  if (points.size() < 2) throw ValidationError("segment list needs at least two points");
  double total = 0.0;
  double per = abs_tol / static_cast<double>(points.size() - 1);
  for (size_t i = 0; i + 1 < points.size(); ++i)
    total += integrate_adaptive(f, points[i], points[i + 1], per, rel_tol, max_depth);
  return total;
}

}  // namespace ivx

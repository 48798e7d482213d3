#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ivx/combinatorics.hpp"
#include "ivx/price_expansion.hpp"

namespace ivx {

// Cached state for the implied volatility corrections of one expansion
// context. Symbolic mode carries each correction as a BiPoly in the centered
// log strike K = k - x0 and R = sqrt(T - t); numeric mode evaluates on
// demand at a concrete (T, k).
struct IVExpansion {
  ExpansionContext ctx;
  double sigma0_level = 0.0;              // symbolic mode: constant level
  std::vector<BiPoly> sigma_sym;          // [n] for 1 <= n <= N once computed
  std::optional<UnCoefficients> un_sym;   // symbolic correction coefficients
};

IVExpansion make_iv_expansion(const ExpansionContext& ctx);

// Hermite-basis form of the n-th price correction over vega:
//   u_n / vega = sum_m chi_{m,n} (sigma0 sqrt(2 tau))^{-m} h_m(zeta),
// with chi_{m,n} = (sum_{j >= m+2} f_{j,n}) / (sigma0 tau). Requires the
// zero-sum identity sum_j f_{j,n} = 0 and throws CancellationFailure when it
// fails beyond tolerance. Entries are keyed by m.
std::vector<std::pair<int, TimeCoefficient>> hermite_form(IVExpansion& expn, int n, double T);

// n-th implied volatility correction. Symbolic mode returns the exact
// bivariate polynomial; numeric mode the value at (T, k).
BiPoly sigma_n_symbolic(IVExpansion& expn, int n);
double sigma_n_numeric(IVExpansion& expn, int n, double T, double k);

// Truncated expansion sigma0 + sigma_1 + ... + sigma_N evaluated at (T, k),
// tagged when (T, k) leaves the trust region, with a warning flag instead of
// clamping when the value is not positive.
struct VolQuote {
  double value = 0.0;
  bool extrapolated = false;
  bool negative_warning = false;
};
VolQuote sigma_bar_N(IVExpansion& expn, double T, double k);

// Exact Taylor coefficients of the implied volatility surface at the
// expansion base point: entries (q, m) with 2q + m <= N hold
// d_T^q d_k^m sigma at (t, x0). Symbolic mode only.
struct IVTaylorTable {
  int N = 0;
  double t = 0.0;
  Vec zbar;
  std::map<std::pair<int, int>, double> c;

  double entry(int q, int m) const;
};
IVTaylorTable iv_taylor_coeffs(IVExpansion& expn);

// Second order Taylor evaluation of the surface from a coefficient table.
double iv_taylor_eval(const IVTaylorTable& table, double T, double k);

// Closed-form at-the-money maturity slope of the implied volatility for the
// scalar local volatility model dS = eta(S) S dW:
//   (1/12) s^2 eta^2 eta'' - (1/24) s^2 eta eta'^2 + (1/12) s eta^2 eta'.
double lv_time_derivative(const LocalVolFn& eta, double s);

// Widely circulated but incorrect variant of the same slope, kept as a
// documented negative control for the golden tests:
//   (1/12) s^2 eta^2 eta'' - (4/3) s^2 eta eta'^2 + (1/12) s eta^2 eta'.
double durrleman_time_derivative(const LocalVolFn& eta, double s);

}  // namespace ivx

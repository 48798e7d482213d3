#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ivx/common.hpp"

namespace ivx {

// h_n(x) = e^{x^2} (d/dx)^n e^{-x^2}, by the three-term recurrence
// h_{n+1} = -2 x h_n - 2 n h_{n-1}. Equal to (-1)^n times the physicists'
// Hermite polynomial H_n(x).
double hermite(int n, double x);

// One admissible index sequence (j_1, ..., j_{m-h+1}) of a partial Bell
// polynomial together with its integer weight
// m! / (prod_i j_i! * prod_i (i!)^{j_i}).
struct BellTerm {
  long long coeff = 0;
  std::vector<int> j;
};

// All non-negative sequences with sum j_i = h and sum i*j_i = m.
// Exact integer arithmetic; m is capped at 12.
std::vector<BellTerm> bell_index_set(int m, int h);

// Partial exponential Bell polynomial B_{m,h}(z_1, ..., z_{m-h+1}).
double bell_partial(int m, int h, std::span<const double> z);

// Row n of the integer table driving the closed form of the higher
// sigma-derivatives of a call price over vega:
//   c_{n,n} = 1,
//   c_{n,n-2q} = (n-2q+1) c_{n-1,n-2q+1} + c_{n-1,n-2q-1}.
// Keyed by the second subscript n-2q for q = 0 .. floor(n/2), with the
// convention that n-2q >= 0 entries only are kept.
std::map<int, long long> vega_ratio_ccoeffs(int n);

// Bivariate polynomial in the centered log-strike K = k - x0 and the square
// root of time to maturity R = sqrt(tau). K powers are non-negative; R powers
// are signed integers, because intermediate volatility algebra produces
// negative and odd powers that must cancel in any final result.
class BiPoly {
 public:
  // (K power, R power) -> coefficient
  using Key = std::pair<int, int>;

  BiPoly() = default;

  static BiPoly constant(double c) { return monomial(c, 0, 0); }
  static BiPoly monomial(double c, int k_pow, int r_pow);

  bool empty() const { return terms_.empty(); }
  const std::map<Key, double>& terms() const { return terms_; }
  double coeff(int k_pow, int r_pow) const;
  void add_term(int k_pow, int r_pow, double c);

  double eval(double K, double R) const;
  double max_abs_coeff() const;

  // Drops terms smaller than rel_tol times the largest coefficient magnitude.
  BiPoly pruned(double rel_tol) const;

  // Derivatives on a regular polynomial (see bipoly_assert_regular).
  // d/dtau maps R^{2p} to p R^{2p-2}; d/dK lowers the K power.
  BiPoly d_tau() const;
  BiPoly d_k() const;

  BiPoly operator+(const BiPoly& o) const;
  BiPoly operator-(const BiPoly& o) const;
  BiPoly operator*(const BiPoly& o) const;
  BiPoly operator-() const;

 private:
  std::map<Key, double> terms_;
};

BiPoly bipoly_add(const BiPoly& a, const BiPoly& b);
BiPoly bipoly_mul(const BiPoly& a, const BiPoly& b);
BiPoly bipoly_scale(const BiPoly& a, double s);
BiPoly bipoly_pow(const BiPoly& a, int n);

// Checks that, relative to the largest coefficient, every surviving term has
// a non-negative even R power, then prunes the sub-tolerance remainder and
// returns the cleaned polynomial. Throws CancellationFailure listing the
// offending monomials otherwise.
BiPoly bipoly_assert_regular(const BiPoly& p, double rel_tol);

// h_n evaluated over any commutative ring element given as a BiPoly.
BiPoly hermite_bipoly(int n, const BiPoly& x);

}  // namespace ivx

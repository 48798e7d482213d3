#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "ivx/common.hpp"

namespace ivx {

// Scalar coefficient of an operator term. Numeric mode holds a plain value.
// Symbolic mode holds a polynomial in two time variables: u, the running
// integration variable s - t of the current nesting level, and v = T - t.
// Fully integrated results are u-free, hence plain polynomials in v.
class TimeCoefficient {
 public:
  enum class Mode { Numeric, Symbolic };

  TimeCoefficient() = default;

  static TimeCoefficient numeric(double x) {
    TimeCoefficient c;
    c.mode_ = Mode::Numeric;
    c.num_ = x;
    return c;
  }
  static TimeCoefficient symbolic_constant(double x) { return symbolic_u_monomial(x, 0); }
  static TimeCoefficient symbolic_u_monomial(double x, int u_pow);
  static TimeCoefficient symbolic_v_monomial(double x, int v_pow);

  Mode mode() const { return mode_; }
  bool is_zero() const;
  double value() const;  // Numeric mode only

  // Symbolic mode, u-free only: map from v power to coefficient.
  std::map<int, double> tau_poly() const;

  // Numeric mode returns the stored value; symbolic mode evaluates the u-free
  // polynomial at v = tau.
  double eval_tau(double tau) const;

  TimeCoefficient operator+(const TimeCoefficient& o) const;
  TimeCoefficient operator*(const TimeCoefficient& o) const;
  TimeCoefficient scaled(double s) const;

  // One nesting level of the iterated time integral: treats the current
  // polynomial as a function of the inner variable u' and returns
  // int_u^v p(u', v) du', a polynomial in (u, v). Symbolic mode only.
  TimeCoefficient integrated_u() const;

  // Evaluates at u = 0, i.e. keeps only u-free terms. Used after the
  // outermost integration level, whose lower limit is t itself.
  TimeCoefficient at_u_zero() const;

  const std::map<std::pair<int, int>, double>& uv_terms() const { return uv_; }

 private:
  Mode mode_ = Mode::Numeric;
  double num_ = 0.0;
  std::map<std::pair<int, int>, double> uv_;  // (u power, v power) -> coeff

  void require_symbolic() const;
  static void require_same_mode(const TimeCoefficient& a, const TimeCoefficient& b);
};

struct OpLimits {
  int max_monomial_degree = 4;    // cap on |gamma|
  int max_derivative_degree = 14; // cap on |alpha|
};

// Finite sum of terms  c(t) * (z - zbar)^gamma * d^alpha  kept in normal
// order, i.e. every monomial factor stands to the left of every derivative.
class NormalOrderedOperator {
 public:
  using Key = std::pair<MIdx, MIdx>;  // (gamma, alpha)

  explicit NormalOrderedOperator(int dim) : d_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ValidationError("operator dimension out of range");
  }

  static NormalOrderedOperator identity(int dim, TimeCoefficient::Mode mode);

  int dim() const { return d_; }
  bool empty() const { return terms_.empty(); }
  const std::map<Key, TimeCoefficient>& terms() const { return terms_; }

  void add_term(const MIdx& gamma, const MIdx& alpha, const TimeCoefficient& c);

  NormalOrderedOperator operator+(const NormalOrderedOperator& o) const;
  NormalOrderedOperator scaled(double s) const;
  NormalOrderedOperator integrated_u() const;
  NormalOrderedOperator at_u_zero() const;

 private:
  int d_;
  std::map<Key, TimeCoefficient> terms_;
};

// Composition A after B. Normal ordering re-emerges from the commutation rule
//   d^alpha (z - zbar)^gamma = sum_{mu <= min(alpha, gamma)}
//     binom(alpha, mu) gamma!/(gamma - mu)! (z - zbar)^{gamma - mu} d^{alpha - mu}.
// Throws OrderOverflow when a product term exceeds the configured caps and
// ValidationError when symbolic and numeric coefficients are mixed.
NormalOrderedOperator op_compose(const NormalOrderedOperator& A, const NormalOrderedOperator& B,
                                 const OpLimits& lim = {});

// Restriction to the expansion center: drops every term carrying a monomial
// factor or a derivative in a non-price direction, and keys the rest by the
// order j of the pure price derivative.
std::map<int, TimeCoefficient> op_reduce_at_center(const NormalOrderedOperator& A);

// Taylor data of a generator at one time point: raw derivatives
// D^beta a_{ij}(s, zbar) and D^beta a_i(s, zbar) keyed by beta.
struct GeneratorTaylorData {
  int d = 1;
  std::map<MIdx, Mat> daij;
  std::map<MIdx, Vec> dai;

  const Mat& aij(const MIdx& beta) const;
  const Vec& ai(const MIdx& beta) const;
};

// The degree-n slice of the expanded generator, with the frozen-coefficient
// Gaussian shift applied. Each monomial factor (z - zbar)^beta, |beta| = n,
// is replaced by prod_l X_l^{beta_l} where
//   X_l = (z_l - zbar_l) + m_l + sum_p C_{lp} d_p,
// and the result left-multiplies the second-order part
// (1/2) sum_ij D^beta a_ij / beta! d_ij plus the drift part
// sum_i D^beta a_i / beta! d_i.
NormalOrderedOperator op_from_taylor_generator(
    const GeneratorTaylorData& data, int n,
    const std::array<TimeCoefficient, kMaxDim>& shift_m,
    const std::array<std::array<TimeCoefficient, kMaxDim>, kMaxDim>& shift_C,
    TimeCoefficient::Mode mode, const OpLimits& lim = {});

}  // namespace ivx

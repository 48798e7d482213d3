#pragma once

#include <vector>

#include "ivx/models.hpp"
#include "ivx/opalgebra.hpp"

namespace ivx {

enum class ExpansionMode { Symbolic, Numeric };

// Everything fixed once per expansion: the model, the order N, the valuation
// time t, the expansion center zbar, and whether time integrals are carried
// as polynomials in tau = T - t (time-homogeneous models only) or evaluated
// by nested quadrature.
struct ExpansionContext {
  ModelSpec model;
  int N = 2;
  double t = 0.0;
  Vec zbar;
  ExpansionMode mode = ExpansionMode::Symbolic;
  OpLimits limits;

  // Trust region used by quote tagging further up the stack.
  double lambda_max = 5.0;
  double tau_max = 1.0;
};

// Validates and freezes an expansion configuration; zbar defaults to the
// model's cylinder center.
ExpansionContext make_expansion_context(const ModelSpec& model, int N,
                                        ExpansionMode mode = ExpansionMode::Symbolic,
                                        double t = 0.0, const Vec* zbar = nullptr);

// Level of the zero-order proxy: the square root of the time-averaged
// diffusion coefficient sqrt((1/(T-t)) int_t^T a_11(r, zbar) dr). Throws
// NonPositiveVariance when the average is not strictly positive.
double sigma0(const ExpansionContext& ctx, double T);

// The order-n correction operator: the sum over 1 <= h <= n and over index
// tuples (i_1, ..., i_h) with i_1 + ... + i_h = n of the iterated integrals
//   int_t^T ds_1 int_{s_1}^T ds_2 ... G_{i_1}(t, s_1) ... G_{i_h}(t, s_h),
// where G_i(t, s) is the degree-i generator slice shifted by the frozen
// Gaussian mean and covariance accumulated from t to s.
NormalOrderedOperator build_Ln(const ExpansionContext& ctx, int n, double T);

// Correction coefficients after restriction to the expansion center:
// fj[n][j] multiplies the j-th pure log-spot derivative of the zero-order
// price. Entry 0 is unused.
struct UnCoefficients {
  int N = 0;
  std::vector<std::map<int, TimeCoefficient>> fj;
  std::vector<std::string> notes;
};
UnCoefficients un_coefficients(const ExpansionContext& ctx, double T);

// N-th order price approximation at log strike k:
//   u_bar = u_bs(sigma0) + sum_{n<=N} sum_j fj[n][j] d_x^j u_bs(sigma0).
double price_bar_N(const ExpansionContext& ctx, double T, double k);

}  // namespace ivx

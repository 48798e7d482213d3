#pragma once

#include "ivx/common.hpp"

namespace ivx {

// Standard normal distribution function, evaluated through erfc so that deep
// tails keep full relative precision.
double normal_cdf(double d);

// Heat kernel (2 pi t)^{-1/2} exp(-z^2 / (2t)).
double gaussian_kernel(double t, double z);

// Log-coordinate call pricing context: unit notional, zero rates, log-spot x,
// log-strike k, volatility sigma > 0 and time to maturity tau > 0.
struct BSContext {
  double sigma = 0.0;
  double tau = 0.0;
  double x = 0.0;
  double k = 0.0;

  void validate() const;
  double total_var() const { return sigma * sigma * tau; }
  // w = x - k - sigma^2 tau / 2 is the center of the Gaussian in the vega
  // kernel; zeta = w / sqrt(2 sigma^2 tau) is its standardized version and
  // equals d_minus / sqrt(2).
  double w() const { return x - k - 0.5 * total_var(); }
  double zeta() const;
  double d_plus() const;
  double d_minus() const;
};

// Call price e^x N(d+) - e^k N(d-). Deep in or out of the money the value is
// assembled from the complementary tail so the extrinsic part keeps relative
// precision.
double bs_price(const BSContext& c);

// Zero-volatility limit (e^x - e^k)^+, total in both arguments.
double bs_intrinsic(double x, double k);

// dPrice/dsigma = e^k sigma tau Gamma_0(sigma^2 tau, w).
double bs_vega(const BSContext& c);

// Pure log-spot derivatives d_x^j of the call price, any j >= 0. Orders two
// and up collapse onto the Gaussian kernel:
//   d_x^j u = d_x u + e^k Gamma_0 sum_{i=0}^{j-2} (2V)^{-i/2} h_i(zeta).
double bs_dx_pow(const BSContext& c, int j);

// Mixed derivative d_x^{m_x} d_k^{m_k} of the call price, m_x + m_k <= 8.
// Strike derivatives reduce to spot derivatives through d_k = I - d_x.
double bs_xk_derivs(const BSContext& c, int m_x, int m_k);

// Ratio d_sigma^n u / d_sigma u in closed form, n >= 2. A polynomial in
// zeta, sigma, and sqrt(tau) with integer tables from vega_ratio_ccoeffs.
double bs_sigma_deriv_ratio(int n, const BSContext& c);

// Maturity and strike derivative d_tau^q d_k^{m_k} of the call price,
// q <= 3, m_k <= 6. Uses the heat equation d_tau = (sigma^2/2)(d_x^2 - d_x).
double bs_tau_deriv(const BSContext& c, int q, int m_k);

// Inverts bs_price in sigma by a bracketed Newton iteration. Throws
// OutOfArbitrageBounds when price is outside ((e^x - e^k)^+, e^x) and
// NoConvergence past 100 iterations.
double implied_vol(double price, double tau, double x, double k);

}  // namespace ivx

#include "ivx/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ivx/combinatorics.hpp"

namespace ivx {

double normal_cdf(double d) { return 0.5 * std::erfc(-d / std::numbers::sqrt2); }

double gaussian_kernel(double t, double z) {
  if (!(t > 0.0)) throw ValidationError("gaussian_kernel requires t > 0");
  return std::exp(-z * z / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

void BSContext::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  if (!std::isfinite(x) || !std::isfinite(k)) throw ValidationError("x and k must be finite");
}

double BSContext::zeta() const { return w() / std::sqrt(2.0 * total_var()); }

double BSContext::d_plus() const {
  double sq = sigma * std::sqrt(tau);
  return (x - k) / sq + 0.5 * sq;
}

double BSContext::d_minus() const {
  double sq = sigma * std::sqrt(tau);
  return (x - k) / sq - 0.5 * sq;
}

double bs_price(const BSContext& c) {
  c.validate();
  double dp = c.d_plus();
  double dm = c.d_minus();
  if (dm <= 0.0) return std::exp(c.x) * normal_cdf(dp) - std::exp(c.k) * normal_cdf(dm);
  // In the money: N(d) = 1 - N(-d) would lose the extrinsic value to
  // cancellation, so price off the complementary tails instead.
  return (std::exp(c.x) - std::exp(c.k)) + std::exp(c.k) * normal_cdf(-dm) -
         std::exp(c.x) * normal_cdf(-dp);
}

double bs_intrinsic(double x, double k) {
  if (!std::isfinite(x) || !std::isfinite(k)) throw ValidationError("x and k must be finite");
  return x > k ? std::exp(x) - std::exp(k) : 0.0;
}

double bs_vega(const BSContext& c) {
  c.validate();
  return std::exp(c.k) * c.sigma * c.tau * gaussian_kernel(c.total_var(), c.w());
}

double bs_dx_pow(const BSContext& c, int j) {
  c.validate();
  if (j < 0) throw ValidationError("negative derivative order");
  if (j > 16) throw ValidationError("log-spot derivative order capped at 16");
  if (j == 0) return bs_price(c);
  double dx1 = std::exp(c.x) * normal_cdf(c.d_plus());
  if (j == 1) return dx1;
  double V = c.total_var();
  double zeta = c.zeta();
  double g = std::exp(c.k) * gaussian_kernel(V, c.w());
  double scale = 1.0 / std::sqrt(2.0 * V);
  double sum = 0.0;
  for (int i = 0; i <= j - 2; ++i) sum += std::pow(scale, i) * hermite(i, zeta);
  return dx1 + g * sum;
}

double bs_xk_derivs(const BSContext& c, int m_x, int m_k) {
  if (m_x < 0 || m_k < 0) throw ValidationError("negative derivative order");
  if (m_x + m_k > 8) throw ValidationError("mixed derivative order capped at m_x + m_k = 8");
  // d_k u = u - d_x u pointwise, so d_k^{m_k} = (I - d_x)^{m_k} expanded
  // binomially over pure log-spot derivatives.
  double sum = 0.0;
  for (int i = 0; i <= m_k; ++i)
    sum += binomial(m_k, i) * (i % 2 == 0 ? 1.0 : -1.0) * bs_dx_pow(c, m_x + i);
  return sum;
}

double bs_sigma_deriv_ratio(int n, const BSContext& c) {
  c.validate();
  if (n < 2) throw ValidationError("sigma derivative ratio starts at order 2");
  auto crow = vega_ratio_ccoeffs(n);
  double zeta = c.zeta();
  double root2tau = std::sqrt(2.0 * c.tau);
  double total = 0.0;
  for (int q = 0; 2 * q <= n; ++q) {
    auto it = crow.find(n - 2 * q);
    if (it == crow.end()) continue;
    double outer = static_cast<double>(it->second) * std::pow(c.sigma, n - 2 * q - 1) *
                   std::pow(c.tau, n - q - 1);
    double inner = 0.0;
    for (int p = 0; p <= n - q - 1; ++p) {
      int m = p + n - q - 1;
      // (-1)^m h_m is the physicists' Hermite polynomial.
      double sign = (m % 2 == 0) ? 1.0 : -1.0;
      inner += binomial(n - q - 1, p) * std::pow(c.sigma * root2tau, -m) * sign *
               hermite(m, zeta);
    }
    total += outer * inner;
  }
  return total;
}

double bs_tau_deriv(const BSContext& c, int q, int m_k) {
  if (q < 0 || q > 3) throw ValidationError("maturity derivative order capped at 3");
  if (m_k < 0 || m_k > 6) throw ValidationError("strike derivative order capped at 6");
  // The price solves d_tau u = (sigma^2/2)(d_x^2 - d_x) u, so
  // d_tau^q d_k^{m_k} = (sigma^2/2)^q (d_x^2 - d_x)^q (I - d_x)^{m_k},
  // all expanded binomially over pure log-spot derivatives.
  double half_var = 0.5 * c.sigma * c.sigma;
  double total = 0.0;
  for (int i = 0; i <= q; ++i) {
    double heat_w = binomial(q, i) * ((q - i) % 2 == 0 ? 1.0 : -1.0);
    for (int l = 0; l <= m_k; ++l) {
      double strike_w = binomial(m_k, l) * (l % 2 == 0 ? 1.0 : -1.0);
      total += heat_w * strike_w * bs_dx_pow(c, q + i + l);
    }
  }
  return std::pow(half_var, q) * total;
}

double implied_vol(double price, double tau, double x, double k) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  if (!std::isfinite(price) || !std::isfinite(x) || !std::isfinite(k))
    throw ValidationError("implied_vol arguments must be finite");
  const double lower = bs_intrinsic(x, k);
  const double upper = std::exp(x);
  if (!(price > lower) || !(price < upper))
    throw OutOfArbitrageBounds("price outside the static no-arbitrage interval");

  double lo = 1e-10, hi = 10.0;
  auto f = [&](double s) { return bs_price(BSContext{s, tau, x, k}) - price; };
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0)
    throw NoConvergence("implied volatility falls outside the bracket [1e-10, 10]");

  double sigma = std::clamp(std::sqrt(2.0 * std::numbers::pi / tau) * (price - lower) /
                                std::max(std::exp(x), std::exp(k)),
                            lo * 2.0, hi * 0.5);
  const double tol_abs = 1e-14 * std::exp(x);
  for (int it = 0; it < 100; ++it) {
    BSContext c{sigma, tau, x, k};
    double diff = bs_price(c) - price;
    if (diff > 0.0)
      hi = sigma;
    else
      lo = sigma;
    double vega = bs_vega(c);
    double next = vega > 1e-300 ? sigma - diff / vega : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    double step = std::fabs(next - sigma);
    sigma = next;
    if (std::fabs(diff) <= tol_abs && step <= 1e-15 * std::max(sigma, 1e-6)) return sigma;
    if (hi - lo <= 1e-15 * std::max(hi, 1e-6)) return 0.5 * (lo + hi);
  }
  throw NoConvergence("implied volatility iteration cap reached");
}

}  // namespace ivx

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>

#include "ivx/models.hpp"

namespace ivx {

// Modified Bessel function of the first kind, scaled: I_nu(z) exp(-z).
// Power series below the switchover, large-argument asymptotic series above.
double bessel_i_scaled(double nu, double z);

// Constant elasticity of variance diffusion dS = sigma S^beta dW with
// absorption at zero, started at s, with time to maturity tau.
struct CEVDensityParams {
  double sigma = 0.0;
  double beta = 0.5;
  double tau = 0.0;
  double s = 1.0;

  void validate() const;
};

enum class CEVBranch { Plus, Minus };

// Transition semi-density at terminal level S > 0. Branch Plus carries the
// absorbed dynamics (a sub-probability for beta >= 1/2); branch Minus
// integrates to one for beta < 1/2.
double cev_semidensity(const CEVDensityParams& p, double S, CEVBranch branch);

// Integral int_0^inf S^moment Gamma(S) dS of the chosen branch.
double cev_branch_integral(const CEVDensityParams& p, CEVBranch branch, int moment);

// Call price E[(S_tau - K)^+] under the absorbed dynamics, by adaptive
// quadrature of the Plus branch against the payoff.
double cev_call_price(const CEVDensityParams& p, double K);

// Joint characteristic function E[exp(i xi X_u - eta Y_u)] of the log price
// and terminal variance. Throws BranchInstability when the complex power
// cannot be continued unambiguously.
struct HestonCF {
  double kappa = 0.0;
  double theta = 0.0;
  double delta = 1.0;
  double rho = 0.0;
  double y = 0.0;   // current variance
  double x = 0.0;   // current log price
  double u = 0.0;   // time horizon
  std::complex<double> xi;
  std::complex<double> eta;
};
std::complex<double> heston_cf(const HestonCF& cf);

// Call price by a damped Fourier inversion of the marginal log-price
// characteristic function; alpha is the damping exponent.
struct HestonParams {
  double kappa = 0.0;
  double theta = 0.0;
  double delta = 1.0;
  double rho = 0.0;
};
double heston_call_price(const HestonParams& hp, double s, double y, double tau, double K,
                         double alpha = 0.5);

// Monte Carlo call price with a full-truncation Euler scheme in original
// coordinates and a counter-based generator, so results are bit-identical
// for a fixed seed regardless of thread count. Returns (price, std error).
// steps <= 0 selects 400 steps per unit of time.
struct McResult {
  double price = 0.0;
  double std_error = 0.0;
};
McResult mc_price(const ModelSpec& model, double T, double K, long paths, int steps,
                  uint64_t seed, int threads = 0);

// Implied volatility of a reference price for the given model and method
// ("cev", "heston", or "mc").
double reference_iv(const ModelSpec& model, double T, double K, const std::string& method,
                    long mc_paths = 200000, uint64_t mc_seed = 7151);

}  // namespace ivx

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "ivx/common.hpp"
#include "ivx/opalgebra.hpp"

namespace ivx {

// Diffusion model in log-price coordinates z = (x, y_2, ..., y_d), where
// x = log s and the remaining components are untransformed volatility
// factors. The generator is (1/2) sum a_ij d_ij + sum a_i d_i.
struct ModelSpec {
  std::string name;
  int d = 1;
  bool time_homogeneous = true;

  // Coefficients a_ij (symmetric) and a_i at (t, z) in log coordinates.
  std::function<void(double t, const Vec& z, Mat& aij, Vec& ai)> log_coeffs;

  // Optional closed-form spatial derivatives D^beta of the log coefficients.
  // Returns false when no closed form exists for this beta, in which case a
  // finite-difference fallback is used.
  std::function<bool(double t, const Vec& z, const MIdx& beta, Mat& daij, Vec& dai)> log_derivs;

  // Covariance and drift of the original-coordinate state (s, y_2, ..., y_d),
  // used by the Monte Carlo pricer.
  std::function<void(double t, const Vec& state, Mat& cov, Vec& drift)> orig_cov_drift;

  Vec state0;            // initial state in original coordinates
  Vec state_floor;       // componentwise truncation floor for simulation
  Vec z0;                // cylinder center in log coordinates
  double cyl_radius = 0.5;
  double validity_T = 4.0;  // time horizon of the declared cylinder

  // Declared ellipticity witness on the cylinder:
  // eps M |xi|^2 <= <a(t,z) xi, xi> <= M |xi|^2.
  double ellipt_eps = 0.0;
  double ellipt_M = 0.0;

  std::map<std::string, double> params;
};

// Spatial Taylor data of the generator coefficients at (t, zbar): raw
// derivatives D^beta a_ij and D^beta a_i for all |beta| <= N.
struct TaylorTensor {
  int d = 1;
  int N = 0;
  double t = 0.0;
  Vec zbar;
  GeneratorTaylorData data;
};

// Wraps original-coordinate coefficients abar into log-price coordinates:
//   a_11 = e^{-2x} abar_11,  a_1 = -a_11 / 2,
//   a_1i = e^{-x} abar_1i,   a_ij = abar_ij,  a_i = abar_i  (i, j >= 2).
std::function<void(double, const Vec&, Mat&, Vec&)> log_transform(
    std::function<void(double, const Vec&, Mat&, Vec&)> orig_coeffs);

// Assembles every D^beta a entry with |beta| <= N at (t, zbar), preferring
// closed forms and falling back to Richardson finite differences. Throws
// DerivativeUnavailable when two step sizes disagree beyond 1e-6 relative and
// ValidationError when zbar leaves the declared cylinder.
TaylorTensor taylor_tensor(const ModelSpec& model, double t, const Vec& zbar, int N);

// Samples the cylinder and checks the declared ellipticity witness; throws
// ValidationError on a violation. Called by every builtin constructor.
void validate_model(const ModelSpec& model, int samples = 200, unsigned rng_seed = 20260816);

// dS = sigma S^beta dW in original coordinates, beta in (0, 1], started at s0.
ModelSpec builtin_cev(double sigma, double beta, double s0 = 1.0);

// dS = sqrt(Y) S dW1, dY = kappa (theta - Y) dt + delta sqrt(Y) dW2,
// d<W1,W2> = rho dt, started at (s0, y0); y0 defaults to theta.
ModelSpec builtin_heston(double kappa, double theta, double delta, double rho, double s0 = 1.0,
                         std::optional<double> y0 = std::nullopt);

// Scalar local volatility dS = eta(S) S dW with user-supplied value and two
// derivative callbacks; higher spatial derivatives fall back to finite
// differences.
struct LocalVolFn {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};
ModelSpec builtin_lv(const LocalVolFn& eta, double s0 = 1.0, const std::string& name = "lv");

// Generic two-factor model from original-coordinate coefficient callbacks;
// all spatial derivatives are taken numerically.
ModelSpec builtin_lsv(std::function<void(double, const Vec&, Mat&, Vec&)> orig_coeffs,
                      const Vec& state0, double ellipt_eps, double ellipt_M,
                      double cyl_radius = 0.25, const std::string& name = "lsv");

}  // namespace ivx

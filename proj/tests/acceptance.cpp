// Acceptance gate for the implied volatility expansion engine. Each criterion
// prints exactly one PASS/FAIL line (indented detail lines follow where they
// help diagnose a failure) and the process exit code is the number of failed
// criteria. Runtime budgets are part of the criterion where one is stated.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ivx/blackscholes.hpp"
#include "ivx/combinatorics.hpp"
#include "ivx/errors.hpp"
#include "ivx/harness.hpp"
#include "ivx/iv_expansion.hpp"
#include "ivx/models.hpp"
#include "ivx/opalgebra.hpp"
#include "ivx/price_expansion.hpp"
#include "ivx/reference_pricers.hpp"

namespace {

using ivx::BiPoly;
using ivx::BSContext;
using ivx::ExpansionContext;
using ivx::ExpansionMode;
using ivx::IVExpansion;
using ivx::MIdx;
using ivx::ModelSpec;
using ivx::NormalOrderedOperator;
using ivx::TimeCoefficient;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

struct Criterion {
  bool ok = true;
  std::vector<std::string> lines;

  void info(const std::string& s) { lines.push_back(s); }
  void fail(const std::string& s) {
    ok = false;
    lines.push_back("FAIL: " + s);
  }
  void expect(bool cond, const std::string& what) {
    if (!cond) fail(what);
  }
};

int run_criterion(int idx, const char* label, double limit_s,
                  const std::function<void(Criterion&)>& body) {
  Criterion c;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.lines.push_back(fmt("FAIL: unexpected exception: %s", e.what()));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && secs > limit_s)
    c.expect(false, fmt("runtime %.1fs exceeded the %.0fs budget", secs, limit_s));
  if (limit_s > 0.0)
    std::printf("[%s] criterion %d: %s (%.2fs, budget %.0fs)\n", c.ok ? "PASS" : "FAIL", idx, label,
                secs, limit_s);
  else
    std::printf("[%s] criterion %d: %s (%.2fs)\n", c.ok ? "PASS" : "FAIL", idx, label, secs);
  for (const auto& l : c.lines) std::printf("    %s\n", l.c_str());
  std::fflush(stdout);
  return c.ok ? 0 : 1;
}

// The exact maturity-slope entry for elasticity beta, two independent forms.
double elasticity_slope_poly(double beta) {
  double b1 = beta - 1.0;
  return b1 * (beta - 2.0) / 12.0 - b1 * b1 / 24.0 + b1 / 12.0;
}

double cev_taylor_entry(double beta, int q, int m) {
  ModelSpec model = ivx::builtin_cev(1.0, beta, 1.0);
  ExpansionContext ctx = ivx::make_expansion_context(model, 2);
  IVExpansion expn = ivx::make_iv_expansion(ctx);
  return ivx::iv_taylor_coeffs(expn).entry(q, m);
}

ivx::LocalVolFn power_lv(double beta) {
  ivx::LocalVolFn eta;
  eta.value = [beta](double s) { return std::pow(s, beta - 1.0); };
  eta.d1 = [beta](double s) { return (beta - 1.0) * std::pow(s, beta - 2.0); };
  eta.d2 = [beta](double s) { return (beta - 1.0) * (beta - 2.0) * std::pow(s, beta - 3.0); };
  return eta;
}

ivx::LocalVolFn displaced_lv(double sig0, double shift) {
  ivx::LocalVolFn eta;
  eta.value = [=](double s) { return sig0 * (s + shift) / s; };
  eta.d1 = [=](double s) { return -sig0 * shift / (s * s); };
  eta.d2 = [=](double s) { return 2.0 * sig0 * shift / (s * s * s); };
  return eta;
}

// Fourth order central difference via one Richardson step.
double richardson(const std::function<double(double)>& g, double v, double h) {
  auto cd = [&](double hh) { return (g(v + hh) - g(v - hh)) / (2.0 * hh); };
  return (4.0 * cd(h / 2.0) - cd(h)) / 3.0;
}

bool close_rel(double a, double b, double rel, double floor_abs) {
  return std::abs(a - b) <= rel * (std::abs(a) + std::abs(b)) + floor_abs;
}

// Worst-offender accumulator for the finite difference sweeps.
struct FdTally {
  int checked = 0;
  int bad = 0;
  double worst = 0.0;
  std::string worst_desc;

  void record(bool good, double gap_measure, const std::string& desc) {
    ++checked;
    if (good) return;
    ++bad;
    if (gap_measure > worst) {
      worst = gap_measure;
      worst_desc = desc;
    }
  }
};

// Coefficient rows of e^{z^2} d^n e^{-z^2} from the defining recurrence
// p_{n+1} = p_n' - 2 z p_n, used by the c-table reconstruction oracle.
std::vector<std::vector<double>> hermite_coeff_rows(int n_max) {
  std::vector<std::vector<double>> rows;
  rows.push_back({1.0});
  for (int n = 0; n < n_max; ++n) {
    const auto& p = rows.back();
    std::vector<double> next(p.size() + 1, 0.0);
    for (size_t i = 1; i < p.size(); ++i) next[i - 1] += static_cast<double>(i) * p[i];
    for (size_t i = 0; i < p.size(); ++i) next[i + 1] -= 2.0 * p[i];
    rows.push_back(std::move(next));
  }
  return rows;
}

// Dense polynomial in (zeta, S, a, b) with S = 1/sigma, a = (x-k)/sqrt(2 tau),
// b = sqrt(tau/8) and zeta = a S - b / S treated as an independent variable
// whose sigma-derivative is wired into p4_dsigma.
struct Poly4 {
  std::map<std::array<int, 4>, double> t;

  void add(std::array<int, 4> key, double c) {
    if (c == 0.0) return;
    double& slot = t[key];
    slot += c;
    if (slot == 0.0) t.erase(key);
  }
};

Poly4 p4_mul(const Poly4& x, const Poly4& y) {
  Poly4 out;
  for (const auto& [kx, cx] : x.t)
    for (const auto& [ky, cy] : y.t)
      out.add({kx[0] + ky[0], kx[1] + ky[1], kx[2] + ky[2], kx[3] + ky[3]}, cx * cy);
  return out;
}

Poly4 p4_add(const Poly4& x, const Poly4& y) {
  Poly4 out = x;
  for (const auto& [k, c] : y.t) out.add(k, c);
  return out;
}

Poly4 p4_dsigma(const Poly4& x) {
  Poly4 out;
  for (const auto& [k, c] : x.t) {
    if (k[0] > 0) {
      out.add({k[0] - 1, k[1] + 2, k[2] + 1, k[3]}, -c * k[0]);
      out.add({k[0] - 1, k[1], k[2], k[3] + 1}, -c * k[0]);
    }
    if (k[1] > 0) out.add({k[0], k[1] + 1, k[2], k[3]}, -c * k[1]);
  }
  return out;
}

// Q_n with d^n u / d sigma^n = Q_n * vega, from Q_1 = 1 and
// Q_{n+1} = dQ_n/dsigma + Q_n * 2 zeta (a S^2 + b).
Poly4 sigma_ratio_oracle(int n) {
  Poly4 q;
  q.add({0, 0, 0, 0}, 1.0);
  Poly4 factor;
  factor.add({1, 2, 1, 0}, 2.0);
  factor.add({1, 0, 0, 1}, 2.0);
  for (int i = 1; i < n; ++i) q = p4_add(p4_dsigma(q), p4_mul(q, factor));
  return q;
}

// Eliminates a via a = zeta/S + b/S^2, moving the oracle into the
// (zeta, S, b) coordinates the c-table expansion is written in.
Poly4 p4_subst_a(const Poly4& x) {
  Poly4 out;
  for (const auto& [k, c] : x.t) {
    int i = k[2];
    for (int j = 0; j <= i; ++j) {
      double w = c * static_cast<double>(ivx::binomial(i, j));
      out.add({k[0] + (i - j), k[1] - (i + j), 0, k[3] + j}, w);
    }
  }
  return out;
}

// Oracle for operator composition: test functions p(z) exp(-|z|^2/2) with
// polynomial p, closed under d_i (p G) = (d_i p - z_i p) G.
using PolyN = std::map<std::array<int, 3>, double>;

void poly_acc(PolyN& p, std::array<int, 3> e, double c) {
  if (c == 0.0) return;
  double& slot = p[e];
  slot += c;
  if (slot == 0.0) p.erase(e);
}

PolyN poly_deriv(const PolyN& p, int i) {
  PolyN out;
  for (const auto& [e, c] : p) {
    if (e[i] == 0) continue;
    auto f = e;
    f[i] -= 1;
    poly_acc(out, f, c * e[i]);
  }
  return out;
}

PolyN poly_mul_z(const PolyN& p, int i) {
  PolyN out;
  for (const auto& [e, c] : p) {
    auto f = e;
    f[i] += 1;
    poly_acc(out, f, c);
  }
  return out;
}

PolyN poly_sub(const PolyN& a, const PolyN& b) {
  PolyN out = a;
  for (const auto& [e, c] : b) poly_acc(out, e, -c);
  return out;
}

double poly_eval_n(const PolyN& p, const std::array<double, 3>& z) {
  double acc = 0.0;
  for (const auto& [e, c] : p) {
    double term = c;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < e[i]; ++j) term *= z[i];
    acc += term;
  }
  return acc;
}

PolyN apply_term(const MIdx& gamma, const MIdx& alpha, double c, const PolyN& p) {
  PolyN q = p;
  for (int i = 0; i < 3; ++i)
    for (int rep = 0; rep < alpha[i]; ++rep) q = poly_sub(poly_deriv(q, i), poly_mul_z(q, i));
  for (int i = 0; i < 3; ++i)
    for (int rep = 0; rep < gamma[i]; ++rep) q = poly_mul_z(q, i);
  PolyN out;
  for (const auto& [e, v] : q) poly_acc(out, e, c * v);
  return out;
}

PolyN apply_op(const NormalOrderedOperator& op, const PolyN& p) {
  PolyN out;
  for (const auto& [key, coeff] : op.terms()) {
    PolyN piece = apply_term(key.first, key.second, coeff.value(), p);
    for (const auto& [e, v] : piece) poly_acc(out, e, v);
  }
  return out;
}

NormalOrderedOperator random_op(std::mt19937& rng, int dim, int nterms) {
  std::uniform_int_distribution<int> deg(0, 2);
  std::uniform_real_distribution<double> cs(-1.5, 1.5);
  NormalOrderedOperator op(dim);
  for (int t = 0; t < nterms; ++t) {
    MIdx gamma = MIdx::zero();
    MIdx alpha = MIdx::zero();
    for (int i = 0; i < dim; ++i) {
      gamma.bump(i, deg(rng) == 2 ? 1 : 0);
      alpha.bump(i, deg(rng));
    }
    op.add_term(gamma, alpha, TimeCoefficient::numeric(cs(rng)));
  }
  return op;
}

PolyN random_poly(std::mt19937& rng, int dim) {
  std::uniform_int_distribution<int> deg(0, 2);
  std::uniform_real_distribution<double> cs(-1.0, 1.0);
  PolyN p;
  for (int t = 0; t < 4; ++t) {
    std::array<int, 3> e = {0, 0, 0};
    for (int i = 0; i < dim; ++i) e[i] = deg(rng);
    poly_acc(p, e, cs(rng));
  }
  if (p.empty()) poly_acc(p, {0, 0, 0}, 1.0);
  return p;
}

void criterion1(Criterion& c) {
  const std::array<double, 9> pinned = {0.03375,    0.0266667,  0.0204167,
                                        0.015,      0.0104167,  0.00666667,
                                        0.00375,    0.00166667, 0.000416667};
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) {
    double beta = 0.1 * (i + 1);
    double got = cev_taylor_entry(beta, 1, 0);
    double gap = std::abs(got - pinned[i]);
    worst = std::max(worst, gap);
    c.expect(gap <= 1e-6,
             fmt("beta %.1f: entry(1,0) = %.10f, pinned %.10f, gap %.2e", beta, got, pinned[i], gap));
  }
  c.info(fmt("largest gap to the pinned column: %.2e (tolerance 1e-6)", worst));
}

void criterion2(Criterion& c) {
  for (int i = 0; i < 9; ++i) {
    double beta = 0.1 * (i + 1);
    double entry = cev_taylor_entry(beta, 1, 0);
    double lv = ivx::lv_time_derivative(power_lv(beta), 1.0);
    double poly = elasticity_slope_poly(beta);
    c.expect(std::abs(entry - lv) <= 1e-12,
             fmt("beta %.1f: expansion %.15f vs local-vol formula %.15f", beta, entry, lv));
    c.expect(std::abs(lv - poly) <= 1e-13,
             fmt("beta %.1f: local-vol formula %.15f vs literal polynomial %.15f", beta, lv, poly));
  }
}

void criterion3(Criterion& c) {
  auto rows = ivx::run_table1();
  c.expect(rows.size() == 9, fmt("expected 9 rows, got %zu", rows.size()));
  double worst = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    // Edge elasticities get the tighter budget quoted relative to the unit
    // volatility scale of the benchmark table.
    double tol = (i == 0 || i >= 7) ? 3e-4 : 5e-4;
    double gap = std::abs(rows[i].numerical - rows[i].taylor);
    worst = std::max(worst, gap);
    c.expect(gap <= tol, fmt("beta %.1f: numerical %.7f vs taylor %.7f, gap %.2e > %.0e",
                             rows[i].beta, rows[i].numerical, rows[i].taylor, gap, tol));
  }
  c.info(fmt("largest |numerical - taylor| gap: %.2e", worst));
}

void criterion4(Criterion& c) {
  struct ModelDef {
    const char* name;
    std::map<std::string, double> params;
  };
  const std::vector<ModelDef> defs = {
      {"cev", {{"sigma", 1.0}, {"beta", 0.5}}},
      {"heston", {{"kappa", 1.0}, {"theta", 0.04}, {"delta", 1.0}, {"rho", -0.5}}},
  };
  for (const auto& def : defs) {
    for (int N : {1, 2}) {
      for (int m : {0, 1}) {
        for (double lambda : {0.0, 1.0}) {
          ivx::ConvergenceStudySpec spec;
          spec.model_name = def.name;
          spec.params = def.params;
          spec.N = N;
          spec.q = 0;
          spec.m = m;
          spec.lambda = lambda;
          // Grids live in the tau = 0.1 * 2^-p family. Each window has to sit
          // inside the study's asymptotic regime while dodging isolated zeros
          // of the signed error, where a log-log fit of |error| breaks down:
          // the ATM N=2 Heston error changes sign near tau = 4.5e-3 on its
          // way to a superconvergent tau^2 decay, and the N=1 Heston error on
          // the lambda=1 ray has a near-cancellation zero at tau = 3.9e-4.
          bool heston_model = std::string(def.name) == "heston";
          int start_p = 2;
          if (heston_model && N == 2 && m == 0 && lambda == 0.0) start_p = 5;
          if (heston_model && N == 1 && m == 0 && lambda == 1.0) start_p = 0;
          spec.tau0 = 0.1 * std::pow(2.0, -start_p);
          spec.levels = 7;
          ivx::OrderFitReport rep = ivx::run_convergence(spec);
          bool ok = rep.pass || rep.exact_model;
          c.info(fmt("%-6s N=%d q=0 m=%d lambda=%.0f: predicted %.2f slope %6.3f r2 %.4f %s",
                     def.name, N, m, lambda, rep.predicted, rep.slope, rep.r2,
                     rep.exact_model ? "exact" : (rep.pass ? "pass" : "FAIL")));
          if (!ok) c.ok = false;
        }
      }
    }
  }
}

void criterion5(Criterion& c) {
  // Zero-order limit: Richardson extrapolation of the ATM reference implied
  // volatility to tau = 0 recovers the diffusion coefficient at the center.
  ModelSpec cev = ivx::builtin_cev(1.0, 0.5, 1.0);
  double iv02 = ivx::reference_iv(cev, 0.02, 1.0, "cev");
  double iv04 = ivx::reference_iv(cev, 0.04, 1.0, "cev");
  double cev_limit = 2.0 * iv02 - iv04;
  c.expect(std::abs(cev_limit - 1.0) <= 1e-3,
           fmt("cev ATM limit %.6f vs sqrt(a11) = 1.0", cev_limit));
  c.info(fmt("cev extrapolated ATM IV %.6f (target 1.0)", cev_limit));

  const double sig0 = 0.2, shift = 0.1;
  // The displaced model has a closed form: the shifted spot is lognormal, so
  // the exact call price is a Black-Scholes price on spot+shift, strike+shift.
  auto dlv_iv = [&](double tau) {
    BSContext bc{sig0, tau, std::log(1.0 + shift), std::log(1.0 + shift)};
    double price = ivx::bs_price(bc);
    return ivx::implied_vol(price, tau, 0.0, 0.0);
  };
  double dlv_limit = 2.0 * dlv_iv(0.02) - dlv_iv(0.04);
  double dlv_target = sig0 * (1.0 + shift);
  c.expect(std::abs(dlv_limit - dlv_target) <= 1e-3,
           fmt("displaced-lv ATM limit %.6f vs %.6f", dlv_limit, dlv_target));
  c.info(fmt("displaced-lv extrapolated ATM IV %.6f (target %.2f)", dlv_limit, dlv_target));

  // Strike slope: the (0,1) Taylor entry is half the log-coordinate slope of
  // the local volatility, checked symbolically at 1e-10.
  for (double beta : {0.3, 0.5, 0.8}) {
    double entry = cev_taylor_entry(beta, 0, 1);
    double want = 0.5 * (beta - 1.0);
    c.expect(std::abs(entry - want) <= 1e-10,
             fmt("cev beta %.1f: entry(0,1) %.12f vs half slope %.12f", beta, entry, want));
  }
  ModelSpec dlv = ivx::builtin_lv(displaced_lv(sig0, shift), 1.0, "dlv");
  ExpansionContext ctx = ivx::make_expansion_context(dlv, 2);
  IVExpansion expn = ivx::make_iv_expansion(ctx);
  double entry = ivx::iv_taylor_coeffs(expn).entry(0, 1);
  double want = -0.5 * sig0 * shift;
  c.expect(std::abs(entry - want) <= 1e-10,
           fmt("displaced-lv: entry(0,1) %.12f vs half slope %.12f", entry, want));
}

void criterion6(Criterion& c) {
  std::mt19937 rng(20260816);
  std::uniform_real_distribution<double> us(0.05, 1.5), ut(0.05, 3.0), ux(-0.5, 0.5),
      usym(-1.0, 1.0);
  FdTally ratio_tally, xk_tally, tau_tally;
  int rt_bad = 0;
  double rt_worst = 0.0;

  for (int it = 0; it < 200; ++it) {
    double sigma = us(rng), tau = ut(rng), x = ux(rng);
    double k = x + std::min(1.0, 2.0 * sigma * std::sqrt(tau)) * usym(rng);
    BSContext c0{sigma, tau, x, k};

    double S = 1.0 / sigma;
    double A = (x - k) / std::sqrt(2.0 * tau);
    double B = std::sqrt(tau / 8.0);
    double zeta = A * S - B / S;

    // Step sizes target |h * local log-derivative| ~ 0.04 so the Richardson
    // truncation error sits near 1e-7 while cancellation stays harmless. The
    // scale estimates deliberately overshoot; only an undershoot would hurt.
    double scale_sigma = 3.0 * (2.0 * (std::abs(zeta) + 1.0) * (std::abs(A) * S * S + B) +
                                8.0 * S + 1.0);
    double h_sigma = std::min(0.04 / scale_sigma, 0.3 * sigma);
    double scale_xk = 3.0 * ((std::abs(zeta) + 8.0) * (1.0 / (sigma * std::sqrt(tau)) + 1.0) + 1.0);
    double h_xk = 0.04 / scale_xk;
    double scale_tau = 3.0 * ((zeta * zeta + 8.0) * (1.0 / tau + 1.0) + 1.0);
    double h_tau = std::min(0.04 / scale_tau, 0.3 * tau);

    for (int n = 2; n <= 4; ++n) {
      // The ratio table starts at order two; the chain base is vega itself.
      auto g = [&](double sg) {
        BSContext cc{sg, tau, x, k};
        if (n == 2) return ivx::bs_vega(cc);
        return ivx::bs_sigma_deriv_ratio(n - 1, cc) * ivx::bs_vega(cc);
      };
      double fd = richardson(g, sigma, h_sigma);
      double val = ivx::bs_sigma_deriv_ratio(n, c0) * ivx::bs_vega(c0);
      ratio_tally.record(close_rel(val, fd, 1e-6, 1e-12), std::abs(val - fd),
                         fmt("sigma deriv n=%d at s=%.3f t=%.3f x-k=%.4f: %.6e vs fd %.6e", n,
                             sigma, tau, x - k, val, fd));
    }

    auto xk_lower = [&](const BSContext& cc, int mx, int mk) {
      if (mx == 0 && mk == 0) return ivx::bs_price(cc);
      return ivx::bs_xk_derivs(cc, mx, mk);
    };
    for (int total = 1; total <= 4; ++total) {
      for (int mx = 0; mx <= total; ++mx) {
        int mk = total - mx;
        double val = ivx::bs_xk_derivs(c0, mx, mk);
        double fd;
        if (mx >= 1)
          fd = richardson(
              [&](double xx) {
                BSContext cc{sigma, tau, xx, k};
                return xk_lower(cc, mx - 1, mk);
              },
              x, h_xk);
        else
          fd = richardson(
              [&](double kk) {
                BSContext cc{sigma, tau, x, kk};
                return xk_lower(cc, 0, mk - 1);
              },
              k, h_xk);
        xk_tally.record(close_rel(val, fd, 1e-6, 1e-12), std::abs(val - fd),
                        fmt("d^%d_x d^%d_k at s=%.3f t=%.3f x-k=%.4f: %.6e vs fd %.6e", mx, mk,
                            sigma, tau, x - k, val, fd));
      }
    }

    for (int mk = 0; mk <= 2; ++mk) {
      double v1 = ivx::bs_tau_deriv(c0, 1, mk);
      double fd1 = richardson(
          [&](double tt) {
            BSContext cc{sigma, tt, x, k};
            return mk == 0 ? ivx::bs_price(cc) : ivx::bs_xk_derivs(cc, 0, mk);
          },
          tau, h_tau);
      tau_tally.record(close_rel(v1, fd1, 1e-6, 1e-12), std::abs(v1 - fd1),
                       fmt("d_tau d^%d_k at s=%.3f t=%.3f x-k=%.4f: %.6e vs fd %.6e", mk, sigma,
                           tau, x - k, v1, fd1));
      double v2 = ivx::bs_tau_deriv(c0, 2, mk);
      double fd2 = richardson(
          [&](double tt) {
            BSContext cc{sigma, tt, x, k};
            return ivx::bs_tau_deriv(cc, 1, mk);
          },
          tau, h_tau);
      tau_tally.record(close_rel(v2, fd2, 1e-6, 1e-12), std::abs(v2 - fd2),
                       fmt("d^2_tau d^%d_k at s=%.3f t=%.3f x-k=%.4f: %.6e vs fd %.6e", mk, sigma,
                           tau, x - k, v2, fd2));
    }

    double iv = ivx::implied_vol(ivx::bs_price(c0), tau, x, k);
    double rt_gap = std::abs(iv - sigma) / std::max(1.0, sigma);
    if (rt_gap > 1e-12) ++rt_bad;
    rt_worst = std::max(rt_worst, rt_gap);
  }

  c.expect(ratio_tally.bad == 0, fmt("%d/%d sigma-derivative checks off: worst %s",
                                     ratio_tally.bad, ratio_tally.checked,
                                     ratio_tally.worst_desc.c_str()));
  c.expect(xk_tally.bad == 0, fmt("%d/%d x/k-derivative checks off: worst %s", xk_tally.bad,
                                  xk_tally.checked, xk_tally.worst_desc.c_str()));
  c.expect(tau_tally.bad == 0, fmt("%d/%d tau-derivative checks off: worst %s", tau_tally.bad,
                                   tau_tally.checked, tau_tally.worst_desc.c_str()));
  c.expect(rt_bad == 0, fmt("%d/200 round trips above 1e-12 (worst %.2e)", rt_bad, rt_worst));
  c.info(fmt("fd checks: %d sigma, %d x/k, %d tau; worst round trip %.2e",
             ratio_tally.checked, xk_tally.checked, tau_tally.checked, rt_worst));

  // Kernel domination bound behind the vega estimates: moments of order n
  // against the doubled-time kernel, and static arbitrage bounds.
  std::uniform_real_distribution<double> uz(-5.0, 5.0), utt(0.01, 4.0);
  std::uniform_int_distribution<int> un(0, 6);
  int kernel_bad = 0;
  for (int it = 0; it < 10000; ++it) {
    double z = uz(rng), t = utt(rng);
    int n = un(rng);
    double lhs = std::pow(std::abs(z) / std::sqrt(t), n) * ivx::gaussian_kernel(t, z);
    double rhs = std::sqrt(2.0) * std::pow(2.0 * n / std::exp(0.5), 0.5 * n) *
                 ivx::gaussian_kernel(2.0 * t, z);
    if (!(lhs <= rhs * (1.0 + 1e-12))) ++kernel_bad;
  }
  c.expect(kernel_bad == 0, fmt("%d/10000 kernel bound violations", kernel_bad));

  std::uniform_real_distribution<double> uxx(-1.0, 1.0), uspread(-3.0, 3.0), utb(0.01, 3.0);
  int arb_bad = 0;
  for (int it = 0; it < 10000; ++it) {
    double sigma = us(rng), tau = utb(rng), x = uxx(rng);
    double k = x - uspread(rng);
    BSContext cc{sigma, tau, x, k};
    double p = ivx::bs_price(cc);
    double intr = ivx::bs_intrinsic(x, k);
    double cap = std::exp(x);
    bool good = p >= intr - 5e-15 * cap && p <= cap * (1.0 + 5e-15);
    // Away from the degenerate tails the bounds must be strict.
    if (std::abs(cc.zeta()) <= 4.0) good = good && p > intr && p < cap;
    if (!good) ++arb_bad;
  }
  c.expect(arb_bad == 0, fmt("%d/10000 arbitrage bound violations", arb_bad));
}

void criterion7(Criterion& c) {
  // Bell sums over block counts reproduce the Bell numbers.
  const std::array<double, 8> bells = {1, 2, 5, 15, 52, 203, 877, 4140};
  for (int m = 1; m <= 8; ++m) {
    std::vector<double> ones(static_cast<size_t>(m), 1.0);
    double sum = 0.0;
    for (int h = 1; h <= m; ++h) sum += ivx::bell_partial(m, h, ones);
    c.expect(std::abs(sum - bells[m - 1]) <= 1e-9 * bells[m - 1],
             fmt("bell sum m=%d: %.6f vs %.0f", m, sum, bells[m - 1]));
  }

  // The closed-form c-table against symbolic differentiation of the
  // vega-ratio recursion.
  auto rows = hermite_coeff_rows(12);
  for (int n = 2; n <= 6; ++n) {
    Poly4 expect = p4_subst_a(sigma_ratio_oracle(n));
    Poly4 got;
    auto ctable = ivx::vega_ratio_ccoeffs(n);
    for (const auto& [k_sub, c_nk] : ctable) {
      int q = (n - k_sub) / 2;
      int top = n - q - 1;
      for (int p = 0; p <= top; ++p) {
        int m = p + top;
        double w = static_cast<double>(c_nk) * static_cast<double>(ivx::binomial(top, p)) *
                   std::pow(2.0, top - 2 * p) * ((m % 2 == 0) ? 1.0 : -1.0);
        for (size_t i = 0; i < rows[m].size(); ++i) {
          if (rows[m][i] == 0.0) continue;
          got.add({static_cast<int>(i), p + q, 0, top - p}, w * rows[m][i]);
        }
      }
    }
    double scale = 0.0;
    for (const auto& [k, cc] : expect.t) scale = std::max(scale, std::abs(cc));
    bool same = true;
    for (const auto& [k, cc] : expect.t) {
      auto it = got.t.find(k);
      double gv = it == got.t.end() ? 0.0 : it->second;
      if (std::abs(gv - cc) > 1e-12 * scale) same = false;
    }
    for (const auto& [k, cc] : got.t) {
      if (expect.t.count(k)) continue;
      if (std::abs(cc) > 1e-12 * scale) same = false;
    }
    c.expect(same, fmt("c-table reconstruction disagrees with the symbolic recursion at n=%d", n));
  }

  // Composition of normal ordered operators against sequential application to
  // Gaussian-carried polynomial test functions.
  std::mt19937 rng(515151);
  std::uniform_real_distribution<double> zs(-1.0, 1.0);
  int comp_bad = 0, comp_checked = 0;
  for (int dim : {1, 2, 3}) {
    for (int rep = 0; rep < 6; ++rep) {
      NormalOrderedOperator A = random_op(rng, dim, 3);
      NormalOrderedOperator B = random_op(rng, dim, 3);
      NormalOrderedOperator AB = ivx::op_compose(A, B);
      PolyN p = random_poly(rng, dim);
      PolyN seq = apply_op(A, apply_op(B, p));
      PolyN once = apply_op(AB, p);
      for (int pt = 0; pt < 20; ++pt) {
        std::array<double, 3> z = {zs(rng), zs(rng), zs(rng)};
        double want = poly_eval_n(seq, z);
        double got = poly_eval_n(once, z);
        ++comp_checked;
        if (std::abs(got - want) > 1e-9 * std::max(1.0, std::abs(want))) ++comp_bad;
      }
    }
  }
  c.expect(comp_bad == 0,
           fmt("%d/%d composition evaluations off beyond 1e-9", comp_bad, comp_checked));

  // Symbolic volatility corrections must survive their internal cancellation
  // checks for every built-in model, and agree with the numeric-mode path.
  std::vector<ModelSpec> builtins;
  builtins.push_back(ivx::builtin_cev(1.0, 0.5, 1.0));
  builtins.push_back(ivx::builtin_heston(1.0, 0.04, 1.0, -0.5, 1.0));
  builtins.push_back(ivx::builtin_lv(displaced_lv(0.2, 0.1), 1.0, "dlv"));
  for (const auto& model : builtins) {
    const int N = 3;
    ExpansionContext sym = ivx::make_expansion_context(model, N);
    ExpansionContext num = ivx::make_expansion_context(model, N, ExpansionMode::Numeric);
    IVExpansion es = ivx::make_iv_expansion(sym);
    IVExpansion en = ivx::make_iv_expansion(num);
    const double T = 0.05;
    double x0 = model.z0[0];
    try {
      for (int n = 1; n <= N; ++n) {
        BiPoly p = ivx::sigma_n_symbolic(es, n);
        for (double k : {x0, x0 + 0.02}) {
          double want = p.eval(k - x0, std::sqrt(T));
          double got = ivx::sigma_n_numeric(en, n, T, k);
          c.expect(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)),
                   fmt("%s n=%d k-x0=%.2f: numeric %.12e vs symbolic %.12e", model.name.c_str(),
                       n, k - x0, got, want));
        }
      }
    } catch (const ivx::CancellationFailure& e) {
      c.fail(fmt("%s: cancellation failure: %s", model.name.c_str(), e.what()));
    }
  }
}

void criterion8(Criterion& c) {
  // The characteristic function at the origin must be exactly one.
  for (double u : {0.5, 2.0}) {
    ivx::HestonCF cf;
    cf.kappa = 1.0;
    cf.theta = 0.04;
    cf.delta = 1.0;
    cf.rho = -0.5;
    cf.y = 0.04;
    cf.x = 0.0;
    cf.u = u;
    std::complex<double> v = ivx::heston_cf(cf);
    c.expect(v.real() == 1.0 && v.imag() == 0.0,
             fmt("cf(0,0) at u=%.1f: (%.17g, %.17g) != (1, 0)", u, v.real(), v.imag()));
  }

  // Martingale checks: the discounted spot has constant expectation.
  {
    ivx::HestonCF cf;
    cf.kappa = 1.0;
    cf.theta = 0.04;
    cf.delta = 1.0;
    cf.rho = -0.5;
    cf.y = 0.04;
    cf.x = 0.1;
    cf.u = 0.75;
    cf.xi = std::complex<double>(0.0, -1.0);
    std::complex<double> v = ivx::heston_cf(cf);
    double want = std::exp(0.1);
    c.expect(std::abs(v - std::complex<double>(want, 0.0)) <= 1e-8 * want,
             fmt("cf(-i) = (%.12f, %.2e) vs e^x = %.12f", v.real(), v.imag(), want));
  }
  for (double beta : {0.3, 0.7}) {
    ivx::CEVDensityParams p{0.5, beta, 0.8, 1.2};
    double val = ivx::cev_branch_integral(p, ivx::CEVBranch::Plus, 1);
    c.expect(std::abs(val - p.s) <= 1e-8 * p.s,
             fmt("cev beta %.1f: absorbed-branch first moment %.12f vs spot %.2f", beta, val, p.s));
  }

  // The reflecting branch is a true density below the critical elasticity.
  for (double beta : {0.2, 0.45}) {
    ivx::CEVDensityParams p{0.6, beta, 1.0, 1.0};
    double mass = ivx::cev_branch_integral(p, ivx::CEVBranch::Minus, 0);
    c.expect(std::abs(mass - 1.0) <= 1e-10,
             fmt("cev beta %.2f: reflecting-branch mass %.15f", beta, mass));
  }

  // Cross-method consistency: Fourier inversion against Monte Carlo.
  ModelSpec hm = ivx::builtin_heston(1.0, 0.04, 1.0, -0.5, 1.0);
  ivx::HestonParams hp{1.0, 0.04, 1.0, -0.5};
  double fp = ivx::heston_call_price(hp, 1.0, 0.04, 0.5, 1.05);
  ivx::McResult mc = ivx::mc_price(hm, 0.5, 1.05, 100000, 0, 20260816);
  double gap = std::abs(fp - mc.price);
  c.expect(gap <= 3.0 * mc.std_error,
           fmt("fourier %.6f vs mc %.6f +- %.6f: gap %.2e > 3 se", fp, mc.price, mc.std_error,
               gap));
  c.info(fmt("fourier %.6f, mc %.6f +- %.6f (gap %.2f se)", fp, mc.price, mc.std_error,
             mc.std_error > 0 ? gap / mc.std_error : 0.0));
}

}  // namespace

int main() {
  std::printf("acceptance suite: implied volatility expansion engine\n");
  int failures = 0;
  failures += run_criterion(1, "pinned maturity-slope coefficients for the elasticity family",
                            5.0, criterion1);
  failures += run_criterion(2, "Taylor entry equals the closed-form local-vol time derivative",
                            0.0, criterion2);
  failures += run_criterion(3, "numerical ATM slope from the reference pricer matches the Taylor value",
                            60.0, criterion3);
  failures += run_criterion(4, "implied-volatility error decays at the predicted order", 300.0,
                            criterion4);
  failures += run_criterion(5, "zero-order limit and half-slope strike consistency", 0.0,
                            criterion5);
  failures += run_criterion(6, "Black-Scholes derivatives against Richardson finite differences",
                            30.0, criterion6);
  failures += run_criterion(7, "combinatorics and operator algebra against independent oracles",
                            30.0, criterion7);
  failures += run_criterion(8, "reference pricers: martingale, normalization, cross-method checks",
                            180.0, criterion8);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures;
}

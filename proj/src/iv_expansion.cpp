#include "ivx/iv_expansion.hpp"

#include <cmath>
#include <numbers>

#include "ivx/blackscholes.hpp"

namespace ivx {

namespace {

constexpr double kCancelTol = 1e-9;

// Standardized Gaussian argument of the vega kernel as a polynomial in
// (K, R):  zeta = -(K + sigma0^2 R^2 / 2) / (sigma0 sqrt(2) R).
BiPoly zeta_bipoly(double s0) {
  BiPoly z;
  z.add_term(1, -1, -1.0 / (s0 * std::numbers::sqrt2));
  z.add_term(0, 1, -s0 / (2.0 * std::numbers::sqrt2));
  return z;
}

// Ratio d_sigma^h u / d_sigma u at sigma0 as a polynomial in (K, R); the
// numeric twin is bs_sigma_deriv_ratio.
BiPoly ratio_bipoly(int h, double s0) {
  auto crow = vega_ratio_ccoeffs(h);
  BiPoly zeta = zeta_bipoly(s0);
  BiPoly total;
  for (int q = 0; 2 * q <= h; ++q) {
    auto it = crow.find(h - 2 * q);
    if (it == crow.end()) continue;
    double cq = static_cast<double>(it->second) * std::pow(s0, h - 2 * q - 1);
    for (int p = 0; p <= h - q - 1; ++p) {
      int m = p + h - q - 1;
      double sign = (m % 2 == 0) ? 1.0 : -1.0;  // (-1)^m h_m = H_m
      double coef =
          cq * binomial(h - q - 1, p) * sign * std::pow(s0 * std::numbers::sqrt2, -m);
      int rpow = 2 * (h - q - 1) - m;
      total = total + bipoly_scale(bipoly_mul(BiPoly::monomial(1.0, 0, rpow),
                                              hermite_bipoly(m, zeta)),
                                   coef);
    }
  }
  return total;
}

// chi tail sums from one correction's f_j table. Works for both coefficient
// modes; the division by sigma0 tau shifts symbolic tau powers down by one.
std::vector<std::pair<int, TimeCoefficient>> chi_from_fj(const std::map<int, TimeCoefficient>& fj,
                                                         double s0, double tau_or_nan,
                                                         bool symbolic) {
  if (fj.empty()) return {};
  int jmax = fj.rbegin()->first;

  // Zero-sum identity: the correction operator annihilates e^x, so the f_j
  // must cancel exactly; anything above tolerance means the algebra broke.
  if (symbolic) {
    std::map<int, double> residual;
    double scale = 0.0;
    for (const auto& [j, c] : fj)
      for (const auto& [vp, coef] : c.tau_poly()) {
        residual[vp] += coef;
        scale = std::max(scale, std::fabs(coef));
      }
    for (const auto& [vp, r] : residual)
      if (std::fabs(r) > kCancelTol * scale)
        throw CancellationFailure("price correction coefficients fail the zero-sum identity");
  } else {
    double sum = 0.0, scale = 0.0;
    for (const auto& [j, c] : fj) {
      sum += c.value();
      scale = std::max(scale, std::fabs(c.value()));
    }
    if (std::fabs(sum) > kCancelTol * scale)
      throw CancellationFailure("price correction coefficients fail the zero-sum identity");
  }

  std::vector<std::pair<int, TimeCoefficient>> chi;
  for (int m = 0; m + 2 <= jmax; ++m) {
    TimeCoefficient tail = symbolic ? TimeCoefficient::symbolic_constant(0.0)
                                    : TimeCoefficient::numeric(0.0);
    for (const auto& [j, c] : fj)
      if (j >= m + 2) tail = tail + c;
    if (symbolic) {
      // Divide by sigma0 tau: every tau power must be at least one because
      // each f_j carries at least one time integration.
      TimeCoefficient shifted = TimeCoefficient::symbolic_constant(0.0);
      for (const auto& [vp, coef] : tail.tau_poly()) {
        if (vp < 1)
          throw CancellationFailure("correction coefficient lacks its time integration factor");
        shifted = shifted + TimeCoefficient::symbolic_v_monomial(coef / s0, vp - 1);
      }
      chi.emplace_back(m, shifted);
    } else {
      chi.emplace_back(m, TimeCoefficient::numeric(tail.value() / (s0 * tau_or_nan)));
    }
  }
  return chi;
}

}  // namespace

IVExpansion make_iv_expansion(const ExpansionContext& ctx) {
  IVExpansion expn;
  expn.ctx = ctx;
  if (ctx.mode == ExpansionMode::Symbolic) {
    expn.sigma0_level = sigma0(ctx, ctx.t + 1.0);  // constant for homogeneous models
    expn.sigma_sym.resize(static_cast<size_t>(ctx.N) + 1);
  }
  return expn;
}

std::vector<std::pair<int, TimeCoefficient>> hermite_form(IVExpansion& expn, int n, double T) {
  if (n < 1 || n > expn.ctx.N) throw ValidationError("correction order outside the context range");
  if (expn.ctx.mode == ExpansionMode::Symbolic) {
    if (!expn.un_sym) expn.un_sym = un_coefficients(expn.ctx, T);
    return chi_from_fj(expn.un_sym->fj[static_cast<size_t>(n)], expn.sigma0_level, 0.0, true);
  }
  UnCoefficients un = un_coefficients(expn.ctx, T);
  double s0 = sigma0(expn.ctx, T);
  return chi_from_fj(un.fj[static_cast<size_t>(n)], s0, T - expn.ctx.t, false);
}

BiPoly sigma_n_symbolic(IVExpansion& expn, int n) {
  if (expn.ctx.mode != ExpansionMode::Symbolic)
    throw SymbolicUnavailable("symbolic corrections require a symbolic-mode context");
  if (n < 1 || n > expn.ctx.N) throw ValidationError("correction order outside the context range");
  if (!expn.sigma_sym[static_cast<size_t>(n)].empty())
    return expn.sigma_sym[static_cast<size_t>(n)];
  for (int lower = 1; lower < n; ++lower) sigma_n_symbolic(expn, lower);

  const double s0 = expn.sigma0_level;
  auto chi = hermite_form(expn, n, expn.ctx.t + 1.0);
  BiPoly zeta = zeta_bipoly(s0);

  // u_n over vega.
  BiPoly un_over_vega;
  for (const auto& [m, coef] : chi) {
    BiPoly chi_poly;
    for (const auto& [vp, c] : coef.tau_poly()) chi_poly.add_term(0, 2 * vp, c);
    BiPoly scaled = bipoly_scale(bipoly_mul(chi_poly, hermite_bipoly(m, zeta)),
                                 std::pow(s0 * std::numbers::sqrt2, -m));
    un_over_vega = un_over_vega + bipoly_mul(scaled, BiPoly::monomial(1.0, 0, -m));
  }

  // Bell-polynomial compensation by the lower corrections.
  BiPoly bell_part;
  for (int h = 2; h <= n; ++h) {
    std::vector<BiPoly> args;
    for (int i = 1; i <= n - h + 1; ++i)
      args.push_back(bipoly_scale(expn.sigma_sym[static_cast<size_t>(i)], factorial(i)));
    BiPoly bsum;
    for (const auto& term : bell_index_set(n, h)) {
      BiPoly prod = BiPoly::constant(static_cast<double>(term.coeff));
      for (size_t i = 0; i < term.j.size(); ++i)
        for (int rep = 0; rep < term.j[i]; ++rep) prod = bipoly_mul(prod, args[i]);
      bsum = bsum + prod;
    }
    bell_part = bell_part + bipoly_mul(bsum, ratio_bipoly(h, s0));
  }

  BiPoly result = un_over_vega - bipoly_scale(bell_part, 1.0 / factorial(n));
  result = bipoly_assert_regular(result, kCancelTol);
  expn.sigma_sym[static_cast<size_t>(n)] = result;
  return result;
}

double sigma_n_numeric(IVExpansion& expn, int n, double T, double k) {
  if (n < 1 || n > expn.ctx.N) throw ValidationError("correction order outside the context range");
  if (expn.ctx.mode == ExpansionMode::Symbolic) {
    double tau = T - expn.ctx.t;
    if (!(tau > 0.0)) throw ValidationError("maturity must exceed the valuation time");
    return sigma_n_symbolic(expn, n).eval(k - expn.ctx.zbar[0], std::sqrt(tau));
  }

  const double tau = T - expn.ctx.t;
  if (!(tau > 0.0)) throw ValidationError("maturity must exceed the valuation time");
  const double s0 = sigma0(expn.ctx, T);
  const double rt = std::sqrt(tau);
  const double zeta = -((k - expn.ctx.zbar[0]) + 0.5 * s0 * s0 * tau) /
                      (s0 * std::numbers::sqrt2 * rt);
  UnCoefficients un = un_coefficients(expn.ctx, T);

  std::vector<double> sig(static_cast<size_t>(n) + 1, 0.0);
  for (int order = 1; order <= n; ++order) {
    auto chi = chi_from_fj(un.fj[static_cast<size_t>(order)], s0, tau, false);
    double u_over_vega = 0.0;
    for (const auto& [m, coef] : chi)
      u_over_vega += coef.value() * std::pow(s0 * std::numbers::sqrt2 * rt, -m) *
                     hermite(m, zeta);
    double bell_part = 0.0;
    for (int h = 2; h <= order; ++h) {
      std::vector<double> args;
      for (int i = 1; i <= order - h + 1; ++i)
        args.push_back(factorial(i) * sig[static_cast<size_t>(i)]);
      double ratio = bs_sigma_deriv_ratio(h, BSContext{s0, tau, expn.ctx.zbar[0], k});
      bell_part += bell_partial(order, h, args) * ratio;
    }
    sig[static_cast<size_t>(order)] = u_over_vega - bell_part / factorial(order);
  }
  return sig[static_cast<size_t>(n)];
}

VolQuote sigma_bar_N(IVExpansion& expn, double T, double k) {
  const double tau = T - expn.ctx.t;
  if (!(tau > 0.0)) throw ValidationError("maturity must exceed the valuation time");
  VolQuote q;
  double total = expn.ctx.mode == ExpansionMode::Symbolic ? expn.sigma0_level
                                                          : sigma0(expn.ctx, T);
  for (int n = 1; n <= expn.ctx.N; ++n) total += sigma_n_numeric(expn, n, T, k);
  q.value = total;
  double band = expn.ctx.lambda_max * std::sqrt(expn.ctx.model.ellipt_M * tau);
  q.extrapolated = std::fabs(k - expn.ctx.zbar[0]) > band || tau > expn.ctx.tau_max;
  q.negative_warning = !(total > 0.0);
  return q;
}

double IVTaylorTable::entry(int q, int m) const {
  auto it = c.find({q, m});
  if (it == c.end()) throw ValidationError("Taylor table entry outside 2q + m <= N");
  return it->second;
}

IVTaylorTable iv_taylor_coeffs(IVExpansion& expn) {
  if (expn.ctx.mode != ExpansionMode::Symbolic)
    throw SymbolicUnavailable("Taylor coefficients require a symbolic-mode context");
  IVTaylorTable table;
  table.N = expn.ctx.N;
  table.t = expn.ctx.t;
  table.zbar = expn.ctx.zbar;
  BiPoly total = BiPoly::constant(expn.sigma0_level);
  for (int n = 1; n <= expn.ctx.N; ++n) total = total + sigma_n_symbolic(expn, n);
  for (int q = 0; 2 * q <= expn.ctx.N; ++q)
    for (int m = 0; 2 * q + m <= expn.ctx.N; ++m)
      table.c[{q, m}] = factorial(q) * factorial(m) * total.coeff(m, 2 * q);
  return table;
}

double iv_taylor_eval(const IVTaylorTable& table, double T, double k) {
  double tau = T - table.t;
  if (tau < 0.0) throw ValidationError("maturity before the base point");
  double sum = 0.0;
  for (const auto& [qm, c] : table.c)
    sum += c / (factorial(qm.first) * factorial(qm.second)) * std::pow(tau, qm.first) *
           std::pow(k - table.zbar[0], qm.second);
  return sum;
}

double lv_time_derivative(const LocalVolFn& eta, double s) {
  double e = eta.value(s), e1 = eta.d1(s), e2 = eta.d2(s);
  return s * s * e * e * e2 / 12.0 - s * s * e * e1 * e1 / 24.0 + s * e * e * e1 / 12.0;
}

double durrleman_time_derivative(const LocalVolFn& eta, double s) {
  double e = eta.value(s), e1 = eta.d1(s), e2 = eta.d2(s);
  return s * s * e * e * e2 / 12.0 - 4.0 * s * s * e * e1 * e1 / 3.0 + s * e * e * e1 / 12.0;
}

}  // namespace ivx

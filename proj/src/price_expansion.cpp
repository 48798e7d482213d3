#include "ivx/price_expansion.hpp"

#include <cmath>

#include "ivx/blackscholes.hpp"
#include "ivx/quadrature.hpp"

namespace ivx {

namespace {

constexpr int kMaxOrder = 4;

void enumerate_compositions(int n, std::vector<int>& cur,
                            const std::function<void(const std::vector<int>&)>& fn) {
  if (n == 0) {
    fn(cur);
    return;
  }
  for (int first = 1; first <= n; ++first) {
    cur.push_back(first);
    enumerate_compositions(n - first, cur, fn);
    cur.pop_back();
  }
}

// Degree-n generator slice in symbolic mode. The Taylor data is frozen at t
// (time homogeneity is enforced upstream), and the shift coefficients are
//   m_l(t, s) = a_l(zbar) u,  C_lp(t, s) = a_lp(zbar) u,  u = s - t.
NormalOrderedOperator g_slice_symbolic(const ExpansionContext& ctx, const TaylorTensor& tensor,
                                       int n) {
  const int d = ctx.model.d;
  const Mat& a0 = tensor.data.aij(MIdx::zero());
  const Vec& b0 = tensor.data.ai(MIdx::zero());
  std::array<TimeCoefficient, kMaxDim> shift_m;
  std::array<std::array<TimeCoefficient, kMaxDim>, kMaxDim> shift_C;
  for (int l = 0; l < kMaxDim; ++l) {
    shift_m[static_cast<size_t>(l)] = TimeCoefficient::symbolic_constant(0.0);
    for (int p = 0; p < kMaxDim; ++p)
      shift_C[static_cast<size_t>(l)][static_cast<size_t>(p)] =
          TimeCoefficient::symbolic_constant(0.0);
  }
  for (int l = 0; l < d; ++l) {
    shift_m[static_cast<size_t>(l)] = TimeCoefficient::symbolic_u_monomial(b0[l], 1);
    for (int p = 0; p < d; ++p)
      shift_C[static_cast<size_t>(l)][static_cast<size_t>(p)] =
          TimeCoefficient::symbolic_u_monomial(a0.at(l, p), 1);
  }
  return op_from_taylor_generator(tensor.data, n, shift_m, shift_C,
                                  TimeCoefficient::Mode::Symbolic, ctx.limits);
}

// Degree-n generator slice in numeric mode at time s, with the mean and
// covariance shifts integrated from t to s by fixed-order quadrature.
NormalOrderedOperator g_slice_numeric(const ExpansionContext& ctx, int n, double s) {
  const int d = ctx.model.d;
  TaylorTensor tensor = taylor_tensor(ctx.model, s, ctx.zbar, n);
  std::array<TimeCoefficient, kMaxDim> shift_m;
  std::array<std::array<TimeCoefficient, kMaxDim>, kMaxDim> shift_C;
  Mat csum{d, {}};
  Vec msum{d, {}};
  GLRule rule = gauss_legendre(16, ctx.t, s);
  for (int q = 0; q < rule.n; ++q) {
    Mat aij;
    Vec ai;
    ctx.model.log_coeffs(rule.x[static_cast<size_t>(q)], ctx.zbar, aij, ai);
    for (int l = 0; l < d; ++l) {
      msum[l] += rule.w[static_cast<size_t>(q)] * ai[l];
      for (int p = 0; p < d; ++p) csum.at(l, p) += rule.w[static_cast<size_t>(q)] * aij.at(l, p);
    }
  }
  for (int l = 0; l < kMaxDim; ++l) {
    shift_m[static_cast<size_t>(l)] = TimeCoefficient::numeric(0.0);
    for (int p = 0; p < kMaxDim; ++p)
      shift_C[static_cast<size_t>(l)][static_cast<size_t>(p)] = TimeCoefficient::numeric(0.0);
  }
  for (int l = 0; l < d; ++l) {
    shift_m[static_cast<size_t>(l)] = TimeCoefficient::numeric(msum[l]);
    for (int p = 0; p < d; ++p)
      shift_C[static_cast<size_t>(l)][static_cast<size_t>(p)] =
          TimeCoefficient::numeric(csum.at(l, p));
  }
  return op_from_taylor_generator(tensor.data, n, shift_m, shift_C,
                                  TimeCoefficient::Mode::Numeric, ctx.limits);
}

// Numeric nested integral of one composition chain:
//   F_l(s_prev) = int_{s_prev}^T G_{i_l}(t, s) F_{l+1}(s) ds,
// with F past the last level the identity. Returns F_1(t).
NormalOrderedOperator chain_numeric(const ExpansionContext& ctx, const std::vector<int>& chain,
                                    double T, int nodes) {
  const int d = ctx.model.d;
  std::function<NormalOrderedOperator(size_t, double)> level =
      [&](size_t l, double s_prev) -> NormalOrderedOperator {
    NormalOrderedOperator acc(d);
    GLRule rule = gauss_legendre(nodes, s_prev, T);
    for (int q = 0; q < rule.n; ++q) {
      double s = rule.x[static_cast<size_t>(q)];
      NormalOrderedOperator g = g_slice_numeric(ctx, chain[l], s);
      NormalOrderedOperator val =
          (l + 1 < chain.size()) ? op_compose(g, level(l + 1, s), ctx.limits) : g;
      acc = acc + val.scaled(rule.w[static_cast<size_t>(q)]);
    }
    return acc;
  };
  return level(0, ctx.t);
}

double op_distance(const NormalOrderedOperator& a, const NormalOrderedOperator& b) {
  double num = 0.0, den = 0.0;
  auto scan = [&](const NormalOrderedOperator& lhs, const NormalOrderedOperator& rhs,
                  bool both) {
    for (const auto& [key, c] : lhs.terms()) {
      double cl = c.value();
      double cr = 0.0;
      auto it = rhs.terms().find(key);
      if (it != rhs.terms().end()) cr = it->second.value();
      if (!both || it == rhs.terms().end()) num = std::max(num, std::fabs(cl - cr));
      den = std::max(den, std::fabs(cl));
    }
  };
  scan(a, b, false);
  scan(b, a, true);
  return den > 0.0 ? num / den : num;
}

}  // namespace

ExpansionContext make_expansion_context(const ModelSpec& model, int N, ExpansionMode mode,
                                        double t, const Vec* zbar) {
  if (N < 1 || N > kMaxOrder) throw ValidationError("expansion order must be between 1 and 4");
  if (mode == ExpansionMode::Symbolic && !model.time_homogeneous)
    throw SymbolicUnavailable("symbolic time integration requires a time-homogeneous model");
  ExpansionContext ctx;
  ctx.model = model;
  ctx.N = N;
  ctx.t = t;
  ctx.zbar = zbar ? *zbar : model.z0;
  ctx.mode = mode;
  ctx.limits.max_monomial_degree = std::max(4, N);
  ctx.limits.max_derivative_degree = 3 * kMaxOrder + 2;
  taylor_tensor(model, t, ctx.zbar, 0);  // validates the center and coefficients
  return ctx;
}

double sigma0(const ExpansionContext& ctx, double T) {
  if (!(T > ctx.t)) throw ValidationError("maturity must exceed the valuation time");
  double avg;
  if (ctx.model.time_homogeneous) {
    Mat aij;
    Vec ai;
    ctx.model.log_coeffs(ctx.t, ctx.zbar, aij, ai);
    avg = aij.at(0, 0);
  } else {
    GLRule rule = gauss_legendre(16, ctx.t, T);
    double sum = 0.0;
    for (int q = 0; q < rule.n; ++q) {
      Mat aij;
      Vec ai;
      ctx.model.log_coeffs(rule.x[static_cast<size_t>(q)], ctx.zbar, aij, ai);
      sum += rule.w[static_cast<size_t>(q)] * aij.at(0, 0);
    }
    avg = sum / (T - ctx.t);
  }
  if (!(avg > 0.0)) throw NonPositiveVariance("time-averaged variance is not positive");
  return std::sqrt(avg);
}

NormalOrderedOperator build_Ln(const ExpansionContext& ctx, int n, double T) {
  if (n < 1 || n > ctx.N) throw ValidationError("correction order outside the context range");
  const int d = ctx.model.d;

  if (ctx.mode == ExpansionMode::Symbolic) {
    TaylorTensor tensor = taylor_tensor(ctx.model, ctx.t, ctx.zbar, n);
    NormalOrderedOperator total(d);
    std::vector<int> cur;
    enumerate_compositions(n, cur, [&](const std::vector<int>& chain) {
      // Innermost integral first; each level turns a polynomial in the inner
      // time variable into one in the next outer variable and v = T - t.
      NormalOrderedOperator r = g_slice_symbolic(ctx, tensor, chain.back());
      for (size_t l = chain.size() - 1; l-- > 0;) {
        r = r.integrated_u();
        r = op_compose(g_slice_symbolic(ctx, tensor, chain[l]), r, ctx.limits);
      }
      r = r.integrated_u().at_u_zero();
      total = total + r;
    });
    return total;
  }

  if (!(T > ctx.t)) throw ValidationError("maturity must exceed the valuation time");
  NormalOrderedOperator total16(d);
  NormalOrderedOperator total24(d);
  std::vector<int> cur;
  enumerate_compositions(n, cur, [&](const std::vector<int>& chain) {
    total16 = total16 + chain_numeric(ctx, chain, T, 16);
  });
  enumerate_compositions(n, cur, [&](const std::vector<int>& chain) {
    total24 = total24 + chain_numeric(ctx, chain, T, 24);
  });
  // One refinement step: accept the richer rule, but flag disagreement.
  if (op_distance(total16, total24) > 1e-10)
    throw QuadratureFailure("nested time quadrature failed to stabilize at 24 nodes");
  return total24;
}

UnCoefficients un_coefficients(const ExpansionContext& ctx, double T) {
  UnCoefficients out;
  out.N = ctx.N;
  out.fj.resize(static_cast<size_t>(ctx.N) + 1);
  for (int n = 1; n <= ctx.N; ++n)
    out.fj[static_cast<size_t>(n)] = op_reduce_at_center(build_Ln(ctx, n, T));
  return out;
}

double price_bar_N(const ExpansionContext& ctx, double T, double k) {
  const double tau = T - ctx.t;
  if (!(tau > 0.0)) throw ValidationError("maturity must exceed the valuation time");
  BSContext bs{sigma0(ctx, T), tau, ctx.zbar[0], k};
  UnCoefficients un = un_coefficients(ctx, T);
  double price = bs_price(bs);
  for (int n = 1; n <= ctx.N; ++n)
    for (const auto& [j, c] : un.fj[static_cast<size_t>(n)])
      price += c.eval_tau(tau) * bs_dx_pow(bs, j);
  return price;
}

}  // namespace ivx

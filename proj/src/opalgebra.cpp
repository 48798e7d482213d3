#include "ivx/opalgebra.hpp"

#include <cmath>

namespace ivx {

TimeCoefficient TimeCoefficient::symbolic_u_monomial(double x, int u_pow) {
  if (u_pow < 0) throw ValidationError("negative u power");
  TimeCoefficient c;
  c.mode_ = Mode::Symbolic;
  if (x != 0.0) c.uv_[{u_pow, 0}] = x;
  return c;
}

TimeCoefficient TimeCoefficient::symbolic_v_monomial(double x, int v_pow) {
  if (v_pow < 0) throw ValidationError("negative v power");
  TimeCoefficient c;
  c.mode_ = Mode::Symbolic;
  if (x != 0.0) c.uv_[{0, v_pow}] = x;
  return c;
}

void TimeCoefficient::require_symbolic() const {
  if (mode_ != Mode::Symbolic) throw ValidationError("operation requires a symbolic coefficient");
}

void TimeCoefficient::require_same_mode(const TimeCoefficient& a, const TimeCoefficient& b) {
  if (a.mode_ != b.mode_)
    throw ValidationError("symbolic and numeric coefficients cannot be combined");
}

bool TimeCoefficient::is_zero() const {
  return mode_ == Mode::Numeric ? num_ == 0.0 : uv_.empty();
}

double TimeCoefficient::value() const {
  if (mode_ != Mode::Numeric) throw ValidationError("value() requires a numeric coefficient");
  return num_;
}

std::map<int, double> TimeCoefficient::tau_poly() const {
  require_symbolic();
  std::map<int, double> out;
  for (const auto& [key, c] : uv_) {
    if (key.first != 0)
      throw ValidationError("tau_poly() requires a fully integrated coefficient");
    out[key.second] = c;
  }
  return out;
}

double TimeCoefficient::eval_tau(double tau) const {
  if (mode_ == Mode::Numeric) return num_;
  double s = 0.0;
  for (const auto& [key, c] : uv_) {
    if (key.first != 0)
      throw ValidationError("eval_tau() requires a fully integrated coefficient");
    s += c * std::pow(tau, key.second);
  }
  return s;
}

TimeCoefficient TimeCoefficient::operator+(const TimeCoefficient& o) const {
  require_same_mode(*this, o);
  TimeCoefficient out = *this;
  if (mode_ == Mode::Numeric) {
    out.num_ += o.num_;
    return out;
  }
  for (const auto& [key, c] : o.uv_) {
    auto [it, inserted] = out.uv_.try_emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) out.uv_.erase(it);
    }
  }
  return out;
}

TimeCoefficient TimeCoefficient::operator*(const TimeCoefficient& o) const {
  require_same_mode(*this, o);
  if (mode_ == Mode::Numeric) return numeric(num_ * o.num_);
  TimeCoefficient out;
  out.mode_ = Mode::Symbolic;
  for (const auto& [ka, ca] : uv_)
    for (const auto& [kb, cb] : o.uv_) {
      std::pair<int, int> key{ka.first + kb.first, ka.second + kb.second};
      auto [it, inserted] = out.uv_.try_emplace(key, ca * cb);
      if (!inserted) {
        it->second += ca * cb;
        if (it->second == 0.0) out.uv_.erase(it);
      }
    }
  return out;
}

TimeCoefficient TimeCoefficient::scaled(double s) const {
  TimeCoefficient out = *this;
  if (mode_ == Mode::Numeric) {
    out.num_ *= s;
    return out;
  }
  if (s == 0.0) {
    out.uv_.clear();
    return out;
  }
  for (auto& [key, c] : out.uv_) c *= s;
  return out;
}

TimeCoefficient TimeCoefficient::integrated_u() const {
  require_symbolic();
  // Antiderivative P of each u'^p v^q term is u'^{p+1} v^q / (p+1); the level
  // integral is P(v, v) - P(u, v).
  TimeCoefficient out;
  out.mode_ = Mode::Symbolic;
  auto acc = [&out](int up, int vp, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = out.uv_.try_emplace(std::pair<int, int>{up, vp}, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) out.uv_.erase(it);
    }
  };
  for (const auto& [key, c] : uv_) {
    auto [p, q] = key;
    double anti = c / (p + 1);
    acc(0, p + q + 1, anti);
    acc(p + 1, q, -anti);
  }
  return out;
}

TimeCoefficient TimeCoefficient::at_u_zero() const {
  require_symbolic();
  TimeCoefficient out;
  out.mode_ = Mode::Symbolic;
  for (const auto& [key, c] : uv_)
    if (key.first == 0) out.uv_[key] = c;
  return out;
}

NormalOrderedOperator NormalOrderedOperator::identity(int dim, TimeCoefficient::Mode mode) {
  NormalOrderedOperator op(dim);
  TimeCoefficient one = mode == TimeCoefficient::Mode::Numeric
                            ? TimeCoefficient::numeric(1.0)
                            : TimeCoefficient::symbolic_constant(1.0);
  op.add_term(MIdx::zero(), MIdx::zero(), one);
  return op;
}

void NormalOrderedOperator::add_term(const MIdx& gamma, const MIdx& alpha,
                                     const TimeCoefficient& c) {
  for (int i = d_; i < kMaxDim; ++i)
    if (gamma[i] != 0 || alpha[i] != 0)
      throw ValidationError("operator term uses an index beyond its dimension");
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(Key{gamma, alpha}, c);
  if (!inserted) {
    it->second = it->second + c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

NormalOrderedOperator NormalOrderedOperator::operator+(const NormalOrderedOperator& o) const {
  if (o.d_ != d_) throw ValidationError("operator dimension mismatch");
  NormalOrderedOperator out = *this;
  for (const auto& [key, c] : o.terms_) out.add_term(key.first, key.second, c);
  return out;
}

NormalOrderedOperator NormalOrderedOperator::scaled(double s) const {
  NormalOrderedOperator out(d_);
  for (const auto& [key, c] : terms_) out.add_term(key.first, key.second, c.scaled(s));
  return out;
}

NormalOrderedOperator NormalOrderedOperator::integrated_u() const {
  NormalOrderedOperator out(d_);
  for (const auto& [key, c] : terms_) out.add_term(key.first, key.second, c.integrated_u());
  return out;
}

NormalOrderedOperator NormalOrderedOperator::at_u_zero() const {
  NormalOrderedOperator out(d_);
  for (const auto& [key, c] : terms_) out.add_term(key.first, key.second, c.at_u_zero());
  return out;
}

NormalOrderedOperator op_compose(const NormalOrderedOperator& A, const NormalOrderedOperator& B,
                                 const OpLimits& lim) {
  if (A.dim() != B.dim()) throw ValidationError("operator dimension mismatch");
  const int d = A.dim();
  NormalOrderedOperator out(d);
  for (const auto& [ka, ca] : A.terms()) {
    const auto& [gamma_a, alpha_a] = ka;
    for (const auto& [kb, cb] : B.terms()) {
      const auto& [gamma_b, alpha_b] = kb;
      TimeCoefficient cab = ca * cb;
      // Enumerate mu <= componentwise min(alpha_a, gamma_b).
      MIdx mu_max;
      for (int i = 0; i < d; ++i)
        mu_max.e[static_cast<size_t>(i)] =
            static_cast<uint8_t>(std::min(alpha_a[i], gamma_b[i]));
      MIdx mu;
      bool done = false;
      while (!done) {
        double w = 1.0;
        for (int i = 0; i < d; ++i)
          w *= binomial(alpha_a[i], mu[i]) * falling(gamma_b[i], mu[i]);
        MIdx gamma = gamma_a + (gamma_b - mu);
        MIdx alpha = (alpha_a - mu) + alpha_b;
        if (gamma.deg() > lim.max_monomial_degree)
          throw OrderOverflow("composition exceeds monomial degree cap");
        if (alpha.deg() > lim.max_derivative_degree)
          throw OrderOverflow("composition exceeds derivative degree cap");
        out.add_term(gamma, alpha, cab.scaled(w));
        // Odometer increment of mu within [0, mu_max].
        done = true;
        for (int i = 0; i < d; ++i) {
          if (mu[i] < mu_max[i]) {
            mu.bump(i);
            done = false;
            break;
          }
          mu.e[static_cast<size_t>(i)] = 0;
        }
      }
    }
  }
  return out;
}

std::map<int, TimeCoefficient> op_reduce_at_center(const NormalOrderedOperator& A) {
  std::map<int, TimeCoefficient> out;
  for (const auto& [key, c] : A.terms()) {
    const auto& [gamma, alpha] = key;
    if (gamma.deg() != 0) continue;  // monomial factors vanish at the center
    bool pure_price = true;
    for (int i = 1; i < kMaxDim; ++i)
      if (alpha[i] != 0) pure_price = false;
    if (!pure_price) continue;  // the price profile is flat in other directions
    int j = alpha[0];
    auto [it, inserted] = out.try_emplace(j, c);
    if (!inserted) it->second = it->second + c;
  }
  for (auto it = out.begin(); it != out.end();)
    it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

const Mat& GeneratorTaylorData::aij(const MIdx& beta) const {
  auto it = daij.find(beta);
  if (it == daij.end()) throw ValidationError("missing diffusion Taylor entry");
  return it->second;
}

const Vec& GeneratorTaylorData::ai(const MIdx& beta) const {
  auto it = dai.find(beta);
  if (it == dai.end()) throw ValidationError("missing drift Taylor entry");
  return it->second;
}

NormalOrderedOperator op_from_taylor_generator(
    const GeneratorTaylorData& data, int n,
    const std::array<TimeCoefficient, kMaxDim>& shift_m,
    const std::array<std::array<TimeCoefficient, kMaxDim>, kMaxDim>& shift_C,
    TimeCoefficient::Mode mode, const OpLimits& lim) {
  const int d = data.d;
  if (n < 0) throw ValidationError("negative generator order");
  NormalOrderedOperator out(d);
  auto lift = [mode](double x) {
    return mode == TimeCoefficient::Mode::Numeric ? TimeCoefficient::numeric(x)
                                                  : TimeCoefficient::symbolic_constant(x);
  };

  for_each_midx_of_degree(d, n, [&](const MIdx& beta) {
    // X^beta = prod_l ((z_l - zbar_l) + m_l + sum_p C_{lp} d_p)^{beta_l},
    // built by operator products; the factors commute because C is symmetric.
    NormalOrderedOperator xbeta = NormalOrderedOperator::identity(d, mode);
    for (int l = 0; l < d; ++l) {
      if (beta[l] == 0) continue;
      NormalOrderedOperator xl(d);
      xl.add_term(MIdx::unit(l), MIdx::zero(), lift(1.0));
      xl.add_term(MIdx::zero(), MIdx::zero(), shift_m[static_cast<size_t>(l)]);
      for (int p = 0; p < d; ++p)
        xl.add_term(MIdx::zero(), MIdx::unit(p),
                    shift_C[static_cast<size_t>(l)][static_cast<size_t>(p)]);
      for (int rep = 0; rep < beta[l]; ++rep) xbeta = op_compose(xbeta, xl, lim);
    }

    const double inv_bfact = 1.0 / midx_factorial(beta);
    const Mat& aij = data.aij(beta);
    const Vec& ai = data.ai(beta);
    NormalOrderedOperator contrib(d);
    for (const auto& [key, c] : xbeta.terms()) {
      const auto& [gamma, alpha] = key;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          double w = 0.5 * aij.at(i, j) * inv_bfact;
          if (w == 0.0) continue;
          MIdx alpha2 = (alpha + MIdx::unit(i)) + MIdx::unit(j);
          if (alpha2.deg() > lim.max_derivative_degree)
            throw OrderOverflow("generator slice exceeds derivative degree cap");
          contrib.add_term(gamma, alpha2, c.scaled(w));
        }
        double w = ai[i] * inv_bfact;
        if (w != 0.0) contrib.add_term(gamma, alpha + MIdx::unit(i), c.scaled(w));
      }
    }
    out = out + contrib;
  });
  return out;
}

}  // namespace ivx

#include "ivx/combinatorics.hpp"

#include <cmath>
#include <sstream>

namespace ivx {

double factorial(int n) {
  if (n < 0) throw ValidationError("factorial of negative argument");
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double falling(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (n - i);
  return r;
}

double midx_factorial(const MIdx& a) {
  double r = 1.0;
  for (int i = 0; i < kMaxDim; ++i) r *= factorial(a[i]);
  return r;
}

namespace {
void midx_rec(int d, int pos, int remaining, MIdx& cur, const std::function<void(const MIdx&)>& fn) {
  if (pos == d - 1) {
    cur.e[static_cast<size_t>(pos)] = static_cast<uint8_t>(remaining);
    fn(cur);
    cur.e[static_cast<size_t>(pos)] = 0;
    return;
  }
  for (int take = remaining; take >= 0; --take) {
    cur.e[static_cast<size_t>(pos)] = static_cast<uint8_t>(take);
    midx_rec(d, pos + 1, remaining - take, cur, fn);
  }
  cur.e[static_cast<size_t>(pos)] = 0;
}
}  // namespace

void for_each_midx_of_degree(int d, int degree, const std::function<void(const MIdx&)>& fn) {
  if (d < 1 || d > kMaxDim) throw ValidationError("dimension out of range");
  if (degree < 0) return;
  MIdx cur;
  midx_rec(d, 0, degree, cur, fn);
}

double hermite(int n, double x) {
  if (n < 0) throw ValidationError("hermite order must be non-negative");
  double hm1 = 0.0;  // h_{n-1}
  double h = 1.0;    // h_0
  for (int m = 0; m < n; ++m) {
    double next = -2.0 * x * h - 2.0 * m * hm1;
    hm1 = h;
    h = next;
  }
  return h;
}

namespace {

long long ll_factorial(int n) {
  long long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

void bell_rec(int m, int h, int i, int rem_sum, int rem_weight, std::vector<int>& j,
              std::vector<BellTerm>& out) {
  int r = m - h + 1;
  if (i > r) {
    if (rem_sum == 0 && rem_weight == 0) {
      // Exact integer weight m! / (prod j_i! * prod (i!)^{j_i}); every
      // division below is exact because the weight counts set partitions.
      long long c = ll_factorial(m);
      for (int idx = 1; idx <= r; ++idx) {
        int ji = j[static_cast<size_t>(idx - 1)];
        c /= ll_factorial(ji);
        long long fi = ll_factorial(idx);
        for (int rep = 0; rep < ji; ++rep) c /= fi;
      }
      out.push_back(BellTerm{c, j});
    }
    return;
  }
  int max_ji = std::min(rem_sum, rem_weight / i);
  for (int ji = 0; ji <= max_ji; ++ji) {
    j[static_cast<size_t>(i - 1)] = ji;
    bell_rec(m, h, i + 1, rem_sum - ji, rem_weight - i * ji, j, out);
  }
  j[static_cast<size_t>(i - 1)] = 0;
}

}  // namespace

std::vector<BellTerm> bell_index_set(int m, int h) {
  if (m < 1 || h < 1 || h > m) throw ValidationError("bell indices require 1 <= h <= m");
  if (m > 12) throw OrderOverflow("bell index enumeration capped at m = 12");
  std::vector<BellTerm> out;
  std::vector<int> j(static_cast<size_t>(m - h + 1), 0);
  bell_rec(m, h, 1, h, m, j, out);
  return out;
}

double bell_partial(int m, int h, std::span<const double> z) {
  if (static_cast<int>(z.size()) < m - h + 1)
    throw ValidationError("bell_partial needs z_1 .. z_{m-h+1}");
  double total = 0.0;
  for (const auto& term : bell_index_set(m, h)) {
    double prod = static_cast<double>(term.coeff);
    for (size_t i = 0; i < term.j.size(); ++i) {
      for (int rep = 0; rep < term.j[i]; ++rep) prod *= z[i];
    }
    total += prod;
  }
  return total;
}

std::map<int, long long> vega_ratio_ccoeffs(int n) {
  if (n < 1) throw ValidationError("ccoeff row index must be positive");
  if (n > 20) throw OrderOverflow("ccoeff rows capped at n = 20");
  std::map<int, long long> row{{1, 1}};  // n = 1: single entry c_{1,1} = 1
  for (int m = 2; m <= n; ++m) {
    std::map<int, long long> next;
    auto prev_at = [&row](int idx) -> long long {
      auto it = row.find(idx);
      return it == row.end() ? 0 : it->second;
    };
    for (int k = m; k >= 0; k -= 2) {
      long long v = (k + 1) * prev_at(k + 1) + prev_at(k - 1);
      if (v != 0) next[k] = v;
    }
    row = std::move(next);
  }
  return row;
}

BiPoly BiPoly::monomial(double c, int k_pow, int r_pow) {
  BiPoly p;
  if (k_pow < 0) throw ValidationError("negative K power in BiPoly");
  if (c != 0.0) p.terms_[{k_pow, r_pow}] = c;
  return p;
}

double BiPoly::coeff(int k_pow, int r_pow) const {
  auto it = terms_.find({k_pow, r_pow});
  return it == terms_.end() ? 0.0 : it->second;
}

void BiPoly::add_term(int k_pow, int r_pow, double c) {
  if (k_pow < 0) throw ValidationError("negative K power in BiPoly");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace({k_pow, r_pow}, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double BiPoly::eval(double K, double R) const {
  double s = 0.0;
  for (const auto& [key, c] : terms_)
    s += c * std::pow(K, key.first) * std::pow(R, key.second);
  return s;
}

double BiPoly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::fabs(c));
  return m;
}

BiPoly BiPoly::pruned(double rel_tol) const {
  double cut = rel_tol * max_abs_coeff();
  BiPoly out;
  for (const auto& [key, c] : terms_)
    if (std::fabs(c) > cut) out.terms_[key] = c;
  return out;
}

BiPoly BiPoly::d_tau() const {
  BiPoly out;
  for (const auto& [key, c] : terms_) {
    auto [kp, rp] = key;
    if (rp < 0 || rp % 2 != 0)
      throw ValidationError("d_tau requires a regular polynomial");
    if (rp == 0) continue;
    out.add_term(kp, rp - 2, c * (rp / 2));
  }
  return out;
}

BiPoly BiPoly::d_k() const {
  BiPoly out;
  for (const auto& [key, c] : terms_) {
    auto [kp, rp] = key;
    if (kp == 0) continue;
    out.add_term(kp - 1, rp, c * kp);
  }
  return out;
}

BiPoly BiPoly::operator+(const BiPoly& o) const { return bipoly_add(*this, o); }
BiPoly BiPoly::operator-(const BiPoly& o) const { return bipoly_add(*this, bipoly_scale(o, -1.0)); }
BiPoly BiPoly::operator*(const BiPoly& o) const { return bipoly_mul(*this, o); }
BiPoly BiPoly::operator-() const { return bipoly_scale(*this, -1.0); }

BiPoly bipoly_add(const BiPoly& a, const BiPoly& b) {
  BiPoly out = a;
  for (const auto& [key, c] : b.terms()) out.add_term(key.first, key.second, c);
  return out;
}

BiPoly bipoly_mul(const BiPoly& a, const BiPoly& b) {
  BiPoly out;
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms())
      out.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
  return out;
}

BiPoly bipoly_scale(const BiPoly& a, double s) {
  BiPoly out;
  if (s == 0.0) return out;
  for (const auto& [key, c] : a.terms()) out.add_term(key.first, key.second, c * s);
  return out;
}

BiPoly bipoly_pow(const BiPoly& a, int n) {
  if (n < 0) throw ValidationError("negative BiPoly power");
  BiPoly out = BiPoly::constant(1.0);
  for (int i = 0; i < n; ++i) out = bipoly_mul(out, a);
  return out;
}

BiPoly bipoly_assert_regular(const BiPoly& p, double rel_tol) {
  double cut = rel_tol * p.max_abs_coeff();
  BiPoly out;
  std::ostringstream bad;
  int nbad = 0;
  for (const auto& [key, c] : p.terms()) {
    auto [kp, rp] = key;
    bool irregular = (rp < 0) || (rp % 2 != 0);
    if (std::fabs(c) <= cut) continue;  // cancellation residue, drop
    if (irregular) {
      if (nbad++) bad << ", ";
      bad << c << " * K^" << kp << " R^" << rp;
      continue;
    }
    out.add_term(kp, rp, c);
  }
  if (nbad > 0)
    throw CancellationFailure("irregular sqrt-time monomials survive pruning: " + bad.str());
  return out;
}

BiPoly hermite_bipoly(int n, const BiPoly& x) {
  if (n < 0) throw ValidationError("hermite order must be non-negative");
  BiPoly hm1;                       // h_{-1} treated as 0
  BiPoly h = BiPoly::constant(1.0); // h_0
  BiPoly m2x = bipoly_scale(x, -2.0);
  for (int m = 0; m < n; ++m) {
    BiPoly next = bipoly_add(bipoly_mul(m2x, h), bipoly_scale(hm1, -2.0 * m));
    hm1 = h;
    h = next;
  }
  return h;
}

}  // namespace ivx

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>

#include "ivx/errors.hpp"

namespace ivx {

// All state spaces here are tiny (log-price plus up to three volatility
// factors), so vectors and matrices are fixed-capacity PODs.
inline constexpr int kMaxDim = 4;

struct Vec {
  int d = 0;
  std::array<double, kMaxDim> v{};

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

struct Mat {
  int d = 0;
  std::array<std::array<double, kMaxDim>, kMaxDim> m{};

  double& at(int i, int j) { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
  double at(int i, int j) const { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
};

// Multi-index over at most kMaxDim variables. Entries beyond the active
// dimension stay zero, so ordering and equality work across contexts.
struct MIdx {
  std::array<uint8_t, kMaxDim> e{};

  auto operator<=>(const MIdx&) const = default;

  int deg() const {
    int s = 0;
    for (auto x : e) s += x;
    return s;
  }
  int operator[](int i) const { return e[static_cast<size_t>(i)]; }
  void bump(int i, int by = 1) {
    int nv = e[static_cast<size_t>(i)] + by;
    if (nv < 0 || nv > 255) throw OrderOverflow("multi-index entry out of range");
    e[static_cast<size_t>(i)] = static_cast<uint8_t>(nv);
  }
  static MIdx unit(int i) {
    MIdx r;
    r.e[static_cast<size_t>(i)] = 1;
    return r;
  }
  static MIdx zero() { return MIdx{}; }
};

inline MIdx operator+(const MIdx& a, const MIdx& b) {
  MIdx r;
  for (int i = 0; i < kMaxDim; ++i) {
    int s = a.e[static_cast<size_t>(i)] + b.e[static_cast<size_t>(i)];
    if (s > 255) throw OrderOverflow("multi-index sum out of range");
    r.e[static_cast<size_t>(i)] = static_cast<uint8_t>(s);
  }
  return r;
}

// Componentwise difference; caller guarantees b <= a componentwise.
inline MIdx operator-(const MIdx& a, const MIdx& b) {
  MIdx r;
  for (int i = 0; i < kMaxDim; ++i)
    r.e[static_cast<size_t>(i)] = static_cast<uint8_t>(a.e[static_cast<size_t>(i)] - b.e[static_cast<size_t>(i)]);
  return r;
}

inline bool leq(const MIdx& a, const MIdx& b) {
  for (int i = 0; i < kMaxDim; ++i)
    if (a.e[static_cast<size_t>(i)] > b.e[static_cast<size_t>(i)]) return false;
  return true;
}

double factorial(int n);
double binomial(int n, int k);
// Falling factorial n (n-1) ... (n-k+1).
double falling(int n, int k);
double midx_factorial(const MIdx& a);

// Visits every multi-index of the given total degree in d variables, in
// lexicographic order.
void for_each_midx_of_degree(int d, int degree, const std::function<void(const MIdx&)>& fn);

}  // namespace ivx

#include "ivx/reference_pricers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>
#include <vector>

#include "ivx/blackscholes.hpp"
#include "ivx/quadrature.hpp"

namespace ivx {

namespace {
constexpr double kBesselSwitch = 30.0;
}

double bessel_i_scaled(double nu, double z) {
  if (!(z >= 0.0)) throw ValidationError("bessel argument must be non-negative");
  if (nu <= -1.0 || nu > 8.0) throw ValidationError("bessel order outside (-1, 8]");
  if (z < kBesselSwitch) {
    // I_nu(z) = (z/2)^nu sum_k (z^2/4)^k / (k! Gamma(nu + k + 1)).
    if (z == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : INFINITY);
    double term = std::pow(0.5 * z, nu) / std::tgamma(nu + 1.0);
    double sum = term;
    double q = 0.25 * z * z;
    for (int k = 1; k <= 400; ++k) {
      term *= q / (k * (nu + k));
      sum += term;
      if (std::fabs(term) < 1e-14 * std::fabs(sum) && k > 4) break;
    }
    return sum * std::exp(-z);
  }
  // I_nu(z) e^{-z} ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) / z^k with
  // a_k = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (8^k k!), truncated at the
  // smallest term. The reflected-order contribution differs by a factor
  // e^{-2z}, which is below double precision past the switchover.
  double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0, prev = INFINITY;
  for (int k = 1; k <= 40; ++k) {
    double factor = -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
    if (std::fabs(term * factor) >= std::fabs(prev)) break;  // divergence onset
    term *= factor;
    prev = term;
    sum += term;
    if (std::fabs(term) < 1e-16 * std::fabs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

void CEVDensityParams::validate() const {
  if (!(sigma > 0.0)) throw ValidationError("cev requires sigma > 0");
  if (!(beta > 0.0) || !(beta < 1.0))
    throw ValidationError("cev density requires beta in (0, 1)");
  if (!(tau > 0.0)) throw ValidationError("cev requires tau > 0");
  if (!(s > 0.0)) throw ValidationError("cev requires s > 0");
}

double cev_semidensity(const CEVDensityParams& p, double S, CEVBranch branch) {
  p.validate();
  if (!(S > 0.0)) throw ValidationError("terminal level must be positive");
  const double om = 1.0 - p.beta;
  const double c = om * om * p.sigma * p.sigma * p.tau;
  const double ra = std::pow(p.s, om);   // sqrt A
  const double rb = std::pow(S, om);     // sqrt B
  const double z = ra * rb / c;
  const double nu = (branch == CEVBranch::Plus ? 1.0 : -1.0) / (2.0 * om);
  // exp(-(A+B)/(2c)) I_nu(AB/c^2...) regrouped against the scaled Bessel so
  // the only exponential left is the Gaussian-like peak factor.
  double peak = -(ra - rb) * (ra - rb) / (2.0 * c);
  double pref = std::sqrt(p.s) * std::pow(S, 0.5 - 2.0 * p.beta) / (om * p.sigma * p.sigma * p.tau);
  return pref * std::exp(peak) * bessel_i_scaled(nu, z);
}

namespace {

// Integration window in the u = S^(1-beta) coordinate, outside of which the
// peak factor is below e^{-312}.
std::pair<double, double> cev_root_window(const CEVDensityParams& p) {
  const double om = 1.0 - p.beta;
  const double c = om * om * p.sigma * p.sigma * p.tau;
  const double ra = std::pow(p.s, om);
  const double width = 25.0 * std::sqrt(c);
  return {std::max(0.0, ra - width), ra + width};
}

}  // namespace

double cev_branch_integral(const CEVDensityParams& p, CEVBranch branch, int moment) {
  p.validate();
  if (moment < 0 || moment > 1) throw ValidationError("supported moments are 0 and 1");
  if (branch == CEVBranch::Minus && !(p.beta < 0.5))
    throw ValidationError("reflected branch needs beta below one half");
  const double om = 1.0 - p.beta;
  const double ra = std::pow(p.s, om);
  auto [ulo, uhi] = cev_root_window(p);
  // Quadrature runs in the u = S^(1-beta) coordinate: the absorbed branch
  // then vanishes linearly at the origin instead of diverging like S^(1-2beta).
  auto g = [&](double u) {
    double S = std::pow(u, 1.0 / om);
    if (S <= 0.0) return 0.0;  // u slipped below the subnormal range
    double jac = std::pow(u, 1.0 / om - 1.0) / om;
    return (moment == 1 ? S : 1.0) * cev_semidensity(p, S, branch) * jac;
  };
  double scale = moment == 1 ? p.s : 1.0;
  double total = 0.0;
  double lo = ulo;
  if (branch == CEVBranch::Minus && moment == 0 && ulo == 0.0) {
    // The reflected mass integrand keeps a u^(-beta/(1-beta)) singularity at
    // the origin; u = w^q with q = (1-beta)/(1-2beta) flattens it to a bounded
    // function of w.
    double q = om / (1.0 - 2.0 * p.beta);
    auto gw = [&](double w) { return g(std::pow(w, q)) * q * std::pow(w, q - 1.0); };
    total += integrate_adaptive(gw, 0.0, std::pow(ra, 1.0 / q), 1e-11 * scale, 1e-11);
    lo = ra;
  }
  std::vector<double> pts{lo};
  if (ra > lo && ra < uhi) pts.push_back(ra);
  pts.push_back(uhi);
  total += integrate_adaptive_segments(g, pts, 1e-11 * scale, 1e-11);
  return total;
}

double cev_call_price(const CEVDensityParams& p, double K) {
  p.validate();
  if (!(K > 0.0)) throw ValidationError("strike must be positive");
  const double om = 1.0 - p.beta;
  const double ra = std::pow(p.s, om);
  const double uk = std::pow(K, om);
  auto [ulo, uhi] = cev_root_window(p);
  (void)ulo;
  if (uk >= uhi) return 0.0;
  // Same u = S^(1-beta) coordinate as the moment integrals; the payoff keeps
  // the integrand away from the origin, so no substitution is needed.
  auto g = [&](double u) {
    double S = std::pow(u, 1.0 / om);
    double jac = std::pow(u, 1.0 / om - 1.0) / om;
    return (S - K) * cev_semidensity(p, S, CEVBranch::Plus) * jac;
  };
  std::vector<double> pts{uk};
  if (ra > uk * (1.0 + 1e-12) && ra < uhi) pts.push_back(ra);
  pts.push_back(uhi);
  return integrate_adaptive_segments(g, pts, 1e-13 * p.s, 1e-12);
}

std::complex<double> heston_cf(const HestonCF& cf) {
  using C = std::complex<double>;
  const C I(0.0, 1.0);
  if (!(cf.delta > 0.0)) throw ValidationError("cf requires delta > 0");
  if (!(cf.u >= 0.0)) throw ValidationError("cf requires a non-negative horizon");
  const double d2 = cf.delta * cf.delta;
  const C xi = cf.xi;
  const C alpha = I * xi * cf.rho * cf.delta - cf.kappa;
  const C D = std::sqrt(alpha * alpha + d2 * xi * (xi + I));
  const C a = (alpha + D) / d2;
  const C b = (alpha - D) / d2;
  C g;
  if (std::abs(b - cf.eta) < 1e-300) throw BranchInstability("degenerate branch ratio");
  g = (a - cf.eta) / (b - cf.eta);

  if (cf.u == 0.0) return std::exp(I * xi * cf.x - cf.eta * cf.y);

  // Continue the logarithm of w(s) = (g - 1) / (g e^{-D s} - 1) from s = 0,
  // where w = 1, along subdivisions of [0, u]; the winding is accumulated so
  // the complex power below stays on the right branch.
  int slices = std::max(4, static_cast<int>(std::ceil(std::abs(D) * cf.u / 1.5)));
  if (slices > 4000000) throw BranchInstability("characteristic function path too oscillatory");
  double arg_acc = 0.0;
  double prev_arg = 0.0;
  C w_end;
  for (int j = 1; j <= slices; ++j) {
    double sgrid = cf.u * j / slices;
    C w = (g - 1.0) / (g * std::exp(-D * sgrid) - 1.0);
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag()) || std::abs(w) < 1e-300)
      throw BranchInstability("characteristic function hit a pole");
    double argw = std::arg(w);
    double jump = argw - prev_arg;
    while (jump > std::numbers::pi) jump -= 2.0 * std::numbers::pi;
    while (jump < -std::numbers::pi) jump += 2.0 * std::numbers::pi;
    arg_acc += jump;
    prev_arg = argw;
    if (j == slices) w_end = w;
  }
  C logw(std::log(std::abs(w_end)), arg_acc);
  const double expo = 2.0 * cf.kappa * cf.theta / d2;
  const C E = std::exp(-D * cf.u);
  const C A = (b * g * E - a) / (g * E - 1.0);
  const C B = std::exp(-cf.kappa * cf.theta * a * cf.u + expo * logw);
  return std::exp(I * xi * cf.x - cf.y * A) * B;
}

namespace {

std::complex<double> heston_marginal_cf(const HestonParams& hp, double x, double y, double tau,
                                        std::complex<double> xi) {
  HestonCF cf;
  cf.kappa = hp.kappa;
  cf.theta = hp.theta;
  cf.delta = hp.delta;
  cf.rho = hp.rho;
  cf.y = y;
  cf.x = x;
  cf.u = tau;
  cf.xi = xi;
  cf.eta = 0.0;
  return heston_cf(cf);
}

}  // namespace

double heston_call_price(const HestonParams& hp, double s, double y, double tau, double K,
                         double alpha) {
  if (!(s > 0.0) || !(K > 0.0)) throw ValidationError("spot and strike must be positive");
  if (!(y > 0.0) || !(tau > 0.0)) throw ValidationError("variance and maturity must be positive");
  if (!(alpha > 0.0)) throw ValidationError("damping exponent must be positive");
  const double x = std::log(s);
  const double k = std::log(K);
  using C = std::complex<double>;
  const C I(0.0, 1.0);
  auto integrand = [&](double u) {
    C xi = C(u, -(alpha + 1.0));
    C phi = heston_marginal_cf(hp, x, y, tau, xi);
    C denom = C(alpha * alpha + alpha - u * u, (2.0 * alpha + 1.0) * u);
    C val = std::exp(-I * u * k) * phi / denom;
    return val.real();
  };
  const double tol = 1e-10 * s;
  double total = 0.0;
  double a = 0.0, b = 64.0;
  int quiet = 0;
  for (int oct = 0; oct < 24; ++oct) {
    double seg = integrate_adaptive(integrand, a, b, tol * 0.25, 1e-12);
    total += seg;
    if (std::fabs(seg) < 0.02 * tol) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
    a = b;
    b *= 2.0;
  }
  return std::exp(-alpha * k) / std::numbers::pi * total;
}

namespace {

// Philox 4x32-10 counter-based generator: one 128-bit counter and a 64-bit
// key in, four independent 32-bit words out.
struct PhiloxOut {
  uint32_t w[4];
};

PhiloxOut philox4x32(uint64_t key, uint64_t counter_hi, uint64_t counter_lo) {
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  uint32_t c0 = static_cast<uint32_t>(counter_lo);
  uint32_t c1 = static_cast<uint32_t>(counter_lo >> 32);
  uint32_t c2 = static_cast<uint32_t>(counter_hi);
  uint32_t c3 = static_cast<uint32_t>(counter_hi >> 32);
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    uint64_t p0 = static_cast<uint64_t>(M0) * c0;
    uint64_t p1 = static_cast<uint64_t>(M1) * c2;
    uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    uint32_t n0 = hi1 ^ c1 ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ c3 ^ k1;
    uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += W0;
    k1 += W1;
  }
  return PhiloxOut{{c0, c1, c2, c3}};
}

double u01_from_words(uint32_t hi, uint32_t lo) {
  uint64_t mant = (static_cast<uint64_t>(hi) << 21) | (static_cast<uint64_t>(lo) >> 11);
  return (static_cast<double>(mant) + 0.5) * 0x1.0p-53;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Two standard normals per counter via Box-Muller.
void normal_pair(uint64_t key, uint64_t hi, uint64_t lo, double& n0, double& n1) {
  PhiloxOut o = philox4x32(key, hi, lo);
  double u1 = u01_from_words(o.w[0], o.w[1]);
  double u2 = u01_from_words(o.w[2], o.w[3]);
  double r = std::sqrt(-2.0 * std::log(u1));
  n0 = r * std::cos(2.0 * std::numbers::pi * u2);
  n1 = r * std::sin(2.0 * std::numbers::pi * u2);
}

// Lower-triangular factor of a symmetric positive semidefinite matrix;
// singular pivots produce zero columns instead of failures.
void psd_cholesky(const Mat& a, int d, Mat& L) {
  L = Mat{d, {}};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      for (int p = 0; p < j; ++p) sum -= L.at(i, p) * L.at(j, p);
      if (i == j) {
        L.at(i, i) = sum > 1e-300 ? std::sqrt(sum) : 0.0;
      } else {
        L.at(i, j) = L.at(j, j) > 0.0 ? sum / L.at(j, j) : 0.0;
      }
    }
  }
}

struct BlockStats {
  double sum = 0.0;
  double sumsq = 0.0;
  long count = 0;
};

BlockStats mc_block(const ModelSpec& model, double T, double K, long block_index,
                    long paths_in_block, int steps, uint64_t seed) {
  const int d = model.d;
  const int pairs_per_step = (d + 1) / 2;
  const double dt = T / steps;
  const double sqdt = std::sqrt(dt);
  const uint64_t key = splitmix64(seed ^ (0x51A5F00Du + static_cast<uint64_t>(block_index)));
  BlockStats stats;
  Mat cov, L;
  Vec drift, state, eff;
  std::array<double, kMaxDim> dw{};
  for (long p = 0; p < paths_in_block; ++p) {
    state = model.state0;
    for (int st = 0; st < steps; ++st) {
      // Full truncation: coefficients see the floored state, the path itself
      // is left free.
      eff = state;
      for (int i = 0; i < d; ++i) eff[i] = std::max(eff[i], model.state_floor[i]);
      model.orig_cov_drift(st * dt, eff, cov, drift);
      psd_cholesky(cov, d, L);
      for (int pr = 0; pr < pairs_per_step; ++pr) {
        uint64_t ctr_hi = static_cast<uint64_t>(p);
        uint64_t ctr_lo =
            (static_cast<uint64_t>(st) * static_cast<uint64_t>(pairs_per_step) + pr);
        double n0, n1;
        normal_pair(key, ctr_hi, ctr_lo, n0, n1);
        dw[static_cast<size_t>(2 * pr)] = n0;
        if (2 * pr + 1 < kMaxDim) dw[static_cast<size_t>(2 * pr + 1)] = n1;
      }
      for (int i = 0; i < d; ++i) {
        double inc = drift[i] * dt;
        for (int j = 0; j <= i; ++j) inc += L.at(i, j) * sqdt * dw[static_cast<size_t>(j)];
        state[i] += inc;
      }
    }
    double payoff = std::max(state[0] - K, 0.0);
    stats.sum += payoff;
    stats.sumsq += payoff * payoff;
    stats.count += 1;
  }
  return stats;
}

}  // namespace

McResult mc_price(const ModelSpec& model, double T, double K, long paths, int steps,
                  uint64_t seed, int threads) {
  if (!(T > 0.0) || !(K > 0.0)) throw ValidationError("mc requires T > 0 and K > 0");
  if (paths < 10000) throw ValidationError("mc requires at least 10000 paths");
  if (!model.orig_cov_drift) throw ValidationError("model has no simulation coefficients");
  if (steps <= 0) steps = std::max(1, static_cast<int>(std::lround(400.0 * T)));
  if (threads <= 0) {
    if (const char* env = std::getenv("IVX_THREADS")) threads = std::atoi(env);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  constexpr long kBlock = 4096;
  const long nblocks = (paths + kBlock - 1) / kBlock;
  std::vector<BlockStats> block_stats(static_cast<size_t>(nblocks));
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      long b = next.fetch_add(1);
      if (b >= nblocks) return;
      long in_block = std::min(kBlock, paths - b * kBlock);
      block_stats[static_cast<size_t>(b)] = mc_block(model, T, K, b, in_block, steps, seed);
    }
  };
  std::vector<std::thread> pool;
  int nthreads = static_cast<int>(std::min<long>(threads, nblocks));
  for (int w = 1; w < nthreads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  // Deterministic reduction in block order regardless of completion order.
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  for (const auto& bs : block_stats) {
    sum += bs.sum;
    sumsq += bs.sumsq;
    count += bs.count;
  }
  double mean = sum / count;
  double var = std::max(0.0, sumsq / count - mean * mean);
  return McResult{mean, std::sqrt(var / (count - 1))};
}

double reference_iv(const ModelSpec& model, double T, double K, const std::string& method,
                    long mc_paths, uint64_t mc_seed) {
  if (!(T > 0.0)) throw ValidationError("reference_iv requires T > 0");
  double price;
  if (method == "cev") {
    auto its = model.params.find("sigma");
    auto itb = model.params.find("beta");
    auto it0 = model.params.find("s0");
    if (its == model.params.end() || itb == model.params.end() || it0 == model.params.end())
      throw ValidationError("model does not carry cev parameters");
    if (itb->second >= 1.0) {
      BSContext c{its->second, T, std::log(it0->second), std::log(K)};
      price = bs_price(c);
    } else {
      price = cev_call_price(CEVDensityParams{its->second, itb->second, T, it0->second}, K);
    }
  } else if (method == "heston") {
    HestonParams hp;
    auto get = [&](const char* nameq) {
      auto it = model.params.find(nameq);
      if (it == model.params.end()) throw ValidationError("model does not carry heston parameters");
      return it->second;
    };
    hp.kappa = get("kappa");
    hp.theta = get("theta");
    hp.delta = get("delta");
    hp.rho = get("rho");
    price = heston_call_price(hp, get("s0"), get("y0"), T, K);
  } else if (method == "mc") {
    price = mc_price(model, T, K, mc_paths, 0, mc_seed).price;
  } else {
    throw ValidationError("unknown reference method: " + method);
  }
  return implied_vol(price, T, std::log(model.state0[0]), std::log(K));
}

}  // namespace ivx

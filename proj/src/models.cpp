#include "ivx/models.hpp"

#include <cmath>
#include <random>

namespace ivx {

std::function<void(double, const Vec&, Mat&, Vec&)> log_transform(
    std::function<void(double, const Vec&, Mat&, Vec&)> orig_coeffs) {
  return [orig = std::move(orig_coeffs)](double t, const Vec& z, Mat& aij, Vec& ai) {
    Vec state = z;
    state[0] = std::exp(z[0]);
    Mat cov;
    Vec drift;
    orig(t, state, cov, drift);
    const int d = cov.d;
    aij = Mat{d, {}};
    ai = Vec{d, {}};
    double es = state[0];
    aij.at(0, 0) = cov.at(0, 0) / (es * es);
    ai[0] = drift[0] / es - 0.5 * aij.at(0, 0);
    for (int i = 1; i < d; ++i) {
      aij.at(0, i) = aij.at(i, 0) = cov.at(0, i) / es;
      ai[i] = drift[i];
      for (int j = 1; j < d; ++j) aij.at(i, j) = cov.at(i, j);
    }
  };
}

namespace {

// Largest and smallest eigenvalue of a symmetric d x d matrix by cyclic
// Jacobi rotations; d is at most kMaxDim so a fixed sweep count suffices.
std::pair<double, double> sym_eig_range(const Mat& a) {
  const int d = a.d;
  Mat w = a;
  for (int sweep = 0; sweep < 30; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += std::fabs(w.at(p, q));
    if (off == 0.0) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        double apq = w.at(p, q);
        if (apq == 0.0) continue;
        double theta = 0.5 * std::atan2(2.0 * apq, w.at(q, q) - w.at(p, p));
        double c = std::cos(theta), s = std::sin(theta);
        for (int i = 0; i < d; ++i) {
          double wip = w.at(i, p), wiq = w.at(i, q);
          w.at(i, p) = c * wip - s * wiq;
          w.at(i, q) = s * wip + c * wiq;
        }
        for (int i = 0; i < d; ++i) {
          double wpi = w.at(p, i), wqi = w.at(q, i);
          w.at(p, i) = c * wpi - s * wqi;
          w.at(q, i) = s * wpi + c * wqi;
        }
      }
  }
  double lo = w.at(0, 0), hi = w.at(0, 0);
  for (int i = 1; i < d; ++i) {
    lo = std::min(lo, w.at(i, i));
    hi = std::max(hi, w.at(i, i));
  }
  return {lo, hi};
}

void require_in_cylinder(const ModelSpec& model, double t, const Vec& z) {
  if (t < 0.0 || t > model.validity_T)
    throw ValidationError("time outside the declared validity horizon");
  double r2 = 0.0;
  for (int i = 0; i < model.d; ++i) {
    double dz = z[i] - model.z0[i];
    r2 += dz * dz;
  }
  if (r2 > model.cyl_radius * model.cyl_radius * (1.0 + 1e-12))
    throw ValidationError("expansion point outside the declared cylinder");
}

// Iterated central difference of every coefficient entry at once.
struct CoeffFD {
  const ModelSpec* model;
  double t;

  std::pair<Mat, Vec> eval(const Vec& z) const {
    Mat aij;
    Vec ai;
    model->log_coeffs(t, z, aij, ai);
    return {aij, ai};
  }

  std::pair<Mat, Vec> diff(const MIdx& beta, const Vec& z, double h) const {
    int dir = -1;
    for (int i = 0; i < model->d && dir < 0; ++i)
      if (beta[i] > 0) dir = i;
    if (dir < 0) return eval(z);
    MIdx lower = beta;
    lower.bump(dir, -1);
    Vec zp = z, zm = z;
    zp[dir] += h;
    zm[dir] -= h;
    auto [mp, vp] = diff(lower, zp, h);
    auto [mm, vm] = diff(lower, zm, h);
    const int d = model->d;
    Mat mo{d, {}};
    Vec vo{d, {}};
    for (int i = 0; i < d; ++i) {
      vo[i] = (vp[i] - vm[i]) / (2.0 * h);
      for (int j = 0; j < d; ++j) mo.at(i, j) = (mp.at(i, j) - mm.at(i, j)) / (2.0 * h);
    }
    return {mo, vo};
  }

  // Richardson-extrapolated value with an internal consistency check across
  // step sizes.
  std::pair<Mat, Vec> richardson(const MIdx& beta, const Vec& z) const {
    const int d = model->d;
    double scale = 1.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, std::fabs(z[i]));
    double h = std::pow(2.2e-16, 1.0 / (beta.deg() + 4)) * scale;
    auto comb = [&](double step) {
      auto [m1, v1] = diff(beta, z, step);
      auto [m2, v2] = diff(beta, z, 0.5 * step);
      Mat mo{d, {}};
      Vec vo{d, {}};
      for (int i = 0; i < d; ++i) {
        vo[i] = (4.0 * v2[i] - v1[i]) / 3.0;
        for (int j = 0; j < d; ++j) mo.at(i, j) = (4.0 * m2.at(i, j) - m1.at(i, j)) / 3.0;
      }
      return std::pair<Mat, Vec>{mo, vo};
    };
    auto [ma, va] = comb(h);
    auto [mb, vb] = comb(0.5 * h);
    double ref = 1.0;
    for (int i = 0; i < d; ++i) {
      ref = std::max(ref, std::fabs(vb[i]));
      for (int j = 0; j < d; ++j) ref = std::max(ref, std::fabs(mb.at(i, j)));
    }
    for (int i = 0; i < d; ++i) {
      if (std::fabs(va[i] - vb[i]) > 1e-6 * ref)
        throw DerivativeUnavailable("drift derivative estimates disagree across steps");
      for (int j = 0; j < d; ++j)
        if (std::fabs(ma.at(i, j) - mb.at(i, j)) > 1e-6 * ref)
          throw DerivativeUnavailable("diffusion derivative estimates disagree across steps");
    }
    return {mb, vb};
  }
};

}  // namespace

TaylorTensor taylor_tensor(const ModelSpec& model, double t, const Vec& zbar, int N) {
  if (N < 0) throw ValidationError("negative Taylor order");
  if (!model.log_coeffs) throw ValidationError("model has no log-coordinate coefficients");
  require_in_cylinder(model, t, zbar);
  TaylorTensor out;
  out.d = model.d;
  out.N = N;
  out.t = t;
  out.zbar = zbar;
  out.data.d = model.d;
  CoeffFD fd{&model, t};
  for (int n = 0; n <= N; ++n) {
    for_each_midx_of_degree(model.d, n, [&](const MIdx& beta) {
      Mat daij;
      Vec dai;
      bool have = false;
      if (n == 0) {
        model.log_coeffs(t, zbar, daij, dai);
        have = true;
      } else if (model.log_derivs) {
        have = model.log_derivs(t, zbar, beta, daij, dai);
      }
      if (!have) {
        auto [m, v] = fd.richardson(beta, zbar);
        daij = m;
        dai = v;
      }
      daij.d = model.d;
      dai.d = model.d;
      out.data.daij[beta] = daij;
      out.data.dai[beta] = dai;
    });
  }
  return out;
}

void validate_model(const ModelSpec& model, int samples, unsigned rng_seed) {
  if (model.d < 1 || model.d > kMaxDim) throw ValidationError("model dimension out of range");
  if (!(model.ellipt_M > 0.0) || !(model.ellipt_eps > 0.0) || model.ellipt_eps > 1.0)
    throw ValidationError("ellipticity witness requires 0 < eps <= 1 and M > 0");
  if (!(model.cyl_radius > 0.0)) throw ValidationError("cylinder radius must be positive");
  std::mt19937 rng(rng_seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> tdist(0.0, model.validity_T);
  const double tol = 1e-9 * model.ellipt_M;
  for (int s = 0; s < samples; ++s) {
    Vec z = model.z0;
    double r2 = 2.0;
    std::array<double, kMaxDim> dir{};
    while (r2 > 1.0) {
      r2 = 0.0;
      for (int i = 0; i < model.d; ++i) {
        dir[static_cast<size_t>(i)] = unif(rng);
        r2 += dir[static_cast<size_t>(i)] * dir[static_cast<size_t>(i)];
      }
    }
    for (int i = 0; i < model.d; ++i) z[i] += model.cyl_radius * dir[static_cast<size_t>(i)];
    double t = model.time_homogeneous ? 0.0 : tdist(rng);
    Mat aij;
    Vec ai;
    model.log_coeffs(t, z, aij, ai);
    aij.d = model.d;
    for (int i = 0; i < model.d; ++i)
      for (int j = i + 1; j < model.d; ++j)
        if (std::fabs(aij.at(i, j) - aij.at(j, i)) > tol)
          throw ValidationError("diffusion matrix is not symmetric");
    auto [lo, hi] = sym_eig_range(aij);
    if (lo < model.ellipt_eps * model.ellipt_M - tol || hi > model.ellipt_M + tol)
      throw ValidationError("ellipticity witness violated on the cylinder");
  }
}

ModelSpec builtin_cev(double sigma, double beta, double s0) {
  if (!(sigma > 0.0)) throw ValidationError("cev requires sigma > 0");
  if (!(beta > 0.0) || beta > 1.0) throw ValidationError("cev requires beta in (0, 1]");
  if (!(s0 > 0.0)) throw ValidationError("cev requires s0 > 0");
  ModelSpec m;
  m.name = "cev";
  m.d = 1;
  m.params = {{"sigma", sigma}, {"beta", beta}, {"s0", s0}};
  const double x0 = std::log(s0);
  const double slope = 2.0 * (beta - 1.0);
  auto a11 = [sigma, slope](double x) { return sigma * sigma * std::exp(slope * x); };
  m.log_coeffs = [a11](double, const Vec& z, Mat& aij, Vec& ai) {
    aij = Mat{1, {}};
    ai = Vec{1, {}};
    aij.at(0, 0) = a11(z[0]);
    ai[0] = -0.5 * aij.at(0, 0);
  };
  m.log_derivs = [a11, slope](double, const Vec& z, const MIdx& beta_idx, Mat& daij,
                              Vec& dai) {
    double v = std::pow(slope, beta_idx[0]) * a11(z[0]);
    daij = Mat{1, {}};
    dai = Vec{1, {}};
    daij.at(0, 0) = v;
    dai[0] = -0.5 * v;
    return true;
  };
  m.orig_cov_drift = [sigma, beta](double, const Vec& state, Mat& cov, Vec& drift) {
    cov = Mat{1, {}};
    drift = Vec{1, {}};
    double s = std::max(state[0], 0.0);
    cov.at(0, 0) = sigma * sigma * std::pow(s, 2.0 * beta);
  };
  m.state0 = Vec{1, {s0}};
  m.state_floor = Vec{1, {0.0}};
  m.z0 = Vec{1, {x0}};
  m.cyl_radius = 0.5;
  m.ellipt_M = a11(x0 - m.cyl_radius);
  m.ellipt_eps = a11(x0 + m.cyl_radius) / m.ellipt_M;
  validate_model(m);
  return m;
}

ModelSpec builtin_heston(double kappa, double theta, double delta, double rho, double s0,
                         std::optional<double> y0_opt) {
  if (!(kappa > 0.0) || !(theta > 0.0) || !(delta > 0.0))
    throw ValidationError("heston requires kappa, theta, delta > 0");
  if (!(rho > -1.0) || !(rho < 1.0)) throw ValidationError("heston requires |rho| < 1");
  if (!(s0 > 0.0)) throw ValidationError("heston requires s0 > 0");
  const double y0 = y0_opt.value_or(theta);
  if (!(y0 > 0.0)) throw ValidationError("heston requires y0 > 0");
  ModelSpec m;
  m.name = "heston";
  m.d = 2;
  m.params = {{"kappa", kappa}, {"theta", theta}, {"delta", delta},
              {"rho", rho},     {"s0", s0},       {"y0", y0}};
  m.log_coeffs = [kappa, theta, delta, rho](double, const Vec& z, Mat& aij, Vec& ai) {
    aij = Mat{2, {}};
    ai = Vec{2, {}};
    double y = z[1];
    aij.at(0, 0) = y;
    aij.at(0, 1) = aij.at(1, 0) = rho * delta * y;
    aij.at(1, 1) = delta * delta * y;
    ai[0] = -0.5 * y;
    ai[1] = kappa * (theta - y);
  };
  m.log_derivs = [kappa, delta, rho](double, const Vec&, const MIdx& beta_idx, Mat& daij,
                                     Vec& dai) {
    daij = Mat{2, {}};
    dai = Vec{2, {}};
    if (beta_idx[0] == 0 && beta_idx[1] == 1) {
      daij.at(0, 0) = 1.0;
      daij.at(0, 1) = daij.at(1, 0) = rho * delta;
      daij.at(1, 1) = delta * delta;
      dai[0] = -0.5;
      dai[1] = -kappa;
    }
    // Every coefficient is affine in y and independent of x, so any other
    // derivative is identically zero.
    return true;
  };
  m.orig_cov_drift = [kappa, theta, delta, rho](double, const Vec& state, Mat& cov, Vec& drift) {
    cov = Mat{2, {}};
    drift = Vec{2, {}};
    double s = std::max(state[0], 0.0);
    double y = std::max(state[1], 0.0);
    cov.at(0, 0) = y * s * s;
    cov.at(0, 1) = cov.at(1, 0) = rho * delta * y * s;
    cov.at(1, 1) = delta * delta * y;
    drift[1] = kappa * (theta - state[1]);
  };
  m.state0 = Vec{2, {s0, y0}};
  m.state_floor = Vec{2, {0.0, 0.0}};
  m.z0 = Vec{2, {std::log(s0), y0}};
  m.cyl_radius = 0.5 * y0;
  // a(z) = y Q with constant Q, so the witness follows from the eigenvalue
  // range of Q and the y range on the cylinder.
  double disc = std::sqrt((1.0 - delta * delta) * (1.0 - delta * delta) +
                          4.0 * rho * rho * delta * delta);
  double lam_hi = 0.5 * (1.0 + delta * delta + disc);
  double lam_lo = 0.5 * (1.0 + delta * delta - disc);
  m.ellipt_M = lam_hi * (y0 + m.cyl_radius);
  m.ellipt_eps = lam_lo * (y0 - m.cyl_radius) / m.ellipt_M;
  validate_model(m);
  return m;
}

ModelSpec builtin_lv(const LocalVolFn& eta, double s0, const std::string& name) {
  if (!eta.value) throw ValidationError("local vol model requires a value callback");
  if (!(s0 > 0.0)) throw ValidationError("local vol model requires s0 > 0");
  ModelSpec m;
  m.name = name;
  m.d = 1;
  m.params = {{"s0", s0}};
  const double x0 = std::log(s0);
  auto a11 = [eta](double x) {
    double e = eta.value(std::exp(x));
    return e * e;
  };
  m.log_coeffs = [a11](double, const Vec& z, Mat& aij, Vec& ai) {
    aij = Mat{1, {}};
    ai = Vec{1, {}};
    aij.at(0, 0) = a11(z[0]);
    ai[0] = -0.5 * aij.at(0, 0);
  };
  if (eta.d1 && eta.d2) {
    m.log_derivs = [eta](double, const Vec& z, const MIdx& beta_idx, Mat& daij, Vec& dai) {
      int n = beta_idx[0];
      if (n > 2) return false;  // fall back to finite differences
      double s = std::exp(z[0]);
      double e = eta.value(s), e1 = eta.d1(s), e2 = eta.d2(s);
      double v;
      if (n == 0) {
        v = e * e;
      } else if (n == 1) {
        v = 2.0 * e * e1 * s;
      } else {
        v = 2.0 * s * s * e1 * e1 + 2.0 * s * s * e * e2 + 2.0 * s * e * e1;
      }
      daij = Mat{1, {}};
      dai = Vec{1, {}};
      daij.at(0, 0) = v;
      dai[0] = -0.5 * v;
      return true;
    };
  }
  m.orig_cov_drift = [eta](double, const Vec& state, Mat& cov, Vec& drift) {
    cov = Mat{1, {}};
    drift = Vec{1, {}};
    double s = std::max(state[0], 0.0);
    double e = s > 0.0 ? eta.value(s) : 0.0;
    cov.at(0, 0) = e * e * s * s;
  };
  m.state0 = Vec{1, {s0}};
  m.state_floor = Vec{1, {0.0}};
  m.z0 = Vec{1, {x0}};
  m.cyl_radius = 0.25;
  double lo = a11(x0 - m.cyl_radius), hi = lo;
  for (int i = 0; i <= 512; ++i) {
    double x = x0 - m.cyl_radius + 2.0 * m.cyl_radius * i / 512.0;
    double v = a11(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo > 0.0)) throw ValidationError("local volatility vanishes on the cylinder");
  m.ellipt_M = hi * (1.0 + 1e-6);
  m.ellipt_eps = lo / m.ellipt_M * (1.0 - 1e-6);
  validate_model(m);
  return m;
}

ModelSpec builtin_lsv(std::function<void(double, const Vec&, Mat&, Vec&)> orig_coeffs,
                      const Vec& state0, double ellipt_eps, double ellipt_M, double cyl_radius,
                      const std::string& name) {
  if (!orig_coeffs) throw ValidationError("lsv model requires coefficient callbacks");
  if (state0.d != 2) throw ValidationError("lsv model is two-dimensional");
  if (!(state0[0] > 0.0)) throw ValidationError("lsv requires a positive initial price");
  ModelSpec m;
  m.name = name;
  m.d = 2;
  m.orig_cov_drift = orig_coeffs;
  m.log_coeffs = log_transform(orig_coeffs);
  m.state0 = state0;
  m.state_floor = Vec{2, {0.0, 0.0}};
  m.z0 = Vec{2, {std::log(state0[0]), state0[1]}};
  m.cyl_radius = cyl_radius;
  m.ellipt_eps = ellipt_eps;
  m.ellipt_M = ellipt_M;
  validate_model(m);
  return m;
}

}  // namespace ivx

#pragma once

// Exact and ODE-based Steklov spectra on model geometries (disk, 3-ball,
// product cylinders) with radial conformal factors and potentials.  This is
// the operator oracle the symbol calculus in symcalc.hpp is pinned against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "steklovlab/core.hpp"

namespace steklovlab::modelgeo {

using Eigen::VectorXd;

enum class Provenance { exact, ode };

/// Sorted eigenvalue list with multiplicities.
struct SteklovSpectrum {
  int n = 2;  // ambient dimension of the model manifold
  Provenance provenance = Provenance::exact;
  std::vector<std::pair<double, int>> entries;  // (eigenvalue, multiplicity)

  double sigma_max() const { return entries.empty() ? 0.0 : entries.back().first; }

  int total_count() const {
    int c = 0;
    for (const auto& [s, m] : entries) c += m;
    return c;
  }

  /// Counting function #(sigma_k <= sigma), multiplicities included.
  int count_below(double sigma) const {
    int c = 0;
    for (const auto& [s, m] : entries) {
      if (s <= sigma) c += m;
      else break;
    }
    return c;
  }

  /// Eigenvalues repeated per multiplicity, ascending.
  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(total_count());
    for (const auto& [s, m] : entries)
      for (int i = 0; i < m; ++i) out.push_back(s);
    return out;
  }

  void validate(bool connected_boundary = true) const {
    if (entries.empty()) return;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [s, m] : entries) {
      if (m < 1) throw precondition_error("multiplicity must be >= 1");
      if (s < prev) throw precondition_error("eigenvalues must be non-decreasing");
      if (s < -1e-12) throw precondition_error("Steklov eigenvalues are non-negative");
      prev = s;
    }
    if (connected_boundary) {
      if (std::abs(entries.front().first) > 1e-9 || entries.front().second != 1)
        throw precondition_error("spectrum must start with the simple eigenvalue 0");
    }
  }
};

inline void append_eigenvalue(std::vector<std::pair<double, int>>& entries, double sigma,
                              int mult = 1, double merge_tol = 1e-12) {
  if (!entries.empty() && std::abs(entries.back().first - sigma) <= merge_tol) {
    entries.back().second += mult;
  } else {
    entries.emplace_back(sigma, mult);
  }
}

/// sigma_k = k on the unit n-ball; multiplicity 2 (disk, k >= 1) or 2k+1.
inline SteklovSpectrum ball_steklov_exact(int n, int kmax) {
  if (n != 2 && n != 3) throw precondition_error("ball model supports n in {2, 3}");
  if (kmax < 0) throw precondition_error("kmax must be >= 0");
  SteklovSpectrum s;
  s.n = n;
  s.provenance = Provenance::exact;
  for (int k = 0; k <= kmax; ++k) {
    const int mult = (k == 0) ? 1 : (n == 2 ? 2 : 2 * k + 1);
    s.entries.emplace_back(static_cast<double>(k), mult);
  }
  s.validate();
  return s;
}

/// Steklov spectrum of the product cylinder [0, L] x N from the Laplace
/// eigenvalues of the cross-section N.  Each lambda > 0 contributes the pair
/// sqrt(lambda) tanh(sqrt(lambda) L / 2) and sqrt(lambda) coth(sqrt(lambda) L / 2);
/// lambda = 0 contributes 0 and 2/L.
inline SteklovSpectrum cylinder_steklov(double L, const std::vector<double>& boundary_eigenvalues) {
  if (!(L > 0.0)) throw precondition_error("cylinder length must be positive");
  std::vector<double> lam = boundary_eigenvalues;
  for (double l : lam)
    if (l < 0.0) throw precondition_error("cross-section eigenvalues must be non-negative");
  if (!std::is_sorted(lam.begin(), lam.end()))
    throw precondition_error("cross-section eigenvalues must be sorted");
  std::vector<double> sig;
  sig.reserve(2 * lam.size());
  for (double l : lam) {
    if (l == 0.0) {
      sig.push_back(0.0);
      sig.push_back(2.0 / L);
    } else {
      const double mu = std::sqrt(l);
      sig.push_back(mu * std::tanh(mu * L / 2.0));
      sig.push_back(mu / std::tanh(mu * L / 2.0));
    }
  }
  std::sort(sig.begin(), sig.end());
  SteklovSpectrum s;
  s.n = 2;  // surface cylinder by default; counting only uses the entries
  s.provenance = Provenance::exact;
  for (double v : sig) append_eigenvalue(s.entries, v);
  s.validate(false);
  return s;
}

// ---------------------------------------------------------------------------
// Radial mode problems.
// ---------------------------------------------------------------------------

/// Radial profile on [0, 1] with value and first derivative; value(1) = 1 is
/// required for conformal use.
struct RadialProfile {
  std::function<double(double)> value;
  std::function<double(double)> d1;

  static RadialProfile one() {
    return {[](double) { return 1.0; }, [](double) { return 0.0; }};
  }

  /// c(r) = 1 + sum_j a[j] (1 - r)^(j+1).
  static RadialProfile poly_in_one_minus_r(std::vector<double> a) {
    auto val = [a](double r) {
      double u = 1.0 - r, p = u, acc = 1.0;
      for (double cj : a) {
        acc += cj * p;
        p *= u;
      }
      return acc;
    };
    auto der = [a](double r) {
      double u = 1.0 - r, p = 1.0, acc = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        acc -= a[j] * static_cast<double>(j + 1) * p;
        p *= u;
      }
      return acc;
    };
    return {val, der};
  }
};

enum class Scheme { dopri5_adaptive, rk4_fixed };

struct RadialSolveOptions {
  Scheme scheme = Scheme::dopri5_adaptive;
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  double log_step = 0.0;     // RK4 step in s = log r; 0 picks a stable default
  double r_start = 1e-8;     // Frobenius handoff radius
  double declared_tol = 1e-9;
};

namespace detail {

// Mode ODE in s = log r for w with u = r^k w: state (W, V = dW/ds).
//   conformal: V' = -(2k+n-2) V - gamma(r) r (V + k W),  gamma = (n-2)/2 * c'/c
//   potential: V' = -(2k+n-2) V + q(r) r^2 W
// The regular singular point at r = 0 becomes a constant-coefficient decay in
// s, so fixed-step integration is uniformly stable for step < ~2.5/(2k+n).
struct ModeResult {
  double w_end, v_end;
  double max_abs_w;
  bool sign_change;
};

template <typename Rhs>
ModeResult integrate_mode(const Rhs& rhs, double s0, const RadialSolveOptions& opt, int k, int n) {
  namespace odeint = boost::numeric::odeint;
  using state = std::array<double, 2>;
  state y{1.0, 0.0};
  ModeResult res{0, 0, 1.0, false};
  double last_w = y[0];
  auto observe = [&](const state& yy, double) {
    res.max_abs_w = std::max(res.max_abs_w, std::abs(yy[0]));
    if (yy[0] * last_w < 0.0) res.sign_change = true;
    last_w = yy[0];
  };
  if (opt.scheme == Scheme::dopri5_adaptive) {
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<state>>(opt.abs_tol, opt.rel_tol);
    odeint::integrate_adaptive(stepper, rhs, y, s0, 0.0, 1e-3, observe);
  } else {
    // step must respect both the decay-mode stability bound and the accuracy
    // budget of the fixed-order scheme
    double h = opt.log_step > 0.0 ? opt.log_step : std::min(1.25 / (2.0 * k + n), 1e-3);
    const auto nsteps = static_cast<std::size_t>(std::ceil(-s0 / h));
    h = -s0 / static_cast<double>(nsteps);
    odeint::runge_kutta4<state> rk4;
    double s = s0;
    for (std::size_t i = 0; i < nsteps; ++i) {
      rk4.do_step(rhs, y, s, h);
      s += h;
      observe(y, s);
    }
  }
  if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
    throw numeric_error("radial mode integration did not converge");
  res.w_end = y[0];
  res.v_end = y[1];
  return res;
}

}  // namespace detail

/// Steklov value of the degree-k mode for the conformally scaled Laplacian on
/// the unit ball: solves the radial problem for a harmonic function of the
/// metric c*g and returns the boundary normal-derivative-to-value ratio.
inline double radial_conformal_mode(const RadialProfile& profile, int k, int n,
                                    const RadialSolveOptions& opt = {}) {
  if (n != 2 && n != 3) throw precondition_error("radial models support n in {2, 3}");
  if (k < 0) throw precondition_error("mode index must be >= 0");
  if (std::abs(profile.value(1.0) - 1.0) > 1e-9)
    throw precondition_error("conformal profile must equal 1 at r = 1");
  // positivity probe
  for (int i = 0; i <= 32; ++i)
    if (!(profile.value(i / 32.0) > 0.0))
      throw numeric_error("conformal profile must be positive on [0, 1]");
  if (k == 0) return 0.0;  // constants are Steklov-null
  auto rhs = [&profile, k, n](const std::array<double, 2>& y, std::array<double, 2>& dy, double s) {
    const double r = std::exp(s);
    const double c = profile.value(r);
    const double gamma = 0.5 * (n - 2) * profile.d1(r) / c;
    dy[0] = y[1];
    dy[1] = -(2.0 * k + n - 2.0) * y[1] - gamma * r * (y[1] + k * y[0]);
  };
  const double s0 = std::log(opt.r_start);
  auto res = detail::integrate_mode(rhs, s0, opt, k, n);
  return k + res.v_end / res.w_end;
}

/// Steklov value of the degree-k mode for -Delta + q on the unit ball.
/// Signals proximity of a Dirichlet eigenvalue of -Delta + q (mode solution
/// vanishing at or inside the boundary).
inline double radial_potential_mode(const std::function<double(double)>& q, int k, int n,
                                    const RadialSolveOptions& opt = {}) {
  if (n != 2 && n != 3) throw precondition_error("radial models support n in {2, 3}");
  if (k < 0) throw precondition_error("mode index must be >= 0");
  auto rhs = [&q, k, n](const std::array<double, 2>& y, std::array<double, 2>& dy, double s) {
    const double r = std::exp(s);
    dy[0] = y[1];
    dy[1] = -(2.0 * k + n - 2.0) * y[1] + q(r) * r * r * y[0];
  };
  const double s0 = std::log(opt.r_start);
  auto res = detail::integrate_mode(rhs, s0, opt, k, n);
  if (res.sign_change || std::abs(res.w_end) < 1e-8 * res.max_abs_w)
    throw numeric_error("0 is (close to) a Dirichlet eigenvalue of -Delta + q");
  return k + res.v_end / res.w_end;
}

/// Full ODE spectrum of the conformal ball model up to mode kmax.
inline SteklovSpectrum radial_conformal_spectrum(const RadialProfile& profile, int n, int kmax,
                                                 const RadialSolveOptions& opt = {}) {
  if (kmax < 0) throw precondition_error("kmax must be >= 0");
  std::vector<double> sigma(static_cast<std::size_t>(kmax) + 1);
  parallel_for(sigma.size(), [&](std::size_t k) {
    sigma[k] = radial_conformal_mode(profile, static_cast<int>(k), n, opt);
  });
  SteklovSpectrum s;
  s.n = n;
  s.provenance = Provenance::ode;
  for (int k = 0; k <= kmax; ++k)
    s.entries.emplace_back(sigma[k], k == 0 ? 1 : (n == 2 ? 2 : 2 * k + 1));
  s.validate();
  return s;
}

inline SteklovSpectrum radial_potential_spectrum(const std::function<double(double)>& q, int n,
                                                 int kmax, const RadialSolveOptions& opt = {}) {
  if (kmax < 0) throw precondition_error("kmax must be >= 0");
  std::vector<double> sigma(static_cast<std::size_t>(kmax) + 1);
  parallel_for(sigma.size(), [&](std::size_t k) {
    sigma[k] = radial_potential_mode(q, static_cast<int>(k), n, opt);
  });
  SteklovSpectrum s;
  s.n = n;
  s.provenance = Provenance::ode;
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0 && sigma[k] < sigma[k - 1])
      throw numeric_error("potential spectrum is not monotone in the mode index");
    s.entries.emplace_back(sigma[k], k == 0 ? 1 : (n == 2 ? 2 : 2 * k + 1));
  }
  s.validate(false);
  return s;
}

// ---------------------------------------------------------------------------
// Asymptotic fits.
// ---------------------------------------------------------------------------

/// Coefficients of Delta-sigma ~ A + B/k + C/k^2 + ... with the fit residual.
struct AsymptoticFit {
  VectorXd coeffs;     // coeffs[j] multiplies k^(-j)
  double residual = 0; // Euclidean norm of the fit residual
  double k_min = 0, k_max = 0;

  double A() const { return coeffs.size() > 0 ? coeffs[0] : 0.0; }
  double B() const { return coeffs.size() > 1 ? coeffs[1] : 0.0; }
  double C() const { return coeffs.size() > 2 ? coeffs[2] : 0.0; }
};

/// Weighted least squares of (k, delta) pairs in powers 1, 1/k, ..., 1/k^order.
inline AsymptoticFit asymptotic_fit(const std::vector<std::pair<double, double>>& deltas,
                                    int order = 2, double k_min_allowed = 20.0,
                                    const std::vector<double>& weights = {}) {
  if (order < 0) throw precondition_error("model order must be >= 0");
  const auto npts = static_cast<Eigen::Index>(deltas.size());
  if (npts < 3 * std::max(order, 1))
    throw precondition_error("need at least 3 * order data points");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != npts)
    throw precondition_error("weight count must match data count");
  for (Eigen::Index i = 0; i < npts; ++i) {
    if (deltas[i].first < k_min_allowed)
      throw precondition_error("fit points below the asymptotic-regime cutoff");
    for (Eigen::Index j = i + 1; j < npts; ++j)
      if (deltas[i].first == deltas[j].first)
        throw precondition_error("fit abscissae must be distinct");
  }
  Eigen::MatrixXd M(npts, order + 1);
  VectorXd b(npts);
  for (Eigen::Index i = 0; i < npts; ++i) {
    const double w = weights.empty() ? 1.0 : std::sqrt(weights[i]);
    double p = 1.0;
    for (int j = 0; j <= order; ++j) {
      M(i, j) = w * p;
      p /= deltas[i].first;
    }
    b[i] = w * deltas[i].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-12);
  if (qr.rank() < order + 1) throw precondition_error("rank-deficient design matrix");
  AsymptoticFit fit;
  fit.coeffs = qr.solve(b);
  fit.residual = (M * fit.coeffs - b).norm();
  auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
  fit.k_min = lo->first;
  fit.k_max = hi->first;
  return fit;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

inline std::string to_csv(const SteklovSpectrum& s) {
  std::string out = "sigma,multiplicity\n";
  for (const auto& [sig, m] : s.entries)
    out += fmt_double(sig) + "," + std::to_string(m) + "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const SteklovSpectrum& s) {
  nlohmann::ordered_json j;
  j["schema"] = "spectrum/v1";
  j["n"] = s.n;
  j["provenance"] = s.provenance == Provenance::exact ? "exact" : "ode";
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [sig, m] : s.entries) arr.push_back({sig, m});
  j["entries"] = arr;
  return j;
}

inline SteklovSpectrum spectrum_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != std::string("spectrum/v1"))
    throw precondition_error("not a spectrum/v1 document");
  SteklovSpectrum s;
  s.n = j.at("n").get<int>();
  s.provenance = j.at("provenance").get<std::string>() == "exact" ? Provenance::exact : Provenance::ode;
  for (const auto& e : j.at("entries"))
    s.entries.emplace_back(e.at(0).get<double>(), e.at(1).get<int>());
  s.validate(false);
  return s;
}

}  // namespace steklovlab::modelgeo

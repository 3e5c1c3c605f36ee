#pragma once

// Polyhomogeneous symbol arithmetic on the boundary cosphere bundle.
//
// All boundary jets are stored in OUTWARD-normal derivatives.  The closed-form
// coefficients below are normalized once against the radial
// Dirichlet-to-Neumann solver in modelgeo.hpp (the operator oracle); the tests
// pin them mode-by-mode on the ball.  With nu the outward unit normal and
// c_j = d^j c / d nu^j at the boundary:
//
//   conformal factor, c == 1 on the boundary, c_1 = ... = c_J = 0:
//       symbol(Lambda_{cg}) - symbol(Lambda_g)
//           = -((n-2)/4) (-1/2)^J c_{J+1} |xi'|^{-J} + lower order,
//     so J = 0 reproduces the subprincipal shift -((n-2)/4) c_1.
//
//   potential pair, derivatives of p = q2 - q1 of order < j-1 vanishing:
//       symbol(Lambda_{g,q2}) - symbol(Lambda_{g,q1})
//           = -(-1/2)^j (d^{j-1}p/dnu^{j-1}) |xi'|^{-j} + lower order,
//     so j = 1 gives +p/2 at degree -1.

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "steklovlab/core.hpp"

namespace steklovlab::symcalc {

using Eigen::VectorXd;

/// One homogeneous term coeff(x) * |xi'|^degree, isotropic in the covector.
struct HomogeneousTerm {
  int degree = 0;          // homogeneity in the cotangent variable, <= 1
  VectorXd coeff;          // scalar field on the boundary sample grid

  HomogeneousTerm() = default;
  HomogeneousTerm(int deg, VectorXd c) : degree(deg), coeff(std::move(c)) {
    if (degree > 1) throw precondition_error("symbol term degree above 1");
  }

  bool is_zero(double tol = 0.0) const {
    return coeff.size() == 0 || coeff.lpNorm<Eigen::Infinity>() <= tol;
  }

  /// coeff(x) * r^degree at sample point x and covector norm r > 0.
  double evaluate(Eigen::Index point, double r) const {
    if (!(r > 0.0)) throw precondition_error("covector norm must be positive");
    return coeff[point] * std::pow(r, degree);
  }
};

/// Finite sum of homogeneous terms with strictly decreasing degrees; zero
/// coefficients are pruned so the representation is canonical.
struct PolyhomSymbol {
  int dimension = 2;                  // ambient dimension n >= 2
  std::vector<HomogeneousTerm> terms; // strictly decreasing degrees

  PolyhomSymbol() = default;
  explicit PolyhomSymbol(int n) : dimension(n) {
    if (n < 2) throw precondition_error("dimension must be >= 2");
  }

  void add_term(HomogeneousTerm t) {
    if (t.degree > 1) throw precondition_error("symbol term degree above 1");
    if (t.is_zero()) return;
    for (auto& u : terms) {
      if (u.degree == t.degree) {
        if (u.coeff.size() != t.coeff.size())
          throw precondition_error("mismatched sample grids in symbol terms");
        u.coeff += t.coeff;
        prune();
        return;
      }
    }
    terms.push_back(std::move(t));
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.degree > b.degree; });
  }

  void prune(double tol = 0.0) {
    std::erase_if(terms, [tol](const HomogeneousTerm& t) { return t.is_zero(tol); });
  }
};

/// Sum of all terms at (point, r); summed in stored (decreasing-degree) order.
inline double symbol_evaluate(const PolyhomSymbol& s, Eigen::Index point, double r) {
  if (!(r > 0.0))
    throw precondition_error("covector norm must be positive (negative-degree terms are singular at the zero section)");
  double acc = 0.0;
  for (const auto& t : s.terms) acc += t.coeff[point] * std::pow(r, t.degree);
  return acc;
}

enum class JetKind { conformal, potential };

/// Normal-derivative jet at the boundary, sampled on a boundary grid.
/// deriv[j][i] is the j-th outward-normal derivative at sample point i
/// (deriv[0] is the boundary value).
struct BoundaryJet {
  JetKind kind = JetKind::conformal;
  VectorXd grid;                  // boundary sample coordinates
  std::vector<VectorXd> deriv;    // size order+1, each of size grid.size()

  int order() const { return static_cast<int>(deriv.size()) - 1; }

  void validate() const {
    if (deriv.empty()) throw precondition_error("jet holds no derivative orders");
    for (const auto& d : deriv)
      if (d.size() != grid.size())
        throw precondition_error("jet sample count does not match grid");
    if (kind == JetKind::conformal) {
      // standing hypothesis: the conformal factor is 1 on the boundary
      if ((deriv[0].array() - 1.0).abs().maxCoeff() > 1e-12)
        throw precondition_error("conformal jet must have boundary value 1");
    }
  }
};

inline BoundaryJet make_jet(JetKind kind, VectorXd grid, std::vector<VectorXd> deriv) {
  BoundaryJet j{kind, std::move(grid), std::move(deriv)};
  j.validate();
  return j;
}

/// Degree -J coefficient of the conformal symbol difference per unit c_{J+1}.
inline double conformal_order_coefficient(int J, int n) {
  if (J < 0) throw precondition_error("order must be >= 0");
  if (n < 2) throw precondition_error("dimension must be >= 2");
  return -0.25 * (n - 2) * std::pow(-0.5, J);
}

/// Degree -j coefficient of the potential symbol difference per unit
/// outward derivative of order j-1 of (q2 - q1).
inline double potential_order_coefficient(int j) {
  if (j < 1) throw precondition_error("order must be >= 1");
  return -std::pow(-0.5, j);
}

/// Leading symbol-difference term for a conformal factor whose first
/// `first_nonzero - 1` normal derivatives vanish at the boundary.
/// Returns the degree -(first_nonzero - 1) term.
inline HomogeneousTerm conformal_leading_term(const BoundaryJet& jet, int first_nonzero, int n) {
  jet.validate();
  if (jet.kind != JetKind::conformal)
    throw precondition_error("conformal_leading_term expects a conformal jet");
  if (n < 2) throw precondition_error("dimension must be >= 2");
  if (first_nonzero < 1) throw precondition_error("first_nonzero must be >= 1");
  const int J = first_nonzero - 1;
  if (jet.order() < first_nonzero)
    throw precondition_error("jet order too low for requested term");
  for (int m = 1; m <= J; ++m)
    if (jet.deriv[m].lpNorm<Eigen::Infinity>() > 1e-12)
      throw precondition_error("zero-prefix precondition violated: lower normal derivative is nonzero");
  return HomogeneousTerm(-J, conformal_order_coefficient(J, n) * jet.deriv[first_nonzero]);
}

/// Leading symbol-difference term at degree -j for a pair of potentials whose
/// difference has vanishing outward derivatives of order < j-1.
inline HomogeneousTerm potential_leading_term(const BoundaryJet& q1, const BoundaryJet& q2, int j) {
  q1.validate();
  q2.validate();
  if (q1.kind != JetKind::potential || q2.kind != JetKind::potential)
    throw precondition_error("potential_leading_term expects potential jets");
  if (q1.grid.size() != q2.grid.size() ||
      (q1.grid.size() > 0 && (q1.grid - q2.grid).lpNorm<Eigen::Infinity>() > 1e-12))
    throw precondition_error("mismatched sample grids");
  if (j < 1) throw precondition_error("order must be >= 1");
  if (q1.order() < j - 1 || q2.order() < j - 1)
    throw precondition_error("jet order too low for requested term");
  for (int m = 0; m < j - 1; ++m)
    if ((q2.deriv[m] - q1.deriv[m]).lpNorm<Eigen::Infinity>() > 1e-12)
      throw precondition_error("vanishing precondition violated: lower derivative of q2-q1 is nonzero");
  return HomogeneousTerm(-j, potential_order_coefficient(j) * (q2.deriv[j - 1] - q1.deriv[j - 1]));
}

/// Subprincipal-symbol difference field -((n-2)/4) * dc/dnu for a conformal
/// jet; agrees with conformal_leading_term at J = 0 by construction.
inline VectorXd subprincipal_difference(const BoundaryJet& jet, int n) {
  jet.validate();
  if (jet.kind != JetKind::conformal)
    throw precondition_error("subprincipal_difference expects a conformal jet");
  if (n < 2) throw precondition_error("dimension must be >= 2");
  if (jet.order() < 1) throw precondition_error("jet must carry the first normal derivative");
  return conformal_order_coefficient(0, n) * jet.deriv[1];
}

// ---------------------------------------------------------------------------
// Conformal Schrodinger potential on a radial profile.
// ---------------------------------------------------------------------------

namespace detail {

// Fornberg weights for the m-th derivative at x0 on arbitrary nodes.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int m) {
  const int nn = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(nn, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < nn; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(nn);
  for (int i = 0; i < nn; ++i) w[i] = c[i][m];
  return w;
}

// 6th-order derivative of f at x using a 7-point stencil kept inside [lo, hi].
inline double fd_derivative(const std::function<double(double)>& f, double x, int m,
                            double h, double lo, double hi) {
  constexpr int P = 7;
  double start = x - 3.0 * h;
  if (start < lo) start = lo;
  if (start + (P - 1) * h > hi) start = hi - (P - 1) * h;
  std::vector<double> xs(P), fs(P);
  for (int i = 0; i < P; ++i) {
    xs[i] = start + i * h;
    fs[i] = f(xs[i]);
  }
  const auto w = fd_weights(x, xs, m);
  double acc = 0.0;
  for (int i = 0; i < P; ++i) acc += w[i] * fs[i];
  return acc;
}

}  // namespace detail

struct RadialField {
  VectorXd r;       // radial grid in (0, 1]
  VectorXd values;  // field values on the grid
};

/// Pointwise evaluator of q_c, the zeroth-order term that intertwines the
/// conformal Laplacian with a Schrodinger operator:
///   Lambda_{cg} = Lambda_{g, -q_c} - ((n-2)/4) (dc/dnu) Id,   c == 1 on r = 1,
/// with q_c = c^{(n+2)/4} * Delta_{cg}(c^{-(n-2)/4}) computed by high-order
/// finite differences of the profile.  q_c may carry a 1/r singularity at the
/// origin for profiles that are not even in r; the returned evaluator is
/// defined on (0, 1].
inline std::function<double(double)> schrodinger_potential_evaluator(
    std::function<double(double)> profile, int n, double h = 5e-3) {
  if (n < 2) throw precondition_error("dimension must be >= 2");
  if (std::abs(profile(1.0) - 1.0) > 1e-9)
    throw precondition_error("profile must equal 1 at r = 1");
  const double beta = 0.25 * (n - 2);
  return [profile = std::move(profile), n, beta, h](double r) -> double {
    if (!(r > 0.0 && r <= 1.0)) throw precondition_error("q_c evaluator domain is (0, 1]");
    const double c = profile(r);
    if (!(c > 0.0)) throw numeric_error("non-positive conformal profile");
    if (beta == 0.0) return 0.0;  // n = 2: exponent vanishes identically
    auto phi = [&](double s) { return std::pow(profile(s), -beta); };
    const double p1 = detail::fd_derivative(phi, r, 1, h, 0.0, 1.0);
    const double p2 = detail::fd_derivative(phi, r, 2, h, 0.0, 1.0);
    // smoothness guard: re-estimate the second derivative at half step
    const double p2b = detail::fd_derivative(phi, r, 2, 0.5 * h, 0.0, 1.0);
    if (std::abs(p2 - p2b) > 1e-4 * (1.0 + std::abs(p2)))
      throw numeric_error("profile is not smooth enough for finite differencing");
    const double cp = detail::fd_derivative(profile, r, 1, h, 0.0, 1.0);
    const double lap_cg = (p2 + (n - 1) / r * p1 + 0.5 * (n - 2) * (cp / c) * p1) / c;
    return std::pow(c, 0.25 * (n + 2)) * lap_cg;
  };
}

/// q_c sampled on a uniform radial grid of m points in (0, 1].
inline RadialField conformal_schrodinger_potential(const std::function<double(double)>& profile,
                                                   int n, int m = 200) {
  if (m < 2) throw precondition_error("need at least two grid points");
  auto qc = schrodinger_potential_evaluator(profile, n);
  RadialField out;
  out.r.resize(m);
  out.values.resize(m);
  for (int i = 0; i < m; ++i) {
    out.r[i] = static_cast<double>(i + 1) / m;
    out.values[i] = qc(out.r[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization, schema "symcalc/v1".
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const PolyhomSymbol& s, const VectorXd& grid) {
  nlohmann::ordered_json j;
  j["schema"] = "symcalc/v1";
  j["kind"] = "symbol";
  j["n"] = s.dimension;
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& t : s.terms) {
    nlohmann::ordered_json tj;
    tj["degree"] = t.degree;
    tj["coeff"] = std::vector<double>(t.coeff.data(), t.coeff.data() + t.coeff.size());
    j["terms"].push_back(tj);
  }
  j["grid"] = std::vector<double>(grid.data(), grid.data() + grid.size());
  return j;
}

inline nlohmann::ordered_json to_json(const BoundaryJet& jet, int n) {
  nlohmann::ordered_json j;
  j["schema"] = "symcalc/v1";
  j["kind"] = jet.kind == JetKind::conformal ? "conformal" : "potential";
  j["n"] = n;
  j["terms"] = nlohmann::ordered_json::array();
  for (int d = 0; d <= jet.order(); ++d) {
    nlohmann::ordered_json tj;
    tj["degree"] = d;  // derivative order for jets
    tj["coeff"] = std::vector<double>(jet.deriv[d].data(), jet.deriv[d].data() + jet.deriv[d].size());
    j["terms"].push_back(tj);
  }
  j["grid"] = std::vector<double>(jet.grid.data(), jet.grid.data() + jet.grid.size());
  return j;
}

inline PolyhomSymbol symbol_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != std::string("symcalc/v1"))
    throw precondition_error("not a symcalc/v1 document");
  PolyhomSymbol s(j.at("n").get<int>());
  for (const auto& tj : j.at("terms")) {
    auto cv = tj.at("coeff").get<std::vector<double>>();
    s.add_term(HomogeneousTerm(tj.at("degree").get<int>(),
                               Eigen::Map<const VectorXd>(cv.data(), static_cast<Eigen::Index>(cv.size()))));
  }
  return s;
}

}  // namespace steklovlab::symcalc

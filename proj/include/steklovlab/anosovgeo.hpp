#pragma once

// Hyperbolic-surface geodesic engine: the regular-octagon (genus-2) Fuchsian
// group, conjugacy-class enumeration with lengths and Poincare factors, the
// geodesic X-ray transform on group-periodized bump fields, and regularized
// inversion of the assembled X-ray system.
//
// All matrix arithmetic happens in SL(2,R) acting on the upper half-plane by
// Mobius transformations; user-facing coordinates (bump centers) live in the
// Poincare disk, with the Cayley transform mapping the half-plane base point i
// to the disk origin.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "steklovlab/core.hpp"

namespace steklovlab::anosovgeo {

using cdouble = std::complex<double>;
using Mat2 = Eigen::Matrix2d;
using Eigen::VectorXd;

inline cdouble mobius(const Mat2& m, cdouble z) {
  return (m(0, 0) * z + m(0, 1)) / (m(1, 0) * z + m(1, 1));
}

/// Hyperbolic distance in the upper half-plane.
inline double hyp_dist(cdouble z, cdouble w) {
  const double q = 1.0 + std::norm(z - w) / (2.0 * z.imag() * w.imag());
  return std::acosh(std::max(1.0, q));
}

/// Cayley transform: half-plane -> unit disk, i -> 0.
inline cdouble halfplane_to_disk(cdouble z) { return (z - cdouble(0, 1)) / (z + cdouble(0, 1)); }
inline cdouble disk_to_halfplane(cdouble w) {
  return cdouble(0, 1) * (cdouble(1, 0) + w) / (cdouble(1, 0) - w);
}

inline int inverse_letter(int l) { return (l + 4) % 8; }

struct OctagonParams {
  double side_pairing_length = 0.0;  // translation length of each generator
  double inradius = 0.0;             // center to side midpoint
  double circumradius = 0.0;         // center to vertex
};

/// Genus-2 regular-octagon surface group.  Four side-pairing translations of
/// equal length 2 acosh(1 + sqrt 2) whose axes through the base point make
/// angles of pi/4 with each other; letters 0..3 are the generators, 4..7 their
/// inverses.
struct FuchsianGroup {
  std::array<Mat2, 8> letters;
  std::vector<int> relation;  // letter word evaluating to the identity
  OctagonParams octagon;

  const Mat2& letter(int l) const { return letters[static_cast<std::size_t>(l)]; }

  Mat2 word_matrix(const std::vector<int>& w) const {
    Mat2 m = Mat2::Identity();
    for (int l : w) m = m * letter(l);
    return m;
  }

  /// Greedy reduction of z to the Dirichlet domain around i; also reports the
  /// applied motion.  Throws when the iteration cap is hit.
  std::pair<cdouble, Mat2> reduce_with_motion(cdouble z, int cap = 256) const {
    Mat2 applied = Mat2::Identity();
    for (int it = 0; it < cap; ++it) {
      const double d0 = hyp_dist(z, cdouble(0, 1));
      double best = d0 - 1e-13;
      int pick = -1;
      cdouble zbest = z;
      for (int l = 0; l < 8; ++l) {
        const cdouble zz = mobius(letters[l], z);
        const double dd = hyp_dist(zz, cdouble(0, 1));
        if (dd < best) {
          best = dd;
          pick = l;
          zbest = zz;
        }
      }
      if (pick < 0) return {z, applied};
      z = zbest;
      applied = letters[pick] * applied;
    }
    throw numeric_error("fundamental-domain reduction did not terminate");
  }

  cdouble reduce(cdouble z, int cap = 256) const { return reduce_with_motion(z, cap).first; }

  /// Group elements g with d(i, g i) <= radius, found by breadth-first search
  /// over words up to the given depth.  Used to periodize bump fields.
  std::vector<Mat2> ball(double radius, int depth = 5) const {
    auto key = [](const Mat2& m) {
      // projective sign normalization + quantized entries
      double lead = 0.0;
      for (int i = 0; i < 4 && lead == 0.0; ++i)
        if (std::abs(m(i / 2, i % 2)) > 1e-9) lead = m(i / 2, i % 2);
      const double s = lead < 0.0 ? -1.0 : 1.0;
      std::array<long long, 4> k{};
      for (int i = 0; i < 4; ++i)
        k[static_cast<std::size_t>(i)] = llround(s * m(i / 2, i % 2) * 1e8);
      return k;
    };
    const cdouble base(0, 1);
    std::set<std::array<long long, 4>> seen;
    std::vector<Mat2> out, frontier;
    out.push_back(Mat2::Identity());
    frontier.push_back(Mat2::Identity());
    seen.insert(key(Mat2::Identity()));
    for (int d = 0; d < depth; ++d) {
      std::vector<Mat2> next;
      for (const auto& m : frontier) {
        for (int l = 0; l < 8; ++l) {
          Mat2 mm = m * letters[l];
          if (!seen.insert(key(mm)).second) continue;
          next.push_back(mm);
          if (hyp_dist(base, mobius(mm, base)) <= radius) out.push_back(mm);
        }
      }
      frontier = std::move(next);
    }
    return out;
  }

  static FuchsianGroup regular_octagon();
};

inline FuchsianGroup FuchsianGroup::regular_octagon() {
  FuchsianGroup g;
  const double s2 = std::sqrt(2.0);
  Mat2 T;
  T << 1.0 + s2, std::sqrt(2.0 + 2.0 * s2), std::sqrt(2.0 + 2.0 * s2), 1.0 + s2;
  for (int j = 0; j < 4; ++j) {
    // matrix rotation by j*pi/8 rotates tangent directions at i by j*pi/4,
    // giving the eight octagon side directions for the four axes
    const double th = j * std::numbers::pi / 8.0;
    Mat2 R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    g.letters[static_cast<std::size_t>(j)] = R * T * R.transpose();
    g.letters[static_cast<std::size_t>(j + 4)] = R * T.inverse() * R.transpose();
  }
  g.relation = {0, 5, 2, 7, 4, 1, 6, 3};  // g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3
  for (int l = 0; l < 4; ++l) {
    if (std::abs(g.letters[static_cast<std::size_t>(l)].determinant() - 1.0) > 1e-12)
      throw numeric_error("generator determinant is not 1");
    if (std::abs(g.letters[static_cast<std::size_t>(l)].trace()) <= 2.0)
      throw numeric_error("generator is not hyperbolic");
  }
  const Mat2 rel = g.word_matrix(g.relation);
  const double dev = std::min((rel - Mat2::Identity()).lpNorm<Eigen::Infinity>(),
                              (rel + Mat2::Identity()).lpNorm<Eigen::Infinity>());
  if (dev > 1e-10) throw numeric_error("relation word does not evaluate to +-Id");

  g.octagon.side_pairing_length = 2.0 * std::acosh(1.0 + s2);
  g.octagon.inradius = std::acosh(1.0 + s2);
  // vertex: equidistant from the base point and the two adjacent side-pairing
  // images; found by bisection along the angular bisector ray in the disk
  {
    const cdouble base(0, 1);
    const cdouble z0 = halfplane_to_disk(mobius(g.letters[0], base));
    const cdouble z1 = halfplane_to_disk(mobius(g.letters[1], base));
    const double ang = 0.5 * (std::arg(z0) + std::arg(z1));
    auto gap = [&](double r) {
      const cdouble p = disk_to_halfplane(std::polar(r, ang));
      const cdouble q0 = mobius(g.letters[0], base);
      return hyp_dist(p, q0) - hyp_dist(p, base);
    };
    double lo = 0.0, hi = 0.999;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    g.octagon.circumradius = hyp_dist(disk_to_halfplane(std::polar(lo, ang)), base);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Conjugacy classes.
// ---------------------------------------------------------------------------

/// Free-homotopy class of closed geodesics: canonical cyclically-reduced word
/// with the derived geometric data.  Orientation-reversal pairs are merged.
struct ClosedGeodesicClass {
  std::vector<int> word;            // canonical necklace representative
  Mat2 rep;                         // word matrix, normalized to positive trace
  double length = 0.0;              // 2 acosh(tr/2)
  bool primitive = true;
  std::vector<int> primitive_root;  // word = root^multiplicity
  int multiplicity = 1;
  bool inverse_symmetric = false;   // reversal coincides with a rotation
  static constexpr int morse_index = 0;  // no conjugate points on a hyperbolic surface

  double poincare_factor() const { return 2.0 * std::sinh(0.5 * length); }
};

namespace detail {

inline std::vector<int> inverse_word(const std::vector<int>& w) {
  std::vector<int> out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(inverse_letter(*it));
  return out;
}

inline bool cyclically_reduced(const std::vector<int>& w) {
  const std::size_t n = w.size();
  if (n <= 1) return true;
  for (std::size_t j = 0; j < n; ++j)
    if (w[(j + 1) % n] == inverse_letter(w[j])) return false;
  return true;
}

inline std::vector<int> min_rotation(const std::vector<int>& w) {
  std::vector<int> best = w;
  std::vector<int> rot = w;
  for (std::size_t r = 1; r < w.size(); ++r) {
    std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    if (rot < best) best = rot;
  }
  return best;
}

inline std::vector<int> canonical_necklace(const std::vector<int>& w) {
  const auto a = min_rotation(w);
  const auto b = min_rotation(inverse_word(w));
  return std::min(a, b);
}

}  // namespace detail

/// All geometric classes representable by cyclically-reduced words of length
/// <= W, merged over cyclic rotation and orientation reversal.
inline std::vector<ClosedGeodesicClass> enumerate_classes(const FuchsianGroup& g, int W,
                                                          int budget = 8) {
  if (W < 1) throw precondition_error("word length bound must be >= 1");
  if (W > budget) throw precondition_error("word length beyond the enumeration budget");
  std::set<std::vector<int>> canon;
  std::vector<int> word;
  // depth-first generation of reduced words, cyclic-reduction checked at the end
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t len, std::size_t target) {
    if (len == target) {
      if (detail::cyclically_reduced(word)) canon.insert(detail::canonical_necklace(word));
      return;
    }
    for (int l = 0; l < 8; ++l) {
      if (len > 0 && l == inverse_letter(word[len - 1])) continue;
      word.push_back(l);
      rec(len + 1, target);
      word.pop_back();
    }
  };
  for (std::size_t L = 1; L <= static_cast<std::size_t>(W); ++L) rec(0, L);

  std::vector<ClosedGeodesicClass> out;
  out.reserve(canon.size());
  for (const auto& w : canon) {
    ClosedGeodesicClass cls;
    cls.word = w;
    Mat2 m = g.word_matrix(w);
    if (m.trace() < 0.0) m = -m;  // projective normalization
    cls.rep = m;
    const double tr = m.trace();
    if (tr <= 2.0 + 1e-9)
      throw numeric_error("non-hyperbolic word in a torsion-free cocompact group");
    cls.length = 2.0 * std::acosh(0.5 * tr);
    // primitivity: smallest cyclic period of the word
    const std::size_t n = w.size();
    for (std::size_t p = 1; p <= n; ++p) {
      if (n % p != 0) continue;
      bool periodic = true;
      for (std::size_t j = 0; j < n && periodic; ++j) periodic = (w[j] == w[j % p]);
      if (periodic) {
        cls.primitive_root.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
        cls.multiplicity = static_cast<int>(n / p);
        break;
      }
    }
    cls.primitive = cls.multiplicity == 1;
    cls.inverse_symmetric =
        detail::min_rotation(w) == detail::min_rotation(detail::inverse_word(w));
    out.push_back(std::move(cls));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.length != b.length ? a.length < b.length : a.word < b.word;
  });
  return out;
}

struct LengthCollision {
  std::size_t first = 0, second = 0;  // indices into the class list
  double gap = 0.0;
};

/// All unordered pairs of classes whose lengths differ by less than tol; an
/// empty list certifies operational simplicity of the length spectrum at this
/// resolution.
inline std::vector<LengthCollision> length_spectrum_report(
    const std::vector<ClosedGeodesicClass>& classes, double tol) {
  if (classes.empty()) throw precondition_error("no classes given");
  std::vector<std::pair<double, std::size_t>> byLen(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) byLen[i] = {classes[i].length, i};
  std::sort(byLen.begin(), byLen.end());
  std::vector<LengthCollision> out;
  for (std::size_t i = 0; i < byLen.size(); ++i)
    for (std::size_t j = i + 1; j < byLen.size() && byLen[j].first - byLen[i].first < tol; ++j)
      out.push_back({std::min(byLen[i].second, byLen[j].second),
                     std::max(byLen[i].second, byLen[j].second),
                     byLen[j].first - byLen[i].first});
  return out;
}

// ---------------------------------------------------------------------------
// Axis parametrization.
// ---------------------------------------------------------------------------

/// Unit-speed parametrization of the axis of a hyperbolic element:
/// z(t) = frame . (i e^t), with frame in SL(2,R) diagonalizing the
/// representative, so z(t + length) = rep . z(t) exactly.
struct GeodesicArc {
  Mat2 frame;
  double length = 0.0;

  cdouble point(double t) const { return mobius(frame, cdouble(0, std::exp(t))); }
};

inline GeodesicArc axis(const ClosedGeodesicClass& cls) {
  const Mat2& m = cls.rep;
  const double tr = m.trace();
  const double disc = std::sqrt(tr * tr - 4.0);
  const double lp = 0.5 * (tr + disc);  // expanding eigenvalue, > 1
  const double lm = 0.5 * (tr - disc);
  auto eigvec = [&](double lam) {
    Eigen::Vector2d v;
    if (std::abs(m(0, 1)) + std::abs(lam - m(0, 0)) > std::abs(lam - m(1, 1)) + std::abs(m(1, 0))) {
      v << m(0, 1), lam - m(0, 0);
    } else {
      v << lam - m(1, 1), m(1, 0);
    }
    return v.normalized();
  };
  Mat2 V;
  V.col(0) = eigvec(lp);
  V.col(1) = eigvec(lm);
  double det = V.determinant();
  if (det < 0.0) {
    V.col(1) *= -1.0;
    det = -det;
  }
  V /= std::sqrt(det);
  GeodesicArc arc;
  arc.frame = V;
  arc.length = cls.length;
  return arc;
}

// ---------------------------------------------------------------------------
// Periodized bump fields.
// ---------------------------------------------------------------------------

/// Isotropic Gaussian-profile bump in hyperbolic distance, centered in the
/// fundamental domain (disk coordinates).
struct SurfaceBump {
  cdouble center_disk;
  double width = 0.55;
};

/// Deterministic spread of bump centers inside the central octagon.
inline std::vector<SurfaceBump> default_bump_basis(int count, double width = 0.55,
                                                   double disk_radius = 0.58) {
  if (count < 1) throw precondition_error("basis must hold at least one bump");
  std::vector<SurfaceBump> out;
  out.reserve(static_cast<std::size_t>(count));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int b = 0; b < count; ++b) {
    const double r = disk_radius * std::sqrt((b + 0.5) / count);
    out.push_back({std::polar(r, golden * b), width});
  }
  return out;
}

/// Evaluates all basis bumps, periodized over a group ball, at half-plane
/// points.  Construction precomputes the translated centers once.
class BumpFieldBasis {
 public:
  BumpFieldBasis(const FuchsianGroup& g, std::vector<SurfaceBump> basis, double ball_radius = 8.0,
                 int ball_depth = 5)
      : basis_(std::move(basis)) {
    const auto ball = g.ball(ball_radius, ball_depth);
    centers_.resize(basis_.size());
    cut_.resize(basis_.size());
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      const cdouble c = disk_to_halfplane(basis_[b].center_disk);
      centers_[b].reserve(ball.size());
      for (const auto& m : ball) centers_[b].push_back(mobius(m, c));
      // distance cutoff where the Gaussian tail drops below 1e-16
      cut_[b] = std::cosh(basis_[b].width * 6.1);
    }
  }

  std::size_t size() const { return basis_.size(); }
  const std::vector<SurfaceBump>& bumps() const { return basis_; }

  /// Values of every bump at a (reduced) half-plane point.
  VectorXd values(cdouble z) const {
    VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      const double w2 = basis_[b].width * basis_[b].width;
      double acc = 0.0;
      for (const cdouble& c : centers_[b]) {
        const double q = 1.0 + std::norm(z - c) / (2.0 * z.imag() * c.imag());
        if (q > cut_[b]) continue;
        const double d = std::acosh(std::max(1.0, q));
        acc += std::exp(-d * d / w2);
      }
      out[static_cast<Eigen::Index>(b)] = acc;
    }
    return out;
  }

  /// Single linear combination of the basis at a point.
  double combine(cdouble z, const VectorXd& coeffs) const {
    if (coeffs.size() != static_cast<Eigen::Index>(basis_.size()))
      throw precondition_error("coefficient count does not match basis size");
    return values(z).dot(coeffs);
  }

 private:
  std::vector<SurfaceBump> basis_;
  std::vector<std::vector<cdouble>> centers_;
  std::vector<double> cut_;
};

// ---------------------------------------------------------------------------
// X-ray transform.
// ---------------------------------------------------------------------------

/// Length-normalized integral of a scalar field over the closed geodesic of a
/// class; periodic trapezoid quadrature on the exactly-parametrized axis.
inline double xray_function(const FuchsianGroup& g, const std::function<double(cdouble)>& f,
                            const ClosedGeodesicClass& cls, int samples = 256) {
  if (samples < 64) throw precondition_error("need at least 64 quadrature samples");
  const GeodesicArc arc = axis(cls);
  double acc = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = arc.length * j / samples;
    acc += f(g.reduce(arc.point(t)));
  }
  return acc / samples;
}

/// Order-2 transform of the conformal tensor f * metric along the unit-speed
/// geodesic: the quadratic form on the velocity is evaluated explicitly, so
/// agreement with xray_function certifies the tensor reduction.
inline double xray_conformal_tensor(const FuchsianGroup& g, const std::function<double(cdouble)>& f,
                                    const ClosedGeodesicClass& cls, int samples = 256) {
  if (samples < 64) throw precondition_error("need at least 64 quadrature samples");
  const GeodesicArc arc = axis(cls);
  double acc = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = arc.length * j / samples;
    const cdouble z = arc.point(t);
    // |dz/dt|^2 / Im(z)^2: squared hyperbolic speed of the parametrization
    const cdouble w(0, std::exp(t));
    const cdouble den = arc.frame(1, 0) * w + arc.frame(1, 1);
    const double speed2 = std::norm(w / (den * den)) / (z.imag() * z.imag());
    acc += f(g.reduce(z)) * speed2;
  }
  return acc / samples;
}

/// X-ray of the along-orbit derivative of a surface function: integrates
/// d/dt [v(z(t))] by high-order differencing inside a fixed reduction chart.
inline double xray_orbit_derivative(const FuchsianGroup& g, const std::function<double(cdouble)>& v,
                                    const ClosedGeodesicClass& cls, int samples = 256,
                                    double dt = 1e-3) {
  if (samples < 64) throw precondition_error("need at least 64 quadrature samples");
  const GeodesicArc arc = axis(cls);
  double acc = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = arc.length * j / samples;
    const auto [zr, motion] = g.reduce_with_motion(arc.point(t));
    auto h = [&](double u) { return v(mobius(motion, arc.point(t + u))); };
    const double deriv = (-h(2 * dt) + 8 * h(dt) - 8 * h(-dt) + h(-2 * dt)) / (12 * dt);
    acc += deriv;
  }
  return acc / samples;
}

// ---------------------------------------------------------------------------
// X-ray system assembly and inversion.
// ---------------------------------------------------------------------------

struct XRaySystem {
  std::vector<SurfaceBump> basis;
  Eigen::MatrixXd design;  // classes x basis, geodesic averages
  VectorXd singular_values;
  Eigen::Index rank = 0;

  double smallest_singular_value() const {
    return singular_values.size() ? singular_values[singular_values.size() - 1] : 0.0;
  }
  double condition() const {
    const double smin = smallest_singular_value();
    return smin > 0.0 ? singular_values[0] / smin : std::numeric_limits<double>::infinity();
  }
};

inline XRaySystem build_xray_system(const FuchsianGroup& g, const BumpFieldBasis& basis,
                                    const std::vector<ClosedGeodesicClass>& classes,
                                    int samples = 256) {
  if (classes.size() < basis.size())
    throw precondition_error("under-determined system: fewer classes than basis functions");
  XRaySystem sys;
  sys.basis = basis.bumps();
  sys.design.resize(static_cast<Eigen::Index>(classes.size()),
                    static_cast<Eigen::Index>(basis.size()));
  parallel_for(classes.size(), [&](std::size_t ci) {
    const GeodesicArc arc = axis(classes[ci]);
    VectorXd row = VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (int j = 0; j < samples; ++j) {
      const double t = arc.length * j / samples;
      row += basis.values(g.reduce(arc.point(t)));
    }
    sys.design.row(static_cast<Eigen::Index>(ci)) = row / samples;
  });
  if (!sys.design.allFinite()) throw numeric_error("non-finite entries in the design matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.design);
  sys.singular_values = svd.singularValues();
  const double thresh = sys.singular_values[0] * 1e-10 * std::max(sys.design.rows(), sys.design.cols());
  sys.rank = (sys.singular_values.array() > thresh).count();
  return sys;
}

/// Ridge-regularized least squares: minimizes |A x - v|^2 + ridge |x|^2.
inline VectorXd xray_invert(const XRaySystem& sys, const VectorXd& values, double ridge) {
  if (values.size() != sys.design.rows())
    throw precondition_error("value count does not match class count");
  if (ridge < 0.0) throw precondition_error("ridge must be non-negative");
  if (ridge == 0.0) {
    if (sys.rank < sys.design.cols())
      throw precondition_error("rank-deficient system needs a positive ridge");
    return sys.design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(values);
  }
  const Eigen::MatrixXd gram =
      sys.design.transpose() * sys.design +
      ridge * Eigen::MatrixXd::Identity(sys.design.cols(), sys.design.cols());
  return gram.ldlt().solve(sys.design.transpose() * values);
}

// ---------------------------------------------------------------------------
// Export.
// ---------------------------------------------------------------------------

inline std::string word_to_string(const std::vector<int>& w) {
  static const char* names[8] = {"a", "b", "c", "d", "A", "B", "C", "D"};
  std::string s;
  for (int l : w) s += names[l];
  return s;
}

inline std::string to_csv(const std::vector<ClosedGeodesicClass>& classes) {
  std::string out = "word,length,primitive,multiplicity,poincare_factor\n";
  for (const auto& c : classes) {
    out += word_to_string(c.word) + "," + fmt_double(c.length) + "," +
           (c.primitive ? "1" : "0") + "," + std::to_string(c.multiplicity) + "," +
           fmt_double(c.poincare_factor()) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json to_json(const XRaySystem& sys) {
  nlohmann::ordered_json j;
  j["schema"] = "xray/v1";
  j["rows"] = sys.design.rows();
  j["cols"] = sys.design.cols();
  auto mat = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < sys.design.rows(); ++r)
    for (Eigen::Index c = 0; c < sys.design.cols(); ++c) mat.push_back(sys.design(r, c));
  j["matrix"] = mat;  // row-major
  auto sv = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < sys.singular_values.size(); ++i) sv.push_back(sys.singular_values[i]);
  j["singular_values"] = sv;
  j["rank"] = sys.rank;
  auto basis = nlohmann::ordered_json::array();
  for (const auto& b : sys.basis) {
    nlohmann::ordered_json bj;
    bj["center_re"] = b.center_disk.real();
    bj["center_im"] = b.center_disk.imag();
    bj["width"] = b.width;
    basis.push_back(bj);
  }
  j["basis"] = basis;
  return j;
}

}  // namespace steklovlab::anosovgeo

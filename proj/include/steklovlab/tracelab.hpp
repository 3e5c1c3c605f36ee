#pragma once

// Spectral-trace analysis: Weyl-law volume recovery, mollified wave traces,
// length-spectrum peak detection, difference traces for operator pairs, and
// calibrated singular-amplitude extraction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "steklovlab/core.hpp"
#include "steklovlab/modelgeo.hpp"

namespace steklovlab::tracelab {

using modelgeo::SteklovSpectrum;
using cplx = std::complex<double>;

/// Gaussian pass band in frequency; rapidly decaying in time with width
/// 1/bandwidth.
struct GaussianWindow {
  double center = 0.0;
  double bandwidth = 1.0;

  static GaussianWindow for_spectrum(const SteklovSpectrum& s) {
    const double smax = s.sigma_max();
    return {smax / 2.0, smax / 20.0};
  }

  double weight(double sigma) const {
    const double u = (sigma - center) / bandwidth;
    return std::exp(-0.5 * u * u);
  }

  double time_width() const { return 1.0 / bandwidth; }
};

struct TimeGrid {
  double t_min = 0.0, t_max = 1.0, step = 1e-2;

  std::size_t size() const {
    return static_cast<std::size_t>(std::floor((t_max - t_min) / step)) + 1;
  }
  double t(std::size_t i) const { return t_min + static_cast<double>(i) * step; }
};

/// Windowed trace sum_k m_k rho(sigma_k) exp(-i sigma_k t) on a uniform grid.
struct TraceSignal {
  TimeGrid grid;
  GaussianWindow window;
  std::vector<cplx> values;
};

/// Mollified wave trace of a spectrum.  The aliasing guard requires
/// step < pi / sigma_max for non-empty spectra.
inline TraceSignal mollified_trace(const SteklovSpectrum& spec, const GaussianWindow& window,
                                   const TimeGrid& grid) {
  if (!(window.bandwidth > 0.0)) throw precondition_error("window bandwidth must be positive");
  if (!(grid.step > 0.0) || grid.t_max <= grid.t_min)
    throw precondition_error("invalid time grid");
  if (!spec.entries.empty() && grid.step >= std::numbers::pi / spec.sigma_max())
    throw precondition_error("aliasing guard: step must be below pi / sigma_max");
  TraceSignal sig{grid, window, std::vector<cplx>(grid.size(), cplx(0.0, 0.0))};
  if (spec.entries.empty()) return sig;
  // per-eigenvalue weights precomputed once; summation over ascending sigma
  std::vector<std::pair<double, double>> terms;  // (sigma, multiplicity * weight)
  terms.reserve(spec.entries.size());
  for (const auto& [s, m] : spec.entries) terms.emplace_back(s, m * window.weight(s));
  parallel_for(sig.values.size(), [&](std::size_t i) {
    const double t = grid.t(i);
    cplx acc(0.0, 0.0);
    for (const auto& [s, w] : terms) acc += w * std::polar(1.0, -s * t);
    sig.values[i] = acc;
  });
  return sig;
}

/// Mollified trace of the spectral difference: identical window applied to
/// both operators, subtracted pointwise.
inline TraceSignal difference_trace(const SteklovSpectrum& a, const SteklovSpectrum& b,
                                    const GaussianWindow& window, const TimeGrid& grid) {
  if (a.total_count() != b.total_count())
    throw precondition_error("truncation mismatch: spectra carry different mode counts");
  TraceSignal sa = mollified_trace(a, window, grid);
  const TraceSignal sb = mollified_trace(b, window, grid);
  for (std::size_t i = 0; i < sa.values.size(); ++i) sa.values[i] -= sb.values[i];
  return sa;
}

struct Peak {
  double time = 0.0;
  double amplitude = 0.0;
  double width = 0.0;
};

struct PeakReport {
  std::vector<Peak> peaks;
  double threshold = 0.0;
};

/// Local maxima of |signal| above threshold_factor times the median absolute
/// value; widths from half-prominence crossings.
inline PeakReport detect_peaks(const TraceSignal& sig, double threshold_factor = 5.0) {
  const std::size_t n = sig.values.size();
  PeakReport rep;
  if (n < 3) return rep;
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(sig.values[i]);
  std::vector<double> sorted = mag;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  rep.threshold = threshold_factor * sorted[n / 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mag[i] < rep.threshold) continue;
    if (!(mag[i] >= mag[i - 1] && mag[i] > mag[i + 1])) continue;
    // prominence: drop to the highest of the two surrounding valleys
    double left_min = mag[i];
    for (std::size_t j = i; j-- > 0 && mag[j] <= mag[i];) left_min = std::min(left_min, mag[j]);
    double right_min = mag[i];
    for (std::size_t j = i + 1; j < n && mag[j] <= mag[i]; ++j) right_min = std::min(right_min, mag[j]);
    const double prominence = mag[i] - std::max(left_min, right_min);
    const double half = mag[i] - 0.5 * prominence;
    std::size_t lo = i, hi = i;
    while (lo > 0 && mag[lo] > half) --lo;
    while (hi + 1 < n && mag[hi] > half) ++hi;
    rep.peaks.push_back({sig.grid.t(i), mag[i], (hi - lo) * sig.grid.step});
  }
  std::sort(rep.peaks.begin(), rep.peaks.end(),
            [](const Peak& p, const Peak& q) { return p.amplitude > q.amplitude; });
  return rep;
}

// ---------------------------------------------------------------------------
// Calibrated singular amplitudes.
// ---------------------------------------------------------------------------

/// Probe response of the analysis chain to a unit 1/(t - T - i0) singularity:
///   K = i * int_0^inf rho(sigma) exp(-sigma^2 tau^2 / 2) dsigma,
/// in closed form for the Gaussian window (tau is the probe width).
inline cplx unit_singularity_response(const GaussianWindow& w, double tau) {
  const double a = 1.0 / (2.0 * w.bandwidth * w.bandwidth) + 0.5 * tau * tau;
  const double mu = w.center / (2.0 * a * w.bandwidth * w.bandwidth);
  const double expo = a * mu * mu - w.center * w.center / (2.0 * w.bandwidth * w.bandwidth);
  const double sa = std::sqrt(a);
  const double val = std::exp(expo) * std::sqrt(std::numbers::pi) / (2.0 * sa) *
                     std::erfc(-mu * sa);
  return cplx(0.0, 1.0) * val;
}

/// Windowed integrals of the signal around each length, divided by the
/// closed-form unit response; recovers the coefficient of a
/// 1/(t - T - i0) singularity of the underlying trace.
inline std::vector<cplx> extract_invariants(const TraceSignal& sig,
                                            const std::vector<double>& lengths) {
  const double tau = sig.window.time_width();
  for (std::size_t i = 0; i < lengths.size(); ++i)
    for (std::size_t j = i + 1; j < lengths.size(); ++j)
      if (std::abs(lengths[i] - lengths[j]) < 3.0 * tau)
        throw precondition_error("overlapping windows: lengths closer than 3 window widths");
  for (double T : lengths)
    if (T - 4.0 * tau < sig.grid.t_min || T + 4.0 * tau > sig.grid.t_max)
      throw precondition_error("length too close to the time-grid boundary");
  const cplx K = unit_singularity_response(sig.window, tau);
  std::vector<cplx> out(lengths.size());
  const double norm = 1.0 / (tau * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t j = 0; j < lengths.size(); ++j) {
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < sig.values.size(); ++i) {
      const double s = sig.grid.t(i) - lengths[j];
      if (std::abs(s) > 6.0 * tau) continue;
      acc += sig.values[i] * norm * std::exp(-0.5 * s * s / (tau * tau)) * sig.grid.step;
    }
    out[j] = acc / K;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weyl law.
// ---------------------------------------------------------------------------

inline double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0 + 1.0);
}

struct WeylFit {
  double volume = 0.0;         // estimated boundary volume
  double leading = 0.0;        // coefficient of sigma^(n-1) in the counting fit
  double subleading = 0.0;     // coefficient of sigma^(n-2)
};

/// Fits the eigenvalue counting function over the top half of the spectral
/// range with C sigma^(n-1) + D sigma^(n-2) and converts the leading
/// coefficient into the boundary volume.
inline WeylFit weyl_fit(const SteklovSpectrum& spec, int n) {
  if (n < 2) throw precondition_error("dimension must be >= 2");
  if (spec.total_count() < 100)
    throw precondition_error("spectrum too short for a Weyl fit (need >= 100 entries)");
  const double smax = spec.sigma_max();
  if (!(smax > 0.0)) throw precondition_error("spectrum has no positive eigenvalues");
  const int npts = 256;
  Eigen::MatrixXd M(npts, 2);
  Eigen::VectorXd rhs(npts);
  for (int i = 0; i < npts; ++i) {
    const double s = smax / 2.0 + (smax / 2.0) * (i + 0.5) / npts;
    M(i, 0) = std::pow(s, n - 1);
    M(i, 1) = std::pow(s, n - 2);
    rhs[i] = spec.count_below(s);
  }
  Eigen::Vector2d x = M.colPivHouseholderQr().solve(rhs);
  WeylFit fit;
  fit.leading = x[0];
  fit.subleading = x[1];
  fit.volume = x[0] * std::pow(2.0 * std::numbers::pi, n - 1) / unit_ball_volume(n - 1);
  return fit;
}

// ---------------------------------------------------------------------------
// Export.
// ---------------------------------------------------------------------------

inline std::string to_csv(const TraceSignal& sig) {
  std::string out = "t,re,im,abs\n";
  for (std::size_t i = 0; i < sig.values.size(); ++i) {
    out += fmt_double(sig.grid.t(i)) + "," + fmt_double(sig.values[i].real()) + "," +
           fmt_double(sig.values[i].imag()) + "," + fmt_double(std::abs(sig.values[i])) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json to_json(const PeakReport& rep) {
  nlohmann::ordered_json j;
  j["schema"] = "peaks/v1";
  j["threshold"] = rep.threshold;
  j["peaks"] = nlohmann::ordered_json::array();
  for (const auto& p : rep.peaks) {
    nlohmann::ordered_json pj;
    pj["time"] = p.time;
    pj["amplitude"] = p.amplitude;
    pj["width"] = p.width;
    j["peaks"].push_back(pj);
  }
  return j;
}

/// Minimal self-contained SVG line plot of |signal|(t).
inline std::string to_svg(const TraceSignal& sig, int width = 800, int height = 300) {
  const std::size_t n = sig.values.size();
  double vmax = 1e-300;
  for (const auto& v : sig.values) vmax = std::max(vmax, std::abs(v));
  std::string pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 40.0 + (width - 60.0) * static_cast<double>(i) / std::max<std::size_t>(1, n - 1);
    const double y = height - 30.0 - (height - 50.0) * std::abs(sig.values[i]) / vmax;
    pts += fmt_double(x) + "," + fmt_double(y) + " ";
  }
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
  svg += "<text x=\"40\" y=\"" + std::to_string(height - 8) + "\" font-size=\"11\">t = " +
         fmt_double(sig.grid.t_min) + " .. " + fmt_double(sig.grid.t_max) +
         ", peak |S| = " + fmt_double(vmax) + "</text>\n</svg>\n";
  return svg;
}

}  // namespace steklovlab::tracelab

#pragma once

// Fourier-truncated return-operator laboratory on the circle.
//
// A is the multiplier |k|, B realizes the symbol b(x) |k|^{-k_order} as
// multiplication by b composed with the multiplier |k|^{-k_order} (the k = 0
// weight is regularized to 1).  On the truncated basis e^{ikx}, |k| <= N, the
// lab forms U(t) = exp(it(A+B)) by a dense scaling-and-squaring matrix
// exponential, U0(t) exactly on the diagonal, and W(t) = U(t) U0(-t) - Id.
// The symbol of W(t) is read off the matrix bands and compared with the
// transport prediction i * int_0^t b(x + s sign k) ds * |k|^{-k_order}.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "steklovlab/core.hpp"

namespace steklovlab::tracelab {

using cplx = std::complex<double>;

struct OpLabOptions {
  int x_samples = 64;       // circle sample count for symbol comparison
  int extract_bands = 8;    // |band| cap when reading the empirical symbol
  int fourier_band_cap = 32;  // highest retained Fourier mode of b
  double norm_budget = 64.0;  // cap on t * sup|b|
};

struct OpLabResult {
  std::vector<int> frequencies;                        // tested k values (both signs)
  std::vector<double> x;                               // circle samples
  std::vector<std::vector<std::complex<double>>> empirical;  // [freq][x]
  std::vector<std::vector<std::complex<double>>> predicted;  // [freq][x]
  std::vector<double> rel_deviation;                   // per tested frequency
  std::vector<double> band_sup;                        // sup_x |empirical| per frequency
  double mean_rel_deviation = 0.0;
};

/// Runs the truncated return-operator experiment; tested frequencies are
/// k_lo <= |k| <= k_hi.
inline OpLabResult return_operator_lab(const std::function<double(double)>& b, int k_order,
                                       int N, double t, int k_lo, int k_hi,
                                       const OpLabOptions& opt = {}) {
  using Eigen::MatrixXcd;
  using Eigen::VectorXcd;
  const cplx I(0.0, 1.0);
  if (N < 64) throw precondition_error("truncation N must be at least 64");
  if (k_order < 1) throw precondition_error("k_order must be >= 1");
  if (!(k_lo >= 1 && k_hi >= k_lo))
    throw precondition_error("frequency window must satisfy 1 <= k_lo <= k_hi");
  if (k_hi + opt.extract_bands + 8 > N / 2)
    throw precondition_error("N too small for requested frequency window");

  // Fourier coefficients of b by periodic trapezoid quadrature.
  const int nq = 2048;
  double sup_b = 0.0;
  std::vector<cplx> bhat(2 * opt.fourier_band_cap + 1, cplx(0, 0));
  for (int q = 0; q < nq; ++q) {
    const double xq = 2.0 * std::numbers::pi * q / nq;
    const double bq = b(xq);
    sup_b = std::max(sup_b, std::abs(bq));
    for (int d = -opt.fourier_band_cap; d <= opt.fourier_band_cap; ++d)
      bhat[d + opt.fourier_band_cap] += bq * std::exp(-I * static_cast<double>(d) * xq) / double(nq);
  }
  if (std::abs(t) * sup_b > opt.norm_budget)
    throw precondition_error("t * sup|b| exceeds the accuracy budget");

  const int dim = 2 * N + 1;
  auto midx = [N](int m) { return m + N; };
  bool b_is_zero = true;
  for (const auto& c : bhat)
    if (std::abs(c) > 1e-14 * std::max(1.0, sup_b)) b_is_zero = false;

  // U0(-t) on the diagonal, exactly.
  VectorXcd u0inv(dim);
  for (int m = -N; m <= N; ++m) u0inv[midx(m)] = std::exp(-I * t * std::abs(double(m)));

  MatrixXcd W;
  if (t == 0.0 || b_is_zero) {
    W = MatrixXcd::Zero(dim, dim);
  } else {
    MatrixXcd G = MatrixXcd::Zero(dim, dim);
    for (int m = -N; m <= N; ++m) G(midx(m), midx(m)) = I * t * std::abs(double(m));
    for (int col = -N; col <= N; ++col) {
      const double lam = col == 0 ? 1.0 : std::pow(std::abs(double(col)), -double(k_order));
      for (int d = -opt.fourier_band_cap; d <= opt.fourier_band_cap; ++d) {
        const int row = col + d;
        if (row < -N || row > N) continue;
        G(midx(row), midx(col)) += I * t * bhat[d + opt.fourier_band_cap] * lam;
      }
    }
    MatrixXcd U = G.exp();
    W = U * u0inv.asDiagonal();
    W.diagonal().array() -= 1.0;
  }

  OpLabResult res;
  res.x.resize(opt.x_samples);
  for (int j = 0; j < opt.x_samples; ++j)
    res.x[j] = 2.0 * std::numbers::pi * j / opt.x_samples;
  for (int k = k_lo; k <= k_hi; ++k) res.frequencies.push_back(k);
  for (int k = -k_hi; k <= -k_lo; ++k) res.frequencies.push_back(k);

  double devsum = 0.0;
  for (int k : res.frequencies) {
    std::vector<cplx> emp(opt.x_samples, cplx(0, 0));
    for (int d = -opt.extract_bands; d <= opt.extract_bands; ++d) {
      const int row = k + d;
      if (row < -N || row > N) continue;
      const cplx wkd = W(midx(row), midx(k));
      for (int j = 0; j < opt.x_samples; ++j)
        emp[j] += wkd * std::exp(I * static_cast<double>(d) * res.x[j]);
    }
    // transport prediction along the bicharacteristic through (x, k)
    const double sgn = k > 0 ? 1.0 : -1.0;
    const double lam = std::pow(std::abs(double(k)), -double(k_order));
    std::vector<cplx> pred(opt.x_samples);
    const int ns = 512;  // composite Simpson on [0, t]
    for (int j = 0; j < opt.x_samples; ++j) {
      double acc = 0.0;
      for (int s = 0; s <= ns; ++s) {
        const double u = t * s / ns;
        const double wgt = (s == 0 || s == ns) ? 1.0 : (s % 2 ? 4.0 : 2.0);
        acc += wgt * b(res.x[j] + sgn * u);
      }
      pred[j] = I * lam * acc * (t / ns) / 3.0;
    }
    double num = 0.0, den = 0.0, sup = 0.0;
    for (int j = 0; j < opt.x_samples; ++j) {
      num += std::norm(emp[j] - pred[j]);
      den += std::norm(pred[j]);
      sup = std::max(sup, std::abs(emp[j]));
    }
    res.rel_deviation.push_back(den > 0.0 ? std::sqrt(num / den) : std::sqrt(num));
    res.band_sup.push_back(sup);
    devsum += res.rel_deviation.back();
    res.empirical.push_back(std::move(emp));
    res.predicted.push_back(std::move(pred));
  }
  res.mean_rel_deviation = devsum / static_cast<double>(res.rel_deviation.size());
  return res;
}

}  // namespace steklovlab::tracelab

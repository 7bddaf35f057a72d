#pragma once

// Reference implementations used only by the tests. They share no code with
// the library's quadrature: plain midpoint sums over the received plane.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "gsopt/constellation.hpp"

namespace oracle {

using cd = std::complex<double>;

struct Air {
  double mi = 0.0;
  double gmi = 0.0;
};

// MI and GMI by midpoint integration of f(y|x) over a square that covers every
// point plus `sigmas` noise standard deviations, `n` cells per axis.
inline Air midpoint_air(const gsopt::LabeledConstellation& lc, double snr_db, int n = 600, double sigmas = 7.0) {
  const auto& x = lc.points();
  const std::size_t M = x.size();
  const int m = lc.bits();
  const double n0 = std::pow(10.0, -snr_db / 10.0);
  double reach = 0.0;
  for (const auto& p : x) reach = std::max({reach, std::abs(p.real()), std::abs(p.imag())});
  const double half = reach + sigmas * std::sqrt(n0 / 2.0);
  const double h = 2.0 * half / n;
  double mi = 0.0, gmi = 0.0;
  std::vector<double> f(M);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const cd y(-half + (ix + 0.5) * h, -half + (iy + 0.5) * h);
      double total = 0.0;
      for (std::size_t b = 0; b < M; ++b) {
        f[b] = std::exp(-std::norm(y - x[b]) / n0) / (gsopt::kPi * n0);
        total += f[b];
      }
      if (total <= 0.0) continue;
      for (std::size_t a = 0; a < M; ++a) {
        if (f[a] <= 0.0) continue;
        mi += f[a] * std::log2(f[a] * M / total);
        for (int p = 0; p < m; ++p) {
          const unsigned bit = gsopt::label_bit(lc.labeling[a], m, p);
          double own = 0.0;
          for (std::size_t b = 0; b < M; ++b)
            if (gsopt::label_bit(lc.labeling[b], m, p) == bit) own += f[b];
          gmi += f[a] * std::log2(2.0 * own / total);
        }
      }
    }
  }
  const double cell = h * h / static_cast<double>(M);
  return {mi * cell, gmi * cell};
}

// Capacity of binary antipodal signalling +-a in real Gaussian noise of
// variance s2, by a fine midpoint rule in one dimension.
inline double bpsk_capacity(double a, double s2, int n = 200000) {
  const double s = std::sqrt(s2);
  const double lo = -a - 12.0 * s, hi = a + 12.0 * s;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = lo + (i + 0.5) * h;
    const double f1 = std::exp(-(y - a) * (y - a) / (2 * s2));
    const double f0 = std::exp(-(y + a) * (y + a) / (2 * s2));
    const double norm = 1.0 / std::sqrt(2 * gsopt::kPi * s2);
    // I = 1 + E[log2 f1 / (f0 + f1)] with X = +a (symmetric)
    acc += f1 * norm * std::log2(2.0 * f1 / (f0 + f1));
  }
  return acc * h;
}

// Gray QPSK at unit energy: two independent BPSK channels of amplitude 1/sqrt(2).
inline double qpsk_capacity(double snr_db) {
  const double n0 = std::pow(10.0, -snr_db / 10.0);
  return 2.0 * bpsk_capacity(std::sqrt(0.5), n0 / 2.0);
}

}  // namespace oracle

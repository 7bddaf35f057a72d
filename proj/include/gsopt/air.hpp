#pragma once

// Achievable information rates of a labeled constellation on the AWGN
// channel: MI and BICM GMI, by tensor-product quadrature
// (deterministic, see quadrature.hpp) and by stratified Monte Carlo (independent oracle).
//
// All log-densities are handled in nats; results are converted to bits at
// the API boundary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "channel.hpp"
#include "constellation.hpp"
#include "quadrature.hpp"

namespace gsopt {

// ln f_{Y|X}(y|x) for circular complex Gaussian noise of variance n0.
inline double awgn_log_likelihood(cdouble y, cdouble x, const ChannelSpec& ch) {
  return -std::norm(y - x) / ch.n0 - std::log(kPi * ch.n0);
}

namespace detail {

struct PointsSoA {
  std::vector<double> re, im;
  explicit PointsSoA(std::span<const cdouble> pts) : re(pts.size()), im(pts.size()) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      re[i] = pts[i].real();
      im[i] = pts[i].imag();
    }
  }
  std::size_t size() const noexcept { return re.size(); }
};

// Bit masks per position, as doubles for branch-free reductions:
// ones[p][b] = bit p of label(b).
inline std::vector<std::vector<double>> bit_masks(const Labeling& lab) {
  const int m = lab.bits();
  std::vector<std::vector<double>> ones(static_cast<std::size_t>(m), std::vector<double>(lab.size()));
  for (int p = 0; p < m; ++p)
    for (std::size_t b = 0; b < lab.size(); ++b) ones[p][b] = label_bit(lab[b], m, p);
  return ones;
}

// out[b] = (|y - x_a|^2 - |y - x_b|^2) / n0, the log-likelihood of x_b relative
// to the transmitted point, for y = x_a + z. Returns the maximum.
inline double relative_exponents(const PointsSoA& x, double yr, double yi, double self_dist2, double inv_n0,
                                 double* __restrict out) {
  const double* __restrict xr = x.re.data();
  const double* __restrict xi = x.im.data();
  const std::size_t M = x.size();
  double mx = -1e300;
#pragma omp simd reduction(max : mx)
  for (std::size_t b = 0; b < M; ++b) {
    const double dr = yr - xr[b], di = yi - xi[b];
    const double e = (self_dist2 - dr * dr - di * di) * inv_n0;
    out[b] = e;
    mx = std::max(mx, e);
  }
  return mx;
}

// Exponents below this are clamped: the terms are negligible next to the
// self term, and the vector exp leaves its fast path on underflow.
inline constexpr double kMinExponent = -700.0;

// In-place exp(e - shift); returns the sum.
inline double exp_shifted(double* __restrict e, std::size_t M, double shift) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t b = 0; b < M; ++b) {
    const double v = std::exp(std::max(e[b] - shift, kMinExponent));
    e[b] = v;
    s += v;
  }
  return s;
}

inline double masked_sum(const double* __restrict v, const double* __restrict mask, std::size_t M) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t b = 0; b < M; ++b) s += v[b] * mask[b];
  return s;
}

// Information density samples (bits) at one received point y = x_a + z.
struct DensitySample {
  double mi;   // log2 f(y|x_a)/f(y)
  double gmi;  // sum_p log2 f(y|b_p)/f(y)
};

class DensityKernel {
 public:
  DensityKernel(const LabeledConstellation& lc, double n0, bool want_gmi)
      : x_(lc.points()), m_(lc.bits()), inv_n0_(1.0 / n0), want_gmi_(want_gmi), buf_(lc.size()) {
    if (want_gmi_) {
      ones_ = bit_masks(lc.labeling);
      own_.resize(lc.size() * static_cast<std::size_t>(m_));
      for (std::size_t a = 0; a < lc.size(); ++a)
        for (int p = 0; p < m_; ++p) own_[a * m_ + p] = label_bit(lc.labeling[a], m_, p);
    }
  }

  // z is the noise realization; a the transmitted index.
  DensitySample operator()(std::size_t a, double zr, double zi) {
    const double yr = x_.re[a] + zr, yi = x_.im[a] + zi;
    const std::size_t M = x_.size();
    const double shift = relative_exponents(x_, yr, yi, zr * zr + zi * zi, inv_n0_, buf_.data());
    const double total = exp_shifted(buf_.data(), M, shift);
    // ln S_all where S_all = sum_b f(y|x_b)/f(y|x_a)
    const double ln_all = shift + std::log(total);
    DensitySample s{(m_ * kLn2 - ln_all) / kLn2, 0.0};
    if (want_gmi_) {
      double acc = 0.0;
      for (int p = 0; p < m_; ++p) {
        // The own class contains x_a, whose term is exp(-shift) > 0 for the
        // supported quadrature orders, so the log is always finite.
        const double own = own_[a * m_ + p] != 0 ? masked_sum(buf_.data(), ones_[p].data(), M)
                                                  : complement_sum(p, M);
        acc += std::log(own) - std::log(total);
      }
      s.gmi = m_ + acc / kLn2;
    }
    return s;
  }

  int bits() const noexcept { return m_; }

 private:
  double complement_sum(int p, std::size_t M) const {
    const double* __restrict v = buf_.data();
    const double* __restrict mask = ones_[static_cast<std::size_t>(p)].data();
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t b = 0; b < M; ++b) s += v[b] * (1.0 - mask[b]);
    return s;
  }

  PointsSoA x_;
  int m_;
  double inv_n0_;
  bool want_gmi_;
  std::vector<double> buf_;
  std::vector<std::vector<double>> ones_;
  std::vector<double> own_;
};

}  // namespace detail

struct AirValues {
  double mi = 0.0;
  double gmi = 0.0;
};

// MI and GMI in one pass (bit per 2D symbol), clamped to [0, m].
inline AirValues air_quadrature(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q,
                                bool want_gmi = true) {
  const auto nodes = ComplexNodes::tensor(q);
  detail::DensityKernel kernel(lc, ch.n0, want_gmi);
  const double s = std::sqrt(ch.n0);
  const std::size_t M = lc.size();
  double mi = 0.0, gmi = 0.0;
  for (std::size_t a = 0; a < M; ++a) {
    double row_mi = 0.0, row_gmi = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto d = kernel(a, s * nodes.re[k], s * nodes.im[k]);
      row_mi += nodes.weight[k] * d.mi;
      row_gmi += nodes.weight[k] * d.gmi;
    }
    mi += row_mi;
    gmi += row_gmi;
  }
  const double m = lc.bits();
  return {std::clamp(mi / M, 0.0, m), want_gmi ? std::clamp(gmi / M, 0.0, m) : 0.0};
}

inline double mi(const LabeledConstellation& lc, const ChannelSpec& ch,
                 const QuadratureSpec& q = QuadratureSpec::standard()) {
  return air_quadrature(lc, ch, q, false).mi;
}

inline double gmi(const LabeledConstellation& lc, const ChannelSpec& ch,
                  const QuadratureSpec& q = QuadratureSpec::standard()) {
  return air_quadrature(lc, ch, q, true).gmi;
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

struct McAirEstimate {
  McEstimate mi;
  McEstimate gmi;
};

inline constexpr std::size_t kMinMcSamples = 10'000;

// Stratified Monte Carlo: n_samples / M noise draws per transmitted point,
// standard error from the per-stratum sample variances. Deterministic for a
// given seed (mt19937_64 + standard normal transform).
inline McAirEstimate air_monte_carlo(const LabeledConstellation& lc, const ChannelSpec& ch, std::size_t n_samples,
                                     std::uint64_t seed, bool want_gmi = true) {
  if (n_samples < kMinMcSamples) throw InputError("Monte Carlo estimate needs at least 10^4 samples");
  const std::size_t M = lc.size();
  const std::size_t per = std::max<std::size_t>(2, n_samples / M);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(ch.n0 / 2.0));
  detail::DensityKernel kernel(lc, ch.n0, want_gmi);

  double mi_mean = 0.0, gmi_mean = 0.0, mi_var = 0.0, gmi_var = 0.0;
  for (std::size_t a = 0; a < M; ++a) {
    // Welford per stratum.
    double m1 = 0.0, s1 = 0.0, m2 = 0.0, s2 = 0.0;
    for (std::size_t n = 1; n <= per; ++n) {
      const double zr = normal(rng);
      const double zi = normal(rng);
      const auto d = kernel(a, zr, zi);
      const double d1 = d.mi - m1;
      m1 += d1 / n;
      s1 += d1 * (d.mi - m1);
      const double d2 = d.gmi - m2;
      m2 += d2 / n;
      s2 += d2 * (d.gmi - m2);
    }
    mi_mean += m1;
    gmi_mean += m2;
    mi_var += s1 / (per - 1) / per;
    gmi_var += s2 / (per - 1) / per;
  }
  const double Md = static_cast<double>(M);
  McAirEstimate out;
  out.mi = {mi_mean / Md, std::sqrt(mi_var) / Md};
  if (want_gmi) out.gmi = {gmi_mean / Md, std::sqrt(gmi_var) / Md};
  return out;
}

inline McEstimate mi_mc(const LabeledConstellation& lc, const ChannelSpec& ch, std::size_t n_samples,
                        std::uint64_t seed) {
  return air_monte_carlo(lc, ch, n_samples, seed, false).mi;
}

inline McEstimate gmi_mc(const LabeledConstellation& lc, const ChannelSpec& ch, std::size_t n_samples,
                         std::uint64_t seed) {
  return air_monte_carlo(lc, ch, n_samples, seed, true).gmi;
}

}  // namespace gsopt

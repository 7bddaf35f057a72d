#pragma once

// Cached quadrature state for MI / GMI that supports cheap re-evaluation
// when two points move (pairwise optimization) or two labels are swapped
// (binary switching).
//
// For transmitted point a and noise node t = (u, v), y = x_a + sqrt(n0) t,
// the cache holds S(a,k) = sum_b f(y|x_b) / f(y|x_a) and, for GMI, the
// own-class sums Sown(p,a,k) over points sharing bit p with a. Each term is
//   T = exp(|t|^2 - |t + D|^2) = exp(-Dr (Dr + 2u)) * exp(-Di (Di + 2v)),
// D = (x_a - x_b) / sqrt(n0), so on a tensor rule a whole row of terms costs
// 2n exponentials. Both factors are <= exp(max |t|^2), and the self term is 1,
// so S >= 1 and Sown >= 1. With F(p) = Sown(p) / S in [1/S, 1],
//   MI  = m - 1/(M ln2) sum_{a,k} w_k ln S(a,k)
//   GMI = m + 1/(M ln2) sum_{a,k} w_k ln prod_p F(p,a,k).
// A change of the sums changes each F by a factor in [1/S', S], so the
// product of the m factors stays inside double range and one log per node
// suffices for the GMI delta.
//
// The cached sums only ever lose terms that are smaller than the remaining
// sum (the self term stays), so the weighted rounding error per node stays
// near eps * M * w_k exp(|t|^2); rebuild() clears any drift.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "air.hpp"
#include "channel.hpp"
#include "constellation.hpp"
#include "quadrature.hpp"

namespace gsopt {

enum class Objective { kMI, kGMI };

inline const char* to_string(Objective o) { return o == Objective::kMI ? "mi" : "gmi"; }

class IncrementalAir {
 public:
  IncrementalAir(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q, Objective obj,
                 double prune = kDefaultPrune)
      : M_(lc.size()), m_(lc.bits()), obj_(obj), inv_sigma_(1.0 / std::sqrt(ch.n0)), labels_(lc.labeling) {
    require_valid(lc);
    u_ = q.nodes;
    n_ = u_.size();
    // Maximal runs of kept nodes per first coordinate, p-major.
    double total = 0.0;
    for (std::size_t p = 0; p < n_; ++p) {
      std::size_t q0 = 0;
      while (q0 < n_) {
        while (q0 < n_ && q.weights[p] * q.weights[q0] < prune) ++q0;
        if (q0 == n_) break;
        std::size_t q1 = q0;
        while (q1 < n_ && q.weights[p] * q.weights[q1] >= prune) {
          w_.push_back(q.weights[p] * q.weights[q1]);
          total += w_.back();
          ++q1;
        }
        runs_.push_back({p, q0, q1 - q0});
        q0 = q1;
      }
    }
    for (auto& w : w_) w /= total;
    K_ = w_.size();
    mirrored_ = true;
    for (std::size_t p = 0; p < n_; ++p)
      if (std::abs(u_[p] + u_[n_ - 1 - p]) > 1e-14 || q.weights[p] != q.weights[n_ - 1 - p]) mirrored_ = false;
    double t2max = 0.0;
    for (const Run& r : runs_)
      for (std::size_t q = r.q0; q < r.q0 + r.len; ++q) t2max = std::max(t2max, u_[r.p] * u_[r.p] + u_[q] * u_[q]);
    // Every per-row ratio lies in [e^-B, e^B]; keep running products below e^700.
    const double B = std::log(static_cast<double>(M_)) + t2max + 1.0;
    renorm_mi_ = std::max<std::size_t>(1, static_cast<std::size_t>(700.0 / B));
    renorm_gmi_ = std::max<std::size_t>(1, static_cast<std::size_t>(700.0 / (m_ * B)));
    xr_.resize(M_);
    xi_.resize(M_);
    for (std::size_t a = 0; a < M_; ++a) {
      xr_[a] = lc.constellation[a].real();
      xi_[a] = lc.constellation[a].imag();
    }
    rebuild();
  }

  std::size_t size() const noexcept { return M_; }
  std::size_t nodes() const noexcept { return K_; }
  Objective objective() const noexcept { return obj_; }
  double value() const noexcept { return value_; }
  cdouble point(std::size_t a) const { return {xr_[a], xi_[a]}; }
  const Labeling& labeling() const noexcept { return labels_; }

  LabeledConstellation state() const {
    std::vector<cdouble> pts(M_);
    for (std::size_t a = 0; a < M_; ++a) pts[a] = point(a);
    return {Constellation(std::move(pts)), labels_};
  }

  // Replaces all points (e.g. after renormalization) and rebuilds the cache.
  void set_points(std::span<const cdouble> pts) {
    for (std::size_t a = 0; a < M_; ++a) {
      xr_[a] = pts[a].real();
      xi_[a] = pts[a].imag();
    }
    rebuild();
  }

  void rebuild() {
    const std::size_t MK = M_ * K_;
    S_.assign(MK, 0.0);
    invS_.assign(MK, 0.0);
    if (obj_ == Objective::kGMI) {
      Sown_.assign(MK * m_, 0.0);
      invSown_.assign(MK * m_, 0.0);
    }
    rowval_.assign(M_, 0.0);
    for (std::size_t a = 0; a < M_; ++a) exact_row(a, xr_.data(), xi_.data(), true);
    value_ = value_from_rows();
  }

  // ---- pair moves ------------------------------------------------------

  // Prepares the per-pair context (old terms of points i and j in every row).
  void begin_pair(std::size_t i, std::size_t j) {
    pi_ = i;
    pj_ = j;
    fi_.resize(M_ * 2 * n_);
    fj_.resize(M_ * 2 * n_);
    for (std::size_t a = 0; a < M_; ++a) {
      factors(xr_[a] - xr_[i], xi_[a] - xi_[i], &fi_[a * 2 * n_], &fi_[a * 2 * n_ + n_]);
      factors(xr_[a] - xr_[j], xi_[a] - xi_[j], &fj_[a * 2 * n_], &fj_[a * 2 * n_ + n_]);
    }
  }

  // Objective change (bits) if points i, j of the current pair move to ni, nj.
  double move_delta(cdouble ni, cdouble nj) { return apply_move(ni, nj, false); }

  // Applies the move and returns its objective change.
  double commit_move(cdouble ni, cdouble nj) {
    const double d = apply_move(ni, nj, true);
    value_ += d;
    return d;
  }

  // ---- label swaps -----------------------------------------------------

  // Exact objective change (bits) of swapping the labels of points i and j.
  double swap_delta(std::size_t i, std::size_t j) {
    swap_columns(i, j);
    return apply_swap(i, j, false);
  }

  // swap_delta for every pair i < j, in lexicographic order.
  std::vector<double> swap_delta_all() {
    std::vector<double> out;
    out.reserve(M_ * (M_ - 1) / 2);
    for (std::size_t i = 0; i < M_; ++i)
      for (std::size_t j = i + 1; j < M_; ++j) out.push_back(swap_delta(i, j));
    return out;
  }

  double commit_swap(std::size_t i, std::size_t j) {
    swap_columns(i, j);
    const double d = apply_swap(i, j, true);
    value_ += d;
    return d;
  }

  // First-order estimates of swap_delta for every pair i < j, in
  // lexicographic order. Rows i and j, whose own classes change completely,
  // are evaluated exactly; all other rows use the linearized log.
  std::vector<double> swap_screen() {
    const std::size_t MK = M_ * K_;
    std::vector<double> out;
    if (obj_ != Objective::kGMI) return std::vector<double>(M_ * (M_ - 1) / 2, 0.0);
    // G[(b * m + p) * 2 + c] = sum_{a: bit_p(a) = c} sum_k w_k T(a,k,b) / Sown(p,a,k)
    std::vector<double> G(M_ * m_ * 2, 0.0), col(MK), winv(MK * m_);
    for (std::size_t e = 0; e < MK * m_; ++e) winv[e] = w_[e % K_] * invSown_[e];
    for (std::size_t b = 0; b < M_; ++b) {
      column(xr_[b], xi_[b], col.data());
      for (int p = 0; p < m_; ++p) {
        for (std::size_t a = 0; a < M_; ++a) {
          const double* __restrict c = &col[a * K_];
          const double* __restrict s = &winv[own(p, a)];
          double acc = 0.0;
#pragma omp simd reduction(+ : acc)
          for (std::size_t k = 0; k < K_; ++k) acc += c[k] * s[k];
          G[(b * m_ + p) * 2 + bit(a, p)] += acc;
        }
      }
    }
    out.reserve(M_ * (M_ - 1) / 2);
    std::vector<double> tij(K_), tji(K_);
    for (std::size_t i = 0; i < M_; ++i) {
      for (std::size_t j = i + 1; j < M_; ++j) {
        double acc = 0.0;
        row_terms(xr_[i], xi_[i], xr_[j], xi_[j], tij.data());
        row_terms(xr_[j], xi_[j], xr_[i], xi_[i], tji.data());
        for (int p = 0; p < m_; ++p) {
          const unsigned ci = bit(i, p), cj = bit(j, p);
          if (ci == cj) continue;
          const double* Gi = &G[(i * m_ + p) * 2];
          const double* Gj = &G[(j * m_ + p) * 2];
          const double lin = (Gj[ci] - Gi[ci]) + (Gi[cj] - Gj[cj]);
          // rows i and j leave the linearized sums and are added exactly
          const double* soi = &Sown_[own(p, i)];
          const double* soj = &Sown_[own(p, j)];
          const double* isoi = &invSown_[own(p, i)];
          const double* isoj = &invSown_[own(p, j)];
          const double* si = &S_[i * K_];
          const double* sj = &S_[j * K_];
          double exact = 0.0, rm = 0.0;
          for (std::size_t k = 0; k < K_; ++k) {
            rm += w_[k] * ((tij[k] - 1.0) * isoi[k] + (tji[k] - 1.0) * isoj[k]);
            const double ni = std::max(si[k] - soi[k] - tij[k], 0.0) + 1.0;
            const double nj = std::max(sj[k] - soj[k] - tji[k], 0.0) + 1.0;
            exact += w_[k] * std::log(ni * isoi[k] * nj * isoj[k]);
          }
          acc += lin - rm + exact;
        }
        out.push_back(acc / (static_cast<double>(M_) * kLn2));
      }
    }
    return out;
  }

 private:
  struct Run {
    std::size_t p, q0, len;
  };

  unsigned bit(std::size_t a, int p) const { return label_bit(labels_[a], m_, p); }

  // Offset of the own-class sums of row a, bit p (row-contiguous).
  std::size_t own(int p, std::size_t a) const { return (a * m_ + static_cast<std::size_t>(p)) * K_; }

  double value_from_rows() const {
    double acc = 0.0;
    for (double r : rowval_) acc += r;
    return m_ + acc / (static_cast<double>(M_) * kLn2);
  }

  // out[k] = T for a row transmitted at (ar, ai) and a point at (br, bi).
  // Separable factors of T for the offset x_row - x_point = (dx, dy).
  void factors(double dx, double dy, double* __restrict A, double* __restrict B) const {
    const double dr = dx * inv_sigma_, di = dy * inv_sigma_;
    const double* __restrict u = u_.data();
#pragma omp simd
    for (std::size_t p = 0; p < n_; ++p) {
      A[p] = std::exp(std::max(-dr * (dr + 2.0 * u[p]), detail::kMinExponent));
      B[p] = std::exp(std::max(-di * (di + 2.0 * u[p]), detail::kMinExponent));
    }
  }

  void row_terms(double ar, double ai, double br, double bi, double* __restrict out) const {
    double A[kMaxOrder], B[kMaxOrder];
    factors(ar - br, ai - bi, A, B);
    std::size_t k = 0;
    for (const Run& r : runs_) {
      const double a = A[r.p];
      const double* __restrict b = &B[r.q0];
#pragma omp simd
      for (std::size_t q = 0; q < r.len; ++q) out[k + q] = a * b[q];
      k += r.len;
    }
  }

  // out[a*K + k] = terms of the point (px, py) in every row.
  void column(double px, double py, double* __restrict out) const {
    for (std::size_t a = 0; a < M_; ++a) row_terms(xr_[a], xi_[a], px, py, &out[a * K_]);
  }

  // Recomputes row a from point arrays px/py (row transmitted at px[a]).
  // Returns the row's weighted objective sum; stores into the cache when
  // `store`.
  double exact_row(std::size_t a, const double* px, const double* py, bool store) {
    tS_.assign(K_, 0.0);
    const bool gmi = obj_ == Objective::kGMI;
    if (gmi) town_.assign(K_ * m_, 0.0);
    tT_.resize(K_);
    for (std::size_t b = 0; b < M_; ++b) {
      double* __restrict T = tT_.data();
      row_terms(px[a], py[a], px[b], py[b], T);
      double* __restrict S = tS_.data();
#pragma omp simd
      for (std::size_t k = 0; k < K_; ++k) S[k] += T[k];
      if (!gmi) continue;
      for (int p = 0; p < m_; ++p) {
        if (bit(b, p) != bit(a, p)) continue;
        double* __restrict own = &town_[static_cast<std::size_t>(p) * K_];
#pragma omp simd
        for (std::size_t k = 0; k < K_; ++k) own[k] += T[k];
      }
    }
    double acc = 0.0;
    const double* __restrict S = tS_.data();
    const double* __restrict w = w_.data();
    if (!gmi) {
#pragma omp simd reduction(+ : acc)
      for (std::size_t k = 0; k < K_; ++k) acc -= w[k] * std::log(S[k]);
    } else {
      double* __restrict prod = tT_.data();
      std::fill(prod, prod + K_, 1.0);
      tinv_.resize(K_);
      double* __restrict inv = tinv_.data();
#pragma omp simd
      for (std::size_t k = 0; k < K_; ++k) inv[k] = 1.0 / S[k];
      for (int p = 0; p < m_; ++p) {
        const double* __restrict own = &town_[static_cast<std::size_t>(p) * K_];
#pragma omp simd
        for (std::size_t k = 0; k < K_; ++k) prod[k] *= own[k] * inv[k];
      }
#pragma omp simd reduction(+ : acc)
      for (std::size_t k = 0; k < K_; ++k) acc += w[k] * std::log(prod[k]);
    }
    if (store) {
      for (std::size_t k = 0; k < K_; ++k) {
        S_[a * K_ + k] = S[k];
        invS_[a * K_ + k] = 1.0 / S[k];
      }
      if (gmi) {
        for (int p = 0; p < m_; ++p) {
          for (std::size_t k = 0; k < K_; ++k) {
            const double o = town_[static_cast<std::size_t>(p) * K_ + k];
            Sown_[own(p, a) + k] = o;
            invSown_[own(p, a) + k] = 1.0 / o;
          }
        }
      }
      rowval_[a] = acc;
    }
    return acc;
  }

  // Running products of per-row ratios at every node, kept as mantissa and
  // binary exponent so one log per node covers all rows.
  // pm_ collects prod S'/S, po_ (GMI) prod prod_p Sown'/Sown.
  void product_reset() {
    pm_.assign(K_, 1.0);
    pe_.assign(K_, 0.0);
    po_.assign(K_, 1.0);
    poe_.assign(K_, 0.0);
  }

  static void renormalize(std::vector<double>& mant, std::vector<double>& expo) {
    double* __restrict m = mant.data();
    double* __restrict e = expo.data();
    const std::size_t n = mant.size();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t b = std::bit_cast<std::uint64_t>(m[k]);
      m[k] = std::bit_cast<double>((b & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
      e[k] += static_cast<double>(static_cast<std::int64_t>(b >> 52) - 1023);
    }
  }

  void product_renormalize() {
    renormalize(pm_, pe_);
    if (obj_ == Objective::kGMI) renormalize(po_, poe_);
  }

  // sum_k w_k ln(prod S'/S) for MI, sum_k w_k ln(prod_p F'(p) / F(p)) for GMI.
  double product_log_sum() const {
    const double* __restrict m = pm_.data();
    const double* __restrict e = pe_.data();
    const double* __restrict w = w_.data();
    double acc = 0.0;
    if (obj_ == Objective::kMI) {
#pragma omp simd reduction(+ : acc)
      for (std::size_t k = 0; k < K_; ++k) acc += w[k] * (std::log(m[k]) + e[k] * kLn2);
      return acc;
    }
    const double* __restrict om = po_.data();
    const double* __restrict oe = poe_.data();
    const double mb = m_;
#pragma omp simd reduction(+ : acc)
    for (std::size_t k = 0; k < K_; ++k)
      acc += w[k] * ((std::log(om[k]) + oe[k] * kLn2) - mb * (std::log(m[k]) + e[k] * kLn2));
    return acc;
  }

  double move_delta_fast(cdouble ni, cdouble nj) {
    const bool gmi = obj_ == Objective::kGMI;
    const std::size_t nm = gmi ? static_cast<std::size_t>(m_) : 0;
    // Column sums of the new points i, j over rows b != i, j (total, then
    // per-bit own classes); on a mirror symmetric rule, node k of a column is
    // node K-1-k of the moved row.
    ri_.assign(K_ * (1 + nm), 0.0);
    rj_.assign(K_ * (1 + nm), 0.0);
    product_reset();
    switch (gmi ? m_ : 0) {
      case 0: move_rows<0>(ni, nj); break;
      case 2: move_rows<2>(ni, nj); break;
      case 3: move_rows<3>(ni, nj); break;
      case 4: move_rows<4>(ni, nj); break;
      case 5: move_rows<5>(ni, nj); break;
      case 6: move_rows<6>(ni, nj); break;
      case 7: move_rows<7>(ni, nj); break;
      case 8: move_rows<8>(ni, nj); break;
      case 9: move_rows<9>(ni, nj); break;
      default: move_rows<10>(ni, nj); break;
    }
    double acc = gmi ? product_log_sum() : -product_log_sum();
    acc += moved_row_value(pi_, pj_, ni, nj, ri_) - rowval_[pi_];
    acc += moved_row_value(pj_, pi_, nj, ni, rj_) - rowval_[pj_];
    return acc / (static_cast<double>(M_) * kLn2);
  }

  // Accumulates the ratio products of all rows but the moved pair into
  // pm_/pe_ and the moved points' column sums into ri_/rj_. MB = 0 is MI,
  // otherwise GMI with MB bits.
  template <int MB>
  void move_rows(cdouble ni, cdouble nj) {
    const std::size_t i = pi_, j = pj_;
    const std::size_t every = MB == 0 ? renorm_mi_ : renorm_gmi_;
    std::size_t count = 0;
    for (std::size_t a = 0; a < M_; ++a) {
      if (a == i || a == j) continue;
      double Ai[kMaxOrder], Bi[kMaxOrder], Aj[kMaxOrder], Bj[kMaxOrder];
      factors(xr_[a] - ni.real(), xi_[a] - ni.imag(), Ai, Bi);
      factors(xr_[a] - nj.real(), xi_[a] - nj.imag(), Aj, Bj);
      const double* __restrict Aoi = &fi_[a * 2 * n_];
      const double* __restrict Boi = Aoi + n_;
      const double* __restrict Aoj = &fj_[a * 2 * n_];
      const double* __restrict Boj = Aoj + n_;
      const double* __restrict invS = &invS_[a * K_];
      const double* __restrict iso = MB == 0 ? nullptr : &invSown_[own(0, a)];
      double* __restrict pm = pm_.data();
      double* __restrict po = po_.data();
      double* __restrict si = ri_.data();
      double* __restrict sj = rj_.data();
      // own-class indicators of row a relative to i and j, per bit
      double ci[MB == 0 ? 1 : MB], cj[MB == 0 ? 1 : MB];
      for (int p = 0; p < MB; ++p) {
        ci[p] = bit(i, p) == bit(a, p) ? 1.0 : 0.0;
        cj[p] = bit(j, p) == bit(a, p) ? 1.0 : 0.0;
      }
      const std::size_t K = K_;
      std::size_t k = 0;
      for (const Run& r : runs_) {
        const double ai = Ai[r.p], aj = Aj[r.p], aoi = Aoi[r.p], aoj = Aoj[r.p];
        const double* __restrict bi = &Bi[r.q0];
        const double* __restrict bj = &Bj[r.q0];
        const double* __restrict boi = &Boi[r.q0];
        const double* __restrict boj = &Boj[r.q0];
#pragma omp simd
        for (std::size_t q = 0; q < r.len; ++q) {
          const std::size_t e = k + q;
          const double tni = ai * bi[q], tnj = aj * bj[q];
          const double di = tni - aoi * boi[q], dj = tnj - aoj * boj[q];
          si[e] += tni;
          sj[e] += tnj;
          pm[e] *= 1.0 + (di + dj) * invS[e];
          if constexpr (MB > 0) {
            double prod = 1.0;
#pragma GCC unroll 10
            for (int p = 0; p < MB; ++p) {
              prod *= 1.0 + (ci[p] * di + cj[p] * dj) * iso[p * K + e];
              si[(p + 1) * K + e] += ci[p] * tni;
              sj[(p + 1) * K + e] += cj[p] * tnj;
            }
            po[e] *= prod;
          }
        }
        k += r.len;
      }
      if (++count % every == 0) product_renormalize();
    }
  }

  // Objective sum of the moved row r (new position x) from the reversed
  // column sums `rev`; `other` is the other moved point, at y.
  double moved_row_value(std::size_t r, std::size_t other, cdouble x, cdouble y, const std::vector<double>& rev) {
    const bool gmi = obj_ == Objective::kGMI;
    tT_.resize(K_);
    double* __restrict t = tT_.data();
    row_terms(x.real(), x.imag(), y.real(), y.imag(), t);
    tS_.resize(K_);
    double* __restrict S = tS_.data();
    const double* __restrict rs = rev.data();
#pragma omp simd
    for (std::size_t k = 0; k < K_; ++k) S[k] = 1.0 + t[k] + rs[K_ - 1 - k];
    const double* __restrict w = w_.data();
    double acc = 0.0;
    if (!gmi) {
#pragma omp simd reduction(+ : acc)
      for (std::size_t k = 0; k < K_; ++k) acc -= w[k] * std::log(S[k]);
      return acc;
    }
    prod_.assign(K_, 1.0);
    double* __restrict prod = prod_.data();
    for (int p = 0; p < m_; ++p) {
      const double c = bit(other, p) == bit(r, p) ? 1.0 : 0.0;
      const double* __restrict ro = &rev[K_ * (1 + p)];
#pragma omp simd
      for (std::size_t k = 0; k < K_; ++k) prod[k] *= (1.0 + c * t[k] + ro[K_ - 1 - k]) / S[k];
    }
#pragma omp simd reduction(+ : acc)
    for (std::size_t k = 0; k < K_; ++k) acc += w[k] * std::log(prod[k]);
    return acc;
  }

  double apply_move(cdouble ni, cdouble nj, bool store) {
    if (!store) return mirrored_ ? move_delta_fast(ni, nj) : apply_move_exact(ni, nj, false);
    return apply_move_exact(ni, nj, true);
  }

  // Row-by-row update with per-row logs; used for commits.
  double apply_move_exact(cdouble ni, cdouble nj, bool store) {
    const std::size_t i = pi_, j = pj_;
    col_i_.resize(M_ * K_);
    col_j_.resize(M_ * K_);
    column(xr_[i], xi_[i], col_i_.data());
    column(xr_[j], xi_[j], col_j_.data());
    const bool gmi = obj_ == Objective::kGMI;
    px_ = xr_;
    py_ = xi_;
    px_[i] = ni.real();
    py_[i] = ni.imag();
    px_[j] = nj.real();
    py_[j] = nj.imag();
    di_.resize(K_);
    dj_.resize(K_);
    tT_.resize(K_);
    tS_.resize(K_);

    double acc = 0.0;
    for (std::size_t a = 0; a < M_; ++a) {
      if (a == i || a == j) continue;
      const std::size_t o = a * K_;
      double* __restrict di = di_.data();
      double* __restrict dj = dj_.data();
      row_terms(xr_[a], xi_[a], ni.real(), ni.imag(), di);
      row_terms(xr_[a], xi_[a], nj.real(), nj.imag(), dj);
      const double* __restrict oi = &col_i_[o];
      const double* __restrict oj = &col_j_[o];
      double* __restrict S = &S_[o];
      double* __restrict invS = &invS_[o];
      double* __restrict Snew = tS_.data();
      const double* __restrict w = w_.data();
#pragma omp simd
      for (std::size_t k = 0; k < K_; ++k) {
        di[k] -= oi[k];
        dj[k] -= oj[k];
        Snew[k] = S[k] + di[k] + dj[k];
      }
      double row = 0.0;
      if (!gmi) {
#pragma omp simd reduction(+ : row)
        for (std::size_t k = 0; k < K_; ++k) row -= w[k] * std::log(Snew[k] * invS[k]);
      } else {
        // ratio[k] = S / S'; prod[k] = prod_p F'(p) / F(p)
        double* __restrict ratio = tT_.data();
        prod_.resize(K_);
        double* __restrict prod = prod_.data();
#pragma omp simd
        for (std::size_t k = 0; k < K_; ++k) {
          ratio[k] = S[k] / Snew[k];
          prod[k] = 1.0;
        }
        for (int p = 0; p < m_; ++p) {
          const double ci = bit(i, p) == bit(a, p) ? 1.0 : 0.0;
          const double cj = bit(j, p) == bit(a, p) ? 1.0 : 0.0;
          double* __restrict so = &Sown_[own(p, a)];
          double* __restrict iso = &invSown_[own(p, a)];
          if (ci == 0.0 && cj == 0.0) {
#pragma omp simd
            for (std::size_t k = 0; k < K_; ++k) prod[k] *= ratio[k];
            continue;
          }
#pragma omp simd
          for (std::size_t k = 0; k < K_; ++k) {
            const double ns = so[k] + ci * di[k] + cj * dj[k];
            prod[k] *= ns * iso[k] * ratio[k];
          }
          if (store) {
            for (std::size_t k = 0; k < K_; ++k) {
              so[k] += ci * di[k] + cj * dj[k];
              iso[k] = 1.0 / so[k];
            }
          }
        }
#pragma omp simd reduction(+ : row)
        for (std::size_t k = 0; k < K_; ++k) row += w[k] * std::log(prod[k]);
      }
      if (store) {
        for (std::size_t k = 0; k < K_; ++k) {
          S[k] = Snew[k];
          invS[k] = 1.0 / Snew[k];
        }
        rowval_[a] += row;
      }
      acc += row;
    }
    // Rows of the moved points: new transmitted positions.
    for (std::size_t a : {i, j}) {
      const double before = rowval_[a];
      acc += exact_row(a, px_.data(), py_.data(), store) - before;
    }
    if (store) {
      xr_ = px_;
      xi_ = py_;
    }
    return acc / (static_cast<double>(M_) * kLn2);
  }

  void swap_columns(std::size_t i, std::size_t j) {
    scol_i_.resize(M_ * K_);
    scol_j_.resize(M_ * K_);
    column(xr_[i], xi_[i], scol_i_.data());
    column(xr_[j], xi_[j], scol_j_.data());
  }

  // Uses the column terms of points i and j in scol_i_ / scol_j_.
  double apply_swap(std::size_t i, std::size_t j, bool store) {
    if (obj_ != Objective::kGMI) return 0.0;
    std::vector<int> diff;
    for (int p = 0; p < m_; ++p)
      if (bit(i, p) != bit(j, p)) diff.push_back(p);
    if (diff.empty()) return 0.0;

    double acc = 0.0;
    prod_.resize(K_);
    for (std::size_t a = 0; a < M_; ++a) {
      if (a == i || a == j) continue;
      const std::size_t o = a * K_;
      const double* __restrict ci = &scol_i_[o];
      const double* __restrict cj = &scol_j_[o];
      const double* __restrict w = w_.data();
      double* __restrict prod = prod_.data();
      std::fill(prod, prod + K_, 1.0);
      for (int p : diff) {
        double* __restrict so = &Sown_[own(p, a)];
        double* __restrict iso = &invSown_[own(p, a)];
        // the own class trades point i for j, or j for i
        const double sign = bit(a, p) == bit(i, p) ? 1.0 : -1.0;
#pragma omp simd
        for (std::size_t k = 0; k < K_; ++k) prod[k] *= (so[k] + sign * (cj[k] - ci[k])) * iso[k];
        if (store) {
          for (std::size_t k = 0; k < K_; ++k) {
            so[k] += sign * (cj[k] - ci[k]);
            iso[k] = 1.0 / so[k];
          }
        }
      }
      double row = 0.0;
#pragma omp simd reduction(+ : row)
      for (std::size_t k = 0; k < K_; ++k) row += w[k] * std::log(prod[k]);
      if (store) rowval_[a] += row;
      acc += row;
    }
    // The swapped rows change their own classes completely.
    const double before[] = {rowval_[i], rowval_[j]};
    const Labeling old_labels = labels_;
    labels_ = labels_.swapped(i, j);
    acc += exact_row(i, xr_.data(), xi_.data(), store) - before[0];
    acc += exact_row(j, xr_.data(), xi_.data(), store) - before[1];
    if (!store) labels_ = old_labels;
    return acc / (static_cast<double>(M_) * kLn2);
  }

  static constexpr std::size_t kMaxOrder = 512;

  std::size_t M_;
  int m_;
  Objective obj_;
  double inv_sigma_;
  Labeling labels_;
  double value_ = 0.0;

  std::vector<double> u_;
  std::size_t n_ = 0;
  std::vector<Run> runs_;
  std::vector<double> w_;
  std::size_t K_ = 0;

  std::vector<double> xr_, xi_;
  std::vector<double> S_, invS_, Sown_, invSown_;
  std::vector<double> rowval_;

  std::vector<double> tS_, tT_, tinv_, town_, prod_;
  std::size_t pi_ = 0, pj_ = 0;
  std::vector<double> col_i_, col_j_, scol_i_, scol_j_;
  std::vector<double> px_, py_, di_, dj_;
  std::vector<double> pm_, pe_, po_, poe_, fi_, fj_, ti_, tj_, ri_, rj_;
  bool mirrored_ = false;
  std::size_t renorm_mi_ = 1, renorm_gmi_ = 1;
};

}  // namespace gsopt

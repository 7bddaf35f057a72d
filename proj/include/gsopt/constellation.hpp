#pragma once

// Constellation / labeling data model and the square-QAM baseline generator.
//
// Points are unit-average-energy complex numbers with uniform priors. A label
// is an integer in [0, M); bit position p (0-based, p = 0 is B_1) of a label
// is the integer bit (m - 1 - p), i.e. B_1 is the most significant bit.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace gsopt {

inline constexpr std::size_t kMinPoints = 4;
inline constexpr std::size_t kMaxPoints = 1024;
inline constexpr double kEnergyTolerance = 1e-12;

// Value of bit B_{p+1} (p = 0 is the most significant) in an m-bit label.
inline constexpr unsigned label_bit(unsigned label, int m, int p) noexcept {
  return (label >> (m - 1 - p)) & 1u;
}

inline double average_energy(std::span<const cdouble> points) {
  if (points.empty()) return 0.0;
  double e = 0.0;
  for (const auto& x : points) e += std::norm(x);
  return e / static_cast<double>(points.size());
}

// Scales the points by one positive factor so the average energy is 1.
inline std::vector<cdouble> normalize(std::span<const cdouble> points) {
  const double e = average_energy(points);
  if (!(e > 0.0) || !is_finite(e)) {
    throw InputError("normalize: average energy is zero or not finite, scale undefined");
  }
  const double g = 1.0 / std::sqrt(e);
  std::vector<cdouble> out(points.begin(), points.end());
  for (auto& x : out) x *= g;
  return out;
}

class Constellation {
 public:
  Constellation() = default;

  // Takes the points as given. Use normalize() first if needed; validate()
  // reports an energy violation otherwise.
  explicit Constellation(std::vector<cdouble> points) : points_(std::move(points)) {}

  static Constellation normalized(std::span<const cdouble> points) {
    return Constellation(normalize(points));
  }

  std::size_t size() const noexcept { return points_.size(); }
  int bits() const noexcept { return is_power_of_two(size()) ? log2_exact(size()) : -1; }
  const std::vector<cdouble>& points() const noexcept { return points_; }
  const cdouble& operator[](std::size_t i) const { return points_[i]; }
  double energy() const { return average_energy(points_); }

  friend bool operator==(const Constellation&, const Constellation&) = default;

 private:
  std::vector<cdouble> points_;
};

class Labeling {
 public:
  Labeling() = default;
  explicit Labeling(std::vector<unsigned> map) : map_(std::move(map)) {}

  static Labeling identity(std::size_t M) {
    std::vector<unsigned> map(M);
    std::iota(map.begin(), map.end(), 0u);
    return Labeling(std::move(map));
  }

  std::size_t size() const noexcept { return map_.size(); }
  int bits() const noexcept { return is_power_of_two(size()) ? log2_exact(size()) : -1; }
  unsigned operator[](std::size_t i) const { return map_[i]; }
  const std::vector<unsigned>& map() const noexcept { return map_; }

  bool is_bijection() const {
    std::vector<bool> seen(map_.size(), false);
    for (unsigned l : map_) {
      if (l >= map_.size() || seen[l]) return false;
      seen[l] = true;
    }
    return true;
  }

  Labeling swapped(std::size_t i, std::size_t j) const {
    Labeling out = *this;
    std::swap(out.map_[i], out.map_[j]);
    return out;
  }

  friend bool operator==(const Labeling&, const Labeling&) = default;

 private:
  std::vector<unsigned> map_;
};

struct LabeledConstellation {
  Constellation constellation;
  Labeling labeling;

  std::size_t size() const noexcept { return constellation.size(); }
  int bits() const noexcept { return constellation.bits(); }
  const std::vector<cdouble>& points() const noexcept { return constellation.points(); }

  friend bool operator==(const LabeledConstellation&, const LabeledConstellation&) = default;
};

enum class ViolationCode {
  kSizeNotPowerOfTwo,
  kSizeOutOfRange,
  kNonFinitePoint,
  kEnergy,
  kLabelCount,
  kLabelOutOfRange,
  kLabelNotBijective,
};

inline const char* to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::kSizeNotPowerOfTwo: return "size_not_power_of_two";
    case ViolationCode::kSizeOutOfRange: return "size_out_of_range";
    case ViolationCode::kNonFinitePoint: return "non_finite_point";
    case ViolationCode::kEnergy: return "energy";
    case ViolationCode::kLabelCount: return "label_count";
    case ViolationCode::kLabelOutOfRange: return "label_out_of_range";
    case ViolationCode::kLabelNotBijective: return "label_not_bijective";
  }
  return "unknown";
}

struct Violation {
  ViolationCode code;
  std::string detail;
};

inline std::vector<Violation> validate(const LabeledConstellation& lc) {
  std::vector<Violation> out;
  const std::size_t M = lc.constellation.size();
  if (!is_power_of_two(M)) {
    out.push_back({ViolationCode::kSizeNotPowerOfTwo, "M=" + std::to_string(M) + " is not a power of two"});
  }
  if (M < kMinPoints || M > kMaxPoints) {
    out.push_back({ViolationCode::kSizeOutOfRange, "M=" + std::to_string(M) + " outside [4, 1024]"});
  }
  bool finite = true;
  for (std::size_t i = 0; i < M; ++i) {
    const auto& x = lc.constellation[i];
    if (!is_finite(x.real()) || !is_finite(x.imag())) {
      out.push_back({ViolationCode::kNonFinitePoint, "point " + std::to_string(i) + " is not finite"});
      finite = false;
    }
  }
  if (finite && M > 0) {
    const double e = lc.constellation.energy();
    if (std::abs(e - 1.0) > kEnergyTolerance) {
      out.push_back({ViolationCode::kEnergy, "average energy " + std::to_string(e) + " != 1"});
    }
  }
  if (lc.labeling.size() != M) {
    out.push_back({ViolationCode::kLabelCount, std::to_string(lc.labeling.size()) + " labels for " +
                                                   std::to_string(M) + " points"});
    return out;
  }
  std::vector<int> uses(M, 0);
  for (std::size_t i = 0; i < M; ++i) {
    const unsigned l = lc.labeling[i];
    if (l >= M) {
      out.push_back({ViolationCode::kLabelOutOfRange, "label of point " + std::to_string(i) + " out of range"});
    } else {
      ++uses[l];
    }
  }
  std::size_t dup = 0, missing = 0;
  for (int u : uses) {
    if (u > 1) dup += static_cast<std::size_t>(u - 1);
    if (u == 0) ++missing;
  }
  if (dup > 0 || (missing > 0 && out.empty())) {
    out.push_back({ViolationCode::kLabelNotBijective, std::to_string(dup) + " duplicate label(s), " +
                                                          std::to_string(missing) + " unused label(s)"});
  }
  return out;
}

inline bool is_valid(const LabeledConstellation& lc) { return validate(lc).empty(); }

// Throws InputError listing every violation.
inline void require_valid(const LabeledConstellation& lc) {
  const auto v = validate(lc);
  if (v.empty()) return;
  std::string msg = "invalid constellation:";
  for (const auto& x : v) msg += std::string("\n  [") + to_string(x.code) + "] " + x.detail;
  throw InputError(msg);
}

// Binary-reflected Gray sequence for one real axis of a square QAM with m
// bits per symbol: 2^(m/2) entries of m/2 bits each.
inline std::vector<unsigned> gray_labeling(int m) {
  if (m < 2 || m % 2 != 0) {
    throw InputError("gray_labeling: bits per symbol must be even and >= 2, got " + std::to_string(m));
  }
  const unsigned n = 1u << (m / 2);
  std::vector<unsigned> seq(n);
  for (unsigned k = 0; k < n; ++k) seq[k] = k ^ (k >> 1);
  return seq;
}

// Square M-QAM with per-axis Gray product labeling. The label of point
// (column c, row r) is (gray[c] << m/2) | gray[r]: the first m/2 bits select
// the in-phase level, the last m/2 bits the quadrature level.
inline LabeledConstellation square_qam(std::size_t M) {
  if (!is_power_of_two(M) || M < kMinPoints || M > kMaxPoints || log2_exact(M) % 2 != 0) {
    throw InputError("square_qam: M=" + std::to_string(M) +
                     " is not a square QAM order (supported: 4, 16, 64, 256, 1024)");
  }
  const int m = log2_exact(M);
  const auto gray = gray_labeling(m);
  const int side = static_cast<int>(gray.size());
  std::vector<cdouble> pts;
  std::vector<unsigned> labels;
  pts.reserve(M);
  labels.reserve(M);
  for (int c = 0; c < side; ++c) {
    for (int r = 0; r < side; ++r) {
      pts.emplace_back(2.0 * c - (side - 1), 2.0 * r - (side - 1));
      labels.push_back((gray[c] << (m / 2)) | gray[r]);
    }
  }
  return {Constellation::normalized(pts), Labeling(std::move(labels))};
}

}  // namespace gsopt

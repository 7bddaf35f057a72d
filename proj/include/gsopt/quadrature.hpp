#pragma once

// Gauss-Hermite rules for expectations over circular complex Gaussian noise.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"

namespace gsopt {

inline constexpr int kDefaultQuadOrder = 64;
inline constexpr double kTrapezoidHalfWidth = 6.5;

enum class QuadratureRule { kGaussHermite, kTrapezoid };

// One-dimensional rule for weight exp(-t^2), `order` nodes per real
// dimension. Weights are normalized to sum to 1, i.e. they form a probability
// vector for t ~ N(0, 1/2).
//
// Gauss-Hermite is exact for polynomials but resolves the sharp log-sum-exp
// transitions of high-SNR constellations poorly; the equispaced rule on
// [-6.5, 6.5] converges geometrically for them and is the default.
struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::kTrapezoid;
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  static QuadratureSpec gauss_hermite(int order);
  static QuadratureSpec trapezoid(int order, double half_width = kTrapezoidHalfWidth);
  static QuadratureSpec make(QuadratureRule rule, int order) {
    return rule == QuadratureRule::kGaussHermite ? gauss_hermite(order) : trapezoid(order);
  }
  static QuadratureSpec standard() { return trapezoid(kDefaultQuadOrder); }

  const char* rule_name() const { return rule == QuadratureRule::kGaussHermite ? "gauss-hermite" : "trapezoid"; }
};

inline QuadratureSpec QuadratureSpec::trapezoid(int n, double half_width) {
  if (n < 3 || n > 512) throw InputError("trapezoid order must be in [3, 512], got " + std::to_string(n));
  if (!(half_width > 0.0)) throw InputError("trapezoid half width must be positive");
  QuadratureSpec q;
  q.rule = QuadratureRule::kTrapezoid;
  q.order = n;
  const double h = 2.0 * half_width / (n - 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = h * (i - 0.5 * (n - 1));  // exactly symmetric
    q.nodes.push_back(t);
    q.weights.push_back(std::exp(-t * t));
    total += q.weights.back();
  }
  for (auto& w : q.weights) w /= total;
  return q;
}

inline QuadratureSpec QuadratureSpec::gauss_hermite(int n) {
  if (n < 1 || n > 128) throw InputError("quadrature order must be in [1, 128], got " + std::to_string(n));
  QuadratureSpec q;
  q.rule = QuadratureRule::kGaussHermite;
  q.order = n;
  q.nodes.assign(static_cast<std::size_t>(n), 0.0);
  q.weights.assign(static_cast<std::size_t>(n), 0.0);
  // Newton iteration on orthonormal Hermite polynomials with the usual
  // asymptotic starting guesses for the largest roots.
  constexpr double kPim4 = 0.7511255444649425;  // pi^(-1/4)
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * q.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * q.nodes[1];
    } else {
      z = 2.0 * z - q.nodes[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = kPim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const double w = 2.0 / (pp * pp) / std::sqrt(kPi);
    q.nodes[static_cast<std::size_t>(i)] = z;
    q.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
    q.weights[static_cast<std::size_t>(i)] = w;
    q.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) q.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return q;
}

inline constexpr double kDefaultPrune = 1e-18;

// Tensor-product rule on the complex plane. A node t maps to the noise
// sample z = sqrt(n0) * t for Z ~ CN(0, n0). Nodes with product weight below
// `prune` are dropped and the survivors renormalized; the default only drops
// corners whose weight is below double resolution of the result.
struct ComplexNodes {
  std::vector<double> re;
  std::vector<double> im;
  std::vector<double> weight;
  std::vector<double> norm2;  // |t|^2

  std::size_t size() const noexcept { return weight.size(); }

  static ComplexNodes tensor(const QuadratureSpec& q, double prune = kDefaultPrune) {
    ComplexNodes c;
    double total = 0.0;
    for (std::size_t a = 0; a < q.nodes.size(); ++a) {
      for (std::size_t b = 0; b < q.nodes.size(); ++b) {
        const double w = q.weights[a] * q.weights[b];
        if (w < prune) continue;
        c.re.push_back(q.nodes[a]);
        c.im.push_back(q.nodes[b]);
        c.weight.push_back(w);
        c.norm2.push_back(q.nodes[a] * q.nodes[a] + q.nodes[b] * q.nodes[b]);
        total += w;
      }
    }
    for (auto& w : c.weight) w /= total;
    return c;
  }
};

}  // namespace gsopt

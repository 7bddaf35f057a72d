#pragma once

// Decision regions on a rectangular grid: symbol-wise (Voronoi / hard ML)
// ownership and bit-wise decisions from the sign of the exact LLR.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "channel.hpp"
#include "constellation.hpp"
#include "io.hpp"

namespace gsopt {

struct GridSpec {
  double re_min = -1.6, re_max = 1.6;
  double im_min = -1.6, im_max = 1.6;
  int nx = 512, ny = 512;

  double re_at(int ix) const { return nx == 1 ? re_min : re_min + (re_max - re_min) * ix / (nx - 1); }
  double im_at(int iy) const { return ny == 1 ? im_min : im_min + (im_max - im_min) * iy / (ny - 1); }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  // Default 512x512 over [-1.6, 1.6]^2, widened symmetrically when a point
  // plus the 3 sqrt(n0) margin would fall outside it.
  static GridSpec default_for(const LabeledConstellation& lc, const ChannelSpec& ch) {
    GridSpec g;
    double reach = 0.0;
    for (const auto& x : lc.points()) reach = std::max({reach, std::abs(x.real()), std::abs(x.imag())});
    const double half = std::max(1.6, reach + 3.0 * std::sqrt(ch.n0));
    g.re_min = g.im_min = -half;
    g.re_max = g.im_max = half;
    return g;
  }
};

enum class RegionMode { kSymbol, kBit };

struct RegionMap {
  GridSpec grid;
  RegionMode mode = RegionMode::kSymbol;
  int bits = 0;
  // Symbol mode: owner[cell] is a point index. Bit mode: owner[p * cells + cell]
  // is the decided value of B_{p+1}. Cells are row-major in (iy, ix).
  std::vector<unsigned> owner;

  unsigned symbol_owner(int ix, int iy) const { return owner[cell(ix, iy)]; }
  unsigned bit_decision(int p, int ix, int iy) const { return owner[static_cast<std::size_t>(p) * grid.cells() + cell(ix, iy)]; }

  std::size_t cell(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix);
  }
};

inline RegionMap decision_regions(const LabeledConstellation& lc, const ChannelSpec& ch, const GridSpec& grid,
                                  RegionMode mode) {
  if (grid.nx < 1 || grid.ny < 1) throw InputError("decision_regions: empty grid");
  if (!(grid.re_max > grid.re_min) || !(grid.im_max > grid.im_min)) {
    throw InputError("decision_regions: grid extent must be non-degenerate");
  }
  const double margin = 3.0 * std::sqrt(ch.n0);
  for (const auto& x : lc.points()) {
    if (x.real() - margin < grid.re_min || x.real() + margin > grid.re_max || x.imag() - margin < grid.im_min ||
        x.imag() + margin > grid.im_max) {
      throw InputError("decision_regions: grid must cover every point with a 3*sqrt(n0) margin");
    }
  }

  const std::size_t M = lc.size();
  const int m = lc.bits();
  RegionMap out;
  out.grid = grid;
  out.mode = mode;
  out.bits = m;
  const std::size_t cells = grid.cells();
  out.owner.assign(mode == RegionMode::kSymbol ? cells : cells * static_cast<std::size_t>(m), 0u);

  std::vector<double> metric(M);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const cdouble y(grid.re_at(ix), grid.im_at(iy));
      const std::size_t c = out.cell(ix, iy);
      if (mode == RegionMode::kSymbol) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t b = 0; b < M; ++b) {
          const double d = std::norm(y - lc.constellation[b]);
          if (d < best_d) {
            best_d = d;
            best = b;
          }
        }
        out.owner[c] = static_cast<unsigned>(best);
        continue;
      }
      double mx = -std::numeric_limits<double>::max();
      for (std::size_t b = 0; b < M; ++b) {
        metric[b] = -std::norm(y - lc.constellation[b]) / ch.n0;
        mx = std::max(mx, metric[b]);
      }
      for (int p = 0; p < m; ++p) {
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t b = 0; b < M; ++b) {
          const double v = std::exp(metric[b] - mx);
          (label_bit(lc.labeling[b], m, p) ? s1 : s0) += v;
        }
        // LLR = ln(f(y|B=1) / f(y|B=0)); the nearest point keeps one side > 0.
        const double llr = std::log(std::max(s1, 1e-300)) - std::log(std::max(s0, 1e-300));
        out.owner[static_cast<std::size_t>(p) * cells + c] = llr > 0.0 ? 1u : 0u;
      }
    }
  }
  return out;
}

// CSV export: `re,im,owner` (symbol mode) or `re,im,b1,...,bm` (bit mode).
inline std::string region_csv(const RegionMap& r) {
  std::string out = r.mode == RegionMode::kSymbol ? "re,im,owner" : "re,im";
  if (r.mode == RegionMode::kBit)
    for (int p = 0; p < r.bits; ++p) out += ",b" + std::to_string(p + 1);
  out += '\n';
  for (int iy = 0; iy < r.grid.ny; ++iy) {
    for (int ix = 0; ix < r.grid.nx; ++ix) {
      out += format_double(r.grid.re_at(ix));
      out += ',';
      out += format_double(r.grid.im_at(iy));
      if (r.mode == RegionMode::kSymbol) {
        out += ',' + std::to_string(r.symbol_owner(ix, iy));
      } else {
        for (int p = 0; p < r.bits; ++p) out += r.bit_decision(p, ix, iy) ? ",1" : ",0";
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace gsopt

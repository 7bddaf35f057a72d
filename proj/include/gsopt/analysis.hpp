#pragma once

// Gain analysis over the QAM baseline and the optimized-constellation library:
// the data behind the AIR-vs-SNR and relative-gain figures.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "library.hpp"
#include "rate_analysis.hpp"

namespace gsopt {

inline const std::vector<int> kBaselineOrders = {16, 64, 256};

struct AnalysisConfig {
  std::vector<double> grid = snr_grid(0.0, 28.0, 0.25);
  std::vector<int> Ms = kBaselineOrders;
  std::vector<double> fec_rates = kFecRates;
  QuadratureSpec quadrature = QuadratureSpec::standard();
  double window_db = kLibraryWindowDb;
};

struct FecMarker {
  OperatingPoint op;
  double eta = 0.0;  // relative gain over the baseline at the required SNR
};

struct GainCurves {
  int M = 0;
  Objective objective = Objective::kGMI;
  AirCurve curve;  // optimized AIR in the objective's own metric
  RelativeGain eta;
  std::vector<FecMarker> markers;

  const FecMarker* peak() const {
    const FecMarker* best = nullptr;
    for (const auto& mk : markers)
      if (mk.op.ok() && (!best || mk.eta > best->eta)) best = &mk;
    return best;
  }
};

struct GainAnalysis {
  AnalysisConfig config;
  BaselineEnvelope baseline;
  std::vector<GainCurves> gs;  // one per (objective, M) present in the library

  const GainCurves& get(Objective obj, int M) const {
    for (const auto& g : gs)
      if (g.objective == obj && g.M == M) return g;
    throw InputError("analysis: no " + gs_format_name(obj, static_cast<std::size_t>(M)) + " curve in the library");
  }

  std::vector<Threshold> thresholds(Objective obj) const {
    std::vector<FormatCurve> f;
    for (const auto& g : gs)
      if (g.objective == obj) f.push_back({g.M, g.curve});
    std::sort(f.begin(), f.end(), [](const FormatCurve& a, const FormatCurve& b) { return a.M < b.M; });
    return switching_thresholds(f, config.fec_rates);
  }
};

// Relative gain of the optimized curve at each FEC operating point, with both
// curves interpolated at the required SNR.
inline std::vector<FecMarker> fec_markers(int M, const AirCurve& curve, const AirCurve& baseline,
                                          const std::vector<double>& Rs) {
  std::vector<FecMarker> out;
  const auto base = baseline.interpolant();
  for (const auto& op : fec_operating_points(M, Rs, curve)) {
    FecMarker mk{op, 0.0};
    if (op.ok()) {
      const double b = base(op.required_snr_db);
      mk.eta = b > 0.0 ? (op.target_rate - b) / b : 0.0;
    }
    out.push_back(mk);
  }
  return out;
}

inline GainAnalysis analyze(const std::vector<LibraryEntry>& library, const AnalysisConfig& cfg = {}) {
  GainAnalysis a;
  a.config = cfg;
  a.baseline = qam_envelope(cfg.Ms, cfg.grid, cfg.quadrature);
  for (Objective obj : {Objective::kGMI, Objective::kMI}) {
    for (int M : cfg.Ms) {
      const auto members = select_entries(library, static_cast<std::size_t>(M), obj);
      if (members.empty()) continue;
      GainCurves g;
      g.M = M;
      g.objective = obj;
      g.curve = library_curve(members, cfg.grid, cfg.quadrature, cfg.window_db);
      g.eta = relative_gain(g.curve, a.baseline.curve);
      g.markers = fec_markers(M, g.curve, a.baseline.curve, cfg.fec_rates);
      a.gs.push_back(std::move(g));
    }
  }
  return a;
}

struct RateGain {
  double rate = 0.0;
  double gain_db = 0.0;
};

// Largest SNR saving of `curve` over `baseline` on a rate grid of `step`
// spanning the rates both curves reach.
inline RateGain max_snr_gain(const AirCurve& curve, const AirCurve& baseline, double step = 0.005) {
  const double lo = std::max(curve.rate.front(), baseline.rate.front());
  const double hi = std::min(curve.rate.back(), baseline.rate.back());
  RateGain best{lo, -1e300};
  for (double r = lo; r <= hi; r += step) {
    const double g = snr_gain_at_rate(curve, baseline, r);
    if (g > best.gain_db) best = {r, g};
  }
  return best;
}

}  // namespace gsopt

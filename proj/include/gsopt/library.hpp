#pragma once

// Library of constellations optimized at a set of anchor SNRs, and the
// optimized-AIR curves derived from it: at each grid SNR the curve takes the
// best AIR over the library members optimized near that SNR.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "air.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "rate_analysis.hpp"

namespace gsopt {

struct LibraryEntry {
  Objective objective = Objective::kGMI;
  double snr_db = 0.0;
  LabeledConstellation constellation;

  std::size_t M() const { return constellation.size(); }
};

// "gmi_M64_15.00dB.txt"
inline std::string library_file_name(Objective obj, std::size_t M, double snr_db) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_M%zu_%.2fdB.txt", to_string(obj), M, snr_db);
  return buf;
}

inline std::optional<LibraryEntry> parse_library_name(const std::string& name) {
  char obj[8] = {};
  std::size_t M = 0;
  double snr = 0.0;
  if (std::sscanf(name.c_str(), "%3[a-z]_M%zu_%lfdB.txt", obj, &M, &snr) != 3) return std::nullopt;
  const std::string o = obj;
  if (o != "mi" && o != "gmi") return std::nullopt;
  LibraryEntry e;
  e.objective = o == "mi" ? Objective::kMI : Objective::kGMI;
  e.snr_db = snr;
  return e;
}

inline void save_library_entry(const std::filesystem::path& dir, const LibraryEntry& e) {
  std::filesystem::create_directories(dir);
  save_constellation(dir / library_file_name(e.objective, e.M(), e.snr_db), e.constellation);
}

// All entries in `dir`, sorted by (objective, M, snr).
inline std::vector<LibraryEntry> load_library(const std::filesystem::path& dir) {
  std::vector<LibraryEntry> out;
  if (!std::filesystem::is_directory(dir)) throw InputError("library directory not found: " + dir.string());
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    auto e = parse_library_name(f.path().filename().string());
    if (!e) continue;
    e->constellation = load_constellation(f.path());
    out.push_back(std::move(*e));
  }
  std::sort(out.begin(), out.end(), [](const LibraryEntry& a, const LibraryEntry& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.M() != b.M()) return a.M() < b.M();
    return a.snr_db < b.snr_db;
  });
  return out;
}

inline std::vector<LibraryEntry> select_entries(const std::vector<LibraryEntry>& lib, std::size_t M, Objective obj) {
  std::vector<LibraryEntry> out;
  for (const auto& e : lib)
    if (e.M() == M && e.objective == obj) out.push_back(e);
  return out;
}

inline std::optional<LibraryEntry> find_entry(const std::vector<LibraryEntry>& lib, std::size_t M, Objective obj,
                                              double snr_db) {
  for (const auto& e : lib)
    if (e.M() == M && e.objective == obj && std::abs(e.snr_db - snr_db) < 1e-9) return e;
  return std::nullopt;
}

// Optimizes at each anchor in increasing order; each anchor is warm-started
// from the previous anchor's result in addition to cfg's own starts.
inline std::vector<LibraryEntry> build_anchor_library(
    std::size_t M, Objective obj, std::vector<double> anchors, OptimizerConfig cfg,
    const std::function<void(const LibraryEntry&, const OptimizerReport&)>& on_anchor = {}) {
  std::sort(anchors.begin(), anchors.end());
  cfg.objective = obj;
  const auto base_warm = cfg.warm_starts;
  std::vector<LibraryEntry> out;
  for (double s : anchors) {
    cfg.snr_db = s;
    cfg.warm_starts = base_warm;
    if (!out.empty()) cfg.warm_starts.insert(cfg.warm_starts.begin(), out.back().constellation);
    auto res = optimize(M, cfg);
    out.push_back({obj, s, std::move(res.constellation)});
    if (on_anchor) on_anchor(out.back(), res.report);
  }
  return out;
}

inline std::string gs_format_name(Objective obj, std::size_t M) {
  return std::string(obj == Objective::kMI ? "I-GS-" : "G-GS-") + std::to_string(M);
}

inline constexpr double kLibraryWindowDb = 1.0;

// Curve of the library members (one M, one objective) evaluated with their own
// objective: at each grid SNR the max over members whose anchor is within
// `window_db` (the nearest member if none is).
inline AirCurve library_curve(const std::vector<LibraryEntry>& members, const std::vector<double>& grid,
                              const QuadratureSpec& q = QuadratureSpec::standard(),
                              double window_db = kLibraryWindowDb) {
  if (members.empty()) throw InputError("library_curve: no library members");
  const Objective obj = members.front().objective;
  const std::size_t M = members.front().M();
  AirCurve c{obj, gs_format_name(obj, M), grid, {}};
  for (double s : grid) {
    const auto ch = ChannelSpec::from_db(s);
    double best = -1.0;
    std::size_t nearest = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (std::abs(members[k].snr_db - s) < std::abs(members[nearest].snr_db - s)) nearest = k;
      if (std::abs(members[k].snr_db - s) > window_db) continue;
      const auto v = air_quadrature(members[k].constellation, ch, q, obj == Objective::kGMI);
      best = std::max(best, obj == Objective::kMI ? v.mi : v.gmi);
    }
    if (best < 0.0) {
      const auto v = air_quadrature(members[nearest].constellation, ch, q, obj == Objective::kGMI);
      best = obj == Objective::kMI ? v.mi : v.gmi;
    }
    // a member that left the window still reaches at least its earlier value
    if (!c.rate.empty()) best = std::max(best, c.rate.back());
    c.rate.push_back(best);
  }
  return c;
}

}  // namespace gsopt

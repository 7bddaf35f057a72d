#pragma once

// Geometric shaping: pairwise compass search over point positions under the
// power constraint, binary switching over labelings, and the restart driver.

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "air.hpp"
#include "constellation.hpp"
#include "incremental.hpp"
#include "quadrature.hpp"

namespace gsopt {

enum class Phase { kPairwise, kBsa };

inline const char* to_string(Phase p) { return p == Phase::kPairwise ? "pairwise" : "bsa"; }

struct TraceEntry {
  int iter = 0;
  Phase phase = Phase::kPairwise;
  double objective = 0.0;  // inner-rule value after this phase
  double step = 0.0;
};

// Points that come closer than this are considered collided; such moves are rejected.
inline constexpr double kCollisionDistance = 1e-9;
// Gains at or below this are treated as rounding noise, not improvement.
inline constexpr double kMinAcceptedGain = 1e-12;
// Node pruning for the inner (search) rule; the reported values use the full rule.
inline constexpr double kInnerPrune = 1e-12;

struct SweepOptions {
  // 0 = every unordered pair; otherwise each point pairs with its
  // `neighbors` nearest points (positions at sweep start).
  int neighbors = 0;
  // Called after each accepted move with the updated state.
  std::function<void(const IncrementalAir&)> on_accept;
};

struct SweepResult {
  double improvement = 0.0;
  int accepted = 0;
};

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> sweep_pairs(const IncrementalAir& ev, int neighbors) {
  const std::size_t M = ev.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (neighbors <= 0 || static_cast<std::size_t>(neighbors) >= M - 1) {
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i + 1; j < M; ++j) pairs.emplace_back(i, j);
    return pairs;
  }
  std::vector<std::pair<double, std::size_t>> d(M);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t b = 0; b < M; ++b) d[b] = {b == i ? 1e300 : std::norm(ev.point(i) - ev.point(b)), b};
    std::partial_sort(d.begin(), d.begin() + neighbors, d.end());
    for (int n = 0; n < neighbors; ++n) pairs.emplace_back(std::min(i, d[n].second), std::max(i, d[n].second));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

inline bool collides(const IncrementalAir& ev, std::size_t i, std::size_t j, cdouble a, cdouble b) {
  if (std::abs(a - b) < kCollisionDistance) return true;
  for (std::size_t c = 0; c < ev.size(); ++c) {
    if (c == i || c == j) continue;
    const cdouble x = ev.point(c);
    if (std::abs(a - x) < kCollisionDistance || std::abs(b - x) < kCollisionDistance) return true;
  }
  return false;
}

// Compass candidates for a pair at radius `step`, each keeping the pair's
// energy |x_i|^2 + |x_j|^2 and hence the constellation's average energy.
inline std::vector<std::pair<cdouble, cdouble>> pair_candidates(cdouble xi, cdouble xj, double step) {
  std::vector<std::pair<cdouble, cdouble>> out;
  if (!(step > 0.0)) return out;
  const double E = std::norm(xi) + std::norm(xj);
  for (int d = 0; d < 8; ++d) {
    const cdouble u = std::polar(step, d * kPi / 4.0);
    // move i, rescale j
    {
      const cdouble a = xi + u;
      const double rem = E - std::norm(a);
      if (rem > 0.0 && std::norm(xj) > 0.0) out.emplace_back(a, xj * std::sqrt(rem / std::norm(xj)));
    }
    // move j, rescale i
    {
      const cdouble b = xj + u;
      const double rem = E - std::norm(b);
      if (rem > 0.0 && std::norm(xi) > 0.0) out.emplace_back(xi * std::sqrt(rem / std::norm(xi)), b);
    }
    // both, in opposite directions, rescaled together
    {
      const cdouble a = xi + u, b = xj - u;
      const double e2 = std::norm(a) + std::norm(b);
      if (e2 > 0.0) {
        const double f = std::sqrt(E / e2);
        out.emplace_back(a * f, b * f);
      }
    }
  }
  return out;
}

}  // namespace detail

// One pass over the pairs: for each pair, the best strictly-improving compass
// candidate (other points fixed) is accepted.
inline SweepResult pairwise_sweep(IncrementalAir& ev, double step, const SweepOptions& opt = {}) {
  SweepResult res;
  if (!(step > 0.0)) return res;
  const double start = ev.value();
  for (auto [i, j] : detail::sweep_pairs(ev, opt.neighbors)) {
    const auto cands = detail::pair_candidates(ev.point(i), ev.point(j), step);
    ev.begin_pair(i, j);
    double best = kMinAcceptedGain;
    std::optional<std::size_t> pick;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (detail::collides(ev, i, j, cands[c].first, cands[c].second)) continue;
      const double d = ev.move_delta(cands[c].first, cands[c].second);
      if (d > best) {
        best = d;
        pick = c;
      }
    }
    if (pick) {
      ev.commit_move(cands[*pick].first, cands[*pick].second);
      ++res.accepted;
      if (opt.on_accept) opt.on_accept(ev);
    }
  }
  res.improvement = ev.value() - start;
  return res;
}

struct SweepOutcome {
  LabeledConstellation constellation;
  double improvement = 0.0;
};

// Free-function form: one sweep from `lc`; the improvement is measured with `q`.
inline SweepOutcome pairwise_sweep(const LabeledConstellation& lc, const ChannelSpec& ch, Objective obj, double step,
                                   const QuadratureSpec& q, const SweepOptions& opt = {}) {
  IncrementalAir ev(lc, ch, q, obj);
  const auto r = pairwise_sweep(ev, step, opt);
  return {ev.state(), r.improvement};
}

struct BsaOptions {
  double tol = 1e-6;
  // 0 = evaluate every swap exactly. Otherwise rank swaps by a first-order
  // screen and evaluate only the best `shortlist` exactly.
  int shortlist = 0;
  int max_swaps = 100000;
  std::function<void(const IncrementalAir&)> on_accept;
};

struct BsaResult {
  double gain = 0.0;
  int swaps = 0;
};

// Greedy (steepest) label-swap descent on GMI. Ties go to the lowest pair index.
inline BsaResult binary_switching(IncrementalAir& ev, const BsaOptions& opt = {}) {
  BsaResult res;
  if (ev.objective() != Objective::kGMI) return res;
  const std::size_t M = ev.size();
  const double start = ev.value();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) pairs.emplace_back(i, j);
  const bool exhaustive = opt.shortlist <= 0 || static_cast<std::size_t>(opt.shortlist) >= pairs.size();

  while (res.swaps < opt.max_swaps) {
    double best = opt.tol;
    std::optional<std::size_t> pick;
    if (exhaustive) {
      const auto d = ev.swap_delta_all();
      for (std::size_t c = 0; c < d.size(); ++c) {
        if (d[c] > best) {
          best = d[c];
          pick = c;
        }
      }
    } else {
      const auto screen = ev.swap_screen();
      std::vector<std::size_t> order(screen.size());
      for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
      std::partial_sort(order.begin(), order.begin() + opt.shortlist, order.end(),
                        [&](std::size_t a, std::size_t b) { return screen[a] > screen[b] || (screen[a] == screen[b] && a < b); });
      order.resize(static_cast<std::size_t>(opt.shortlist));
      std::sort(order.begin(), order.end());
      for (std::size_t c : order) {
        const double d = ev.swap_delta(pairs[c].first, pairs[c].second);
        if (d > best) {
          best = d;
          pick = c;
        }
      }
    }
    if (!pick) break;
    ev.commit_swap(pairs[*pick].first, pairs[*pick].second);
    ++res.swaps;
    if (opt.on_accept) opt.on_accept(ev);
  }
  res.gain = ev.value() - start;
  return res;
}

struct BsaOutcome {
  Labeling labeling;
  double gmi_gain = 0.0;
};

inline BsaOutcome binary_switching(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q,
                                   const BsaOptions& opt = {}) {
  IncrementalAir ev(lc, ch, q, Objective::kGMI);
  const auto r = binary_switching(ev, opt);
  return {ev.labeling(), r.gain};
}

// Circular-Gaussian start, normalized, identity labeling.
inline LabeledConstellation random_start(std::size_t M, std::uint64_t seed) {
  if (!is_power_of_two(M) || M < kMinPoints || M > kMaxPoints) {
    throw InputError("random_start: M must be a power of two in [4, 1024]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cdouble> pts(M);
  for (auto& x : pts) {
    const double re = normal(rng);
    const double im = normal(rng);
    x = {re, im};
  }
  return {Constellation::normalized(pts), Labeling::identity(M)};
}

struct OptimizerConfig {
  Objective objective = Objective::kGMI;
  double snr_db = 15.0;
  int max_outer_iters = 50;
  int max_pairwise_sweeps = 20;
  double initial_step = 0.05;
  double shrink = 0.5;
  double min_step = 1e-5;
  double tol = 1e-6;
  int restarts = 4;
  std::uint64_t seed = 1;
  // Final values are reported with this rule.
  QuadratureSpec quadrature = QuadratureSpec::standard();
  // Inner-loop rule: fixed trapezoid order, or 0 to pick the smallest order
  // from kInnerOrders whose value on the start is within inner_tol of the
  // final rule.
  int inner_order = 0;
  double inner_tol = 1e-4;
  // Sweep scope (see SweepOptions); -1 = all pairs for M <= 16, else 8 nearest neighbours.
  int pair_neighbors = -1;
  // BSA shortlist (see BsaOptions); -1 = exhaustive for M <= 64, else 64.
  int bsa_shortlist = -1;
  // Starts tried before the default ones (square QAM, then random).
  std::vector<LabeledConstellation> warm_starts;
  bool include_qam_start = true;
  // Wall-clock cap per restart in seconds (0 = none); a capped restart stops
  // after its current sweep and is flagged in the report.
  double max_seconds_per_restart = 0.0;
  int threads = 1;

  static constexpr int kInnerOrders[] = {24, 32, 40, 48};

  void validate() const {
    if (max_outer_iters < 1 || max_pairwise_sweeps < 1 || restarts < 1 || threads < 1) {
      throw InputError("optimizer: iteration, restart and thread counts must be >= 1");
    }
    if (!(tol > 0.0)) throw InputError("optimizer: tol must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) throw InputError("optimizer: shrink factor must be in (0, 1)");
    if (!(initial_step > 0.0) || !(min_step > 0.0)) throw InputError("optimizer: step sizes must be positive");
    if (!is_finite(snr_db)) throw InputError("optimizer: SNR must be finite");
    if (inner_order < 0 || inner_tol <= 0.0) throw InputError("optimizer: invalid inner quadrature settings");
  }
};

struct RestartSummary {
  std::string start;  // "warm<k>", "qam", "random<seed>"
  double initial_objective = 0.0;
  double final_objective = 0.0;  // final rule
  int accepted_moves = 0;
  int accepted_swaps = 0;
  bool time_capped = false;
};

struct OptimizerReport {
  Objective objective = Objective::kGMI;
  double snr_db = 0.0;
  double initial_objective = 0.0;  // winner's start, final rule
  double final_objective = 0.0;    // winner, final rule
  double final_mi = 0.0;           // winner, final rule
  double final_gmi = 0.0;
  std::vector<TraceEntry> trace;   // winner, inner rule
  int accepted_moves = 0;
  int accepted_swaps = 0;
  int winner_restart = 0;
  int inner_order = 0;
  double wall_seconds = 0.0;
  std::vector<RestartSummary> restarts;
};

struct OptimizeResult {
  LabeledConstellation constellation;
  OptimizerReport report;
};

namespace detail {

inline double objective_value(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q,
                              Objective obj) {
  const auto v = air_quadrature(lc, ch, q, obj == Objective::kGMI);
  return obj == Objective::kMI ? v.mi : v.gmi;
}

inline int pick_inner_order(const LabeledConstellation& lc, const ChannelSpec& ch, const OptimizerConfig& cfg,
                            double reference) {
  if (cfg.inner_order > 0) return cfg.inner_order;
  for (int n : OptimizerConfig::kInnerOrders) {
    if (n >= cfg.quadrature.order) break;
    const double v = objective_value(lc, ch, QuadratureSpec::trapezoid(n), cfg.objective);
    if (std::abs(v - reference) <= cfg.inner_tol) return n;
  }
  return cfg.quadrature.order;
}

struct RestartRun {
  LabeledConstellation result;
  RestartSummary summary;
  std::vector<TraceEntry> trace;
  int inner_order = 0;
};

inline RestartRun run_restart(const LabeledConstellation& start, std::string start_name, const OptimizerConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };
  const auto ch = ChannelSpec::from_db(cfg.snr_db);
  const std::size_t M = start.size();

  RestartRun run;
  run.summary.start = std::move(start_name);
  run.summary.initial_objective = objective_value(start, ch, cfg.quadrature, cfg.objective);
  run.inner_order = pick_inner_order(start, ch, cfg, run.summary.initial_objective);
  const auto inner = run.inner_order == cfg.quadrature.order ? cfg.quadrature
                                                              : QuadratureSpec::trapezoid(run.inner_order);
  IncrementalAir ev(start, ch, inner, cfg.objective, kInnerPrune);

  SweepOptions sweep;
  sweep.neighbors = cfg.pair_neighbors >= 0 ? cfg.pair_neighbors : (M <= 16 ? 0 : 8);
  BsaOptions bsa;
  bsa.tol = cfg.tol;
  bsa.shortlist = cfg.bsa_shortlist >= 0 ? cfg.bsa_shortlist : (M <= 64 ? 0 : 64);

  int iter = 0;
  double step = cfg.initial_step;
  const auto capped = [&] {
    if (cfg.max_seconds_per_restart > 0.0 && elapsed() > cfg.max_seconds_per_restart) {
      run.summary.time_capped = true;
      return true;
    }
    return false;
  };
  // Sweeps at fixed step until one gains < tol, then shrink.
  const auto sweep_once = [&] {
    const auto r = pairwise_sweep(ev, step, sweep);
    run.summary.accepted_moves += r.accepted;
    run.trace.push_back({++iter, Phase::kPairwise, ev.value(), step});
    // Pair moves preserve energy up to rounding; renormalize and refresh the cache.
    const auto pts = normalize(ev.state().points());
    ev.set_points(pts);
    if (r.improvement < cfg.tol) step *= cfg.shrink;
  };

  if (cfg.objective == Objective::kMI) {
    for (int outer = 0; outer < cfg.max_outer_iters && step >= cfg.min_step; ++outer) {
      sweep_once();
      if (capped()) break;
    }
  } else {
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
      const double before = ev.value();
      for (int s = 0; s < cfg.max_pairwise_sweeps && step >= cfg.min_step; ++s) {
        sweep_once();
        if (capped()) break;
      }
      if (run.summary.time_capped) break;
      const auto b = binary_switching(ev, bsa);
      run.summary.accepted_swaps += b.swaps;
      run.trace.push_back({++iter, Phase::kBsa, ev.value(), step});
      if (ev.value() - before < cfg.tol || capped()) break;
      // A new labeling can unlock geometric gains again.
      if (b.swaps > 0) step = std::max(step, cfg.initial_step * cfg.shrink * cfg.shrink);
    }
  }
  run.result = ev.state();
  run.summary.final_objective = objective_value(run.result, ch, cfg.quadrature, cfg.objective);
  return run;
}

}  // namespace detail

inline std::vector<std::pair<LabeledConstellation, std::string>> restart_starts(std::size_t M,
                                                                                const OptimizerConfig& cfg) {
  std::vector<std::pair<LabeledConstellation, std::string>> starts;
  for (std::size_t k = 0; k < cfg.warm_starts.size() && starts.size() < static_cast<std::size_t>(cfg.restarts); ++k) {
    starts.emplace_back(cfg.warm_starts[k], "warm" + std::to_string(k));
  }
  const bool square = is_power_of_two(M) && log2_exact(M) % 2 == 0;
  if (cfg.include_qam_start && square && starts.size() < static_cast<std::size_t>(cfg.restarts)) {
    starts.emplace_back(square_qam(M), "qam");
  }
  for (std::uint64_t r = 0; starts.size() < static_cast<std::size_t>(cfg.restarts); ++r) {
    const std::uint64_t s = cfg.seed * 1000003u + r;
    starts.emplace_back(random_start(M, s), "random" + std::to_string(s));
  }
  return starts;
}

// Best-of-restarts optimization of MI or GMI at cfg.snr_db.
inline OptimizeResult optimize(std::size_t M, const OptimizerConfig& cfg) {
  cfg.validate();
  if (!is_power_of_two(M) || M < kMinPoints || M > kMaxPoints) {
    throw InputError("optimize: M must be a power of two in [4, 1024], got " + std::to_string(M));
  }
  for (const auto& w : cfg.warm_starts) {
    require_valid(w);
    if (w.size() != M) throw InputError("optimize: warm start has the wrong size");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto starts = restart_starts(M, cfg);

  std::vector<detail::RestartRun> runs(starts.size());
  if (cfg.threads <= 1) {
    for (std::size_t r = 0; r < starts.size(); ++r) runs[r] = detail::run_restart(starts[r].first, starts[r].second, cfg);
  } else {
    for (std::size_t base = 0; base < starts.size(); base += static_cast<std::size_t>(cfg.threads)) {
      std::vector<std::future<detail::RestartRun>> jobs;
      for (std::size_t r = base; r < std::min(starts.size(), base + cfg.threads); ++r) {
        jobs.push_back(std::async(std::launch::async, [&, r] { return detail::run_restart(starts[r].first, starts[r].second, cfg); }));
      }
      for (std::size_t r = 0; r < jobs.size(); ++r) runs[base + r] = jobs[r].get();
    }
  }

  std::size_t win = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].summary.final_objective > runs[win].summary.final_objective) win = r;

  OptimizeResult out;
  out.constellation = runs[win].result;
  auto& rep = out.report;
  rep.objective = cfg.objective;
  rep.snr_db = cfg.snr_db;
  rep.initial_objective = runs[win].summary.initial_objective;
  rep.final_objective = runs[win].summary.final_objective;
  const auto both = air_quadrature(out.constellation, ChannelSpec::from_db(cfg.snr_db), cfg.quadrature, true);
  rep.final_mi = both.mi;
  rep.final_gmi = both.gmi;
  rep.trace = runs[win].trace;
  rep.accepted_moves = runs[win].summary.accepted_moves;
  rep.accepted_swaps = runs[win].summary.accepted_swaps;
  rep.winner_restart = static_cast<int>(win);
  rep.inner_order = runs[win].inner_order;
  for (const auto& r : runs) rep.restarts.push_back(r.summary);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace gsopt

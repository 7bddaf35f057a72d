// gsopt command-line tool: evaluate, optimize, library, figures, replay.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsopt/gsopt.hpp"

namespace fs = std::filesystem;
using namespace gsopt;

#ifndef GSOPT_DEFAULT_LIBRARY
#define GSOPT_DEFAULT_LIBRARY "data/library"
#endif

namespace {

std::vector<double> parse_snr(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("--snr: cannot parse '" + s + "' (expected a value or a:b:step)");
    }
  }
  if (parts.size() == 1) {
    if (!is_finite(parts[0])) throw InputError("--snr must be finite");
    return parts;
  }
  if (parts.size() != 3) throw InputError("--snr: expected a value or a:b:step, got '" + s + "'");
  return snr_grid(parts[0], parts[1], parts[2]);
}

Objective parse_objective(const std::string& s) { return s == "mi" ? Objective::kMI : Objective::kGMI; }

QuadratureSpec make_quadrature(const std::string& rule, int order) {
  constexpr int kMaxQuadOrder = 512;
  if (order < 2 || order > kMaxQuadOrder) {
    throw InputError("--quad-order must be in [2, " + std::to_string(kMaxQuadOrder) + "]");
  }
  return rule == "gauss-hermite" ? QuadratureSpec::gauss_hermite(order) : QuadratureSpec::trapezoid(order);
}

std::string write_output(const fs::path& dir, const std::string& name, const std::string& content,
                         RunManifest& man) {
  const fs::path p = dir / name;
  fs::create_directories(p.parent_path());
  write_file(p, content);
  man.outputs.push_back(p.string());
  return p.string();
}

struct Common {
  std::string quad_rule = "trapezoid";
  int quad_order = kDefaultQuadOrder;
  int threads = 1;
  std::string out = ".";
};

void add_quadrature(CLI::App* c, Common& o) {
  c->add_option("--quad-order", o.quad_order, "Quadrature order per dimension")->capture_default_str();
  c->add_option("--quad-rule", o.quad_rule, "Quadrature rule")
      ->check(CLI::IsMember({"trapezoid", "gauss-hermite"}))
      ->capture_default_str();
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common c;
  std::string file;
  std::string snr;
  std::string metric = "gmi";
};

int cmd_evaluate(const EvaluateArgs& a, RunManifest& man) {
  const auto text = read_file(a.file);
  const auto lc = parse_constellation(text);
  require_valid(lc);
  const auto grid = parse_snr(a.snr);
  const auto q = make_quadrature(a.c.quad_rule, a.c.quad_order);
  const Metric metric = parse_objective(a.metric);
  man.inputs.push_back(a.file);
  man.config = {{"file", a.file}, {"snr", a.snr}, {"metric", a.metric}, {"quad_rule", a.c.quad_rule},
                {"quad_order", a.c.quad_order}, {"out", a.c.out}};
  AirCurve c{metric, a.file, grid, {}};
  for (double s : grid) {
    const auto v = air_quadrature(lc, ChannelSpec::from_db(s), q, metric == Metric::kGMI);
    c.rate.push_back(metric == Metric::kMI ? v.mi : v.gmi);
  }
  const auto csv = curve_csv(c);
  write_output(a.c.out, "curve.csv", csv, man);
  std::cout << csv;
  return 0;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
  Common c;
  int M = 0;
  std::string snr;
  std::string objective = "gmi";
  std::uint64_t seed = 1;
  int restarts = 4;
  double tol = 1e-6;
  int max_iters = 50;
  int inner_order = 0;
  std::string start;
  bool no_qam = false;
};

OptimizerConfig optimizer_config(const OptimizeArgs& a) {
  OptimizerConfig cfg;
  cfg.objective = parse_objective(a.objective);
  cfg.seed = a.seed;
  cfg.restarts = a.restarts;
  cfg.tol = a.tol;
  cfg.max_outer_iters = a.max_iters;
  cfg.inner_order = a.inner_order;
  cfg.threads = a.c.threads;
  cfg.quadrature = make_quadrature(a.c.quad_rule, a.c.quad_order);
  cfg.include_qam_start = !a.no_qam;
  return cfg;
}

nlohmann::ordered_json config_json(const OptimizeArgs& a, const OptimizerConfig& cfg) {
  return {{"M", a.M},
          {"snr", a.snr},
          {"objective", a.objective},
          {"seed", a.seed},
          {"restarts", cfg.restarts},
          {"tol", cfg.tol},
          {"max_outer_iters", cfg.max_outer_iters},
          {"max_pairwise_sweeps", cfg.max_pairwise_sweeps},
          {"initial_step", cfg.initial_step},
          {"shrink", cfg.shrink},
          {"min_step", cfg.min_step},
          {"inner_order", cfg.inner_order},
          {"inner_tol", cfg.inner_tol},
          {"quad_rule", cfg.quadrature.rule_name()},
          {"quad_order", cfg.quadrature.order},
          {"include_qam_start", cfg.include_qam_start},
          {"start", a.start},
          {"threads", cfg.threads},
          {"out", a.c.out}};
}

void check_order(int M) {
  if (M < static_cast<int>(kMinPoints) || M > static_cast<int>(kMaxPoints) ||
      !is_power_of_two(static_cast<std::size_t>(M))) {
    throw CLI::ValidationError("--M", "must be a power of two in [4, 1024], got " + std::to_string(M));
  }
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  CsvWriter w({"iter", "phase", "objective", "step"});
  for (const auto& t : trace) w.add({std::to_string(t.iter), to_string(t.phase), format_double(t.objective), format_double(t.step)});
  return w.str();
}

std::string restarts_csv(const OptimizerReport& rep) {
  CsvWriter w({"restart", "start", "initial_objective", "final_objective", "accepted_moves", "accepted_swaps", "time_capped"});
  for (std::size_t r = 0; r < rep.restarts.size(); ++r) {
    const auto& s = rep.restarts[r];
    w.add({std::to_string(r), s.start, format_double(s.initial_objective), format_double(s.final_objective),
           std::to_string(s.accepted_moves), std::to_string(s.accepted_swaps), s.time_capped ? "1" : "0"});
  }
  return w.str();
}

std::string summary_csv(const OptimizerReport& rep, std::size_t M) {
  CsvWriter w({"M", "objective", "snr_db", "initial_objective", "final_objective", "final_mi", "final_gmi",
               "winner_restart", "accepted_moves", "accepted_swaps", "inner_order"});
  w.add({std::to_string(M), to_string(rep.objective), format_double(rep.snr_db), format_double(rep.initial_objective),
         format_double(rep.final_objective), format_double(rep.final_mi), format_double(rep.final_gmi),
         std::to_string(rep.winner_restart), std::to_string(rep.accepted_moves), std::to_string(rep.accepted_swaps),
         std::to_string(rep.inner_order)});
  return w.str();
}

void record_seeds(const OptimizerConfig& cfg, std::size_t M, RunManifest& man) {
  for (const auto& [lc, name] : restart_starts(M, cfg)) {
    if (name.rfind("random", 0) == 0) man.seeds.push_back(std::stoull(name.substr(6)));
  }
}

int cmd_optimize(const OptimizeArgs& a, RunManifest& man) {
  check_order(a.M);
  const auto snr = parse_snr(a.snr);
  if (snr.size() != 1) throw InputError("optimize: --snr must be a single value");
  auto cfg = optimizer_config(a);
  cfg.snr_db = snr[0];
  if (!a.start.empty()) {
    cfg.warm_starts.push_back(load_constellation(a.start));
    man.inputs.push_back(a.start);
  }
  cfg.validate();
  man.config = config_json(a, cfg);
  record_seeds(cfg, static_cast<std::size_t>(a.M), man);

  const auto res = optimize(static_cast<std::size_t>(a.M), cfg);
  const auto& rep = res.report;
  write_output(a.c.out, "constellation.txt", write_constellation(res.constellation), man);
  write_output(a.c.out, "trace.csv", trace_csv(rep.trace), man);
  write_output(a.c.out, "restarts.csv", restarts_csv(rep), man);
  write_output(a.c.out, "summary.csv", summary_csv(rep, res.constellation.size()), man);
  std::cout << to_string(rep.objective) << " " << format_double(rep.final_objective) << " (mi "
            << format_double(rep.final_mi) << ", gmi " << format_double(rep.final_gmi) << ") winner restart "
            << rep.winner_restart << "\n";
  return 0;
}

// ---------------------------------------------------------------- library

struct LibraryArgs {
  OptimizeArgs o;
  bool force = false;
};

int cmd_library(const LibraryArgs& a, RunManifest& man) {
  check_order(a.o.M);
  const auto anchors = parse_snr(a.o.snr);
  auto cfg = optimizer_config(a.o);
  cfg.validate();
  man.config = config_json(a.o, cfg);
  man.config["force"] = a.force;
  const Objective obj = cfg.objective;
  const std::size_t M = static_cast<std::size_t>(a.o.M);
  const fs::path dir = a.o.c.out;
  fs::create_directories(dir);
  auto existing = select_entries(load_library(dir), M, obj);

  std::optional<LabeledConstellation> prev;
  for (double s : anchors) {
    const auto have = find_entry(existing, M, obj, s);
    const fs::path file = dir / library_file_name(obj, M, s);
    if (have && !a.force) {
      prev = have->constellation;
      std::cerr << file.string() << ": exists, kept\n";
      continue;
    }
    auto c = cfg;
    c.snr_db = s;
    if (prev) c.warm_starts.insert(c.warm_starts.begin(), *prev);
    for (const auto& [lc, name] : restart_starts(M, c))
      if (name.rfind("random", 0) == 0) man.seeds.push_back(std::stoull(name.substr(6)));
    const auto res = optimize(M, c);
    save_library_entry(dir, {obj, s, res.constellation});
    man.outputs.push_back(file.string());
    prev = res.constellation;
    std::cerr << file.string() << ": " << to_string(obj) << " " << format_double(res.report.final_objective)
              << " winner " << res.report.restarts[res.report.winner_restart].start << " "
              << format_double(res.report.wall_seconds) << " s\n";
  }
  return 0;
}

// ---------------------------------------------------------------- figures

struct FiguresArgs {
  Common c;
  std::string id;
  std::string library = GSOPT_DEFAULT_LIBRARY;
  std::string snr = "0:28:0.25";
  int grid = 512;
};

std::string fmt_M(int M) { return "M" + std::to_string(M); }

std::string envelope_csv(const BaselineEnvelope& env) {
  CsvWriter w({"snr_db", "rate", "M"});
  for (std::size_t g = 0; g < env.curve.size(); ++g)
    w.add({format_double(env.curve.snr_db[g]), format_double(env.curve.rate[g]), std::to_string(env.source[g])});
  return w.str();
}

std::string pieces_csv(const BaselineEnvelope& env) {
  CsvWriter w({"snr_lo", "snr_hi", "M"});
  for (const auto& p : env.pieces) w.add({format_double(p.snr_lo), format_double(p.snr_hi), std::to_string(p.M)});
  return w.str();
}

std::string switching_csv(const BaselineEnvelope& env) {
  CsvWriter w({"snr_db", "from_M", "to_M", "rate"});
  for (const auto& s : env.switching)
    w.add({format_double(s.snr_db), std::to_string(s.from_M), std::to_string(s.to_M), format_double(s.rate)});
  return w.str();
}

void write_regions(const fs::path& dir, const std::string& stem, const LabeledConstellation& lc, double snr,
                   int n, bool bits, RunManifest& man) {
  const auto ch = ChannelSpec::from_db(snr);
  auto g = GridSpec::default_for(lc, ch);
  g.nx = g.ny = n;
  write_output(dir, stem + "_symbol_regions.csv", region_csv(decision_regions(lc, ch, g, RegionMode::kSymbol)), man);
  if (bits) write_output(dir, stem + "_bit_regions.csv", region_csv(decision_regions(lc, ch, g, RegionMode::kBit)), man);
}

LabeledConstellation library_member(const std::vector<LibraryEntry>& lib, int M, Objective obj, double snr) {
  const auto e = find_entry(lib, static_cast<std::size_t>(M), obj, snr);
  if (!e) {
    throw InputError("library has no " + gs_format_name(obj, static_cast<std::size_t>(M)) + " entry at " +
                     format_double(snr) + " dB");
  }
  return e->constellation;
}

const char* kFig1Readme = R"(AIR versus SNR.

qam_M16.csv, qam_M64.csv, qam_M256.csv  GMI of Gray square QAM (snr_db,rate)
baseline_envelope.csv                   pointwise max of the QAM curves, with the source M (solid lines)
baseline_pieces.csv                     SNR interval of each envelope piece
switching_points.csv                    SNRs where the envelope source changes (diamond markers)
capacity.csv                            log2(1 + snr)
ggs_M*.csv                              GMI of GMI-optimized constellations (dashed lines)
igs_M*.csv                              MI of MI-optimized constellations (dotted lines)
snr_gains.csv                           horizontal gain arrows: SNR needed by the baseline and the
                                        optimized curve at a rate, and their difference
insets/                                 optimized constellations at 7, 15 and 21 dB
)";

const char* kFig2Readme = R"(GMI-optimized M=64 constellation at 15 dB.

ggs64_15dB.txt                 constellation file (index re im label)
ggs64_15dB_bit_regions.csv     re,im,b1..b6: decided value of each bit from the sign of its LLR at 15 dB
ggs64_15dB_symbol_regions.csv  re,im,owner: maximum-likelihood (Voronoi) regions
)";

const char* kFig3Readme = R"(MI-optimized constellations at 15 dB.

igs64_15dB.txt, igs256_15dB.txt   constellation files
*_symbol_regions.csv              re,im,owner: symbol-wise decision (Voronoi) regions
)";

const char* kFig4Readme = R"(Relative AIR gains over the QAM baseline envelope.

eta_ggs_M*.csv          eta of GMI-optimized constellations (dashed lines)
eta_igs_M*.csv          eta of MI-optimized constellations (dotted lines)
fec_markers.csv         eta at each FEC rate operating point (markers)
thresholds.csv          SNRs where the net-rate-optimal M changes, for GMI and MI curves
regions.csv             SNR interval of each net-rate-optimal M (shaded regions)
operating_points_4.8.csv required SNR for 4.8 bit/sym: square 64QAM, G-GS-64 R=0.8,
                        G-GS-256 R=0.6, I-GS-64 R=0.8, I-GS-256 R=0.6 (highlighted markers)
)";

int cmd_figures(const FiguresArgs& a, RunManifest& man) {
  static const std::vector<std::string> ids = {"fig1", "fig2", "fig3", "fig4"};
  if (std::find(ids.begin(), ids.end(), a.id) == ids.end()) {
    throw InputError("unknown figure id '" + a.id + "' (expected fig1, fig2, fig3 or fig4)");
  }
  const auto lib = load_library(a.library);
  man.inputs.push_back(a.library);
  man.config = {{"figure", a.id}, {"library", a.library}, {"snr", a.snr}, {"quad_rule", a.c.quad_rule},
                {"quad_order", a.c.quad_order}, {"grid", a.grid}, {"out", a.c.out}};
  const fs::path dir = a.c.out;
  const auto q = make_quadrature(a.c.quad_rule, a.c.quad_order);

  if (a.id == "fig2") {
    const auto lc = library_member(lib, 64, Objective::kGMI, 15.0);
    write_output(dir, "ggs64_15dB.txt", write_constellation(lc), man);
    write_regions(dir, "ggs64_15dB", lc, 15.0, a.grid, true, man);
    write_output(dir, "README.md", kFig2Readme, man);
    return 0;
  }
  if (a.id == "fig3") {
    for (int M : {64, 256}) {
      const auto lc = library_member(lib, M, Objective::kMI, 15.0);
      const std::string stem = "igs" + std::to_string(M) + "_15dB";
      write_output(dir, stem + ".txt", write_constellation(lc), man);
      write_regions(dir, stem, lc, 15.0, a.grid, false, man);
    }
    write_output(dir, "README.md", kFig3Readme, man);
    return 0;
  }

  AnalysisConfig acfg;
  acfg.grid = parse_snr(a.snr);
  acfg.quadrature = q;
  const auto an = analyze(lib, acfg);

  if (a.id == "fig1") {
    for (std::size_t k = 0; k < an.baseline.Ms.size(); ++k)
      write_output(dir, "qam_" + fmt_M(an.baseline.Ms[k]) + ".csv", curve_csv(an.baseline.members[k]), man);
    write_output(dir, "baseline_envelope.csv", envelope_csv(an.baseline), man);
    write_output(dir, "baseline_pieces.csv", pieces_csv(an.baseline), man);
    write_output(dir, "switching_points.csv", switching_csv(an.baseline), man);
    AirCurve cap{Metric::kMI, "capacity", acfg.grid, {}};
    for (double s : acfg.grid) cap.rate.push_back(awgn_capacity(s));
    write_output(dir, "capacity.csv", curve_csv(cap), man);
    CsvWriter gains({"format", "rate", "snr_baseline_db", "snr_gs_db", "gain_db"});
    const auto add_gain = [&](const AirCurve& c, double rate) {
      const double sb = an.baseline.curve.snr_at(rate), sg = c.snr_at(rate);
      gains.add({c.format, format_double(rate), format_double(sb), format_double(sg), format_double(sb - sg)});
    };
    for (const auto& g : an.gs) {
      write_output(dir, std::string(g.objective == Objective::kMI ? "igs_" : "ggs_") + fmt_M(g.M) + ".csv",
                   curve_csv(g.curve), man);
      if (g.objective == Objective::kGMI && g.M == 64) add_gain(g.curve, 3.14);
      if (g.objective == Objective::kGMI && g.M == 256) add_gain(g.curve, 5.15);
      if (g.objective == Objective::kMI) add_gain(g.curve, max_snr_gain(g.curve, an.baseline.curve).rate);
    }
    write_output(dir, "snr_gains.csv", gains.str(), man);
    for (const auto& e : lib) {
      for (double s : {7.0, 15.0, 21.0}) {
        if (std::abs(e.snr_db - s) < 1e-9) {
          write_output(dir, "insets/" + library_file_name(e.objective, e.M(), e.snr_db), write_constellation(e.constellation), man);
        }
      }
    }
    write_output(dir, "README.md", kFig1Readme, man);
    return 0;
  }

  // fig4
  CsvWriter markers({"format", "M", "R", "target_rate", "required_snr_db", "eta"});
  for (const auto& g : an.gs) {
    write_output(dir, std::string(g.objective == Objective::kMI ? "eta_igs_" : "eta_ggs_") + fmt_M(g.M) + ".csv",
                 eta_csv(g.eta.eta), man);
    for (const auto& mk : g.markers) {
      markers.add({g.curve.format, std::to_string(g.M), format_double(mk.op.R), format_double(mk.op.target_rate),
                   mk.op.ok() ? format_double(mk.op.required_snr_db) : "nan", mk.op.ok() ? format_double(mk.eta) : "nan"});
    }
  }
  write_output(dir, "fec_markers.csv", markers.str(), man);
  CsvWriter th({"metric", "snr_db", "from_M", "to_M"});
  CsvWriter regions({"metric", "snr_lo", "snr_hi", "M"});
  for (Objective obj : {Objective::kGMI, Objective::kMI}) {
    const auto t = an.thresholds(obj);
    double lo = acfg.grid.front();
    for (const auto& x : t) {
      th.add({to_string(obj), format_double(x.snr_db), std::to_string(x.from_M), std::to_string(x.to_M)});
      regions.add({to_string(obj), format_double(lo), format_double(x.snr_db), std::to_string(x.from_M)});
      lo = x.snr_db;
    }
    if (!t.empty()) regions.add({to_string(obj), format_double(lo), format_double(acfg.grid.back()), std::to_string(t.back().to_M)});
  }
  write_output(dir, "thresholds.csv", th.str(), man);
  write_output(dir, "regions.csv", regions.str(), man);
  CsvWriter ops({"format", "M", "R", "metric", "required_snr_db"});
  const auto add_op = [&](const std::string& name, int M, double R, const AirCurve& c) {
    const auto op = fec_operating_points(M, {R}, c).front();
    ops.add({name, std::to_string(M), format_double(R), to_string(c.metric),
             op.ok() ? format_double(op.required_snr_db) : "nan"});
  };
  for (std::size_t k = 0; k < an.baseline.Ms.size(); ++k)
    if (an.baseline.Ms[k] == 64) add_op("QAM-64", 64, 0.8, an.baseline.members[k]);
  for (const auto& [obj, M, R] : {std::tuple{Objective::kGMI, 64, 0.8}, std::tuple{Objective::kGMI, 256, 0.6},
                                  std::tuple{Objective::kMI, 64, 0.8}, std::tuple{Objective::kMI, 256, 0.6}}) {
    const auto& g = an.get(obj, M);
    add_op(g.curve.format, M, R, g.curve);
  }
  write_output(dir, "operating_points_4.8.csv", ops.str(), man);
  write_output(dir, "README.md", kFig4Readme, man);
  return 0;
}

// ---------------------------------------------------------------- driver

int run(std::vector<std::string> args, bool allow_replay) {
  CLI::App app{"Achievable-rate evaluation and geometric shaping of 2D constellations"};
  app.require_subcommand(1);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "AIR of a constellation file over an SNR grid");
  c_ev->add_option("file", ev.file, "Constellation file")->required();
  c_ev->add_option("--snr", ev.snr, "SNR in dB: value or a:b:step")->required();
  c_ev->add_option("--metric", ev.metric, "mi or gmi")->check(CLI::IsMember({"mi", "gmi"}))->capture_default_str();
  add_quadrature(c_ev, ev.c);
  c_ev->add_option("--out", ev.c.out, "Output directory")->capture_default_str();

  OptimizeArgs op;
  const auto add_opt_flags = [](CLI::App* c, OptimizeArgs& o) {
    c->add_option("--M", o.M, "Constellation size")->required();
    c->add_option("--objective", o.objective, "mi or gmi")->check(CLI::IsMember({"mi", "gmi"}))->capture_default_str();
    c->add_option("--seed", o.seed, "Base seed for random starts")->capture_default_str();
    c->add_option("--restarts", o.restarts, "Number of starts")->capture_default_str();
    c->add_option("--tol", o.tol, "Convergence tolerance (bit)")->capture_default_str();
    c->add_option("--max-iters", o.max_iters, "Outer iteration cap")->capture_default_str();
    c->add_option("--inner-order", o.inner_order, "Inner quadrature order (0 = auto)")->capture_default_str();
    c->add_flag("--no-qam-start", o.no_qam, "Do not use square QAM as a start");
    c->add_option("--threads", o.c.threads, "Parallel restarts")->capture_default_str();
    add_quadrature(c, o.c);
  };
  auto* c_op = app.add_subcommand("optimize", "Optimize points and labeling for MI or GMI");
  add_opt_flags(c_op, op);
  c_op->add_option("--snr", op.snr, "SNR in dB")->required();
  c_op->add_option("--start", op.start, "Constellation file used as the first start");
  c_op->add_option("--out", op.c.out, "Output directory")->capture_default_str();

  LibraryArgs lb;
  lb.o.c.out = GSOPT_DEFAULT_LIBRARY;
  lb.o.restarts = 2;
  lb.o.tol = 1e-5;
  auto* c_lb = app.add_subcommand("library", "Optimize at a list of anchor SNRs, warm-starting each from the previous");
  add_opt_flags(c_lb, lb.o);
  c_lb->add_option("--snr", lb.o.snr, "Anchor SNRs: value or a:b:step")->required();
  c_lb->add_option("--out", lb.o.c.out, "Library directory")->capture_default_str();
  c_lb->add_flag("--force", lb.force, "Re-optimize anchors that already exist");

  FiguresArgs fg;
  auto* c_fg = app.add_subcommand("figures", "Write plot data (CSV) for one figure");
  c_fg->add_option("id", fg.id, "fig1, fig2, fig3 or fig4")->required();
  c_fg->add_option("--library", fg.library, "Library directory")->capture_default_str();
  c_fg->add_option("--snr", fg.snr, "SNR grid a:b:step (step <= 0.25)")->capture_default_str();
  c_fg->add_option("--grid", fg.grid, "Region map resolution per axis")->capture_default_str();
  add_quadrature(c_fg, fg.c);
  c_fg->add_option("--out", fg.c.out, "Output directory")->capture_default_str();

  std::string manifest_path;
  auto* c_rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  c_rp->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (c_rp->parsed()) {
    if (!allow_replay) throw InputError("replay: a manifest cannot replay another replay");
    const auto m = RunManifest::load(manifest_path);
    return run(m.argv, false);
  }

  RunManifest man;
  man.argv = args;
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::string out;
  try {
    if (c_ev->parsed()) {
      man.command = "evaluate";
      out = ev.c.out;
      code = cmd_evaluate(ev, man);
    } else if (c_op->parsed()) {
      man.command = "optimize";
      out = op.c.out;
      code = cmd_optimize(op, man);
    } else if (c_lb->parsed()) {
      man.command = "library";
      out = lb.o.c.out;
      code = cmd_library(lb, man);
    } else {
      man.command = "figures";
      out = fg.c.out;
      code = cmd_figures(fg, man);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  man.exit_code = code;
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path mpath = fs::path(out) / (man.command == "library" ? std::string("manifest_") + to_string(parse_objective(lb.o.objective)) +
                                                                          "_M" + std::to_string(lb.o.M) + ".json"
                                                                    : "manifest.json");
  fs::create_directories(mpath.parent_path());
  man.save(mpath);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc), true);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#pragma once

// AIR curves versus SNR: monotone interpolation, the square-QAM baseline
// envelope, SNR gains at a rate, relative gains, FEC operating points and
// net-rate switching thresholds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "air.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "constellation.hpp"
#include "incremental.hpp"
#include "io.hpp"
#include "quadrature.hpp"

namespace gsopt {

using Metric = Objective;

// Inclusive grid a, a+step, ..., b (b included when it lies on the grid).
inline std::vector<double> snr_grid(double a, double b, double step) {
  if (!(step > 0.0) || !is_finite(a) || !is_finite(b) || b < a) {
    throw InputError("snr grid: need finite a <= b and step > 0");
  }
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(a + static_cast<double>(i) * step);
  return g;
}

// Fritsch-Carlson monotone piecewise-cubic Hermite interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InputError("interpolation needs at least two samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw InputError("interpolation abscissae must be strictly increasing");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front()) * 0.0;
    if (x >= x_.back()) return y_.back();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    const std::size_t j = std::min(i, n - 2);
    const double h = x_[j + 1] - x_[j];
    const double t = (x - x_[j]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[j] + (t3 - 2 * t2 + t) * h * d_[j] + (-2 * t3 + 3 * t2) * y_[j + 1] +
           (t3 - t2) * h * d_[j + 1];
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) {
      d = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) {
      d = 3 * d0;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

inline constexpr double kRateTolerance = 1e-7;
inline constexpr double kSnrResolutionDb = 0.005;

struct AirCurve {
  Metric metric = Metric::kGMI;
  std::string format;  // e.g. "QAM-64", "G-GS-256"
  std::vector<double> snr_db;
  std::vector<double> rate;

  std::size_t size() const noexcept { return snr_db.size(); }

  void validate() const {
    if (snr_db.size() != rate.size() || snr_db.size() < 2) {
      throw InputError("curve " + format + ": need at least two (snr, rate) samples");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      if (!is_finite(snr_db[i]) || !is_finite(rate[i]) || rate[i] < 0.0) {
        throw InputError("curve " + format + ": non-finite or negative sample");
      }
      if (i > 0 && !(snr_db[i] > snr_db[i - 1])) throw InputError("curve " + format + ": SNR not strictly increasing");
      if (i > 0 && rate[i] < rate[i - 1] - kRateTolerance) {
        throw InputError("curve " + format + ": rate decreases at " + format_double(snr_db[i]) + " dB");
      }
    }
  }

  MonotoneCubic interpolant() const { return MonotoneCubic(snr_db, rate); }

  double at(double snr) const { return interpolant()(snr); }

  // Smallest SNR at which the interpolated curve reaches `r`, to better than
  // kSnrResolutionDb. Throws if `r` is outside the curve's range.
  double snr_at(double r) const {
    validate();
    if (r < rate.front() || r > rate.back()) {
      throw InputError("rate " + format_double(r) + " is outside the range of curve " + format + " [" +
                       format_double(rate.front()) + ", " + format_double(rate.back()) + "]");
    }
    const auto f = interpolant();
    std::size_t k = 0;
    while (k + 1 < size() && rate[k + 1] < r) ++k;
    if (rate[k] >= r) return snr_db[k];
    double lo = snr_db[k], hi = snr_db[k + 1];
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) >= r ? hi : lo) = mid;
    }
    return hi;
  }
};

// AIR of one constellation over a grid.
inline AirCurve air_curve(const LabeledConstellation& lc, const std::vector<double>& grid, Metric metric,
                          const QuadratureSpec& q, std::string format) {
  AirCurve c{metric, std::move(format), grid, {}};
  for (double s : grid) {
    const auto v = air_quadrature(lc, ChannelSpec::from_db(s), q, metric == Metric::kGMI);
    c.rate.push_back(metric == Metric::kMI ? v.mi : v.gmi);
  }
  return c;
}

// SNR_b(rate) - SNR_a(rate): the SNR that curve a saves over curve b.
inline double snr_gain_at_rate(const AirCurve& a, const AirCurve& b, double rate) {
  return b.snr_at(rate) - a.snr_at(rate);
}

struct EnvelopePiece {
  double snr_lo = 0.0, snr_hi = 0.0;
  int M = 0;
};

struct SwitchPoint {
  double snr_db = 0.0;
  int from_M = 0, to_M = 0;
  double rate = 0.0;
};

struct BaselineEnvelope {
  std::vector<int> Ms;
  std::vector<AirCurve> members;  // same grid as `curve`
  AirCurve curve;                 // pointwise max
  std::vector<int> source;        // member M at each grid point
  std::vector<EnvelopePiece> pieces;
  std::vector<SwitchPoint> switching;
};

// Pointwise max of member curves sharing one grid. `exact`, when given,
// evaluates member k at any SNR and is used to bisect crossings to 0.01 dB;
// otherwise the members' interpolants are used.
inline BaselineEnvelope envelope_from_curves(std::vector<int> Ms, std::vector<AirCurve> members,
                                             const std::function<double(std::size_t, double)>& exact = {}) {
  if (Ms.size() != members.size() || members.empty()) throw InputError("envelope: one curve per format required");
  const auto& grid = members.front().snr_db;
  for (const auto& c : members) {
    c.validate();
    if (c.snr_db != grid) throw InputError("envelope: member curves must share the SNR grid");
  }
  BaselineEnvelope env;
  env.Ms = std::move(Ms);
  env.members = std::move(members);
  env.curve = {env.members.front().metric, "envelope", grid, {}};
  std::vector<std::size_t> arg(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < env.members.size(); ++k)
      if (env.members[k].rate[g] > env.members[best].rate[g]) best = k;
    arg[g] = best;
    env.curve.rate.push_back(env.members[best].rate[g]);
    env.source.push_back(env.Ms[best]);
  }
  std::vector<MonotoneCubic> interp;
  for (const auto& c : env.members) interp.push_back(c.interpolant());
  const auto value = [&](std::size_t k, double s) { return exact ? exact(k, s) : interp[k](s); };

  double lo = grid.front();
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (arg[g] == arg[g - 1]) continue;
    const std::size_t a = arg[g - 1], b = arg[g];
    double x0 = grid[g - 1], x1 = grid[g];
    while (x1 - x0 > 0.01) {
      const double mid = 0.5 * (x0 + x1);
      (value(b, mid) > value(a, mid) ? x1 : x0) = mid;
    }
    const double s = 0.5 * (x0 + x1);
    env.switching.push_back({s, env.Ms[a], env.Ms[b], value(a, s)});
    env.pieces.push_back({lo, s, env.Ms[a]});
    lo = s;
  }
  env.pieces.push_back({lo, grid.back(), env.Ms[arg.back()]});
  return env;
}

// Envelope of Gray square-QAM GMI curves (the baseline).
inline BaselineEnvelope qam_envelope(const std::vector<int>& Ms, const std::vector<double>& grid,
                                     const QuadratureSpec& q = QuadratureSpec::standard()) {
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (grid[g] - grid[g - 1] > 0.25 + 1e-12) throw InputError("qam_envelope: grid step must be <= 0.25 dB");
  std::vector<LabeledConstellation> qams;
  std::vector<AirCurve> curves;
  for (int M : Ms) {
    qams.push_back(square_qam(static_cast<std::size_t>(M)));
    curves.push_back(air_curve(qams.back(), grid, Metric::kGMI, q, "QAM-" + std::to_string(M)));
  }
  return envelope_from_curves(Ms, std::move(curves), [&](std::size_t k, double s) {
    return air_quadrature(qams[k], ChannelSpec::from_db(s), q, true).gmi;
  });
}

struct RelativeGain {
  AirCurve eta;                  // metric/format of the input curve, rate = eta
  std::vector<double> excluded;  // SNRs where the baseline is 0
};

inline RelativeGain relative_gain(const AirCurve& curve, const AirCurve& baseline) {
  if (curve.snr_db != baseline.snr_db) throw InputError("relative_gain: curve and baseline must share the SNR grid");
  RelativeGain out;
  out.eta.metric = curve.metric;
  out.eta.format = curve.format;
  for (std::size_t g = 0; g < curve.size(); ++g) {
    if (baseline.rate[g] == 0.0) {
      out.excluded.push_back(curve.snr_db[g]);
      continue;
    }
    out.eta.snr_db.push_back(curve.snr_db[g]);
    out.eta.rate.push_back((curve.rate[g] - baseline.rate[g]) / baseline.rate[g]);
  }
  return out;
}

inline const std::vector<double> kFecRates = {0.6, 0.67, 0.75, 0.8, 0.85};

struct OperatingPoint {
  int M = 0;
  double R = 0.0;
  double target_rate = 0.0;  // log2(M) * R
  double required_snr_db = 0.0;
  Metric metric = Metric::kGMI;
  std::string error;  // non-empty when the target is unreachable

  bool ok() const { return error.empty(); }
};

inline std::vector<OperatingPoint> fec_operating_points(int M, const std::vector<double>& Rs, const AirCurve& curve) {
  std::vector<OperatingPoint> out;
  const int m = log2_exact(static_cast<std::size_t>(M));
  for (double R : Rs) {
    OperatingPoint op{M, R, m * R, 0.0, curve.metric, {}};
    try {
      op.required_snr_db = curve.snr_at(op.target_rate);
    } catch (const InputError& e) {
      op.error = e.what();
    }
    out.push_back(op);
  }
  return out;
}

struct FormatCurve {
  int M = 0;
  AirCurve curve;
};

struct Threshold {
  double snr_db = 0.0;
  int from_M = 0, to_M = 0;
};

// Boundaries between the SNR regions where each format gives the highest net
// rate m*R over the FEC rates it can support (AIR >= m*R). Equal net rates go
// to the larger M.
inline std::vector<Threshold> switching_thresholds(const std::vector<FormatCurve>& formats,
                                                   const std::vector<double>& Rs = kFecRates) {
  std::vector<Threshold> out;
  if (formats.size() < 2) return out;
  struct Step {
    double snr;
    double net;
  };
  std::vector<std::vector<Step>> steps(formats.size());
  std::vector<double> events;
  for (std::size_t f = 0; f < formats.size(); ++f) {
    for (const auto& op : fec_operating_points(formats[f].M, Rs, formats[f].curve)) {
      if (!op.ok()) continue;
      steps[f].push_back({op.required_snr_db, op.target_rate});
      events.push_back(op.required_snr_db);
    }
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  const auto net = [&](std::size_t f, double s) {
    double best = 0.0;
    for (const auto& st : steps[f])
      if (st.snr <= s) best = std::max(best, st.net);
    return best;
  };
  int current = 0;
  for (double s : events) {
    std::size_t best = 0;
    double best_net = -1.0;
    for (std::size_t f = 0; f < formats.size(); ++f) {
      const double v = net(f, s);
      // m*R products tie only up to rounding (6 * 0.8 vs 8 * 0.6)
      if (v > best_net + 1e-9 || (std::abs(v - best_net) <= 1e-9 && formats[f].M > formats[best].M)) {
        best = f;
        best_net = v;
      }
    }
    if (best_net <= 0.0) continue;
    if (current != 0 && formats[best].M != current) out.push_back({s, current, formats[best].M});
    current = formats[best].M;
  }
  return out;
}

inline std::string curve_csv(const AirCurve& c) {
  CsvWriter w({"snr_db", "rate"});
  for (std::size_t g = 0; g < c.size(); ++g) w.add({format_double(c.snr_db[g]), format_double(c.rate[g])});
  return w.str();
}

inline std::string eta_csv(const AirCurve& eta) {
  CsvWriter w({"snr_db", "eta"});
  for (std::size_t g = 0; g < eta.size(); ++g) w.add({format_double(eta.snr_db[g]), format_double(eta.rate[g])});
  return w.str();
}

inline std::string operating_points_csv(const std::vector<OperatingPoint>& ops) {
  CsvWriter w({"M", "R", "target_rate", "required_snr_db"});
  for (const auto& op : ops) {
    w.add({std::to_string(op.M), format_double(op.R), format_double(op.target_rate),
           op.ok() ? format_double(op.required_snr_db) : std::string("nan")});
  }
  return w.str();
}

inline AirCurve parse_curve_csv(const std::string& text, Metric metric, std::string format) {
  AirCurve c{metric, std::move(format), {}, {}};
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line_no == 1) {
      if (line != "snr_db,rate" && line != "snr_db,eta") throw InputError("line 1: expected curve CSV header");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("line " + std::to_string(line_no) + ": expected two fields");
    try {
      c.snr_db.push_back(std::stod(line.substr(0, comma)));
      c.rate.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw InputError("line " + std::to_string(line_no) + ": malformed number");
    }
    if (end == text.size()) break;
  }
  return c;
}

}  // namespace gsopt

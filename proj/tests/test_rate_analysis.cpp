#include <gtest/gtest.h>

#include "gsopt/rate_analysis.hpp"

using namespace gsopt;

namespace {

AirCurve synthetic(const std::string& name, double scale, double shift, double a = 0.0, double b = 20.0) {
  AirCurve c{Metric::kGMI, name, snr_grid(a, b, 0.25), {}};
  for (double s : c.snr_db) c.rate.push_back(scale * std::log2(1.0 + db_to_linear(s - shift)));
  return c;
}

// A saturating curve that levels off at m bits.
AirCurve saturating(int m, double shift) {
  AirCurve c{Metric::kGMI, "sat" + std::to_string(m), snr_grid(0.0, 30.0, 0.25), {}};
  for (double s : c.snr_db) c.rate.push_back(m * (1.0 - std::exp(-awgn_capacity(s - shift) / m * 1.3)));
  return c;
}

}  // namespace

TEST(SnrGrid, InclusiveAndValidated) {
  const auto g = snr_grid(0.0, 1.0, 0.25);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_THROW(snr_grid(1.0, 0.0, 0.25), InputError);
  EXPECT_THROW(snr_grid(0.0, 1.0, 0.0), InputError);
}

TEST(MonotoneCubic, InterpolatesAndPreservesMonotonicity) {
  std::vector<double> x = {0, 1, 2, 3, 4, 5};
  std::vector<double> y = {0, 0.1, 0.1, 2.0, 2.05, 5.0};
  MonotoneCubic f(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(f(x[i]), y[i]);
  double prev = -1.0;
  for (double t = 0.0; t <= 5.0; t += 0.001) {
    const double v = f(t);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  // Flat segment stays flat.
  EXPECT_NEAR(f(1.5), 0.1, 1e-15);
}

TEST(MonotoneCubic, AccurateOnSmoothCurves) {
  const auto c = synthetic("cap", 1.0, 0.0);
  const auto f = c.interpolant();
  for (double s = 0.1; s < 20.0; s += 0.37) EXPECT_NEAR(f(s), awgn_capacity(s), 2e-4);
}

TEST(AirCurve, ValidationRejectsBadSamples) {
  AirCurve c{Metric::kMI, "bad", {0.0, 1.0, 1.0}, {0.1, 0.2, 0.3}};
  EXPECT_THROW(c.validate(), InputError);
  AirCurve d{Metric::kMI, "dec", {0.0, 1.0, 2.0}, {0.1, 0.3, 0.2}};
  EXPECT_THROW(d.validate(), InputError);
  AirCurve e{Metric::kMI, "ok", {0.0, 1.0, 2.0}, {0.1, 0.3, 0.3 - 1e-9}};
  EXPECT_NO_THROW(e.validate());
}

TEST(AirCurve, SnrAtInvertsTheCurve) {
  const auto c = synthetic("cap", 1.0, 0.0);
  for (double r = 1.1; r < 6.5; r += 0.4) {
    const double s = c.snr_at(r);
    EXPECT_NEAR(c.at(s), r, 1e-6);
    EXPECT_NEAR(s, 10.0 * std::log10(std::pow(2.0, r) - 1.0), 0.01);
  }
  try {
    c.snr_at(9.0);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("cap"), std::string::npos);
  }
}

TEST(SnrGain, IdenticalCurvesGiveZeroAndGainIsAntisymmetric) {
  const auto a = synthetic("a", 1.0, 0.0);
  const auto b = synthetic("b", 1.0, 0.8);
  EXPECT_NEAR(snr_gain_at_rate(a, a, 3.0), 0.0, 1e-12);
  for (double r : {2.0, 3.14, 5.0}) {
    EXPECT_NEAR(snr_gain_at_rate(a, b, r), -snr_gain_at_rate(b, a, r), 1e-9);
    EXPECT_NEAR(snr_gain_at_rate(a, b, r), 0.8, kSnrResolutionDb);
  }
  EXPECT_THROW(snr_gain_at_rate(a, b, 0.01), InputError);
}

TEST(RelativeGain, SelfIsZeroAndZeroBaselineExcluded) {
  const auto a = synthetic("a", 1.0, 0.0);
  const auto g = relative_gain(a, a);
  for (double e : g.eta.rate) EXPECT_EQ(e, 0.0);
  EXPECT_TRUE(g.excluded.empty());
  AirCurve z = a;
  z.rate[0] = 0.0;
  const auto h = relative_gain(a, z);
  ASSERT_EQ(h.excluded.size(), 1u);
  EXPECT_EQ(h.excluded[0], a.snr_db[0]);
  EXPECT_EQ(h.eta.size(), a.size() - 1);
  const auto b = synthetic("b", 1.05, 0.0);
  const auto k = relative_gain(b, a);
  EXPECT_NEAR(k.eta.rate[10], 0.05, 1e-12);
  AirCurve other = synthetic("c", 1.0, 0.0, 0.0, 10.0);
  EXPECT_THROW(relative_gain(other, a), InputError);
}

TEST(Envelope, PiecesTileAndValuesAreTheMax) {
  std::vector<AirCurve> members = {saturating(4, 0.0), saturating(6, 2.0), saturating(8, 4.0)};
  const auto env = envelope_from_curves({16, 64, 256}, members);
  ASSERT_EQ(env.pieces.size(), env.switching.size() + 1);
  EXPECT_EQ(env.pieces.front().snr_lo, env.curve.snr_db.front());
  EXPECT_EQ(env.pieces.back().snr_hi, env.curve.snr_db.back());
  for (std::size_t k = 1; k < env.pieces.size(); ++k) EXPECT_EQ(env.pieces[k].snr_lo, env.pieces[k - 1].snr_hi);
  for (std::size_t g = 0; g < env.curve.size(); ++g)
    for (const auto& m : members) EXPECT_GE(env.curve.rate[g], m.rate[g]);
  for (const auto& s : env.switching) {
    const std::size_t a = s.from_M == 16 ? 0 : s.from_M == 64 ? 1 : 2;
    const std::size_t b = s.to_M == 16 ? 0 : s.to_M == 64 ? 1 : 2;
    const auto fa = members[a].interpolant(), fb = members[b].interpolant();
    EXPECT_GT(fa(s.snr_db - 0.01), fb(s.snr_db - 0.01));
    EXPECT_LT(fa(s.snr_db + 0.01), fb(s.snr_db + 0.01));
  }
}

TEST(Envelope, QamEnvelopeSourcesAndSwitchingPoints) {
  const auto env = qam_envelope({16, 64, 256}, snr_grid(3.0, 26.0, 0.25));
  ASSERT_EQ(env.switching.size(), 2u);
  EXPECT_EQ(env.switching[0].from_M, 16);
  EXPECT_EQ(env.switching[0].to_M, 64);
  EXPECT_EQ(env.switching[1].from_M, 64);
  EXPECT_EQ(env.switching[1].to_M, 256);
  const auto source_at = [&](double s) {
    for (const auto& p : env.pieces)
      if (s >= p.snr_lo && s <= p.snr_hi) return p.M;
    return 0;
  };
  EXPECT_EQ(source_at(5.0), 16);
  EXPECT_EQ(source_at(25.0), 256);
  // Crossings are where the exact GMI difference changes sign.
  const auto q64 = square_qam(64), q16 = square_qam(16);
  const double s = env.switching[0].snr_db;
  EXPECT_LT(gmi(q64, ChannelSpec::from_db(s - 0.01)), gmi(q16, ChannelSpec::from_db(s - 0.01)));
  EXPECT_GT(gmi(q64, ChannelSpec::from_db(s + 0.01)), gmi(q16, ChannelSpec::from_db(s + 0.01)));
  EXPECT_THROW(qam_envelope({16, 64}, snr_grid(0.0, 10.0, 0.5)), InputError);
}

TEST(OperatingPoints, TargetIsExactAndInverseHolds) {
  const auto c = synthetic("cap", 1.0, 0.0, 0.0, 25.0);
  const auto ops = fec_operating_points(64, kFecRates, c);
  ASSERT_EQ(ops.size(), kFecRates.size());
  for (const auto& op : ops) {
    EXPECT_EQ(op.target_rate, 6 * op.R);
    ASSERT_TRUE(op.ok());
    EXPECT_NEAR(c.at(op.required_snr_db), op.target_rate, 1e-3);
  }
  EXPECT_EQ(ops[3].target_rate, 6 * 0.8);
  const auto low = synthetic("low", 1.0, 0.0, 0.0, 8.0);
  const auto some = fec_operating_points(256, kFecRates, low);
  for (const auto& op : some) EXPECT_FALSE(op.ok());
  const auto mixed = fec_operating_points(16, kFecRates, low);
  EXPECT_TRUE(mixed.front().ok());
}

TEST(Thresholds, StepwiseNetRateBoundaries) {
  EXPECT_TRUE(switching_thresholds({{16, saturating(4, 0.0)}}).empty());
  const std::vector<FormatCurve> f = {{16, saturating(4, 0.0)}, {64, saturating(6, 1.0)}, {256, saturating(8, 2.0)}};
  const auto t = switching_thresholds(f);
  ASSERT_FALSE(t.empty());
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t[k].snr_db, t[k - 1].snr_db);
  EXPECT_EQ(t.front().from_M, 16);
  EXPECT_EQ(t.back().to_M, 256);
  // Each threshold is a required SNR of the format switched to.
  for (const auto& x : t) {
    bool found = false;
    for (const auto& fc : f) {
      if (fc.M != x.to_M) continue;
      for (const auto& op : fec_operating_points(fc.M, kFecRates, fc.curve))
        if (op.ok() && std::abs(op.required_snr_db - x.snr_db) < 1e-12) found = true;
    }
    EXPECT_TRUE(found) << x.snr_db;
  }
}

TEST(Thresholds, EqualNetRatesPreferTheLargerFormat) {
  // 64 at R=0.8 and 256 at R=0.6 both carry 4.8 bit and, on one curve, need the same SNR
  const auto c = synthetic("cap", 1.0, 0.0, 0.0, 25.0);
  const auto t = switching_thresholds({{64, c}, {256, c}});
  ASSERT_FALSE(t.empty());
  EXPECT_EQ(t.front().from_M, 64);
  EXPECT_EQ(t.front().to_M, 256);
  EXPECT_NEAR(t.front().snr_db, c.snr_at(4.8), 1e-9);
  for (const auto& x : t) EXPECT_FALSE(x.to_M == 64 && std::abs(x.snr_db - t.front().snr_db) < 1e-9);
}

TEST(CurveCsv, RoundTrip) {
  const auto c = synthetic("cap", 1.0, 0.0, 0.0, 2.0);
  const auto text = curve_csv(c);
  EXPECT_EQ(text.substr(0, 12), "snr_db,rate\n");
  const auto back = parse_curve_csv(text, Metric::kGMI, "cap");
  EXPECT_EQ(back.snr_db, c.snr_db);
  EXPECT_EQ(back.rate, c.rate);
  EXPECT_THROW(parse_curve_csv("x,y\n1,2\n", Metric::kGMI, "bad"), InputError);
}

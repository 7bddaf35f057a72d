#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gsopt/air.hpp"
#include "gsopt/incremental.hpp"

using namespace gsopt;

namespace {

LabeledConstellation jittered_qam(std::size_t M, std::uint64_t seed, double amount = 0.05) {
  const auto q = square_qam(M);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, amount);
  std::vector<cdouble> pts = q.points();
  for (auto& x : pts) x += cdouble(n(rng), n(rng));
  return {Constellation::normalized(pts), q.labeling};
}

double full_value(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q, Objective obj) {
  const auto v = air_quadrature(lc, ch, q, obj == Objective::kGMI);
  return obj == Objective::kMI ? v.mi : v.gmi;
}

LabeledConstellation moved(const LabeledConstellation& lc, std::size_t i, std::size_t j, cdouble a, cdouble b) {
  auto pts = lc.points();
  pts[i] = a;
  pts[j] = b;
  return {Constellation(pts), lc.labeling};
}

}  // namespace

class IncrementalTest : public ::testing::TestWithParam<Objective> {};

TEST_P(IncrementalTest, ValueMatchesFullEvaluation) {
  const auto q = QuadratureSpec::trapezoid(32);
  for (double snr : {4.0, 15.0, 24.0}) {
    const auto lc = jittered_qam(16, 1);
    const auto ch = ChannelSpec::from_db(snr);
    IncrementalAir ev(lc, ch, q, GetParam());
    EXPECT_NEAR(ev.value(), full_value(lc, ch, q, GetParam()), 1e-11) << snr;
  }
}

TEST_P(IncrementalTest, MoveDeltaMatchesRecomputation) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(12.0);
  auto lc = jittered_qam(64, 2);
  IncrementalAir ev(lc, ch, q, GetParam());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, 63);
  std::normal_distribution<double> n(0.0, 0.02);
  for (int t = 0; t < 20; ++t) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (j == i) j = (i + 1) % 64;
    const cdouble a = lc.points()[i] + cdouble(n(rng), n(rng));
    const cdouble b = lc.points()[j] + cdouble(n(rng), n(rng));
    ev.begin_pair(i, j);
    const double before = ev.value();
    const double d = ev.move_delta(a, b);
    const auto next = moved(lc, i, j, a, b);
    const double truth = full_value(next, ch, q, GetParam()) - full_value(lc, ch, q, GetParam());
    EXPECT_NEAR(d, truth, 1e-11);
    EXPECT_EQ(ev.value(), before);
    if (t % 2 == 0) {
      const double c = ev.commit_move(a, b);
      EXPECT_NEAR(c, truth, 1e-11);
      lc = next;
      EXPECT_NEAR(ev.value(), full_value(lc, ch, q, GetParam()), 1e-11);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Objectives, IncrementalTest, ::testing::Values(Objective::kMI, Objective::kGMI),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Incremental, SwapDeltasMatchRecomputation) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(10.0);
  auto lc = jittered_qam(16, 4);
  IncrementalAir ev(lc, ch, q, Objective::kGMI);
  const auto all = ev.swap_delta_all();
  std::size_t c = 0;
  const double base = full_value(lc, ch, q, Objective::kGMI);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = i + 1; j < 16; ++j, ++c) {
      const LabeledConstellation s{lc.constellation, lc.labeling.swapped(i, j)};
      const double truth = full_value(s, ch, q, Objective::kGMI) - base;
      EXPECT_NEAR(all[c], truth, 1e-11);
      EXPECT_NEAR(ev.swap_delta(i, j), truth, 1e-11);
    }
  }
  const double d = ev.commit_swap(2, 9);
  lc = {lc.constellation, lc.labeling.swapped(2, 9)};
  EXPECT_NEAR(d, full_value(lc, ch, q, Objective::kGMI) - base, 1e-11);
  EXPECT_NEAR(ev.value(), full_value(lc, ch, q, Objective::kGMI), 1e-11);
  EXPECT_EQ(ev.labeling(), lc.labeling);
}

// Direct evaluation of the screen's estimate: rows i and j take the exact log
// change of their own-class sums, every other row the first-order change.
double linearized_swap(const LabeledConstellation& lc, const ChannelSpec& ch, const QuadratureSpec& q, std::size_t i,
                       std::size_t j) {
  const auto pts = lc.points();
  const std::size_t M = lc.size();
  const int m = lc.bits();
  const Labeling after = lc.labeling.swapped(i, j);
  const double s = std::sqrt(ch.n0);
  double acc = 0.0;
  std::vector<double> T(M);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t u = 0; u < q.nodes.size(); ++u) {
      for (std::size_t v = 0; v < q.nodes.size(); ++v) {
        const double w = q.weights[u] * q.weights[v];
        const cdouble y = pts[a] + s * cdouble(q.nodes[u], q.nodes[v]);
        for (std::size_t b = 0; b < M; ++b) T[b] = std::exp((std::norm(y - pts[a]) - std::norm(y - pts[b])) / ch.n0);
        for (int p = 0; p < m; ++p) {
          double o1 = 0.0, o2 = 0.0;
          for (std::size_t b = 0; b < M; ++b) {
            if (label_bit(lc.labeling[b], m, p) == label_bit(lc.labeling[a], m, p)) o1 += T[b];
            if (label_bit(after[b], m, p) == label_bit(after[a], m, p)) o2 += T[b];
          }
          acc += w * (a == i || a == j ? std::log(o2 / o1) : (o2 - o1) / o1);
        }
      }
    }
  }
  return acc / (static_cast<double>(M) * std::log(2.0));
}

TEST(Incremental, SwapScreenIsTheLinearizedSwapDelta) {
  const auto q = QuadratureSpec::trapezoid(16);
  for (double snr : {0.0, 12.0}) {
    const auto ch = ChannelSpec::from_db(snr);
    const auto lc = jittered_qam(16, 5);
    IncrementalAir ev(lc, ch, q, Objective::kGMI, 0.0);
    const auto screen = ev.swap_screen();
    ASSERT_EQ(screen.size(), 120u);
    std::size_t c = 0;
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = i + 1; j < 16; ++j, ++c)
        if (c % 7 == 0) EXPECT_NEAR(screen[c], linearized_swap(lc, ch, q, i, j), 1e-10) << i << " " << j;
  }
  IncrementalAir mi(jittered_qam(16, 5), ChannelSpec::from_db(9.0), q, Objective::kMI);
  for (double d : mi.swap_screen()) EXPECT_EQ(d, 0.0);
}

TEST(Incremental, MiSwapsAreNeutral) {
  const auto q = QuadratureSpec::trapezoid(24);
  IncrementalAir ev(jittered_qam(16, 6), ChannelSpec::from_db(10.0), q, Objective::kMI);
  EXPECT_NEAR(ev.swap_delta(0, 5), 0.0, 1e-12);
}

TEST(Incremental, GaussHermiteFallsBackToExactPath) {
  const auto q = QuadratureSpec::gauss_hermite(20);
  const auto ch = ChannelSpec::from_db(14.0);
  const auto lc = jittered_qam(16, 7);
  IncrementalAir ev(lc, ch, q, Objective::kGMI);
  const cdouble a = lc.points()[3] * 0.98, b = lc.points()[8];
  ev.begin_pair(3, 8);
  const double d = ev.move_delta(a, b);
  EXPECT_NEAR(d, full_value(moved(lc, 3, 8, a, b), ch, q, Objective::kGMI) - full_value(lc, ch, q, Objective::kGMI),
              1e-11);
}

TEST(Incremental, SetPointsRebuilds) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(10.0);
  const auto a = jittered_qam(16, 8), b = jittered_qam(16, 9);
  IncrementalAir ev(a, ch, q, Objective::kGMI);
  ev.set_points(b.points());
  EXPECT_NEAR(ev.value(), full_value(b, ch, q, Objective::kGMI), 1e-11);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gsopt/optimizer.hpp"

using namespace gsopt;

namespace {

LabeledConstellation random_points(std::size_t M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cdouble> pts(M);
  for (auto& x : pts) x = {u(rng), u(rng)};
  return {Constellation::normalized(pts), Labeling::identity(M)};
}

OptimizerConfig small_config(Objective obj, double snr) {
  OptimizerConfig cfg;
  cfg.objective = obj;
  cfg.snr_db = snr;
  cfg.restarts = 2;
  cfg.tol = 1e-5;
  cfg.max_outer_iters = 15;
  return cfg;
}

}  // namespace

TEST(PairCandidates, PreserveThePairEnergy) {
  const cdouble a(0.7, -0.2), b(-0.1, 1.1);
  const double E = std::norm(a) + std::norm(b);
  const auto c = detail::pair_candidates(a, b, 0.05);
  EXPECT_EQ(c.size(), 24u);
  for (const auto& [x, y] : c) EXPECT_NEAR(std::norm(x) + std::norm(y), E, 1e-15);
}

TEST(PairwiseSweep, PowerConstraintHoldsAfterEveryAcceptedMove) {
  for (Objective obj : {Objective::kMI, Objective::kGMI}) {
    IncrementalAir ev(square_qam(16), ChannelSpec::from_db(12.0), QuadratureSpec::trapezoid(24), obj);
    int checked = 0;
    SweepOptions opt;
    opt.on_accept = [&](const IncrementalAir& e) {
      EXPECT_NEAR(average_energy(e.state().points()), 1.0, 1e-12);
      ++checked;
    };
    double prev = ev.value();
    for (double step : {0.1, 0.05, 0.05, 0.02}) {
      const auto r = pairwise_sweep(ev, step, opt);
      EXPECT_GE(r.improvement, 0.0);
      EXPECT_GE(ev.value(), prev);
      prev = ev.value();
    }
    EXPECT_GT(checked, 0);
  }
}

TEST(PairwiseSweep, NeighbourScopeCoversEveryPoint) {
  IncrementalAir ev(square_qam(64), ChannelSpec::from_db(15.0), QuadratureSpec::trapezoid(24), Objective::kMI);
  const auto pairs = detail::sweep_pairs(ev, 8);
  std::vector<int> seen(64, 0);
  for (auto [i, j] : pairs) {
    EXPECT_LT(i, j);
    ++seen[i];
    ++seen[j];
  }
  for (int s : seen) EXPECT_GE(s, 8);
  EXPECT_EQ(detail::sweep_pairs(ev, 0).size(), 64u * 63u / 2u);
}

TEST(PairwiseSweep, FreeFunctionReportsImprovement) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(8.0);
  const auto start = random_points(16, 1);
  const auto r = pairwise_sweep(start, ch, Objective::kMI, 0.05, q);
  EXPECT_GT(r.improvement, 0.0);
  EXPECT_NEAR(r.improvement, mi(r.constellation, ch, q) - mi(start, ch, q), 1e-10);
}

TEST(Bsa, MatchesExhaustiveLabelingSearchForFourPoints) {
  const auto q = QuadratureSpec::trapezoid(32);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto pts = random_points(4, seed);
    const auto ch = ChannelSpec::from_db(2.0 + 2.0 * seed);
    std::vector<unsigned> perm = {0, 1, 2, 3};
    double best = -1.0;
    std::vector<std::vector<unsigned>> all;
    do {
      all.push_back(perm);
      best = std::max(best, gmi({pts.constellation, Labeling(perm)}, ch, q));
    } while (std::next_permutation(perm.begin(), perm.end()));
    BsaOptions opt;
    opt.tol = 1e-13;
    for (const auto& start : all) {
      const LabeledConstellation lc{pts.constellation, Labeling(start)};
      const auto r = binary_switching(lc, ch, q, opt);
      EXPECT_TRUE(r.labeling.is_bijection());
      EXPECT_NEAR(gmi({pts.constellation, r.labeling}, ch, q), best, 1e-9) << "seed " << seed;
    }
  }
}

TEST(Bsa, NeverDecreasesGmiAndKeepsPoints) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(9.0);
  const auto lc = random_points(16, 3);
  IncrementalAir ev(lc, ch, q, Objective::kGMI);
  double prev = ev.value();
  BsaOptions opt;
  opt.on_accept = [&](const IncrementalAir& e) {
    EXPECT_GT(e.value(), prev);
    prev = e.value();
    EXPECT_EQ(e.state().constellation, lc.constellation);
    EXPECT_TRUE(e.labeling().is_bijection());
  };
  const auto r = binary_switching(ev, opt);
  EXPECT_GT(r.swaps, 0);
  EXPECT_NEAR(ev.value(), gmi(ev.state(), ch, q), 1e-10);
}

TEST(Bsa, ShortlistFindsImprovementsToo) {
  const auto q = QuadratureSpec::trapezoid(24);
  const auto ch = ChannelSpec::from_db(9.0);
  IncrementalAir ev(random_points(16, 4), ch, q, Objective::kGMI);
  BsaOptions opt;
  opt.shortlist = 10;
  const auto r = binary_switching(ev, opt);
  EXPECT_GT(r.gain, 0.0);
}

TEST(Optimizer, TraceIsMonotoneAndResultValid) {
  for (Objective obj : {Objective::kMI, Objective::kGMI}) {
    const auto res = optimize(16, small_config(obj, 10.0));
    const auto& t = res.report.trace;
    ASSERT_FALSE(t.empty());
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GE(t[k].objective, t[k - 1].objective - 1e-12) << k;
    EXPECT_TRUE(is_valid(res.constellation));
    EXPECT_NEAR(res.constellation.constellation.energy(), 1.0, 1e-12);
    EXPECT_GE(res.report.final_objective, res.report.initial_objective);
    EXPECT_EQ(res.report.restarts.size(), 2u);
    const auto ch = ChannelSpec::from_db(10.0);
    const double again = obj == Objective::kMI ? mi(res.constellation, ch) : gmi(res.constellation, ch);
    EXPECT_NEAR(again, res.report.final_objective, 1e-12);
  }
}

TEST(Optimizer, BeatsSquareQam) {
  const auto ch = ChannelSpec::from_db(10.0);
  const auto res = optimize(16, small_config(Objective::kGMI, 10.0));
  EXPECT_GT(res.report.final_gmi, gmi(square_qam(16), ch) + 5e-3);
  const auto rmi = optimize(16, small_config(Objective::kMI, 10.0));
  EXPECT_GT(rmi.report.final_mi, mi(square_qam(16), ch) + 5e-3);
}

TEST(Optimizer, DeterministicAndThreadIndependent) {
  auto cfg = small_config(Objective::kGMI, 8.0);
  cfg.max_outer_iters = 4;
  cfg.include_qam_start = false;
  cfg.seed = 7;
  const auto a = optimize(16, cfg);
  const auto b = optimize(16, cfg);
  cfg.threads = 2;
  const auto c = optimize(16, cfg);
  EXPECT_EQ(a.constellation, b.constellation);
  EXPECT_EQ(a.constellation, c.constellation);
  EXPECT_EQ(a.report.final_objective, c.report.final_objective);
}

TEST(Optimizer, WarmStartComesFirst) {
  auto cfg = small_config(Objective::kMI, 10.0);
  cfg.restarts = 1;
  cfg.max_outer_iters = 1;
  cfg.warm_starts.push_back(random_points(16, 9));
  const auto r = optimize(16, cfg);
  EXPECT_EQ(r.report.restarts.front().start, "warm0");
}

TEST(Optimizer, RandomStartsAreSeeded) {
  EXPECT_EQ(random_start(64, 3), random_start(64, 3));
  EXPECT_NE(random_start(64, 3), random_start(64, 4));
  EXPECT_NEAR(random_start(64, 3).constellation.energy(), 1.0, 1e-14);
}

TEST(Optimizer, InvalidConfigurationFailsBeforeWork) {
  auto cfg = small_config(Objective::kGMI, 10.0);
  cfg.restarts = 0;
  EXPECT_THROW(optimize(16, cfg), InputError);
  cfg = small_config(Objective::kGMI, 10.0);
  cfg.shrink = 1.5;
  EXPECT_THROW(optimize(16, cfg), InputError);
  cfg = small_config(Objective::kGMI, std::nan(""));
  EXPECT_THROW(optimize(16, cfg), InputError);
  EXPECT_THROW(optimize(12, small_config(Objective::kGMI, 10.0)), InputError);
  auto warm = small_config(Objective::kGMI, 10.0);
  warm.warm_starts.push_back(square_qam(64));
  EXPECT_THROW(optimize(16, warm), InputError);
}

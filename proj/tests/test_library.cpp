#include <gtest/gtest.h>

#include <filesystem>

#include "gsopt/analysis.hpp"
#include "gsopt/library.hpp"
#include "gsopt/manifest.hpp"

using namespace gsopt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("gsopt_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Library, FileNamesRoundTrip) {
  EXPECT_EQ(library_file_name(Objective::kGMI, 64, 15.0), "gmi_M64_15.00dB.txt");
  const auto e = parse_library_name("mi_M256_7.25dB.txt");
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->objective, Objective::kMI);
  EXPECT_DOUBLE_EQ(e->snr_db, 7.25);
  EXPECT_FALSE(parse_library_name("manifest.json").has_value());
  EXPECT_FALSE(parse_library_name("xx_M16_1.00dB.txt").has_value());
}

TEST(Library, SaveLoadAndSelect) {
  const auto dir = temp_dir("lib");
  save_library_entry(dir, {Objective::kGMI, 10.0, square_qam(16)});
  save_library_entry(dir, {Objective::kGMI, 5.0, square_qam(16)});
  save_library_entry(dir, {Objective::kMI, 10.0, square_qam(64)});
  const auto lib = load_library(dir);
  ASSERT_EQ(lib.size(), 3u);
  EXPECT_EQ(lib[0].objective, Objective::kMI);
  const auto g16 = select_entries(lib, 16, Objective::kGMI);
  ASSERT_EQ(g16.size(), 2u);
  EXPECT_LT(g16[0].snr_db, g16[1].snr_db);
  EXPECT_TRUE(find_entry(lib, 64, Objective::kMI, 10.0).has_value());
  EXPECT_FALSE(find_entry(lib, 64, Objective::kMI, 11.0).has_value());
  EXPECT_THROW(load_library(dir / "missing"), InputError);
}

TEST(Library, CurveIsTheBestMemberNearEachSnr) {
  const auto grid = snr_grid(8.0, 12.0, 0.5);
  auto cfg = OptimizerConfig{};
  cfg.restarts = 1;
  cfg.tol = 1e-4;
  cfg.max_outer_iters = 6;
  const auto lib = build_anchor_library(16, Objective::kGMI, {8.0, 12.0}, cfg);
  ASSERT_EQ(lib.size(), 2u);
  const auto c = library_curve(lib, grid, QuadratureSpec::standard(), 4.0);
  EXPECT_EQ(c.format, "G-GS-16");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto ch = ChannelSpec::from_db(grid[g]);
    const double best = std::max(gmi(lib[0].constellation, ch), gmi(lib[1].constellation, ch));
    EXPECT_DOUBLE_EQ(c.rate[g], best);
    EXPECT_GE(c.rate[g], gmi(square_qam(16), ch) - 1e-12);
  }
  // A narrow window uses only the nearest anchors.
  const auto narrow = library_curve(lib, {8.0}, QuadratureSpec::standard(), 0.5);
  EXPECT_DOUBLE_EQ(narrow.rate[0], gmi(lib[0].constellation, ChannelSpec::from_db(8.0)));
}

TEST(Analysis, BaselineAgainstItselfGivesNoGain) {
  AnalysisConfig cfg;
  cfg.grid = snr_grid(4.0, 12.0, 0.25);
  cfg.Ms = {16, 64};
  std::vector<LibraryEntry> lib = {{Objective::kGMI, 8.0, square_qam(16)}, {Objective::kGMI, 8.0, square_qam(64)}};
  const auto a = analyze(lib, cfg);
  ASSERT_EQ(a.gs.size(), 2u);
  for (const auto& g : a.gs) {
    for (std::size_t k = 0; k < g.curve.size(); ++k) EXPECT_LE(g.curve.rate[k], a.baseline.curve.rate[k] + 1e-15);
    for (const auto& mk : g.markers)
      if (mk.op.ok()) EXPECT_LE(mk.eta, 1e-6);
  }
  EXPECT_THROW(a.get(Objective::kMI, 16), InputError);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.command = "optimize";
  m.argv = {"optimize", "--M", "16"};
  m.config = {{"M", 16}};
  m.seeds = {1000003};
  m.outputs = {"out/constellation.txt"};
  const auto dir = temp_dir("manifest");
  m.save(dir / "manifest.json");
  const auto back = RunManifest::load(dir / "manifest.json");
  EXPECT_EQ(back.argv, m.argv);
  EXPECT_EQ(back.seeds, m.seeds);
  EXPECT_EQ(back.config["M"], 16);
  write_file(dir / "bad.json", "{");
  EXPECT_THROW(RunManifest::load(dir / "bad.json"), InputError);
}

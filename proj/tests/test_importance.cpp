#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aura/importance.hpp"
#include "aura/sampler.hpp"

using namespace aura;

namespace {

KeepMask keep_from_holes(int h, int w, std::initializer_list<int> holes) {
  KeepMask k(h, w, true);
  for (int i : holes) k.set_index(static_cast<std::size_t>(i), false);
  return k;
}

double hole_count(const KeepMask& m) {
  return static_cast<double>(m.pixel_count() - area(m));
}

// Deterministic but irregular score, so reductions in a different order
// would show up in the last bits.
double scrambled(const KeepMask& m) {
  double s = 0.0;
  const auto b = m.bits();
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b[i]) s += std::sin(0.37 * static_cast<double>(i) + 0.1) / 3.0;
  }
  return s;
}

std::vector<KeepMask> all_masks(int h, int w) {
  const int n = h * w;
  std::vector<KeepMask> out;
  for (int bits = 0; bits < (1 << n); ++bits) {
    KeepMask k(h, w, true);
    for (int i = 0; i < n; ++i) k.set_index(static_cast<std::size_t>(i), (bits >> i) & 1);
    out.push_back(std::move(k));
  }
  return out;
}

}  // namespace

TEST(Accumulator, TwoSamplesByHand) {
  ImportanceAccumulator acc(Size{1, 3}, false);
  acc.add(keep_from_holes(1, 3, {0, 1}), 2.0);
  acc.add(keep_from_holes(1, 3, {1, 2}), -1.0);
  const auto map = acc.finalize();
  EXPECT_EQ(map.samples, 2u);
  EXPECT_EQ(map.values[0], 2.0);
  EXPECT_EQ(map.values[1], 0.5);
  EXPECT_EQ(map.values[2], -1.0);
  EXPECT_EQ(map.coverage[1], 2u);
}

TEST(Accumulator, NeverHoledPixelGetsSentinel) {
  ImportanceAccumulator acc(Size{2, 2}, false);
  acc.add(keep_from_holes(2, 2, {0}), 0.25);
  acc.add(keep_from_holes(2, 2, {1}), -3.0);
  const auto map = acc.finalize();
  EXPECT_EQ(map.values[2], -4.0);
  EXPECT_EQ(map.values[3], -4.0);
  EXPECT_EQ(map.coverage[3], 0u);
}

TEST(Accumulator, Errors) {
  ImportanceAccumulator acc(Size{2, 2}, false);
  EXPECT_THROW(acc.finalize(), std::invalid_argument);
  EXPECT_THROW(acc.add(KeepMask(2, 3, true), 1.0), DimensionError);
  acc.add(KeepMask(2, 2, true), 1.0);
  EXPECT_THROW(acc.finalize(), std::invalid_argument);  // nothing ever holed
}

TEST(Accumulator, StdErrorNeedsTwoSamples) {
  ImportanceAccumulator acc(Size{1, 2}, false);
  acc.add(keep_from_holes(1, 2, {0, 1}), 1.0);
  acc.add(keep_from_holes(1, 2, {0}), 3.0);
  const auto map = acc.finalize();
  EXPECT_TRUE(std::isnan(map.std_error[1]));
  // sample sd of {1,3} is sqrt(2), over sqrt(2) samples
  EXPECT_NEAR(map.std_error[0], 1.0, 1e-15);
  EXPECT_NEAR(map.mean_std_error(), 1.0, 1e-15);
}

// Uniform over all 16 masks of a 2x2 image, J = number of holes.
// Given x is holed, the other three are holed with probability 1/2 each:
// phi = 1 + 3/2.
TEST(Exact, TwoByTwoHoleCount) {
  const auto masks = all_masks(2, 2);
  std::vector<WeightedMask> fam;
  for (const auto& m : masks) fam.push_back({m, 1.0 / 16});
  const auto exact = exact_importance(std::span<const WeightedMask>(fam), hole_count);
  const auto mc = estimate_importance(MaskList(masks), hole_count);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(exact.values[i], 2.5, 1e-15);
    EXPECT_NEAR(mc.values[i], 2.5, 1e-15);
  }
}

TEST(Estimate, DisjointHalves) {
  std::vector<KeepMask> masks;
  for (int t = 0; t < 10; ++t) {
    masks.push_back(keep_from_holes(2, 4, {0, 1, 4, 5}));
    masks.push_back(keep_from_holes(2, 4, {2, 3, 6, 7}));
  }
  const auto map = estimate_importance(MaskList(masks), [](const KeepMask& m) {
    return m.at_index(0) ? 7.0 : -2.0;
  });
  for (int i : {0, 1, 4, 5}) EXPECT_EQ(map.values[static_cast<std::size_t>(i)], -2.0);
  for (int i : {2, 3, 6, 7}) EXPECT_EQ(map.values[static_cast<std::size_t>(i)], 7.0);
}

TEST(Estimate, BatchOfOne) {
  const std::vector<KeepMask> masks{keep_from_holes(3, 3, {4, 5})};
  const auto map = estimate_importance(MaskList(masks), [](const KeepMask&) { return 0.75; });
  EXPECT_EQ(map.values[4], 0.75);
  EXPECT_EQ(map.values[5], 0.75);
  EXPECT_EQ(map.values[0], -0.25);
}

TEST(Estimate, EmptyListThrows) {
  std::vector<KeepMask> none;
  EXPECT_THROW(MaskList{none}, std::invalid_argument);
}

TEST(Estimate, BitIdenticalAcrossWorkerCounts) {
  HoleMask target(40, 40);
  for (int y = 15; y < 25; ++y)
    for (int x = 12; x < 28; ++x) target.set(y, x, true);
  SamplerConfig cfg;
  cfg.n_samples = 1000 + 7;  // not a multiple of the block size
  cfg.radius_min = 3;
  cfg.radius_max = 9;
  cfg.seed = 11;
  const auto batch = sample_batch(target, cfg);
  const auto ref = estimate_importance(batch, scrambled, EstimateOptions{1, {}});
  for (int workers : {2, 3, 8}) {
    const auto map = estimate_importance(batch, scrambled, EstimateOptions{workers, {}});
    EXPECT_EQ(map.values, ref.values) << workers;
    EXPECT_EQ(map.coverage, ref.coverage) << workers;
  }
}

TEST(Estimate, ProgressReachesTotal) {
  std::vector<KeepMask> masks(40, keep_from_holes(2, 2, {0}));
  std::size_t last = 0;
  std::size_t total = 0;
  estimate_importance(MaskList(masks), hole_count,
                      EstimateOptions{1, [&](std::size_t d, std::size_t t) {
                        last = d;
                        total = t;
                      }});
  EXPECT_EQ(last, 40u);
  EXPECT_EQ(total, 40u);
}

TEST(Estimate, AffineEquivariance) {
  HoleMask target(24, 24);
  target.set(12, 12, true);
  SamplerConfig cfg;
  cfg.n_samples = 300;
  cfg.radius_min = 2;
  cfg.radius_max = 6;
  const auto batch = sample_batch(target, cfg);
  const auto a = estimate_importance(batch, scrambled);
  const auto b = estimate_importance(batch, [](const KeepMask& m) { return 2.5 * scrambled(m) - 4.0; });
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.coverage[i] == 0) continue;
    EXPECT_NEAR(b.values[i], 2.5 * a.values[i] - 4.0, 1e-9);
  }
}

TEST(Estimate, ComponentMapsRecombineToTotal) {
  std::mt19937 gen(3);
  std::bernoulli_distribution bit(0.4);
  std::vector<KeepMask> masks;
  for (int t = 0; t < 64; ++t) {
    KeepMask k(4, 4, true);
    for (std::size_t i = 0; i < 16; ++i) k.set_index(i, !bit(gen));
    masks.push_back(std::move(k));
  }
  const auto map = estimate_importance(MaskList(masks), [](const KeepMask& m) {
    const double h = hole_count(m);
    return JudgeBreakdown::combine(-0.01 * h, 0.02 * h * h, -0.5, 3.0, 0.5);
  });
  ASSERT_EQ(map.background.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    if (map.coverage[i] == 0) continue;
    EXPECT_NEAR(map.values[i], map.background[i] + 3.0 * map.afterimage[i] + 0.5 * map.detect[i], 1e-12);
  }
}

TEST(Serialization, RoundTripAndLegend) {
  TempDir dir;
  ImportanceAccumulator acc(Size{3, 5}, false);
  acc.add(keep_from_holes(3, 5, {0, 1, 2, 7}), 0.123456789);
  acc.add(keep_from_holes(3, 5, {2, 3, 9, 14}), -1.5);
  const auto map = acc.finalize();
  write_importance(dir.path() / "g.bin", map, 42);
  const auto g = read_importance(dir.path() / "g.bin");
  EXPECT_EQ(g.size, map.size);
  EXPECT_EQ(g.samples, 2u);
  EXPECT_EQ(g.seed, 42u);
  for (std::size_t i = 0; i < g.values.size(); ++i) EXPECT_EQ(g.values[i], static_cast<float>(map.values[i]));
  const auto legend = heatmap_legend(map);
  EXPECT_EQ(legend.min, *std::min_element(g.values.begin(), g.values.end()));
  EXPECT_EQ(legend.max, *std::max_element(g.values.begin(), g.values.end()));
}

TEST(Serialization, BadMagicIsIoError) {
  TempDir dir;
  std::ofstream(dir.path() / "x.bin") << "NOTAGRID0000000000000000";
  EXPECT_THROW(read_importance(dir.path() / "x.bin"), IoError);
}

TEST(Heatmap, EndpointsAreBlackAndWhite) {
  ImportanceAccumulator acc(Size{1, 3}, false);
  acc.add(keep_from_holes(1, 3, {0}), -1.0);
  acc.add(keep_from_holes(1, 3, {1}), 0.0);
  acc.add(keep_from_holes(1, 3, {2}), 1.0);
  const Image img = heatmap(acc.finalize());
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.at(0, 0, c), 0.0);
    EXPECT_EQ(img.at(0, 2, c), 1.0);
    EXPECT_EQ(img.at(0, 1, c), kHeatStops[2][c]);
  }
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/process.hpp"

using namespace aura;

namespace {

HoleMask random_mask(int h, int w, double p, std::mt19937& gen) {
  std::bernoulli_distribution bit(p);
  HoleMask m(h, w);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set_index(i, bit(gen));
  return m;
}

// Square structuring element, checked pixel by pixel.
HoleMask brute_dilate(const HoleMask& m, int kernel_size) {
  const int r = dilation_side(kernel_size) / 2;
  HoleMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool on = false;
      for (int dy = -r; dy <= r && !on; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < m.height() && xx >= 0 && xx < m.width() && m.at(yy, xx)) {
            on = true;
            break;
          }
        }
      }
      out.set(y, x, on);
    }
  }
  return out;
}

}  // namespace

TEST(Image, RejectsOutOfRangeAndBadShape) {
  EXPECT_THROW(Image(2, 2, 1, 1.5), std::invalid_argument);
  EXPECT_THROW(Image(2, 2, 1, std::nan("")), std::invalid_argument);
  EXPECT_THROW(Image(2, 2, 2), std::invalid_argument);
  EXPECT_THROW(Image(2, 2, 1, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(ApplyMask, AllOnesIsIdentity) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> d(5 * 4 * 3);
  for (auto& v : d) v = u(gen);
  const Image img(5, 4, 3, d);
  EXPECT_EQ(apply_mask(img, KeepMask::ones(img.size())), img);
}

TEST(ApplyMask, AllZerosIsBlack) {
  const Image img(3, 3, 3, 0.4);
  EXPECT_EQ(apply_mask(img, KeepMask::zeros(img.size())), Image(3, 3, 3, 0.0));
}

TEST(ApplyMask, Diagonal) {
  const Image img(2, 2, 1, 0.5);
  const KeepMask keep(2, 2, std::vector<std::uint8_t>{1, 0, 0, 1});
  EXPECT_EQ(apply_mask(img, keep), Image(2, 2, 1, std::vector<double>{0.5, 0, 0, 0.5}));
}

TEST(ApplyMask, SizeMismatchThrows) {
  EXPECT_THROW(apply_mask(Image(2, 2, 1), KeepMask(2, 3)), DimensionError);
}

TEST(Area, Basics) {
  EXPECT_EQ(area(HoleMask(4, 4)), 0u);
  EXPECT_EQ(area(HoleMask(4, 4, true)), 16u);
  HoleMask checker(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker.set(y, x, (x + y) % 2 == 0);
  EXPECT_EQ(area(checker), 8u);
}

TEST(Area, AdditiveOverDisjointMasks) {
  std::mt19937 gen(11);
  for (int t = 0; t < 50; ++t) {
    const HoleMask a = random_mask(7, 9, 0.3, gen);
    HoleMask b = random_mask(7, 9, 0.3, gen);
    for (std::size_t i = 0; i < b.pixel_count(); ++i)
      if (a.at_index(i)) b.set_index(i, false);
    EXPECT_EQ(area(mask_union(a, b)), area(a) + area(b));
  }
}

TEST(Complement, InvolutionAndPartition) {
  std::mt19937 gen(5);
  EXPECT_EQ(complement(HoleMask(3, 3)), KeepMask(3, 3, true));
  for (int t = 0; t < 20; ++t) {
    const HoleMask m = random_mask(6, 5, 0.4, gen);
    const KeepMask k = complement(m);
    static_assert(std::is_same_v<decltype(complement(k)), HoleMask>);
    EXPECT_EQ(complement(k), m);
    EXPECT_EQ(area(m) + area(k), m.pixel_count());
  }
}

TEST(Dilate, ZeroIsIdentity) {
  std::mt19937 gen(1);
  const HoleMask m = random_mask(8, 8, 0.2, gen);
  EXPECT_EQ(dilate(m, 0), m);
}

TEST(Dilate, CenterPixelKernelTwoGivesThreeByThree) {
  HoleMask m(9, 9);
  m.set(4, 4, true);
  const HoleMask d = dilate(m, 2);
  EXPECT_EQ(area(d), 9u);
  for (int y = 3; y <= 5; ++y)
    for (int x = 3; x <= 5; ++x) EXPECT_TRUE(d.at(y, x));
}

TEST(Dilate, SideRule) {
  EXPECT_EQ(dilation_side(0), 1);
  EXPECT_EQ(dilation_side(1), 3);
  EXPECT_EQ(dilation_side(2), 3);
  EXPECT_EQ(dilation_side(3), 5);
  EXPECT_EQ(dilation_side(10), 11);
  EXPECT_EQ(dilation_side(40), 41);
}

TEST(Dilate, MatchesBruteForce) {
  std::mt19937 gen(42);
  for (int k : {1, 2, 3, 4, 7, 10}) {
    for (int t = 0; t < 10; ++t) {
      const HoleMask m = random_mask(13, 17, 0.05, gen);
      EXPECT_EQ(dilate(m, k), brute_dilate(m, k)) << "kernel " << k;
    }
  }
}

TEST(Dilate, SaturatesOnAllOnes) {
  EXPECT_EQ(dilate(HoleMask(6, 6, true), 10), HoleMask(6, 6, true));
}

TEST(Dilate, MonotoneAndExtensive) {
  std::mt19937 gen(9);
  for (int t = 0; t < 30; ++t) {
    const HoleMask a = random_mask(10, 12, 0.1, gen);
    const HoleMask b = mask_union(a, random_mask(10, 12, 0.1, gen));
    const int k = t % 6;
    EXPECT_TRUE(is_subset(a, dilate(a, k)));
    EXPECT_TRUE(is_subset(dilate(a, k), dilate(b, k)));
  }
}

TEST(Dilate, NegativeKernelThrows) { EXPECT_THROW(dilate(HoleMask(2, 2), -1), std::invalid_argument); }

TEST(Erode, SquareShrinksByRadius) {
  HoleMask m(30, 30);
  for (int y = 5; y < 25; ++y)
    for (int x = 5; x < 25; ++x) m.set(y, x, true);
  const HoleMask e = erode(m, 2);
  EXPECT_EQ(area(e), 16u * 16u);
  EXPECT_TRUE(e.at(7, 7));
  EXPECT_FALSE(e.at(6, 7));
}

TEST(Region, SortedUniqueRoundTrip) {
  std::mt19937 gen(2);
  const HoleMask m = random_mask(5, 7, 0.5, gen);
  const Region r = Region::of(m);
  EXPECT_EQ(r.count(), area(m));
  EXPECT_TRUE(std::is_sorted(r.indices().begin(), r.indices().end()));
  EXPECT_EQ(r.to_hole_mask(), m);
}

TEST(ImageIo, PngAndPnmRoundTrip) {
  TempDir dir;
  std::vector<double> d(4 * 3 * 3);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>((i * 37) % 256) / 255.0;
  const Image rgb(4, 3, 3, d);
  for (const char* name : {"a.png", "a.ppm"}) {
    save_image(dir.path() / name, rgb);
    const Image back = load_image(dir.path() / name);
    ASSERT_EQ(back.size(), rgb.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(back.data()[i], d[i], 1e-12);
  }
  HoleMask m(3, 4);
  m.set(1, 2, true);
  save_mask(dir.path() / "m.pgm", m);
  save_mask(dir.path() / "m.png", m);
  EXPECT_EQ(load_hole_mask(dir.path() / "m.pgm"), m);
  EXPECT_EQ(load_hole_mask(dir.path() / "m.png"), m);
}

TEST(ImageIo, MissingFileIsIoError) {
  EXPECT_THROW(load_image("/nonexistent/x.png"), IoError);
}

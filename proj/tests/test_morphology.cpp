#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pvseval/morphology.hpp"

using namespace pvseval;

namespace {

constexpr Connectivity kAll[] = {Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix};

Volume3D<double> random_image(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(50.0, 10.0);
  Volume3D<double> v(g);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = n(gen);
  return v;
}

}  // namespace

TEST(Dilate, CenterVoxel) {
  BinaryMask m(Grid::make({3, 3, 3}));
  m.set(1, 1, 1);
  EXPECT_EQ(dilate_once(m, Connectivity::TwentySix).count(), 27u);
  EXPECT_EQ(dilate_once(m, Connectivity::Eighteen).count(), 19u);
  EXPECT_EQ(dilate_once(m, Connectivity::Six).count(), 7u);
}

TEST(Dilate, EmptyStaysEmpty) { EXPECT_TRUE(dilate_once(BinaryMask(Grid::make({4, 4, 4}))).empty()); }

TEST(Dilate, MatchesNeighborUnionOracle) {
  for (auto c : kAll)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto m = oracle::random_mask({10, 10, 10}, 0.05 + 0.02 * static_cast<double>(seed), seed + 40);
      const auto d = dilate_once(m, c);
      EXPECT_EQ(d, oracle::dilate(m, to_int(c)));
      for (std::size_t i = 0; i < m.size(); ++i)
        if (m.test(i)) ASSERT_TRUE(d.test(i));
      EXPECT_GE(d.count(), m.count());
    }
}

TEST(Shell, CenterVoxelAndFullGrid) {
  BinaryMask m(Grid::make({3, 3, 3}));
  m.set(1, 1, 1);
  EXPECT_EQ(shell(m).mask.count(), 26u);
  BinaryMask full(Grid::make({3, 3, 3}), std::vector<std::uint8_t>(27, 1));
  EXPECT_TRUE(shell(full).mask.empty());
}

TEST(Shell, DisjointAdjacentAndOracle) {
  for (auto c : kAll)
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto m = oracle::random_mask({9, 11, 8}, 0.1, seed + 70);
      const auto s = shell(m, c).mask;
      EXPECT_EQ(s, subtract(oracle::dilate(m, to_int(c)), m));
      const auto& d = m.dims();
      for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
          for (std::size_t x = 0; x < d.nx; ++x) {
            if (!s.test(x, y, z)) continue;
            ASSERT_FALSE(m.test(x, y, z));
            bool touches = false;
            for (const auto& o : neighbor_offsets(c)) {
              const long nx = static_cast<long>(x) + o[0], ny = static_cast<long>(y) + o[1],
                         nz = static_cast<long>(z) + o[2];
              if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(d.nx) || ny >= static_cast<long>(d.ny) ||
                  nz >= static_cast<long>(d.nz))
                continue;
              touches |= m.test(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                static_cast<std::size_t>(nz));
            }
            ASSERT_TRUE(touches);
          }
    }
}

TEST(Contrast, ConstantShell) {
  const Grid g = Grid::make({3, 3, 3});
  Volume3D<double> img(g, 4.0);
  img.at(1, 1, 1) = 10.0;
  BinaryMask m(g);
  m.set(1, 1, 1);
  const auto s = contrast_stat(img, m);
  EXPECT_EQ(s.abs_contrast, 6.0);
  EXPECT_EQ(s.mask_voxels, 1u);
  EXPECT_EQ(s.shell_voxels, 26u);
  const auto p = contrast_stat_per_cluster(img, m);
  EXPECT_EQ(p.abs_contrast, 6.0);
  EXPECT_EQ(p.clusters, 1u);
}

TEST(Contrast, ConstantImage) {
  const Grid g = Grid::make({6, 6, 6});
  Volume3D<double> img(g, 3.25);
  const auto m = oracle::random_mask(g.dims, 0.2, 1);
  EXPECT_EQ(contrast_stat(img, m).abs_contrast, 0.0);
  EXPECT_EQ(contrast_stat_per_cluster(img, m).abs_contrast, 0.0);
}

TEST(Contrast, MatchesDirectSummation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Grid g = Grid::make({12, 10, 9});
    const auto img = random_image(g, seed);
    const auto m = oracle::random_mask(g.dims, 0.08, seed + 300);
    const auto ring = subtract(oracle::dilate(m, 26), m);
    double in = 0, out = 0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (m.test(i)) {
        in += img[i];
        ++nin;
      }
      if (ring.test(i)) {
        out += img[i];
        ++nout;
      }
    }
    const auto s = contrast_stat(img, m);
    EXPECT_NEAR(s.mask_mean, in / static_cast<double>(nin), 1e-10);
    EXPECT_NEAR(s.shell_mean, out / static_cast<double>(nout), 1e-10);
    EXPECT_NEAR(s.abs_contrast, std::abs(in / static_cast<double>(nin) - out / static_cast<double>(nout)), 1e-10);
    EXPECT_EQ(std::abs(s.mask_mean - s.shell_mean), s.abs_contrast);
  }
}

TEST(Contrast, PerClusterMatchesDirectRings) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Grid g = Grid::make({10, 10, 10});
    const auto img = random_image(g, seed + 10);
    const auto m = oracle::random_mask(g.dims, 0.04, seed + 600);
    const auto lab = oracle::bfs_labels(m, 26);
    const auto k = oracle::component_count(lab);
    double acc = 0;
    std::size_t used = 0;
    for (std::uint32_t id = 1; id <= k; ++id) {
      BinaryMask c(g);
      for (std::size_t i = 0; i < lab.size(); ++i)
        if (lab[i] == id) c.set(i);
      const auto ring = subtract(oracle::dilate(c, 26), m);
      if (ring.empty()) continue;
      double in = 0, out = 0;
      for (std::size_t i = 0; i < img.size(); ++i) {
        if (c.test(i)) in += img[i];
        if (ring.test(i)) out += img[i];
      }
      acc += std::abs(in / static_cast<double>(c.count()) - out / static_cast<double>(ring.count()));
      ++used;
    }
    const auto s = contrast_stat_per_cluster(img, m);
    EXPECT_EQ(s.clusters, used);
    EXPECT_NEAR(s.abs_contrast, acc / static_cast<double>(used), 1e-10);
    EXPECT_EQ(s.mode, ContrastMode::PerCluster);
  }
}

TEST(Contrast, ShiftInvariant) {
  const Grid g = Grid::make({8, 8, 8});
  auto img = random_image(g, 5);
  const auto m = oracle::random_mask(g.dims, 0.1, 6);
  const auto a = contrast_stat(img, m);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] += 1000.0;
  const auto b = contrast_stat(img, m);
  EXPECT_NEAR(b.abs_contrast, a.abs_contrast, 1e-9);
  EXPECT_NEAR(b.mask_mean - 1000.0, a.mask_mean, 1e-9);
}

TEST(Contrast, Errors) {
  const Grid g = Grid::make({3, 3, 3});
  Volume3D<double> img(g);
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoFailure;
  };
  EXPECT_EQ(code([&] { contrast_stat(img, BinaryMask(g)); }), Errc::EmptyMask);
  BinaryMask full(g, std::vector<std::uint8_t>(27, 1));
  EXPECT_EQ(code([&] { contrast_stat(img, full); }), Errc::EmptyShell);
  EXPECT_EQ(code([&] { contrast_stat_per_cluster(img, full); }), Errc::EmptyShell);
  EXPECT_EQ(code([&] { contrast_stat(img, BinaryMask(Grid::make({3, 3, 4}))); }), Errc::DimMismatch);
}

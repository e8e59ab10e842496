#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "pvseval/metrics.hpp"

using namespace pvseval;

namespace {

BinaryMask line_mask(std::size_t n, std::size_t from, std::size_t to) {
  BinaryMask m(Grid::make({n, 1, 1}));
  for (std::size_t x = from; x < to; ++x) m.set(x, 0, 0);
  return m;
}

/// (clusters of `a`, clusters of `a` touching `b`) by flood fill.
std::pair<std::size_t, std::size_t> hits(const BinaryMask& a, const BinaryMask& b, int conn) {
  const auto lab = oracle::bfs_labels(a, conn);
  std::set<std::uint32_t> touched;
  for (std::size_t i = 0; i < lab.size(); ++i)
    if (lab[i] && b.test(i)) touched.insert(lab[i]);
  return {oracle::component_count(lab), touched.size()};
}

}  // namespace

TEST(VoxelMetrics, HandCounts) {
  const auto ref = line_mask(20, 0, 10);
  const auto pred = line_mask(20, 4, 12);
  const auto r = voxel_metrics(pred, ref);
  EXPECT_EQ(r.counts, (VoxelCounts{6, 10, 8}));
  EXPECT_DOUBLE_EQ(*r.scores.dsc, 12.0 / 18.0);
  EXPECT_DOUBLE_EQ(*r.scores.sen, 0.6);
  EXPECT_DOUBLE_EQ(*r.scores.ppv, 0.75);
}

TEST(VoxelMetrics, IdentityAndDisjoint) {
  const auto a = line_mask(10, 2, 6);
  const auto same = voxel_metrics(a, a);
  EXPECT_EQ(*same.scores.dsc, 1.0);
  EXPECT_EQ(*same.scores.sen, 1.0);
  EXPECT_EQ(*same.scores.ppv, 1.0);
  const auto apart = voxel_metrics(line_mask(10, 0, 2), line_mask(10, 5, 9));
  EXPECT_EQ(*apart.scores.dsc, 0.0);
  EXPECT_EQ(*apart.scores.sen, 0.0);
  EXPECT_EQ(*apart.scores.ppv, 0.0);
}

TEST(VoxelMetrics, DegenerateConventions) {
  const BinaryMask empty(Grid::make({10, 1, 1}));
  const auto some = line_mask(10, 1, 3);
  const auto both = voxel_metrics(empty, empty).scores;
  EXPECT_FALSE(both.dsc || both.sen || both.ppv);
  const auto ref_empty = voxel_metrics(some, empty).scores;
  EXPECT_FALSE(ref_empty.sen);
  EXPECT_EQ(*ref_empty.ppv, 0.0);
  EXPECT_EQ(*ref_empty.dsc, 0.0);
  const auto pred_empty = voxel_metrics(empty, some).scores;
  EXPECT_FALSE(pred_empty.ppv);
  EXPECT_EQ(*pred_empty.sen, 0.0);
  EXPECT_EQ(*pred_empty.dsc, 0.0);
}

TEST(VoxelMetrics, RandomIdentities) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Dims d{9, 8, 7};
    const auto p = oracle::random_mask(d, 0.05 + 0.01 * static_cast<double>(seed % 20), seed);
    const auto r = oracle::random_mask(d, 0.1, seed + 10000);
    const auto pr = voxel_metrics(p, r).scores;
    const auto rp = voxel_metrics(r, p).scores;
    EXPECT_EQ(pr.dsc, rp.dsc);
    EXPECT_EQ(pr.sen, rp.ppv);
    EXPECT_EQ(pr.ppv, rp.sen);
    if (pr.sen && pr.ppv && *pr.sen > 0 && *pr.ppv > 0)
      EXPECT_NEAR(*pr.dsc, 2.0 / (1.0 / *pr.sen + 1.0 / *pr.ppv), 1e-12);
    for (const auto& v : {pr.dsc, pr.sen, pr.ppv})
      if (v) EXPECT_TRUE(*v >= 0.0 && *v <= 1.0);
  }
}

TEST(VoxelMetrics, RoiRestrictsBothMasks) {
  const auto ref = line_mask(20, 0, 10);
  const auto pred = line_mask(20, 4, 12);
  const auto roi = RoiMask{Region::WM, "WM", line_mask(20, 8, 20)};
  const auto r = voxel_metrics(pred, ref, roi);
  EXPECT_EQ(r.counts, (VoxelCounts{2, 2, 4}));
}

TEST(VoxelMetrics, DisjointRoiCountsAdd) {
  const Dims d{10, 10, 10};
  const auto p = oracle::random_mask(d, 0.2, 1);
  const auto r = oracle::random_mask(d, 0.2, 2);
  const auto a = oracle::random_mask(d, 0.5, 3);
  const BinaryMask b = subtract(oracle::random_mask(d, 0.5, 4), a);
  const auto ca = voxel_metrics(p, r, {Region::WM, "WM", a}).counts;
  const auto cb = voxel_metrics(p, r, {Region::BG, "BG", b}).counts;
  const auto cu = voxel_metrics(p, r, {Region::Other, "u", unite(a, b)}).counts;
  EXPECT_EQ(ca.overlap + cb.overlap, cu.overlap);
  EXPECT_EQ(ca.manual + cb.manual, cu.manual);
  EXPECT_EQ(ca.algo + cb.algo, cu.algo);
}

TEST(ClusterMetrics, ConstructedScene) {
  const Grid g = Grid::make({16, 16, 16});
  BinaryMask ref(g), pred(g);
  ref.set(1, 1, 1);
  ref.set(5, 5, 5);
  ref.set(10, 10, 10);
  pred.set(1, 1, 1);
  pred.set(5, 5, 5);
  pred.set(13, 2, 2);
  pred.set(2, 13, 2);
  const auto r = cluster_metrics(pred, ref);
  EXPECT_EQ(r.counts, (ClusterCounts{3, 4, 2, 2}));
  EXPECT_DOUBLE_EQ(*r.scores.sen, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.scores.ppv, 0.5);
  EXPECT_DOUBLE_EQ(*r.scores.dsc, 4.0 / 7.0);
}

TEST(ClusterMetrics, ManyToOne) {
  const Grid g = Grid::make({8, 8, 8});
  BinaryMask ref(g), pred(g);
  ref.set(2, 2, 2);
  ref.set(4, 2, 2);
  for (std::size_t x = 2; x <= 4; ++x) pred.set(x, 2, 2);
  const auto r = cluster_metrics(pred, ref);
  EXPECT_EQ(r.counts, (ClusterCounts{2, 1, 2, 1}));
  EXPECT_EQ(*r.scores.dsc, 1.0);
  EXPECT_EQ(*r.scores.sen, 1.0);
  EXPECT_EQ(*r.scores.ppv, 1.0);
}

TEST(ClusterMetrics, Identity) {
  const auto m = oracle::random_mask({10, 10, 10}, 0.1, 8);
  const auto r = cluster_metrics(m, m);
  EXPECT_EQ(*r.scores.dsc, 1.0);
  EXPECT_EQ(*r.scores.sen, 1.0);
  EXPECT_EQ(*r.scores.ppv, 1.0);
}

TEST(ClusterMetrics, MatchesBruteForceOverlap) {
  for (const int conn : {6, 18, 26}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Dims d{11, 9, 10};
      const auto p = oracle::random_mask(d, 0.06, seed + 100);
      const auto r = oracle::random_mask(d, 0.06, seed + 200);
      const auto res = cluster_metrics(p, r, connectivity_from_int(conn));
      const auto [n_algo, n_algo_hit] = hits(p, r, conn);
      const auto [n_manual, n_manual_hit] = hits(r, p, conn);
      EXPECT_EQ(res.counts, (ClusterCounts{n_manual, n_algo, n_manual_hit, n_algo_hit}));
      EXPECT_EQ(res.scores.sen == 1.0, n_manual_hit == n_manual);
      EXPECT_EQ(res.scores.ppv == 1.0, n_algo_hit == n_algo);
    }
  }
}

TEST(ClusterMetrics, LabelingAfterRoiRestriction) {
  const Grid g = Grid::make({7, 1, 1});
  BinaryMask ref(g, {1, 1, 1, 1, 1, 1, 1});
  BinaryMask pred(g, {1, 0, 0, 0, 0, 0, 0});
  BinaryMask roi(g, {1, 1, 0, 1, 1, 1, 1});
  const auto r = cluster_metrics(pred, ref, Connectivity::TwentySix, {Region::WM, "WM", roi});
  EXPECT_EQ(r.counts, (ClusterCounts{2, 1, 1, 1}));
}

TEST(Pearson, KnownCases) {
  const std::vector<double> x{1, 2, 4, 8, 9};
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v + 3.0);
  EXPECT_NEAR(*pearson_r(x, x), 1.0, 1e-15);
  EXPECT_NEAR(*pearson_r(x, neg), -1.0, 1e-15);
  EXPECT_FALSE(pearson_r(std::vector<double>{1, 2}, std::vector<double>{3, 4}));
  EXPECT_FALSE(pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{3, 4, 5}));
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), Error);
}

TEST(Pearson, MatchesTwoPassOracle) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = 100.0 + 20.0 * n(gen);
      y[i] = 0.5 * x[i] + 10.0 * n(gen);
    }
    EXPECT_NEAR(*pearson_r(x, y), oracle::pearson(x, y), 1e-12);
  }
}

TEST(Flags, StringRoundTrip) {
  EXPECT_EQ(flags_to_string(0), "");
  EXPECT_EQ(flags_to_string(kRoiEmpty | kPredEmpty), "roi_empty;pred_empty");
  for (unsigned f = 0; f < 8; ++f) EXPECT_EQ(flags_from_string(flags_to_string(f)), f);
  EXPECT_THROW(flags_from_string("bogus"), Error);
}

TEST(MetricNames, RoundTrip) {
  for (Metric m : kAllMetrics) EXPECT_EQ(metric_from_name(metric_name(m)), m);
  EXPECT_EQ(metric_name(Metric::PpvNum), "ppv_num");
  EXPECT_THROW(metric_from_name("specificity"), Error);
}

TEST(EvaluateSubject, WholeVolumeRecord) {
  const auto m = oracle::random_mask({8, 8, 8}, 0.1, 4);
  const auto recs = evaluate_subject(m, m, {}, Connectivity::TwentySix, "s1");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].region, "whole");
  EXPECT_EQ(recs[0].subject_id, "s1");
  for (Metric k : kAllMetrics) EXPECT_EQ(recs[0].get(k), 1.0);
  EXPECT_EQ(recs[0].flags, 0u);
}

TEST(EvaluateSubject, PerRoiRecords) {
  const Grid g = Grid::make({20, 1, 1}, {2.0, 1.0, 1.0});
  const auto ref = line_mask(20, 0, 10);
  BinaryMask r2(g, std::vector<std::uint8_t>(ref.data().begin(), ref.data().end()));
  BinaryMask p2(g);
  for (std::size_t x = 4; x < 12; ++x) p2.set(x, 0, 0);
  BinaryMask wm(g), bg(g);
  for (std::size_t x = 0; x < 8; ++x) wm.set(x, 0, 0);
  for (std::size_t x = 8; x < 20; ++x) bg.set(x, 0, 0);
  std::vector<RoiMask> rois{RoiMask::make(Region::WM, wm), RoiMask::make(Region::BG, bg),
                            RoiMask{Region::Other, "empty", BinaryMask(g)}};
  const auto recs = evaluate_subject(p2, r2, rois, Connectivity::TwentySix, "s");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].region, "WM");
  EXPECT_EQ(recs[0].vox, (VoxelCounts{4, 8, 4}));
  EXPECT_EQ(recs[1].vox, (VoxelCounts{2, 2, 4}));
  EXPECT_DOUBLE_EQ(recs[0].manual_mm3(), 16.0);
  EXPECT_EQ(recs[2].flags, unsigned{kRoiEmpty | kRefEmpty | kPredEmpty});
  for (Metric k : kAllMetrics) EXPECT_FALSE(recs[2].get(k));
}

TEST(EvaluateSubject, DimMismatch) {
  BinaryMask a(Grid::make({4, 4, 4})), b(Grid::make({4, 4, 5}));
  EXPECT_THROW(evaluate_subject(a, b, {}), Error);
}

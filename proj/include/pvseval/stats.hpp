#ifndef PVSEVAL_STATS_HPP
#define PVSEVAL_STATS_HPP

// Paired comparison of two models' per-subject scores: Wilcoxon signed-rank
// test, Benjamini-Hochberg adjustment across a family of metrics, and the
// matched-pairs rank-biserial correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pvseval/error.hpp"
#include "pvseval/metrics.hpp"

namespace pvseval::stats {

/// Median of a non-empty sample (mean of the two middle values for even n).
inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(Errc::EmptyInput, "median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

enum class TestMethod { Exact, NormalApprox };

inline std::string method_name(TestMethod m) { return m == TestMethod::Exact ? "exact" : "normal_approx"; }

struct WilcoxonResult {
  double w_plus = 0;
  double w_minus = 0;
  double p_two_sided = 1;
  TestMethod method = TestMethod::Exact;
  std::size_t n_eff = 0;
  bool ties = false;
};

/// Largest zero-free sample size tested exactly (absent ties).
constexpr std::size_t kExactMaxN = 25;

/// Number of subsets of {1..n} with each possible sum (index = sum).
inline std::vector<std::uint64_t> signed_rank_counts(std::size_t n) {
  const std::size_t max_sum = n * (n + 1) / 2;
  std::vector<std::uint64_t> counts(max_sum + 1, 0);
  counts[0] = 1;
  std::size_t reach = 0;
  for (std::size_t r = 1; r <= n; ++r) {
    reach += r;
    for (std::size_t s = reach; s >= r; --s) counts[s] += counts[s - r];
  }
  return counts;
}

/// Two-sided exact p: twice the smaller tail of the null W+ distribution.
inline double exact_signed_rank_p(std::size_t n, std::size_t w_plus) {
  const auto counts = signed_rank_counts(n);
  const double total = std::ldexp(1.0, static_cast<int>(n));
  std::uint64_t lower = 0, upper = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (s <= w_plus) lower += counts[s];
    if (s >= w_plus) upper += counts[s];
  }
  const double tail = static_cast<double>(std::min(lower, upper)) / total;
  return std::min(1.0, 2.0 * tail);
}

inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           std::size_t exact_max_n = kExactMaxN) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch, "paired samples of length " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
  if (a.empty()) throw Error(Errc::EmptyInput, "paired samples are empty");

  std::vector<double> mag;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0) continue;
    mag.push_back(std::abs(d));
    positive.push_back(d > 0);
  }
  WilcoxonResult res;
  res.n_eff = mag.size();
  if (res.n_eff == 0) throw Error(Errc::AllZeroDifferences, "every paired difference is zero");

  const auto ranks = midranks(mag);
  for (std::size_t i = 0; i < ranks.size(); ++i) (positive[i] ? res.w_plus : res.w_minus) += ranks[i];

  // tie groups in |d|
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (j - i > 1) res.ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  const double n = static_cast<double>(res.n_eff);
  if (!res.ties && res.n_eff <= exact_max_n) {
    res.method = TestMethod::Exact;
    res.p_two_sided = exact_signed_rank_p(res.n_eff, static_cast<std::size_t>(std::llround(res.w_plus)));
  } else {
    res.method = TestMethod::NormalApprox;
    const double mean = n * (n + 1) / 4.0;
    const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::abs(res.w_plus - mean) - 0.5);
    res.p_two_sided = var > 0 ? std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)) : 1.0;
  }
  res.p_two_sided = std::clamp(res.p_two_sided, std::numeric_limits<double>::min(), 1.0);
  return res;
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
inline std::vector<double> bh_fdr(std::span<const double> p) {
  for (const double v : p)
    if (!(v > 0.0 && v <= 1.0)) throw Error(Errc::OutOfRange, "p-value " + std::to_string(v) + " outside (0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double rank = static_cast<double>(k + 1);
    running = std::min(running, static_cast<double>(m) * p[order[k]] / rank);
    q[order[k]] = std::max(p[order[k]], std::min(running, 1.0));
  }
  return q;
}

/// (W+ - W-) / (W+ + W-); positive when the first sample tends to be larger.
inline double rank_biserial(double w_plus, double w_minus) {
  const double total = w_plus + w_minus;
  if (!(total > 0)) throw Error(Errc::ZeroRankSum, "rank sums are both zero");
  return (w_plus - w_minus) / total;
}

// ---------------------------------------------------------------------------
// model comparison

/// Subjects where either model's value is undefined are dropped pairwise.
struct PairedSample {
  std::vector<std::string> labels;
  std::vector<double> a;
  std::vector<double> b;
  std::size_t dropped = 0;
};

struct StatResult {
  std::string region;
  std::string metric;
  std::size_t n = 0;        ///< non-zero differences
  std::size_t n_pairs = 0;  ///< pairs with both values defined
  std::size_t n_dropped = 0;
  std::optional<double> median_a, median_b, median_diff;
  double w_plus = 0, w_minus = 0;
  std::optional<double> p_raw, p_fdr;
  bool significant = false;
  std::optional<double> rank_biserial;
  std::optional<TestMethod> method;
  /// Set when no test was run, e.g. "AllZeroDifferences".
  std::string note;
};

enum class FdrFamily { PerRegion, All };

inline StatResult test_paired(const PairedSample& s) {
  StatResult r;
  r.n_pairs = s.a.size();
  r.n_dropped = s.dropped;
  if (s.a.empty()) {
    r.note = "NoPairs";
    return r;
  }
  std::vector<double> diff(s.a.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.a[i] - s.b[i];
  r.median_a = median(s.a);
  r.median_b = median(s.b);
  r.median_diff = median(diff);
  try {
    const auto w = wilcoxon_signed_rank(s.a, s.b);
    r.n = w.n_eff;
    r.w_plus = w.w_plus;
    r.w_minus = w.w_minus;
    r.p_raw = w.p_two_sided;
    r.method = w.method;
    r.rank_biserial = rank_biserial(w.w_plus, w.w_minus);
  } catch (const Error& e) {
    if (e.code() != Errc::AllZeroDifferences) throw;
    r.note = "AllZeroDifferences";
  }
  return r;
}

/// Applies BH across the given results (those with a p-value) in place.
inline void adjust_family(std::span<StatResult* const> family, double q) {
  std::vector<double> raw;
  std::vector<StatResult*> tested;
  for (auto* r : family)
    if (r->p_raw) {
      raw.push_back(*r->p_raw);
      tested.push_back(r);
    }
  if (raw.empty()) return;
  const auto adj = bh_fdr(raw);
  for (std::size_t i = 0; i < tested.size(); ++i) {
    tested[i]->p_fdr = adj[i];
    tested[i]->significant = adj[i] <= q;
  }
}

/// One result per (region, metric), pairing records by subject id within a
/// region. Regions are reported in first-seen order of `a`.
inline std::vector<StatResult> compare_models(std::span<const SubjectMetrics> a, std::span<const SubjectMetrics> b,
                                              std::span<const Metric> metrics, double q = 0.05,
                                              FdrFamily family = FdrFamily::PerRegion) {
  if (!(q > 0 && q < 1)) throw Error(Errc::BadParameter, "FDR level q must lie in (0, 1)");
  std::map<std::pair<std::string, std::string>, const SubjectMetrics*> by_key;
  for (const auto& r : b) by_key[{r.region, r.subject_id}] = &r;

  std::vector<std::string> regions;
  std::map<std::string, std::vector<std::pair<const SubjectMetrics*, const SubjectMetrics*>>> pairs;
  for (const auto& r : a) {
    auto it = by_key.find({r.region, r.subject_id});
    if (it == by_key.end()) continue;
    if (!pairs.count(r.region)) regions.push_back(r.region);
    pairs[r.region].emplace_back(&r, it->second);
  }
  if (regions.empty()) throw Error(Errc::NoCommonSubjects, "the two reports share no (subject, region) pairs");

  std::vector<StatResult> out;
  for (const auto& region : regions) {
    for (const Metric m : metrics) {
      PairedSample s;
      for (const auto& [ra, rb] : pairs[region]) {
        const auto va = ra->get(m), vb = rb->get(m);
        if (!va || !vb) {
          ++s.dropped;
          continue;
        }
        s.labels.push_back(ra->subject_id);
        s.a.push_back(*va);
        s.b.push_back(*vb);
      }
      StatResult r = test_paired(s);
      r.region = region;
      r.metric = metric_name(m);
      out.push_back(std::move(r));
    }
  }

  if (family == FdrFamily::All) {
    std::vector<StatResult*> all;
    for (auto& r : out) all.push_back(&r);
    adjust_family(all, q);
  } else {
    for (const auto& region : regions) {
      std::vector<StatResult*> fam;
      for (auto& r : out)
        if (r.region == region) fam.push_back(&r);
      adjust_family(fam, q);
    }
  }
  return out;
}

}  // namespace pvseval::stats

#endif  // PVSEVAL_STATS_HPP

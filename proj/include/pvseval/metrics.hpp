#ifndef PVSEVAL_METRICS_HPP
#define PVSEVAL_METRICS_HPP

// Voxel- and cluster-level overlap measures.
//
//   voxel:   dsc = 2|P∩R| / (|P| + |R|)   sen = |P∩R| / |R|   ppv = |P∩R| / |P|
//   cluster: sen = hit(R) / n(R)          ppv = hit(P) / n(P)
//            dsc = (hit(R) + hit(P)) / (n(R) + n(P))
//
// A cluster is hit when any one of its voxels overlaps the other mask. A
// ratio with a zero denominator is undefined (std::nullopt) and the record
// carries a flag saying which side was empty.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pvseval/ccl.hpp"
#include "pvseval/error.hpp"
#include "pvseval/volume.hpp"

namespace pvseval {

struct VoxelCounts {
  std::size_t overlap = 0;
  std::size_t manual = 0;
  std::size_t algo = 0;
  friend bool operator==(const VoxelCounts&, const VoxelCounts&) = default;
};

struct ClusterCounts {
  std::size_t n_manual = 0;
  std::size_t n_algo = 0;
  std::size_t n_manual_hit = 0;  ///< manual clusters touched by >= 1 algo voxel
  std::size_t n_algo_hit = 0;    ///< algo clusters touching >= 1 manual voxel
  friend bool operator==(const ClusterCounts&, const ClusterCounts&) = default;
};

struct OverlapScores {
  std::optional<double> dsc, sen, ppv;
};

struct VoxelResult {
  VoxelCounts counts;
  OverlapScores scores;
};

struct ClusterResult {
  ClusterCounts counts;
  OverlapScores scores;
};

inline std::optional<double> ratio(double num, double den) {
  if (den == 0) return std::nullopt;
  return num / den;
}

inline OverlapScores score(const VoxelCounts& c) {
  const auto ov = static_cast<double>(c.overlap);
  return {ratio(2.0 * ov, static_cast<double>(c.manual + c.algo)), ratio(ov, static_cast<double>(c.manual)),
          ratio(ov, static_cast<double>(c.algo))};
}

inline OverlapScores score(const ClusterCounts& c) {
  return {ratio(static_cast<double>(c.n_manual_hit + c.n_algo_hit), static_cast<double>(c.n_manual + c.n_algo)),
          ratio(static_cast<double>(c.n_manual_hit), static_cast<double>(c.n_manual)),
          ratio(static_cast<double>(c.n_algo_hit), static_cast<double>(c.n_algo))};
}

namespace metrics_detail {

inline VoxelCounts count(std::span<const std::uint8_t> p, std::span<const std::uint8_t> r) {
  VoxelCounts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.overlap += p[i] & r[i];
    c.algo += p[i];
    c.manual += r[i];
  }
  return c;
}

inline VoxelCounts count(std::span<const std::uint8_t> p, std::span<const std::uint8_t> r,
                         std::span<const std::uint8_t> roi) {
  VoxelCounts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::uint8_t pi = p[i] & roi[i], ri = r[i] & roi[i];
    c.overlap += pi & ri;
    c.algo += pi;
    c.manual += ri;
  }
  return c;
}

// Number of components of `comp` with at least one voxel set in `other`.
inline std::size_t components_hit(const Components& comp, const BinaryMask& other) {
  std::vector<std::uint8_t> hit(comp.count(), 0);
  const auto bits = other.data();
  const std::size_t rows = comp.dims.ny * comp.dims.nz;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* row = bits.data() + r * comp.dims.nx;
    for (std::size_t k = comp.row_start[r]; k < comp.row_start[r + 1]; ++k) {
      const auto id = comp.run_id[k];
      if (hit[id - 1]) continue;
      const auto& run = comp.runs[k];
      for (std::uint32_t x = run.x0; x < run.x1; ++x)
        if (row[x]) {
          hit[id - 1] = 1;
          break;
        }
    }
  }
  std::size_t n = 0;
  for (auto h : hit) n += h;
  return n;
}

}  // namespace metrics_detail

inline VoxelResult voxel_metrics(const BinaryMask& pred, const BinaryMask& ref) {
  require_same_grid(pred.grid(), ref.grid(), "pred", "ref");
  VoxelResult out;
  out.counts = metrics_detail::count(pred.data(), ref.data());
  out.scores = score(out.counts);
  return out;
}

/// Both masks are intersected with the ROI first.
inline VoxelResult voxel_metrics(const BinaryMask& pred, const BinaryMask& ref, const RoiMask& roi) {
  require_same_grid(pred.grid(), ref.grid(), "pred", "ref");
  require_same_grid(pred.grid(), roi.mask.grid(), "pred", "roi " + roi.name);
  VoxelResult out;
  out.counts = metrics_detail::count(pred.data(), ref.data(), roi.mask.data());
  out.scores = score(out.counts);
  return out;
}

inline ClusterResult cluster_metrics(const BinaryMask& pred, const BinaryMask& ref,
                                     Connectivity conn = Connectivity::TwentySix) {
  require_same_grid(pred.grid(), ref.grid(), "pred", "ref");
  const Components algo = find_components(pred, conn);
  const Components manual = find_components(ref, conn);
  ClusterResult out;
  out.counts.n_algo = algo.count();
  out.counts.n_manual = manual.count();
  out.counts.n_algo_hit = metrics_detail::components_hit(algo, ref);
  out.counts.n_manual_hit = metrics_detail::components_hit(manual, pred);
  out.scores = score(out.counts);
  return out;
}

/// Labeling happens after ROI restriction, so a cluster crossing the ROI
/// boundary is cut.
inline ClusterResult cluster_metrics(const BinaryMask& pred, const BinaryMask& ref, Connectivity conn,
                                     const RoiMask& roi) {
  require_same_grid(pred.grid(), ref.grid(), "pred", "ref");
  require_same_grid(pred.grid(), roi.mask.grid(), "pred", "roi " + roi.name);
  return cluster_metrics(intersect(pred, roi.mask), intersect(ref, roi.mask), conn);
}

/// Sample Pearson correlation; undefined for fewer than three pairs or a
/// constant input. Uses single-pass co-moment updates.
inline std::optional<double> pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw Error(Errc::LengthMismatch, "pearson_r: " + std::to_string(xs.size()) + " vs " +
                                          std::to_string(ys.size()) + " values");
  if (xs.size() < 3) return std::nullopt;
  double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    mx += dx / n;
    my += dy / n;
    sxx += dx * (xs[i] - mx);
    syy += dy * (ys[i] - my);
    sxy += dx * (ys[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// per-subject records

enum DegenerateFlag : unsigned {
  kRoiEmpty = 1u << 0,
  kRefEmpty = 1u << 1,
  kPredEmpty = 1u << 2,
};

inline std::string flags_to_string(unsigned flags) {
  std::string s;
  auto add = [&](unsigned bit, const char* name) {
    if (!(flags & bit)) return;
    if (!s.empty()) s += ';';
    s += name;
  };
  add(kRoiEmpty, "roi_empty");
  add(kRefEmpty, "ref_empty");
  add(kPredEmpty, "pred_empty");
  return s;
}

inline unsigned flags_from_string(std::string_view s) {
  unsigned f = 0;
  while (!s.empty()) {
    const auto cut = s.find(';');
    const auto tok = s.substr(0, cut);
    if (tok == "roi_empty") f |= kRoiEmpty;
    else if (tok == "ref_empty") f |= kRefEmpty;
    else if (tok == "pred_empty") f |= kPredEmpty;
    else if (!tok.empty()) throw Error(Errc::SchemaViolation, "unknown degenerate flag '" + std::string(tok) + "'");
    if (cut == std::string_view::npos) break;
    s.remove_prefix(cut + 1);
  }
  return f;
}

enum class Metric { DscVox, SenVox, PpvVox, DscNum, SenNum, PpvNum };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::DscVox, Metric::SenVox, Metric::PpvVox,
                                                   Metric::DscNum, Metric::SenNum, Metric::PpvNum};

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::DscVox: return "dsc_vox";
    case Metric::SenVox: return "sen_vox";
    case Metric::PpvVox: return "ppv_vox";
    case Metric::DscNum: return "dsc_num";
    case Metric::SenNum: return "sen_num";
    case Metric::PpvNum: return "ppv_num";
  }
  return "";
}

inline Metric metric_from_name(std::string_view s) {
  for (Metric m : kAllMetrics)
    if (metric_name(m) == s) return m;
  throw Error(Errc::BadParameter, "unknown metric '" + std::string(s) + "'");
}

struct SubjectMetrics {
  std::string subject_id;
  std::string region = "whole";
  Connectivity connectivity = Connectivity::TwentySix;
  std::optional<double> dsc_vox, sen_vox, ppv_vox;
  std::optional<double> dsc_num, sen_num, ppv_num;
  VoxelCounts vox;
  ClusterCounts num;
  /// Product of the voxel spacing, for mm³ columns.
  double voxel_volume_mm3 = 1.0;
  unsigned flags = 0;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::DscVox: return dsc_vox;
      case Metric::SenVox: return sen_vox;
      case Metric::PpvVox: return ppv_vox;
      case Metric::DscNum: return dsc_num;
      case Metric::SenNum: return sen_num;
      case Metric::PpvNum: return ppv_num;
    }
    return std::nullopt;
  }

  double manual_mm3() const { return static_cast<double>(vox.manual) * voxel_volume_mm3; }
  double algo_mm3() const { return static_cast<double>(vox.algo) * voxel_volume_mm3; }
};

inline SubjectMetrics make_record(std::string subject_id, std::string region, Connectivity conn,
                                  const VoxelResult& v, const ClusterResult& c, double voxel_mm3,
                                  bool roi_empty) {
  SubjectMetrics s;
  s.subject_id = std::move(subject_id);
  s.region = std::move(region);
  s.connectivity = conn;
  s.vox = v.counts;
  s.num = c.counts;
  s.dsc_vox = v.scores.dsc;
  s.sen_vox = v.scores.sen;
  s.ppv_vox = v.scores.ppv;
  s.dsc_num = c.scores.dsc;
  s.sen_num = c.scores.sen;
  s.ppv_num = c.scores.ppv;
  s.voxel_volume_mm3 = voxel_mm3;
  if (roi_empty) s.flags |= kRoiEmpty;
  if (v.counts.manual == 0) s.flags |= kRefEmpty;
  if (v.counts.algo == 0) s.flags |= kPredEmpty;
  return s;
}

/// One record per ROI, or a single "whole" record when `rois` is empty.
inline std::vector<SubjectMetrics> evaluate_subject(const BinaryMask& pred, const BinaryMask& ref,
                                                    std::span<const RoiMask> rois,
                                                    Connectivity conn = Connectivity::TwentySix,
                                                    const std::string& subject_id = "") {
  require_same_grid(pred.grid(), ref.grid(), "pred", "ref");
  const double voxel_mm3 = ref.grid().voxel_volume_mm3();
  std::vector<SubjectMetrics> out;
  if (rois.empty()) {
    out.push_back(make_record(subject_id, "whole", conn, voxel_metrics(pred, ref),
                              cluster_metrics(pred, ref, conn), voxel_mm3, false));
    return out;
  }
  for (const auto& roi : rois) {
    require_same_grid(pred.grid(), roi.mask.grid(), "pred", "roi " + roi.name);
    const BinaryMask p = intersect(pred, roi.mask);
    const BinaryMask r = intersect(ref, roi.mask);
    out.push_back(make_record(subject_id, roi.name, conn, voxel_metrics(p, r), cluster_metrics(p, r, conn),
                              voxel_mm3, roi.mask.empty()));
  }
  return out;
}

}  // namespace pvseval

#endif  // PVSEVAL_METRICS_HPP

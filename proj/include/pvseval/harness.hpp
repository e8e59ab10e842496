#ifndef PVSEVAL_HARNESS_HPP
#define PVSEVAL_HARNESS_HPP

// Evaluation schedules and result aggregation: subject manifests, fold
// assignment for 5-fold and leave-one-site-out cross-validation, per-group
// mean/SD summaries, and the leave-one-site-out results matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pvseval/csv.hpp"
#include "pvseval/error.hpp"
#include "pvseval/metrics.hpp"
#include "pvseval/rng.hpp"

namespace pvseval::harness {

struct SubjectRecord {
  std::string subject_id;
  std::string site;
  std::filesystem::path pred_path;
  std::filesystem::path ref_path;
  std::filesystem::path roi_wm_path;  ///< empty when absent
  std::filesystem::path roi_bg_path;
  std::filesystem::path image_path;
};

inline const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols{"subject_id", "site",        "pred_path", "ref_path",
                                             "roi_wm_path", "roi_bg_path", "image_path"};
  return cols;
}

/// Relative paths resolve against `base_dir`.
inline std::vector<SubjectRecord> parse_manifest(const csv::Table& t, const std::filesystem::path& base_dir = {}) {
  if (t.header != manifest_columns()) {
    std::string expected;
    for (const auto& c : manifest_columns()) expected += (expected.empty() ? "" : ",") + c;
    throw Error(Errc::SchemaViolation, t.source + ":1: manifest header must be '" + expected + "'");
  }
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  std::vector<SubjectRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    SubjectRecord s;
    s.subject_id = t.text(r, "subject_id");
    s.site = t.text(r, "site");
    if (s.subject_id.empty()) t.fail(r, "subject_id", "value is required");
    if (s.site.empty()) t.fail(r, "site", "value is required");
    if (!seen.insert(s.subject_id).second) t.fail(r, "subject_id", "duplicate subject '" + s.subject_id + "'");
    if (t.text(r, "pred_path").empty()) t.fail(r, "pred_path", "value is required");
    if (t.text(r, "ref_path").empty()) t.fail(r, "ref_path", "value is required");
    s.pred_path = resolve(t.text(r, "pred_path"));
    s.ref_path = resolve(t.text(r, "ref_path"));
    s.roi_wm_path = resolve(t.text(r, "roi_wm_path"));
    s.roi_bg_path = resolve(t.text(r, "roi_bg_path"));
    s.image_path = resolve(t.text(r, "image_path"));
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(Errc::EmptyManifest, t.source + ": manifest lists no subjects");
  return out;
}

inline std::vector<SubjectRecord> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(csv::read(path), path.parent_path());
}

/// Sites in first-seen order.
inline std::vector<std::string> sites_of(std::span<const SubjectRecord> manifest) {
  std::vector<std::string> sites;
  for (const auto& s : manifest)
    if (std::find(sites.begin(), sites.end(), s.site) == sites.end()) sites.push_back(s.site);
  return sites;
}

// ---------------------------------------------------------------------------
// folds

enum class Scheme { FiveFoldCV, LOSOCV };

inline std::string scheme_name(Scheme s) { return s == Scheme::FiveFoldCV ? "5FCV" : "LOSOCV"; }

inline Scheme scheme_from_name(std::string_view s) {
  if (s == "5FCV" || s == "5fcv" || s == "kfold") return Scheme::FiveFoldCV;
  if (s == "LOSOCV" || s == "losocv") return Scheme::LOSOCV;
  throw Error(Errc::BadParameter, "unknown scheme '" + std::string(s) + "' (expected 5fcv or losocv)");
}

struct FoldAssignment {
  std::string subject_id;
  std::string site;
  std::string fold;
};

struct FoldSpec {
  Scheme scheme = Scheme::FiveFoldCV;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::string> folds;          ///< fold labels in order
  std::vector<FoldAssignment> assignments; ///< manifest order

  std::size_t fold_size(const std::string& label) const {
    return static_cast<std::size_t>(
        std::count_if(assignments.begin(), assignments.end(), [&](const auto& a) { return a.fold == label; }));
  }
};

constexpr std::size_t kDefaultFolds = 5;

/// 5FCV shuffles each site's subjects with the seed, then deals them to
/// folds round-robin with the dealing position carried across sites, so
/// every fold's size and every fold's per-site count differ by at most one.
/// LOSOCV makes one fold per site, labeled by the site.
inline FoldSpec make_folds(std::span<const SubjectRecord> manifest, Scheme scheme, std::uint64_t seed,
                           std::size_t k = kDefaultFolds) {
  if (manifest.empty()) throw Error(Errc::EmptyManifest, "cannot build folds from an empty manifest");
  const auto sites = sites_of(manifest);
  FoldSpec spec;
  spec.scheme = scheme;
  spec.seed = seed;
  spec.assignments.reserve(manifest.size());
  for (const auto& s : manifest) spec.assignments.push_back({s.subject_id, s.site, ""});

  if (scheme == Scheme::LOSOCV) {
    if (sites.size() < 2)
      throw Error(Errc::TooFewSites, "leave-one-site-out needs at least two sites, found " +
                                         std::to_string(sites.size()));
    spec.stratified = false;
    spec.folds = sites;
    for (auto& a : spec.assignments) a.fold = a.site;
    return spec;
  }

  if (k < 2) throw Error(Errc::BadParameter, "k-fold needs k >= 2");
  spec.stratified = true;
  for (std::size_t f = 0; f < k; ++f) spec.folds.push_back("fold" + std::to_string(f + 1));
  Rng rng(seed);
  std::size_t deal = 0;
  for (const auto& site : sites) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.size(); ++i)
      if (manifest[i].site == site) members.push_back(i);
    rng.choose_front(members, members.size());
    for (const std::size_t i : members) spec.assignments[i].fold = spec.folds[deal++ % k];
  }
  return spec;
}

// ---------------------------------------------------------------------------
// aggregation

struct Summary {
  std::optional<double> mean;
  std::optional<double> sd;  ///< sample SD (n - 1); 0 for a single value
  std::size_t n_defined = 0;
  std::size_t n_excluded = 0;
};

inline Summary summarize(std::span<const std::optional<double>> values) {
  Summary s;
  double sum = 0;
  for (const auto& v : values) {
    if (!v) {
      ++s.n_excluded;
      continue;
    }
    ++s.n_defined;
    sum += *v;
  }
  if (s.n_defined == 0) return s;
  const double n = static_cast<double>(s.n_defined);
  const double mean = sum / n;
  double ss = 0;
  for (const auto& v : values)
    if (v) ss += (*v - mean) * (*v - mean);
  s.mean = mean;
  s.sd = s.n_defined > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return s;
}

inline constexpr std::string_view kAllSites = "All Sites";

struct AggregateReport {
  std::string region;
  std::string site;  ///< a site name or "All Sites"
  std::string scheme;
  std::size_t n_subjects = 0;
  std::array<Summary, kAllMetrics.size()> metrics{};
  std::optional<double> r_vox;      ///< manual vs algo voxel counts
  std::optional<double> r_vox_mm3;  ///< manual vs algo volumes in mm³
  std::optional<double> r_num;      ///< manual vs algo cluster counts

  const Summary& get(Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

struct GroupOptions {
  bool by_site = true;         ///< one group per site ...
  bool include_all_sites = true;  ///< ... plus the pooled group
  std::string scheme;
};

inline AggregateReport summarize_group(std::span<const SubjectMetrics* const> members, std::string region,
                                       std::string site, std::string scheme) {
  AggregateReport rep;
  rep.region = std::move(region);
  rep.site = std::move(site);
  rep.scheme = std::move(scheme);
  rep.n_subjects = members.size();
  for (const Metric m : kAllMetrics) {
    std::vector<std::optional<double>> vals;
    vals.reserve(members.size());
    for (const auto* s : members) vals.push_back(s->get(m));
    rep.metrics[static_cast<std::size_t>(m)] = summarize(vals);
  }
  std::vector<double> vm, va, mm, ma, nm, na;
  for (const auto* s : members) {
    vm.push_back(static_cast<double>(s->vox.manual));
    va.push_back(static_cast<double>(s->vox.algo));
    mm.push_back(s->manual_mm3());
    ma.push_back(s->algo_mm3());
    nm.push_back(static_cast<double>(s->num.n_manual));
    na.push_back(static_cast<double>(s->num.n_algo));
  }
  rep.r_vox = pearson_r(vm, va);
  rep.r_vox_mm3 = pearson_r(mm, ma);
  rep.r_num = pearson_r(nm, na);
  return rep;
}

/// Groups by region, then by site (first-seen order) and/or all sites.
/// Subjects missing from `site_of` fall in site "unknown".
inline std::vector<AggregateReport> aggregate(std::span<const SubjectMetrics> per_subject,
                                              const std::map<std::string, std::string>& site_of,
                                              const GroupOptions& opt = {}) {
  std::vector<std::string> regions;
  for (const auto& s : per_subject)
    if (std::find(regions.begin(), regions.end(), s.region) == regions.end()) regions.push_back(s.region);

  auto site_for = [&](const SubjectMetrics& s) -> std::string {
    auto it = site_of.find(s.subject_id);
    return it == site_of.end() ? "unknown" : it->second;
  };

  std::vector<AggregateReport> out;
  for (const auto& region : regions) {
    std::vector<const SubjectMetrics*> in_region;
    std::vector<std::string> sites;
    for (const auto& s : per_subject) {
      if (s.region != region) continue;
      in_region.push_back(&s);
      const auto site = site_for(s);
      if (std::find(sites.begin(), sites.end(), site) == sites.end()) sites.push_back(site);
    }
    if (opt.by_site) {
      for (const auto& site : sites) {
        std::vector<const SubjectMetrics*> members;
        for (const auto* s : in_region)
          if (site_for(*s) == site) members.push_back(s);
        out.push_back(summarize_group(members, region, site, opt.scheme));
      }
    }
    if (opt.include_all_sites || !opt.by_site)
      out.push_back(summarize_group(in_region, region, std::string(kAllSites), opt.scheme));
  }
  return out;
}

// ---------------------------------------------------------------------------
// leave-one-site-out results matrix

/// Per-subject results of one leave-one-site-out fold: the model trained
/// without `left_out_site`, validated internally on retained-site subjects
/// and externally on the left-out site.
struct LosocvFold {
  std::string left_out_site;
  std::vector<SubjectMetrics> internal;
  std::vector<SubjectMetrics> external;
};

struct LosocvInput {
  std::string model;
  std::vector<std::string> sites;  ///< column order; each needs a fold
  /// Internal 5FCV results of the model trained on all sites, if any.
  std::optional<std::vector<SubjectMetrics>> all_sites_internal;
  std::vector<LosocvFold> folds;
};

struct Cell {
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t n = 0;
};

struct LosocvRow {
  std::string region;
  std::string model;
  std::string training;  ///< "All Sites" or "LO <site>"
  std::optional<Cell> internal;
  std::vector<std::optional<Cell>> external;  ///< one slot per site column
};

/// Pooled external average of one (model, region) block, over the union of
/// all external subjects.
struct LosocvAverage {
  std::string region;
  std::string model;
  Cell average;
};

struct LosocvTable {
  std::string metric;
  std::vector<std::string> sites;
  std::vector<LosocvRow> rows;
  std::vector<LosocvAverage> averages;
};

inline Cell make_cell(std::span<const SubjectMetrics> recs, const std::string& region, Metric metric) {
  std::vector<std::optional<double>> vals;
  for (const auto& r : recs)
    if (r.region == region) vals.push_back(r.get(metric));
  const Summary s = summarize(vals);
  return Cell{s.mean, s.sd, s.n_defined};
}

inline LosocvTable losocv_table(std::span<const LosocvInput> models, Metric metric) {
  LosocvTable table;
  table.metric = metric_name(metric);
  for (const auto& m : models)
    for (const auto& s : m.sites)
      if (std::find(table.sites.begin(), table.sites.end(), s) == table.sites.end()) table.sites.push_back(s);

  for (const auto& model : models) {
    std::map<std::string, const LosocvFold*> fold_of;
    for (const auto& f : model.folds) fold_of[f.left_out_site] = &f;
    for (const auto& site : model.sites)
      if (!fold_of.count(site))
        throw Error(Errc::MissingFold, "model '" + model.model + "' has no fold leaving out site '" + site + "'");

    std::vector<std::string> regions;
    auto note_regions = [&](std::span<const SubjectMetrics> recs) {
      for (const auto& r : recs)
        if (std::find(regions.begin(), regions.end(), r.region) == regions.end()) regions.push_back(r.region);
    };
    if (model.all_sites_internal) note_regions(*model.all_sites_internal);
    for (const auto& f : model.folds) {
      note_regions(f.internal);
      note_regions(f.external);
    }

    for (const auto& region : regions) {
      if (model.all_sites_internal) {
        LosocvRow row{region, model.model, std::string(kAllSites), make_cell(*model.all_sites_internal, region, metric),
                      std::vector<std::optional<Cell>>(table.sites.size())};
        table.rows.push_back(std::move(row));
      }
      std::vector<SubjectMetrics> pooled;
      for (const auto& site : model.sites) {
        const LosocvFold& f = *fold_of.at(site);
        LosocvRow row{region, model.model, "LO " + site, std::nullopt,
                      std::vector<std::optional<Cell>>(table.sites.size())};
        if (!f.internal.empty()) row.internal = make_cell(f.internal, region, metric);
        const auto col = static_cast<std::size_t>(
            std::find(table.sites.begin(), table.sites.end(), site) - table.sites.begin());
        row.external[col] = make_cell(f.external, region, metric);
        for (const auto& r : f.external)
          if (r.region == region) pooled.push_back(r);
        table.rows.push_back(std::move(row));
      }
      table.averages.push_back({region, model.model, make_cell(pooled, region, metric)});
    }
  }
  return table;
}

}  // namespace pvseval::harness

#endif  // PVSEVAL_HARNESS_HPP

#ifndef PVSEVAL_REPORT_HPP
#define PVSEVAL_REPORT_HPP

// JSON and CSV forms of every report the toolkit emits. JSON is canonical;
// the CSV layouts mirror it with fixed column orders.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvseval/ccl.hpp"
#include "pvseval/csv.hpp"
#include "pvseval/harness.hpp"
#include "pvseval/metrics.hpp"
#include "pvseval/morphology.hpp"
#include "pvseval/phantom.hpp"
#include "pvseval/stats.hpp"

namespace pvseval::report {

using nlohmann::json;

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoFailure, "cannot create '" + path.string() + "'");
  f << j.dump(2) << "\n";
  if (!f) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

/// Resolved settings embedded in every report.
struct RunConfig {
  int connectivity = 26;
  std::string units = "voxels";
  std::string degenerate_policy = "exclude";  // fixed
  double fdr_q = 0.05;
  std::string fdr_family = "region";
  std::string out_dir = ".";
  unsigned threads = 1;
};

inline json to_json(const RunConfig& c) {
  return json{{"connectivity", c.connectivity}, {"units", c.units},           {"degenerate_policy", c.degenerate_policy},
              {"fdr_q", c.fdr_q},               {"fdr_family", c.fdr_family}, {"out_dir", c.out_dir},
              {"threads", c.threads}};
}

// ---------------------------------------------------------------------------
// per-subject metrics

inline const std::vector<std::string>& subject_columns() {
  static const std::vector<std::string> cols{
      "subject_id",     "region",         "connectivity",    "dsc_vox", "sen_vox", "ppv_vox",
      "dsc_num",        "sen_num",        "ppv_num",         "vol_manual_vox", "vol_algo_vox",
      "vol_overlap_vox", "n_manual",      "n_algo",          "n_manual_hit", "n_algo_hit", "degenerate_flags"};
  return cols;
}

inline json to_json(const SubjectMetrics& s) {
  return json{{"subject_id", s.subject_id},
              {"region", s.region},
              {"connectivity", to_int(s.connectivity)},
              {"dsc_vox", opt(s.dsc_vox)},
              {"sen_vox", opt(s.sen_vox)},
              {"ppv_vox", opt(s.ppv_vox)},
              {"dsc_num", opt(s.dsc_num)},
              {"sen_num", opt(s.sen_num)},
              {"ppv_num", opt(s.ppv_num)},
              {"vol_manual_vox", s.vox.manual},
              {"vol_algo_vox", s.vox.algo},
              {"vol_overlap_vox", s.vox.overlap},
              {"vol_manual_mm3", s.manual_mm3()},
              {"vol_algo_mm3", s.algo_mm3()},
              {"vol_overlap_mm3", static_cast<double>(s.vox.overlap) * s.voxel_volume_mm3},
              {"n_manual", s.num.n_manual},
              {"n_algo", s.num.n_algo},
              {"n_manual_hit", s.num.n_manual_hit},
              {"n_algo_hit", s.num.n_algo_hit},
              {"degenerate_flags", flags_to_string(s.flags)}};
}

inline SubjectMetrics subject_from_json(const json& j) {
  SubjectMetrics s;
  s.subject_id = j.at("subject_id").get<std::string>();
  s.region = j.at("region").get<std::string>();
  s.connectivity = connectivity_from_int(j.at("connectivity").get<int>());
  s.dsc_vox = opt_from(j.at("dsc_vox"));
  s.sen_vox = opt_from(j.at("sen_vox"));
  s.ppv_vox = opt_from(j.at("ppv_vox"));
  s.dsc_num = opt_from(j.at("dsc_num"));
  s.sen_num = opt_from(j.at("sen_num"));
  s.ppv_num = opt_from(j.at("ppv_num"));
  s.vox = {j.at("vol_overlap_vox").get<std::size_t>(), j.at("vol_manual_vox").get<std::size_t>(),
           j.at("vol_algo_vox").get<std::size_t>()};
  s.num = {j.at("n_manual").get<std::size_t>(), j.at("n_algo").get<std::size_t>(),
           j.at("n_manual_hit").get<std::size_t>(), j.at("n_algo_hit").get<std::size_t>()};
  if (j.contains("vol_manual_mm3") && s.vox.manual > 0)
    s.voxel_volume_mm3 = j.at("vol_manual_mm3").get<double>() / static_cast<double>(s.vox.manual);
  s.flags = flags_from_string(j.at("degenerate_flags").get<std::string>());
  return s;
}

inline std::vector<std::string> to_row(const SubjectMetrics& s) {
  using csv::format_number;
  return {s.subject_id,
          s.region,
          std::to_string(to_int(s.connectivity)),
          format_number(s.dsc_vox),
          format_number(s.sen_vox),
          format_number(s.ppv_vox),
          format_number(s.dsc_num),
          format_number(s.sen_num),
          format_number(s.ppv_num),
          std::to_string(s.vox.manual),
          std::to_string(s.vox.algo),
          std::to_string(s.vox.overlap),
          std::to_string(s.num.n_manual),
          std::to_string(s.num.n_algo),
          std::to_string(s.num.n_manual_hit),
          std::to_string(s.num.n_algo_hit),
          flags_to_string(s.flags)};
}

inline std::string subjects_csv(std::span<const SubjectMetrics> recs) {
  csv::Writer w(subject_columns());
  for (const auto& r : recs) w.add(to_row(r));
  return w.str();
}

/// Reads the per-subject CSV layout, validating every cell.
inline std::vector<SubjectMetrics> subjects_from_csv(const csv::Table& t) {
  for (const auto& c : subject_columns()) t.column(c);
  std::vector<SubjectMetrics> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    SubjectMetrics s;
    s.subject_id = t.text(r, "subject_id");
    if (s.subject_id.empty()) t.fail(r, "subject_id", "value is required");
    s.region = t.text(r, "region");
    try {
      s.connectivity = connectivity_from_int(static_cast<int>(t.required_number(r, "connectivity")));
    } catch (const Error& e) {
      if (e.code() == Errc::SchemaViolation) throw;
      t.fail(r, "connectivity", "must be 6, 18 or 26");
    }
    auto unit = [&](const char* col) {
      auto v = t.number(r, col);
      if (v && (*v < 0 || *v > 1)) t.fail(r, col, "metric outside [0, 1]");
      return v;
    };
    s.dsc_vox = unit("dsc_vox");
    s.sen_vox = unit("sen_vox");
    s.ppv_vox = unit("ppv_vox");
    s.dsc_num = unit("dsc_num");
    s.sen_num = unit("sen_num");
    s.ppv_num = unit("ppv_num");
    s.vox = {t.count(r, "vol_overlap_vox"), t.count(r, "vol_manual_vox"), t.count(r, "vol_algo_vox")};
    s.num = {t.count(r, "n_manual"), t.count(r, "n_algo"), t.count(r, "n_manual_hit"), t.count(r, "n_algo_hit")};
    try {
      s.flags = flags_from_string(t.text(r, "degenerate_flags"));
    } catch (const Error& e) {
      t.fail(r, "degenerate_flags", e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<SubjectMetrics> read_subjects_csv(const std::filesystem::path& path) {
  return subjects_from_csv(csv::read(path));
}

// ---------------------------------------------------------------------------
// statistics

inline const std::vector<std::string>& stat_columns() {
  static const std::vector<std::string> cols{"region",      "metric", "n",     "median_a", "median_b",
                                             "median_diff", "p_fdr",  "sig",   "r"};
  return cols;
}

inline json to_json(const stats::StatResult& r) {
  return json{{"region", r.region},
              {"metric", r.metric},
              {"n", r.n},
              {"n_pairs", r.n_pairs},
              {"n_dropped", r.n_dropped},
              {"median_a", opt(r.median_a)},
              {"median_b", opt(r.median_b)},
              {"median_diff", opt(r.median_diff)},
              {"w_plus", r.w_plus},
              {"w_minus", r.w_minus},
              {"p_raw", opt(r.p_raw)},
              {"p_fdr", opt(r.p_fdr)},
              {"sig", r.significant},
              {"r", opt(r.rank_biserial)},
              {"method", r.method ? json(stats::method_name(*r.method)) : json(nullptr)},
              {"note", r.note}};
}

inline std::string stats_csv(std::span<const stats::StatResult> rs) {
  csv::Writer w(stat_columns());
  for (const auto& r : rs)
    w.add({r.region, r.metric, std::to_string(r.n), csv::format_number(r.median_a), csv::format_number(r.median_b),
           csv::format_number(r.median_diff), csv::format_number(r.p_fdr), r.significant ? "Yes" : "No",
           csv::format_number(r.rank_biserial)});
  return w.str();
}

// ---------------------------------------------------------------------------
// aggregation

inline json to_json(const harness::Summary& s) {
  return json{{"mean", opt(s.mean)}, {"sd", opt(s.sd)}, {"n_defined", s.n_defined}, {"n_excluded", s.n_excluded}};
}

inline json to_json(const harness::AggregateReport& a) {
  json metrics = json::object();
  for (const Metric m : kAllMetrics) metrics[metric_name(m)] = to_json(a.get(m));
  return json{{"region", a.region},     {"site", a.site},           {"scheme", a.scheme},
              {"n_subjects", a.n_subjects}, {"metrics", metrics},   {"r_vox", opt(a.r_vox)},
              {"r_vox_mm3", opt(a.r_vox_mm3)}, {"r_num", opt(a.r_num)}};
}

inline std::string aggregate_csv(std::span<const harness::AggregateReport> reps) {
  std::vector<std::string> header{"region", "site", "scheme", "n_subjects"};
  for (const Metric m : kAllMetrics) {
    const auto n = metric_name(m);
    header.insert(header.end(), {n + "_mean", n + "_sd", n + "_n", n + "_excluded"});
  }
  header.insert(header.end(), {"r_vox", "r_vox_mm3", "r_num"});
  csv::Writer w(header);
  for (const auto& a : reps) {
    std::vector<std::string> row{a.region, a.site, a.scheme, std::to_string(a.n_subjects)};
    for (const Metric m : kAllMetrics) {
      const auto& s = a.get(m);
      row.insert(row.end(), {csv::format_number(s.mean), csv::format_number(s.sd), std::to_string(s.n_defined),
                             std::to_string(s.n_excluded)});
    }
    row.insert(row.end(), {csv::format_number(a.r_vox), csv::format_number(a.r_vox_mm3), csv::format_number(a.r_num)});
    w.add(std::move(row));
  }
  return w.str();
}

inline json to_json(const harness::Cell& c) {
  return json{{"mean", opt(c.mean)}, {"sd", opt(c.sd)}, {"n", c.n}};
}

/// "mean (sd)" with two decimals, the layout of the published tables.
inline std::string cell_text(const std::optional<harness::Cell>& c) {
  if (!c || !c->mean) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", *c->mean, c->sd.value_or(0.0));
  return buf;
}

inline json to_json(const harness::LosocvTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json ext = json::object();
    for (std::size_t i = 0; i < t.sites.size(); ++i)
      ext[t.sites[i]] = r.external[i] ? to_json(*r.external[i]) : json(nullptr);
    rows.push_back({{"region", r.region},
                    {"model", r.model},
                    {"training", r.training},
                    {"internal", r.internal ? to_json(*r.internal) : json(nullptr)},
                    {"external", ext}});
  }
  json avgs = json::array();
  for (const auto& a : t.averages)
    avgs.push_back({{"region", a.region}, {"model", a.model}, {"average", to_json(a.average)}});
  return json{{"metric", t.metric}, {"sites", t.sites}, {"rows", rows}, {"averages", avgs}};
}

/// The pooled average appears on the first row of each (model, region)
/// block, like a merged cell.
inline std::string losocv_csv(const harness::LosocvTable& t) {
  std::vector<std::string> header{"region", "model", "training", "internal"};
  for (const auto& s : t.sites) header.push_back(s);
  header.push_back("average");
  csv::Writer w(header);
  std::string last_block;
  for (const auto& r : t.rows) {
    std::vector<std::string> row{r.region, r.model, r.training, cell_text(r.internal)};
    for (const auto& c : r.external) row.push_back(cell_text(c));
    const std::string block = r.region + '\x1f' + r.model;
    std::string avg;
    if (block != last_block) {
      for (const auto& a : t.averages)
        if (a.region == r.region && a.model == r.model) avg = cell_text(a.average);
      last_block = block;
    }
    row.push_back(avg);
    w.add(std::move(row));
  }
  return w.str();
}

// ---------------------------------------------------------------------------
// folds, clusters, contrast, phantom

inline json to_json(const harness::FoldSpec& f) {
  json a = json::array();
  for (const auto& x : f.assignments) a.push_back({{"subject_id", x.subject_id}, {"site", x.site}, {"fold", x.fold}});
  return json{{"scheme", harness::scheme_name(f.scheme)},
              {"seed", f.seed},
              {"stratified", f.stratified},
              {"folds", f.folds},
              {"assignments", a}};
}

inline harness::FoldSpec folds_from_json(const json& j) {
  harness::FoldSpec f;
  f.scheme = harness::scheme_from_name(j.at("scheme").get<std::string>());
  f.seed = j.at("seed").get<std::uint64_t>();
  f.stratified = j.at("stratified").get<bool>();
  f.folds = j.at("folds").get<std::vector<std::string>>();
  for (const auto& x : j.at("assignments"))
    f.assignments.push_back(
        {x.at("subject_id").get<std::string>(), x.at("site").get<std::string>(), x.at("fold").get<std::string>()});
  return f;
}

inline json to_json(const std::vector<HistogramBin>& bins) {
  json a = json::array();
  for (const auto& b : bins) a.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"density", b.density}});
  return a;
}

inline std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  csv::Writer w({"bin_lo", "bin_hi", "count", "density"});
  for (const auto& b : bins)
    w.add({std::to_string(b.lo), std::to_string(b.hi), std::to_string(b.count), csv::format_number(b.density)});
  return w.str();
}

struct ContrastRow {
  std::string subject_id;
  std::string modality;
  ContrastStat stat;
};

inline json to_json(const ContrastRow& r) {
  return json{{"subject_id", r.subject_id},
              {"modality", r.modality},
              {"mask_mean", r.stat.mask_mean},
              {"shell_mean", r.stat.shell_mean},
              {"abs_contrast", r.stat.abs_contrast},
              {"mode", contrast_mode_name(r.stat.mode)},
              {"mask_voxels", r.stat.mask_voxels},
              {"shell_voxels", r.stat.shell_voxels},
              {"clusters", r.stat.clusters}};
}

inline std::string contrast_csv(std::span<const ContrastRow> rows) {
  csv::Writer w({"subject_id", "modality", "mask_mean", "shell_mean", "abs_contrast", "mode"});
  for (const auto& r : rows)
    w.add({r.subject_id, r.modality, csv::format_number(r.stat.mask_mean), csv::format_number(r.stat.shell_mean),
           csv::format_number(r.stat.abs_contrast), contrast_mode_name(r.stat.mode)});
  return w.str();
}

inline json to_json(const phantom::PhantomSpec& s) {
  return json{{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
              {"spacing", {s.spacing[0], s.spacing[1], s.spacing[2]}},
              {"n_tubes", s.n_tubes},
              {"radius", {s.radius_min, s.radius_max}},
              {"length", {s.length_min, s.length_max}},
              {"clearance", s.clearance},
              {"bend_max", s.bend_max},
              {"background_mean", s.background_mean},
              {"background_sd", s.background_sd},
              {"tube_offset", s.tube_offset},
              {"seed", s.seed},
              {"max_attempts", s.max_attempts}};
}

inline void save_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoFailure, "cannot create '" + path.string() + "'");
  f << text;
  if (!f) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

}  // namespace pvseval::report

#endif  // PVSEVAL_REPORT_HPP

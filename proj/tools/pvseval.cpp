// pvseval command-line front end.
//
// Exit status: 0 success, 2 bad input or usage, 1 internal failure.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvseval/pvseval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pvseval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

/// Runs fn(i) for i in [0, n) on `threads` workers. Exceptions are
/// rethrown in index order after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// shared options

struct Common {
  int connectivity = 26;
  std::string units = "voxels";
  unsigned threads = 0;
  std::string out = ".";
  std::string config;
};

report::RunConfig resolve(const Common& c) {
  report::RunConfig rc;
  rc.connectivity = c.connectivity;
  rc.units = c.units;
  rc.out_dir = c.out;
  rc.threads = c.threads;
  return rc;
}

json envelope(const std::string& command, const report::RunConfig& rc) {
  return json{{"tool", "pvseval"}, {"command", command}, {"config", report::to_json(rc)}};
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

Connectivity conn_of(const Common& c) { return connectivity_from_int(c.connectivity); }

/// Fills options left unset on the command line from a JSON object. Keys
/// are long option names; a nested object under the subcommand name
/// overrides top-level keys.
void merge_config(CLI::App& sub, const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoFailure, "cannot open config '" + path.string() + "'");
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
  if (!cfg.is_object()) throw Error(Errc::SchemaViolation, path.string() + ": config must be a JSON object");
  json merged = json::object();
  for (auto& [k, v] : cfg.items())
    if (!v.is_object()) merged[k] = v;
  if (cfg.contains(sub.get_name()) && cfg[sub.get_name()].is_object())
    for (auto& [k, v] : cfg[sub.get_name()].items()) merged[k] = v;

  for (CLI::Option* opt : sub.get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "config" || name == "help") continue;
    if (!merged.contains(name)) continue;
    const json& v = merged[name];
    auto text = [&](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array()) {
      for (const auto& x : v) opt->add_result(text(x));
    } else if (v.is_boolean()) {
      if (!v.get<bool>()) continue;
      opt->add_result("true");
    } else {
      opt->add_result(text(v));
    }
    opt->run_callback();
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PVSEVAL_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0 || v > 1024)
      throw UsageError("PVSEVAL_THREADS must be an integer in [1, 1024], got '" + std::string(env) + "'");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void add_common(CLI::App& sub, Common& c, bool with_conn, bool with_threads) {
  sub.add_option("--out,-o", c.out, "Output directory")->capture_default_str();
  sub.add_option("--config", c.config, "JSON config; explicit flags take precedence");
  if (with_conn)
    sub.add_option("--connectivity,-c", c.connectivity, "Neighborhood for cluster labeling")
        ->check(CLI::IsMember({6, 18, 26}))
        ->capture_default_str();
  if (with_threads) sub.add_option("--threads,-j", c.threads, "Worker threads (default: $PVSEVAL_THREADS or all cores)");
}

std::vector<RoiMask> load_rois(const fs::path& wm, const fs::path& bg) {
  std::vector<RoiMask> rois;
  if (!wm.empty()) rois.push_back({Region::WM, "WM", nifti::read_mask(wm)});
  if (!bg.empty()) rois.push_back({Region::BG, "BG", nifti::read_mask(bg)});
  return rois;
}

std::vector<SubjectMetrics> evaluate_paths(const std::string& id, const fs::path& pred, const fs::path& ref,
                                           const fs::path& wm, const fs::path& bg, Connectivity conn) {
  const BinaryMask p = nifti::read_mask(pred);
  const BinaryMask r = nifti::read_mask(ref);
  require_same_grid(p.grid(), r.grid(), "pred '" + pred.string() + "'", "ref '" + ref.string() + "'");
  const auto rois = load_rois(wm, bg);
  for (const auto& roi : rois)
    require_same_grid(r.grid(), roi.mask.grid(), "ref '" + ref.string() + "'", "roi " + roi.name);
  return evaluate_subject(p, r, rois, conn, id);
}

void write_subjects(const fs::path& dir, const std::string& stem, const std::string& command,
                    const report::RunConfig& rc, const std::vector<SubjectMetrics>& recs) {
  json j = envelope(command, rc);
  j["subjects"] = json::array();
  for (const auto& r : recs) j["subjects"].push_back(report::to_json(r));
  report::save_json(j, dir / (stem + ".json"));
  report::save_text(report::subjects_csv(recs), dir / (stem + ".csv"));
}

report::ContrastRow contrast_of(const std::string& id, const std::string& modality, const fs::path& image,
                                const fs::path& mask, Connectivity conn, bool per_cluster) {
  const auto img = nifti::read_volume(image, nifti::ReadMode::Intensity);
  const auto m = nifti::read_mask(mask);
  require_same_grid(img.grid(), m.grid(), "image '" + image.string() + "'", "mask '" + mask.string() + "'");
  return {id, modality, per_cluster ? contrast_stat_per_cluster(img, m, conn) : contrast_stat(img, m, conn)};
}

void write_contrast(const fs::path& dir, const report::RunConfig& rc, const std::vector<report::ContrastRow>& rows) {
  json j = envelope("contrast", rc);
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(report::to_json(r));
  report::save_json(j, dir / "contrast.json");
  report::save_text(report::contrast_csv(rows), dir / "contrast.csv");
}

std::map<std::string, std::string> site_map(const std::vector<harness::SubjectRecord>& manifest) {
  std::map<std::string, std::string> m;
  for (const auto& r : manifest) m[r.subject_id] = r.site;
  return m;
}

// ---------------------------------------------------------------------------
// subcommands

struct MetricsArgs {
  Common common;
  std::string pred, ref, roi_wm, roi_bg, image, subject = "subject", modality = "image";
};

int run_metrics(const MetricsArgs& a) {
  const auto conn = conn_of(a.common);
  const auto rc = resolve(a.common);
  const auto recs = evaluate_paths(a.subject, a.pred, a.ref, a.roi_wm, a.roi_bg, conn);
  const auto dir = out_dir(a.common);
  write_subjects(dir, "metrics", "metrics", rc, recs);
  if (!a.image.empty()) write_contrast(dir, rc, {contrast_of(a.subject, a.modality, a.image, a.ref, conn, false)});
  return kExitOk;
}

struct AggregateArgs {
  Common common;
  std::string manifest, subjects, scheme = "5FCV";
  bool no_by_site = false;
};

int run_aggregate(AggregateArgs& a) {
  const auto conn = conn_of(a.common);
  a.common.threads = resolve_threads(a.common.threads);
  const auto rc = resolve(a.common);
  const auto manifest = harness::read_manifest(a.manifest);

  std::vector<SubjectMetrics> all;
  if (!a.subjects.empty()) {
    all = report::read_subjects_csv(a.subjects);
  } else {
    std::vector<std::vector<SubjectMetrics>> per(manifest.size());
    parallel_for(manifest.size(), a.common.threads, [&](std::size_t i) {
      const auto& s = manifest[i];
      per[i] = evaluate_paths(s.subject_id, s.pred_path, s.ref_path, s.roi_wm_path, s.roi_bg_path, conn);
    });
    for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
  }

  harness::GroupOptions opt;
  opt.by_site = !a.no_by_site;
  opt.scheme = a.scheme;
  const auto reps = harness::aggregate(all, site_map(manifest), opt);

  const auto dir = out_dir(a.common);
  if (a.subjects.empty()) write_subjects(dir, "subjects", "aggregate", rc, all);
  json j = envelope("aggregate", rc);
  j["groups"] = json::array();
  for (const auto& r : reps) j["groups"].push_back(report::to_json(r));
  report::save_json(j, dir / "aggregate.json");
  report::save_text(report::aggregate_csv(reps), dir / "aggregate.csv");
  return kExitOk;
}

struct CompareArgs {
  Common common;
  std::string a, b, family = "region";
  double q = 0.05;
  std::vector<std::string> metrics;
};

int run_compare(const CompareArgs& a) {
  auto rc = resolve(a.common);
  rc.fdr_q = a.q;
  rc.fdr_family = a.family;
  std::vector<Metric> ms;
  if (a.metrics.empty()) ms.assign(kAllMetrics.begin(), kAllMetrics.end());
  for (const auto& m : a.metrics) ms.push_back(metric_from_name(m));
  const auto ra = report::read_subjects_csv(a.a);
  const auto rb = report::read_subjects_csv(a.b);
  const auto family = a.family == "all" ? stats::FdrFamily::All : stats::FdrFamily::PerRegion;
  const auto res = stats::compare_models(ra, rb, ms, a.q, family);

  const auto dir = out_dir(a.common);
  json j = envelope("compare", rc);
  j["a"] = a.a;
  j["b"] = a.b;
  j["results"] = json::array();
  for (const auto& r : res) j["results"].push_back(report::to_json(r));
  report::save_json(j, dir / "compare.json");
  report::save_text(report::stats_csv(res), dir / "compare.csv");
  return kExitOk;
}

struct ContrastArgs {
  Common common;
  std::string image, mask, manifest, subject = "subject", modality = "image";
  bool per_cluster = false;
};

int run_contrast(ContrastArgs& a) {
  const auto conn = conn_of(a.common);
  a.common.threads = resolve_threads(a.common.threads);
  const auto rc = resolve(a.common);
  std::vector<report::ContrastRow> rows;
  if (!a.manifest.empty()) {
    const auto manifest = harness::read_manifest(a.manifest);
    rows.resize(manifest.size());
    parallel_for(manifest.size(), a.common.threads, [&](std::size_t i) {
      const auto& s = manifest[i];
      if (s.image_path.empty())
        throw Error(Errc::SchemaViolation, a.manifest + ": subject '" + s.subject_id + "' has no image_path");
      rows[i] = contrast_of(s.subject_id, a.modality, s.image_path, s.ref_path, conn, a.per_cluster);
    });
  } else {
    if (a.image.empty() || a.mask.empty()) throw UsageError("contrast needs --image and --mask, or --manifest");
    rows.push_back(contrast_of(a.subject, a.modality, a.image, a.mask, conn, a.per_cluster));
  }
  write_contrast(out_dir(a.common), rc, rows);
  return kExitOk;
}

struct ClustersArgs {
  Common common;
  std::string mask;
  bool log_bins = false, labels = false;
};

int run_clusters(const ClustersArgs& a) {
  const auto conn = conn_of(a.common);
  const auto rc = resolve(a.common);
  const auto m = nifti::read_mask(a.mask);
  const auto lm = label_components(m, conn);
  const auto sizes = component_sizes(lm);
  std::vector<std::size_t> raw;
  for (const auto& s : sizes) raw.push_back(s.voxels);

  const auto dir = out_dir(a.common);
  csv::Writer w({"label", "voxels", "volume_mm3"});
  const double vox_mm3 = m.grid().voxel_volume_mm3();
  for (const auto& s : sizes)
    w.add({std::to_string(s.id), std::to_string(s.voxels), csv::format_number(static_cast<double>(s.voxels) * vox_mm3)});
  w.save(dir / "cluster_sizes.csv");

  json j = envelope("clusters", rc);
  j["mask"] = a.mask;
  j["count"] = lm.count();
  j["log_binning"] = a.log_bins;
  if (!raw.empty()) {
    const auto bins = size_histogram(raw, a.log_bins);
    j["histogram"] = report::to_json(bins);
    report::save_text(report::histogram_csv(bins), dir / "histogram.csv");
  } else {
    j["histogram"] = json::array();
    report::save_text(report::histogram_csv({}), dir / "histogram.csv");
  }
  report::save_json(j, dir / "clusters.json");
  if (a.labels) nifti::write_volume(lm.to_volume(), dir / "labels.nii.gz", {nifti::Datatype::I32, true});
  return kExitOk;
}

struct PhantomArgs {
  Common common;
  phantom::PhantomSpec spec;
  std::vector<std::size_t> dims{64, 64, 64};
  std::vector<double> spacing{0.8, 0.8, 0.8};
  std::vector<double> radius{0.5, 1.0};
  std::vector<double> length{8.0, 20.0};
  std::vector<std::string> perturb;
  std::uint64_t perturb_seed = 0;
};

int run_phantom(PhantomArgs& a) {
  auto& s = a.spec;
  if (a.dims.size() != 3 || a.spacing.size() != 3 || a.radius.size() != 2 || a.length.size() != 2)
    throw UsageError("--dims and --spacing take 3 values; --radius and --length take 2");
  s.dims = {a.dims[0], a.dims[1], a.dims[2]};
  s.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
  s.radius_min = a.radius[0];
  s.radius_max = a.radius[1];
  s.length_min = a.length[0];
  s.length_max = a.length[1];
  std::vector<phantom::Perturbation> ps;
  for (const auto& p : a.perturb) ps.push_back(phantom::parse_perturbation(p));

  const auto rc = resolve(a.common);
  const auto ph = phantom::generate(s);
  const auto dir = out_dir(a.common);
  nifti::write_volume(ph.image, dir / "image.nii.gz", {nifti::Datatype::F32, true});
  nifti::write_mask(ph.truth, dir / "truth.nii.gz", true);

  json j = envelope("phantom", rc);
  j["spec"] = report::to_json(s);
  j["cluster_count"] = ph.cluster_count;
  j["truth_voxels"] = ph.truth.count();
  if (!ps.empty()) {
    const std::uint64_t seed = a.perturb_seed ? a.perturb_seed : s.seed + 1;
    BinaryMask pred = ph.truth;
    for (std::size_t i = 0; i < ps.size(); ++i) pred = phantom::perturb(pred, ps[i], seed + i);
    nifti::write_mask(pred, dir / "pred.nii.gz", true);
    j["perturbations"] = a.perturb;
    j["perturb_seed"] = seed;
    j["pred_voxels"] = pred.count();
  }
  report::save_json(j, dir / "phantom.json");
  return kExitOk;
}

struct FoldsArgs {
  Common common;
  std::string manifest, scheme = "5FCV";
  std::uint64_t seed = 0;
  std::size_t k = 5;
};

int run_folds(const FoldsArgs& a) {
  const auto rc = resolve(a.common);
  const auto manifest = harness::read_manifest(a.manifest);
  const auto spec = harness::make_folds(manifest, harness::scheme_from_name(a.scheme), a.seed, a.k);
  json j = envelope("folds", rc);
  j["manifest"] = a.manifest;
  j["fold_spec"] = report::to_json(spec);
  report::save_json(j, out_dir(a.common) / "folds.json");
  return kExitOk;
}

struct LosocvArgs {
  Common common;
  std::vector<std::string> inputs;
  std::vector<std::string> metrics;
};

/// One JSON file per model:
/// {"model": "...", "sites": [...], "internal": "all.csv"?,
///  "folds": [{"left_out_site": "...", "internal": "a.csv", "external": "b.csv"}]}
/// CSV paths resolve relative to the JSON file.
harness::LosocvInput load_losocv_input(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "'");
  const fs::path base = path.parent_path();
  auto csv_at = [&](const json& v) {
    fs::path p(v.get<std::string>());
    return report::read_subjects_csv(p.is_absolute() ? p : base / p);
  };
  try {
    const json j = json::parse(f);
    harness::LosocvInput in;
    in.model = j.at("model").get<std::string>();
    in.sites = j.at("sites").get<std::vector<std::string>>();
    if (j.contains("internal") && !j["internal"].is_null()) in.all_sites_internal = csv_at(j["internal"]);
    for (const auto& fj : j.at("folds")) {
      harness::LosocvFold fold;
      fold.left_out_site = fj.at("left_out_site").get<std::string>();
      if (fj.contains("internal") && !fj["internal"].is_null()) fold.internal = csv_at(fj["internal"]);
      fold.external = csv_at(fj.at("external"));
      in.folds.push_back(std::move(fold));
    }
    return in;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
}

int run_losocv(const LosocvArgs& a) {
  const auto rc = resolve(a.common);
  std::vector<harness::LosocvInput> models;
  for (const auto& p : a.inputs) models.push_back(load_losocv_input(p));
  std::vector<Metric> ms;
  if (a.metrics.empty()) ms.assign(kAllMetrics.begin(), kAllMetrics.end());
  for (const auto& m : a.metrics) ms.push_back(metric_from_name(m));

  const auto dir = out_dir(a.common);
  json j = envelope("losocv", rc);
  j["tables"] = json::array();
  for (const Metric m : ms) {
    const auto t = harness::losocv_table(models, m);
    j["tables"].push_back(report::to_json(t));
    report::save_text(report::losocv_csv(t), dir / ("losocv_" + metric_name(m) + ".csv"));
  }
  report::save_json(j, dir / "losocv.json");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pvseval: evaluation toolkit for 3D perivascular space segmentations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pvseval 1.0.0");

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Voxel and cluster overlap metrics for one subject");
  add_common(*metrics, ma.common, true, false);
  metrics->add_option("--pred", ma.pred, "Predicted mask (NIfTI)")->required();
  metrics->add_option("--ref", ma.ref, "Reference mask (NIfTI)")->required();
  metrics->add_option("--roi-wm", ma.roi_wm, "White matter ROI mask");
  metrics->add_option("--roi-bg", ma.roi_bg, "Basal ganglia ROI mask");
  metrics->add_option("--image", ma.image, "Intensity image; adds a contrast table for the reference mask");
  metrics->add_option("--modality", ma.modality, "Label for --image")->capture_default_str();
  metrics->add_option("--subject-id", ma.subject, "Subject id written to the report")->capture_default_str();
  metrics->add_option("--units", ma.common.units, "Volume units shown in the config")
      ->check(CLI::IsMember({"voxels", "mm3"}))
      ->capture_default_str();

  AggregateArgs aa;
  auto* aggregate = app.add_subcommand("aggregate", "Evaluate a manifest and summarize per site");
  add_common(*aggregate, aa.common, true, true);
  aggregate->add_option("--manifest", aa.manifest, "Manifest CSV")->required();
  aggregate->add_option("--subjects", aa.subjects, "Precomputed per-subject CSV instead of evaluating volumes");
  aggregate->add_option("--scheme", aa.scheme, "Scheme label for the report")->capture_default_str();
  aggregate->add_flag("--no-by-site", aa.no_by_site, "Only the pooled 'All Sites' group");
  aggregate->add_option("--units", aa.common.units, "Volume units shown in the config")
      ->check(CLI::IsMember({"voxels", "mm3"}))
      ->capture_default_str();

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Paired Wilcoxon comparison of two per-subject reports");
  add_common(*compare, ca.common, false, false);
  compare->add_option("--a", ca.a, "Per-subject CSV of model A")->required();
  compare->add_option("--b", ca.b, "Per-subject CSV of model B")->required();
  compare->add_option("--fdr-q", ca.q, "FDR level")->capture_default_str();
  compare->add_option("--fdr-family", ca.family, "Tests adjusted together")
      ->check(CLI::IsMember({"region", "all"}))
      ->capture_default_str();
  compare->add_option("--metrics", ca.metrics, "Subset of metrics (default: all six)");

  ContrastArgs ta;
  auto* contrast = app.add_subcommand("contrast", "Mask versus one-voxel shell intensity contrast");
  add_common(*contrast, ta.common, true, true);
  contrast->add_option("--image", ta.image, "Intensity image");
  contrast->add_option("--mask", ta.mask, "Mask (NIfTI)");
  contrast->add_option("--manifest", ta.manifest, "Use image_path and ref_path of every subject");
  contrast->add_option("--subject-id", ta.subject)->capture_default_str();
  contrast->add_option("--modality", ta.modality)->capture_default_str();
  contrast->add_flag("--per-cluster", ta.per_cluster, "Average over clusters instead of pooling voxels");

  ClustersArgs la;
  auto* clusters = app.add_subcommand("clusters", "Connected components and size histogram");
  add_common(*clusters, la.common, true, false);
  clusters->add_option("--mask", la.mask, "Mask (NIfTI)")->required();
  clusters->add_flag("--log-bins", la.log_bins, "Power-of-two histogram bins");
  clusters->add_flag("--labels", la.labels, "Also write labels.nii.gz");

  PhantomArgs pa;
  auto* ph = app.add_subcommand("phantom", "Synthetic tubular phantom with known truth");
  add_common(*ph, pa.common, false, false);
  ph->add_option("--seed", pa.spec.seed)->capture_default_str();
  ph->add_option("--dims", pa.dims)->expected(3)->capture_default_str();
  ph->add_option("--spacing", pa.spacing)->expected(3)->capture_default_str();
  ph->add_option("--n-tubes", pa.spec.n_tubes)->capture_default_str();
  ph->add_option("--radius", pa.radius, "Min and max tube radius, voxels")->expected(2)->capture_default_str();
  ph->add_option("--length", pa.length, "Min and max tube length, voxels")->expected(2)->capture_default_str();
  ph->add_option("--clearance", pa.spec.clearance)->capture_default_str();
  ph->add_option("--bend", pa.spec.bend_max)->capture_default_str();
  ph->add_option("--background-mean", pa.spec.background_mean)->capture_default_str();
  ph->add_option("--noise-sd", pa.spec.background_sd)->capture_default_str();
  ph->add_option("--offset", pa.spec.tube_offset, "Signed tube intensity offset")->capture_default_str();
  ph->add_option("--max-attempts", pa.spec.max_attempts)->capture_default_str();
  ph->add_option("--perturb", pa.perturb, "delete:F | dilate | drop:K | translate:DX,DY,DZ (applied in order)");
  ph->add_option("--perturb-seed", pa.perturb_seed, "Default: seed + 1");

  FoldsArgs fa;
  auto* folds = app.add_subcommand("folds", "Deterministic 5FCV or LOSOCV split");
  add_common(*folds, fa.common, false, false);
  folds->add_option("--manifest", fa.manifest, "Manifest CSV")->required();
  folds->add_option("--scheme", fa.scheme)->check(CLI::IsMember({"5FCV", "LOSOCV"}))->capture_default_str();
  folds->add_option("--seed", fa.seed)->capture_default_str();
  folds->add_option("--k", fa.k, "Number of folds for 5FCV")->capture_default_str();

  LosocvArgs lo;
  auto* losocv = app.add_subcommand("losocv", "Leave-one-site-out results matrix");
  add_common(*losocv, lo.common, false, false);
  losocv->add_option("--input", lo.inputs, "Per-model JSON description (repeatable)")->required();
  losocv->add_option("--metrics", lo.metrics, "Subset of metrics (default: all six)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "pvseval: " << one_line(e.what()) << "\n";
    return kExitInput;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::map<CLI::App*, std::string*> configs{
        {metrics, &ma.common.config}, {aggregate, &aa.common.config}, {compare, &ca.common.config},
        {contrast, &ta.common.config}, {clusters, &la.common.config}, {ph, &pa.common.config},
        {folds, &fa.common.config},   {losocv, &lo.common.config}};
    if (const auto* cfg = configs.at(sub); !cfg->empty()) merge_config(*sub, *cfg);

    if (sub == metrics) return run_metrics(ma);
    if (sub == aggregate) return run_aggregate(aa);
    if (sub == compare) return run_compare(ca);
    if (sub == contrast) return run_contrast(ta);
    if (sub == clusters) return run_clusters(la);
    if (sub == ph) return run_phantom(pa);
    if (sub == folds) return run_folds(fa);
    if (sub == losocv) return run_losocv(lo);
    return kExitInternal;
  } catch (const Error& e) {
    std::cerr << "pvseval: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const UsageError& e) {
    std::cerr << "pvseval: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const CLI::ParseError& e) {
    std::cerr << "pvseval: config: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "pvseval: " << one_line(e.what()) << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "pvseval: internal error: " << one_line(e.what()) << "\n";
    return kExitInternal;
  }
}

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + PVSEVAL_CLI + std::string(" ") + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  oracle::TempDir tmp{"cli"};
  fs::path dir(const std::string& name) { return tmp.path() / name; }

  fs::path phantom(const std::string& name, const std::string& extra = "") {
    const auto r = run("phantom --seed 3 --dims 32 32 32 --n-tubes 4 -o " + q(dir(name)) + " " + extra);
    EXPECT_EQ(r.code, 0) << r.out;
    return dir(name);
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("metrics --pred a.nii").code, 2);
  EXPECT_EQ(run("metrics --pred a.nii --ref b.nii -c 8").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MissingInputNamesFile) {
  const auto r = run("metrics --pred /nonexistent/p.nii.gz --ref /nonexistent/r.nii.gz -o " + q(dir("m")));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("/nonexistent/p.nii.gz"), std::string::npos) << r.out;
}

TEST_F(Cli, PhantomIsByteIdentical) {
  const std::vector<std::string> files{"image.nii.gz", "truth.nii.gz", "pred.nii.gz", "phantom.json"};
  const auto a = phantom("a", "--perturb delete:0.3");
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(a / f));
  phantom("a", "--perturb delete:0.3");
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(first[i], slurp(a / files[i])) << files[i];
  EXPECT_EQ(load(a / "phantom.json")["config"]["out_dir"].get<std::string>(), a.string());
}

TEST_F(Cli, MetricsOnPerturbedPhantom) {
  const auto p = phantom("p", "--perturb drop:1");
  const auto r = run("metrics --pred " + q(p / "pred.nii.gz") + " --ref " + q(p / "truth.nii.gz") + " --image " +
                     q(p / "image.nii.gz") + " -o " + q(dir("out")));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = load(dir("out") / "metrics.json");
  const auto& s = j["subjects"][0];
  EXPECT_EQ(s["sen_num"].get<double>(), 0.75);
  EXPECT_EQ(s["ppv_num"].get<double>(), 1.0);
  EXPECT_EQ(s["n_manual"].get<int>(), 4);
  EXPECT_TRUE(fs::exists(dir("out") / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir("out") / "contrast.csv"));
}

TEST_F(Cli, GridMismatchNamesBothFiles) {
  const auto a = phantom("a");
  const auto r0 = run("phantom --seed 3 --dims 30 32 32 --n-tubes 4 -o " + q(dir("b")));
  ASSERT_EQ(r0.code, 0) << r0.out;
  const auto r = run("metrics --pred " + q(a / "truth.nii.gz") + " --ref " + q(dir("b") / "truth.nii.gz") + " -o " +
                     q(dir("out")));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find((a / "truth.nii.gz").string()), std::string::npos) << r.out;
  EXPECT_NE(r.out.find((dir("b") / "truth.nii.gz").string()), std::string::npos) << r.out;
}

TEST_F(Cli, AggregateCompareAndConfig) {
  const auto p = phantom("p", "--perturb delete:0.2");
  {
    std::ofstream m(dir("manifest.csv"));
    m << "subject_id,site,pred_path,ref_path,roi_wm_path,roi_bg_path,image_path\n";
    m << "s1,A," << (p / "pred.nii.gz").string() << "," << (p / "truth.nii.gz").string() << ",,,\n";
    m << "s2,B," << (p / "truth.nii.gz").string() << "," << (p / "truth.nii.gz").string() << ",,,\n";
  }
  {
    std::ofstream c(dir("config.json"));
    c << R"({"connectivity": 6, "aggregate": {"threads": 2}})";
  }
  auto r = run("aggregate --manifest " + q(dir("manifest.csv")) + " --config " + q(dir("config.json")) + " -o " +
               q(dir("agg")));
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = load(dir("agg") / "aggregate.json");
  EXPECT_EQ(j["config"]["connectivity"].get<int>(), 6);
  EXPECT_EQ(j["config"]["threads"].get<int>(), 2);
  std::vector<std::string> sites;
  for (const auto& g : j["groups"]) sites.push_back(g["site"].get<std::string>());
  EXPECT_EQ(sites, (std::vector<std::string>{"A", "B", "All Sites"}));

  r = run("aggregate --manifest " + q(dir("manifest.csv")) + " --config " + q(dir("config.json")) +
          " -c 18 -j 1 -o " + q(dir("agg2")));
  ASSERT_EQ(r.code, 0) << r.out;
  j = load(dir("agg2") / "aggregate.json");
  EXPECT_EQ(j["config"]["connectivity"].get<int>(), 18);
  EXPECT_EQ(j["config"]["threads"].get<int>(), 1);

  const auto subj = dir("agg") / "subjects.csv";
  r = run("compare --a " + q(subj) + " --b " + q(subj) + " -o " + q(dir("cmp")));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const auto& row : load(dir("cmp") / "compare.json")["results"]) {
    EXPECT_EQ(row["note"].get<std::string>(), "AllZeroDifferences");
    EXPECT_TRUE(row["p_raw"].is_null());
  }
}

TEST_F(Cli, ThreadsEnvironment) {
  {
    std::ofstream m(dir("manifest.csv"));
    m << "subject_id,site,pred_path,ref_path,roi_wm_path,roi_bg_path,image_path\n";
  }
  const std::string args = "aggregate --manifest " + q(dir("manifest.csv")) + " -o " + q(dir("agg"));
  EXPECT_EQ(run(args, "PVSEVAL_THREADS=zero").code, 2);
  const auto r = run(args, "PVSEVAL_THREADS=2");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("EmptyManifest"), std::string::npos) << r.out;
}

TEST_F(Cli, FoldsReplay) {
  {
    std::ofstream m(dir("manifest.csv"));
    m << "subject_id,site,pred_path,ref_path,roi_wm_path,roi_bg_path,image_path\n";
    for (int i = 0; i < 12; ++i) m << "s" << i << "," << (i % 3 ? "A" : "B") << ",p.nii,r.nii,,,\n";
  }
  for (const char* o : {"f1", "f2"})
    ASSERT_EQ(run("folds --manifest " + q(dir("manifest.csv")) + " --seed 4 -o " + q(dir(o))).code, 0);
  auto f1 = load(dir("f1") / "folds.json"), f2 = load(dir("f2") / "folds.json");
  EXPECT_EQ(f1["fold_spec"], f2["fold_spec"]);
  EXPECT_EQ(run("folds --manifest " + q(dir("manifest.csv")) + " --scheme LOSOCV -o " + q(dir("f3"))).code, 0);
  EXPECT_EQ(load(dir("f3") / "folds.json")["fold_spec"]["folds"].size(), 2u);
}

TEST_F(Cli, Clusters) {
  const auto p = phantom("p");
  const auto r = run("clusters --mask " + q(p / "truth.nii.gz") + " --labels -o " + q(dir("c")));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(load(dir("c") / "clusters.json")["count"].get<int>(), 4);
  EXPECT_TRUE(fs::exists(dir("c") / "labels.nii.gz"));
  EXPECT_TRUE(fs::exists(dir("c") / "histogram.csv"));
}

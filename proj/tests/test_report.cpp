#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pvseval/report.hpp"

using namespace pvseval;

namespace {

SubjectMetrics sample_record() {
  const auto p = oracle::random_mask({10, 10, 10}, 0.1, 1);
  const auto r = oracle::random_mask({10, 10, 10}, 0.1, 2);
  auto recs = evaluate_subject(p, r, {}, Connectivity::Eighteen, "sub,01");
  return recs[0];
}

}  // namespace

TEST(Csv, QuotingRoundTrip) {
  csv::Writer w({"a", "b"});
  w.add({"x,y", "say \"hi\""});
  w.add({"line\nbreak", ""});
  const auto t = csv::parse(w.str());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x,y");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][0], "line\nbreak");
  EXPECT_EQ(t.lines[1], 3u);
}

TEST(Csv, Numbers) {
  const auto t = csv::parse("v\n0.25\nNA\n\nabc\n", "f.csv");
  EXPECT_EQ(*t.number(0, "v"), 0.25);
  EXPECT_FALSE(t.number(1, "v"));
  try {
    t.number(2, "v");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "SchemaViolation: f.csv:5 column 'v': 'abc' is not a number");
  }
  EXPECT_EQ(csv::format_number(0.1), "0.1");
  EXPECT_EQ(csv::format_number(std::optional<double>{}), "NA");
  EXPECT_EQ(csv::format_number(2.0 / 3.0), "0.6666666666666666");
}

TEST(Csv, Errors) {
  EXPECT_THROW(csv::parse(""), Error);
  EXPECT_THROW(csv::parse("a,b\n\"open"), Error);
  EXPECT_THROW(csv::parse("a,b\n1,2,3\n"), Error);
}

TEST(SubjectCsv, ColumnOrder) {
  const auto text = report::subjects_csv(std::vector<SubjectMetrics>{sample_record()});
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "subject_id,region,connectivity,dsc_vox,sen_vox,ppv_vox,dsc_num,sen_num,ppv_num,vol_manual_vox,"
            "vol_algo_vox,vol_overlap_vox,n_manual,n_algo,n_manual_hit,n_algo_hit,degenerate_flags");
}

TEST(SubjectCsv, RoundTrip) {
  auto a = sample_record();
  SubjectMetrics b;
  b.subject_id = "empty";
  b.region = "BG";
  b.flags = kRoiEmpty | kRefEmpty | kPredEmpty;
  const std::vector<SubjectMetrics> recs{a, b};
  const auto back = report::subjects_from_csv(csv::parse(report::subjects_csv(recs)));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].subject_id, recs[i].subject_id);
    EXPECT_EQ(back[i].region, recs[i].region);
    EXPECT_EQ(back[i].connectivity, recs[i].connectivity);
    EXPECT_EQ(back[i].vox, recs[i].vox);
    EXPECT_EQ(back[i].num, recs[i].num);
    EXPECT_EQ(back[i].flags, recs[i].flags);
    for (Metric m : kAllMetrics) EXPECT_EQ(back[i].get(m), recs[i].get(m));
  }
}

TEST(SubjectCsv, SchemaViolations) {
  const std::string header =
      "subject_id,region,connectivity,dsc_vox,sen_vox,ppv_vox,dsc_num,sen_num,ppv_num,vol_manual_vox,"
      "vol_algo_vox,vol_overlap_vox,n_manual,n_algo,n_manual_hit,n_algo_hit,degenerate_flags\n";
  auto msg = [](const std::string& text) {
    try {
      report::subjects_from_csv(csv::parse(text, "r.csv"));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::SchemaViolation);
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(msg(header + "s,WM,26,1.5,1,1,1,1,1,1,1,1,1,1,1,1,\n").find("r.csv:2 column 'dsc_vox'"),
            std::string::npos);
  EXPECT_NE(msg(header + "s,WM,8,1,1,1,1,1,1,1,1,1,1,1,1,1,\n").find("column 'connectivity'"), std::string::npos);
  EXPECT_NE(msg(header + "s,WM,26,1,1,1,1,1,1,-1,1,1,1,1,1,1,\n").find("column 'vol_manual_vox'"),
            std::string::npos);
  EXPECT_NE(msg(header + "s,WM,26,1,1,1,1,1,1,1,1,1,1,1,1,1,weird\n").find("column 'degenerate_flags'"),
            std::string::npos);
  EXPECT_NE(msg("subject_id,region\ns,WM\n").find("missing column"), std::string::npos);
}

TEST(SubjectJson, RoundTripIncludesMm3) {
  auto a = sample_record();
  a.voxel_volume_mm3 = 0.512;
  const auto j = report::to_json(a);
  EXPECT_DOUBLE_EQ(j["vol_manual_mm3"].get<double>(), static_cast<double>(a.vox.manual) * 0.512);
  const auto back = report::subject_from_json(j);
  EXPECT_EQ(back.vox, a.vox);
  EXPECT_NEAR(back.voxel_volume_mm3, 0.512, 1e-15);
  EXPECT_EQ(back.dsc_num, a.dsc_num);
}

TEST(StatsCsv, TableShape) {
  stats::StatResult r;
  r.region = "BG";
  r.metric = "ppv_num";
  r.n = 40;
  r.median_a = 0.701;
  r.median_b = 0.743;
  r.median_diff = 0.013;
  r.p_fdr = 0.002;
  r.significant = true;
  r.rank_biserial = 0.5;
  const auto text = report::stats_csv(std::vector<stats::StatResult>{r});
  EXPECT_EQ(text, "region,metric,n,median_a,median_b,median_diff,p_fdr,sig,r\nBG,ppv_num,40,0.701,0.743,0.013,0.002,Yes,0.5\n");
  EXPECT_EQ(report::to_json(r)["p_raw"], nullptr);
}

TEST(FoldJson, RoundTrip) {
  std::vector<harness::SubjectRecord> m;
  for (int i = 0; i < 9; ++i) m.push_back({"s" + std::to_string(i), i % 2 ? "A" : "B", "p", "r", "", "", ""});
  const auto f = harness::make_folds(m, harness::Scheme::FiveFoldCV, 3);
  const auto back = report::folds_from_json(report::to_json(f));
  EXPECT_EQ(back.folds, f.folds);
  EXPECT_EQ(back.seed, 3u);
  ASSERT_EQ(back.assignments.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(back.assignments[i].fold, f.assignments[i].fold);
}

TEST(LosocvCsv, AverageOnFirstRowOfBlock) {
  harness::LosocvTable t;
  t.metric = "dsc_vox";
  t.sites = {"A", "B"};
  t.rows.push_back({"WM", "M", "LO A", std::nullopt, {harness::Cell{0.5, 0.1, 3}, std::nullopt}});
  t.rows.push_back({"WM", "M", "LO B", std::nullopt, {std::nullopt, harness::Cell{0.7, 0.05, 2}}});
  t.averages.push_back({"WM", "M", harness::Cell{0.58, 0.12, 5}});
  EXPECT_EQ(report::losocv_csv(t),
            "region,model,training,internal,A,B,average\n"
            "WM,M,LO A,-,0.50 (0.10),-,0.58 (0.12)\n"
            "WM,M,LO B,-,-,0.70 (0.05),\n");
}

TEST(Histogram, CsvAndJson) {
  const std::vector<std::size_t> s{1, 1, 2};
  const auto bins = size_histogram(s, false);
  EXPECT_EQ(report::histogram_csv(bins), "bin_lo,bin_hi,count,density\n1,2,2,0.6666666666666666\n2,3,1,0.3333333333333333\n");
  EXPECT_EQ(report::to_json(bins).size(), 2u);
}

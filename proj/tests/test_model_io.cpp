#include <algorithm>
#include <filesystem>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "fcm/bundled.hpp"
#include "fcm/model_io.hpp"
#include "fcm/report_io.hpp"

using namespace fcm;
namespace fs = std::filesystem;

namespace {

const std::string kData = std::string(FCM_SOURCE_DIR) + "/data";

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fcm-io-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Document, GoldenFilesMatchBundledModels) {
  for (const auto& [name, doc] : bundled_documents()) {
    const std::string path = kData + "/models/" + name + ".json";
    EXPECT_EQ(read_file(path), document_to_string(doc)) << path;
    EXPECT_EQ(load_document(path), doc) << path;
  }
}

TEST(Document, DolphinMatrixExact) {
  const FcmModel m = load_model(kData + "/models/dolphin.json");
  const std::vector<std::vector<double>> expected{
      {0, 1, 0, -1, 0}, {0, 0, 1, 0, -1}, {0, -1, 0, 1, -1}, {1, 0, -1, 0, 1}, {-1, 1, 0, -1, 0}};
  EXPECT_EQ(m.edges.rows(), expected);
  EXPECT_TRUE(m.all_hard_threshold());
}

TEST(Document, CanonicalRoundTripIsByteIdentical) {
  for (const auto& [name, doc] : bundled_documents()) {
    const std::string text = document_to_string(doc);
    EXPECT_EQ(document_to_string(parse_document(text)), text) << name;
  }
}

TEST(Document, RandomWeightsRoundTripExactly) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> w(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    FcmModel m = make_model({"a", "b", "c", "d"}, ActivationSpec::logistic(0.1 + trial));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m.edges.at(i, j) = w(rng);
    const ModelDocument doc{kFormatVersion, m, {}, {}};
    EXPECT_EQ(parse_document(document_to_string(doc)), doc);
  }
}

TEST(Document, SaveLoadThroughFiles) {
  const fs::path dir = scratch_dir("save");
  const FcmModel m = thucydides_model();
  save_model(m, (dir / "t.json").string());
  EXPECT_EQ(load_model((dir / "t.json").string()), m);
  FcmModel bad = m;
  bad.edges.at(0, 1) = 3.0;
  EXPECT_THROW(save_model(bad, (dir / "bad.json").string()), Error);
  EXPECT_FALSE(fs::exists(dir / "bad.json"));
}

TEST(Document, CanonicalLayout) {
  const std::string text = document_to_string(bundled_documents().at("dolphin"));
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find("\t"), std::string::npos);
  EXPECT_NE(text.find("      [0.0, 1.0, 0.0, -1.0, 0.0],\n"), std::string::npos);
  EXPECT_LT(text.find("\"clamp_presets\""), text.find("\"format_version\""));
  EXPECT_LT(text.find("\"format_version\""), text.find("\"model\""));
}

TEST(Document, OutOfRangeEdgeIsValidationError) {
  json j = document_to_json(bundled_documents().at("dolphin"));
  j["model"]["edges"][0][1] = 2.0;
  try {
    parse_document(j.dump());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    ASSERT_FALSE(e.details().empty());
    EXPECT_EQ(e.details().front(), "edge out of [-1,1] at (0,1)");
  }
}

TEST(Document, UnknownFieldsCarryPointer) {
  json j = document_to_json(bundled_documents().at("dolphin"));
  j["model"]["nodes"][2]["colour"] = "red";
  EXPECT_EQ(error_message([&] { parse_document(j.dump()); }), "unknown field at /model/nodes/2/colour");
  json top = document_to_json(bundled_documents().at("dolphin"));
  top["extra"] = 1;
  EXPECT_EQ(error_message([&] { parse_document(top.dump()); }), "unknown field at /extra");
}

TEST(Document, SyntaxErrorReportsLineAndColumn) {
  const std::string text = "{\n  \"format_version\": 1,\n  \"model\": {,\n}\n";
  const std::string msg = error_message([&] { parse_document(text); });
  EXPECT_EQ(msg.rfind("syntax error at line 3, column 13", 0), 0u) << msg;
}

TEST(Document, StructuralErrors) {
  json j = document_to_json(bundled_documents().at("dolphin"));
  j["model"]["edges"][1] = json::array({0, 1});
  EXPECT_NE(error_message([&] { parse_document(j.dump()); }).find("dimension mismatch"), std::string::npos);
  json v = document_to_json(bundled_documents().at("dolphin"));
  v["format_version"] = 2;
  EXPECT_NE(error_message([&] { parse_document(v.dump()); }).find("format_version"), std::string::npos);
  json a = document_to_json(bundled_documents().at("dolphin"));
  a["model"]["nodes"][0]["activation"]["kind"] = "tanh";
  EXPECT_NE(error_message([&] { parse_document(a.dump()); }).find("unsupported activation"), std::string::npos);
  json p = document_to_json(bundled_documents().at("dolphin"));
  p["clamp_presets"]["x"]["nobody"] = 1.0;
  EXPECT_NE(error_message([&] { parse_document(p.dump()); }).find("unknown node 'nobody'"), std::string::npos);
}

TEST(Document, MissingFileIsIoError) {
  try {
    load_document("/nonexistent/model.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(Bundled, ThucydidesSignsAgreeWithTable) {
  const FcmModel m = thucydides_model();
  EXPECT_TRUE(check_signs(m, thucydides_sign_table()).empty());
  EXPECT_GT(m.edges.at(m.index_of("WAR*"), m.index_of("WAR*")), 0.0);
  FcmModel broken = m;
  broken.edges.at(m.index_of("NUKE"), m.index_of("WAR*")) = 0.5;
  EXPECT_EQ(check_signs(broken, thucydides_sign_table()).size(), 1u);
}

TEST(Bundled, AllValid) {
  for (const auto& [name, doc] : bundled_documents()) EXPECT_TRUE(validate_document(doc).empty()) << name;
  const FcmModel psot = psot_model();
  EXPECT_EQ(psot.size(), 34u);
  for (double e : psot.edges.data()) EXPECT_TRUE(e == 0.0 || e == 1.0 || e == -1.0);
}

TEST(Csv, TrendsFile) {
  const TimeSeries ts = load_timeseries_csv(kData + "/series/trends.csv");
  EXPECT_EQ(ts.size(), 163u);
  EXPECT_EQ(ts.width(), 3u);
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = 1, hi = 0;
    for (const auto& s : ts.samples) {
      lo = std::min(lo, s.values[c]);
      hi = std::max(hi, s.values[c]);
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
    EXPECT_FALSE(ts.zero_range[c]);
    EXPECT_LT(ts.scale_min[c], ts.scale_max[c]);
  }
}

TEST(Csv, NormalizesAndFlagsConstantColumns) {
  const TimeSeries ts = parse_timeseries_csv("t,a,b\n0,10,7\n1,30,7\n2,20,7\n");
  EXPECT_EQ(ts.labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ts.at(1, 0), 1.0);
  EXPECT_EQ(ts.at(2, 0), 0.5);
  EXPECT_EQ(ts.at(2, 1), 0.0);
  EXPECT_TRUE(ts.zero_range[1]);
  EXPECT_FALSE(ts.zero_range[0]);
  EXPECT_EQ(ts.scale_min[0], 10.0);
  EXPECT_EQ(ts.scale_max[0], 30.0);
}

TEST(Csv, Errors) {
  EXPECT_EQ(error_message([] { parse_timeseries_csv("t,a,b\n0,1,2\n1,,3\n"); }), "row 3, column 2 (a): missing value");
  EXPECT_EQ(error_message([] { parse_timeseries_csv("t,a,b\n0,1,2\n1,2\n"); }), "row 3: expected 3 cells, found 2");
  EXPECT_EQ(error_message([] { parse_timeseries_csv("t,a\n0,1\n1,high\n"); }), "row 3, column 2 (a): non-numeric 'high'");
  EXPECT_NE(error_message([] { parse_timeseries_csv("t,a\n0.5,1\n"); }).find("row 2, column 1"), std::string::npos);
  EXPECT_NE(error_message([] { parse_timeseries_csv("t,a\n1,1\n1,2\n"); }).find("strictly increasing"), std::string::npos);
  EXPECT_THROW(parse_timeseries_csv(""), Error);
}

TEST(Reports, SweepExports) {
  const FcmModel m = dolphin_model();
  SweepConfig c = SweepConfig::all_inputs(m, m.index_of("flee"));
  c.input_nodes = {m.index_of("srv-threat"), m.index_of("tired")};
  const SweepReport r = run_sweep(m, c);
  const std::string csv = sweep_records_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "assignment,srv-threat,tired,kind,outcome");
  const json j = sweep_report_to_json(r);
  EXPECT_EQ(j["scenarios"], 4);
  EXPECT_TRUE(j["negative_profile"].contains("herd"));
  EXPECT_EQ(json::parse(canonical_dump(j)), j);
  const std::string profile = profile_table_csv(r);
  EXPECT_EQ(profile.substr(0, profile.find('\n')), "label,positive,negative");
}

TEST(Reports, MatrixAndLearningCsv) {
  EdgeMatrix e(2);
  e.at(0, 1) = 0.25;
  EXPECT_EQ(matrix_csv(e, {"a", "b"}), "from,a,b\na,0.0,0.25\nb,0.0,0.0\n");
}

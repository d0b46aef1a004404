#include <chrono>
#include <set>
#include <filesystem>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"

#include "fcm/bundled.hpp"
#include "fcm/report_io.hpp"
#include "fcm/service.hpp"

using namespace fcm;
namespace fs = std::filesystem;

namespace {

/// A live server on an ephemeral localhost port, torn down with the fixture.
class ServiceTest : public ::testing::Test {
 protected:
  void start(const std::string& model_dir = {}) {
    service_ = std::make_unique<Service>(model_dir);
    server_ = std::make_unique<httplib::Server>();
    service_->register_routes(*server_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void SetUp() override { start(); }

  void TearDown() override { stop(); }

  void stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    client_.reset();
    server_.reset();
    service_.reset();
  }

  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const json& body) { return post(path, body.dump()); }

  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

void expect_error_body(const json& j, const std::string& code) {
  EXPECT_EQ(j["code"], code);
  EXPECT_TRUE(j["message"].is_string());
  EXPECT_TRUE(j["details"].is_array());
}

}  // namespace

TEST(ContentId, StableFnvHex) {
  EXPECT_EQ(content_id(""), "cbf29ce484222325");
  EXPECT_EQ(content_id("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(content_id("abc").size(), 16u);
}

TEST_F(ServiceTest, ListsBundledModels) {
  auto [status, body] = get("/models");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body.size(), 3u);
  std::set<std::string> names;
  for (const auto& m : body) {
    names.insert(m["name"]);
    EXPECT_TRUE(m["bundled"].get<bool>());
    EXPECT_EQ(m["id"].get<std::string>().size(), 16u);
  }
  EXPECT_EQ(names, (std::set<std::string>{"dolphin", "thucydides-reference", "psot-signs"}));
}

TEST_F(ServiceTest, GetModelByNameAndId) {
  auto [s1, by_name] = get("/models/dolphin");
  EXPECT_EQ(s1, 200);
  auto [s2, by_id] = get("/models/" + by_name["id"].get<std::string>());
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(by_name, by_id);
  json doc = by_id;
  doc.erase("id");
  EXPECT_EQ(document_from_json(doc), bundled_documents().at("dolphin"));
  auto [s3, missing] = get("/models/nope");
  EXPECT_EQ(s3, 404);
  expect_error_body(missing, "not-found");
}

TEST_F(ServiceTest, UploadDedupesAndValidates) {
  ModelDocument doc;
  doc.model = make_model({"a", "b"});
  doc.model.edges.at(0, 1) = 0.5;
  doc.model.metadata.name = "pair";
  auto [s1, first] = post("/models", document_to_string(doc));
  EXPECT_EQ(s1, 201);
  auto [s2, second] = post("/models", document_to_json(doc).dump());
  EXPECT_EQ(s2, 201);
  EXPECT_EQ(first["id"], second["id"]);
  EXPECT_EQ(first["id"], content_id(document_to_string(doc)));
  EXPECT_EQ(get("/models").second.size(), 4u);

  doc.model.edges.at(0, 1) = 2.0;
  auto [s3, bad] = post("/models", document_to_string(doc));
  EXPECT_EQ(s3, 422);
  expect_error_body(bad, "validation");
  ASSERT_EQ(bad["details"].size(), 1u);
  EXPECT_EQ(bad["details"][0], "edge out of [-1,1] at (0,1)");

  auto [s4, syntax] = post("/models", std::string("{\n  \"model\": ]"));
  EXPECT_EQ(s4, 400);
  expect_error_body(syntax, "parse");
  EXPECT_NE(syntax["message"].get<std::string>().find("line 2"), std::string::npos);

  json unknown = document_to_json(bundled_documents().at("dolphin"));
  unknown["model"]["colour"] = 1;
  auto [s5, u] = post("/models", unknown);
  EXPECT_EQ(s5, 400);
  EXPECT_EQ(u["message"], "unknown field at /model/colour");
}

TEST_F(ServiceTest, StepMatchesLibrary) {
  const FcmModel m = dolphin_model();
  const StateVector s{{0, 0, 0, 1, 0}, 0};
  auto [status, body] = post("/models/dolphin/step", json{{"state", s.values}});
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["state"], state_to_json(step(m, s)));
  ClampSpec c;
  c.set(3, 1.0);
  auto [s2, clamped] = post("/models/dolphin/step", json{{"state", {0, 1, 0, 0, 0}}, {"clamps", {{"srv-threat", 1}}}});
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(clamped["state"], state_to_json(step(m, StateVector{{0, 1, 0, 0, 0}, 0}, c)));
  auto [s3, bad] = post("/models/dolphin/step", json{{"state", {0, 1}}});
  EXPECT_EQ(s3, 400);
  expect_error_body(bad, "dimension-mismatch");
  auto [s4, label] = post("/models/dolphin/step", json{{"state", {0, 0, 0, 0, 0}}, {"clamps", {{"orca", 1}}}});
  EXPECT_EQ(s4, 400);
}

TEST_F(ServiceTest, RunMatchesLibrary) {
  const ModelDocument doc = bundled_documents().at("dolphin");
  const StateVector init{doc.initial_states.at("shark-appears"), 0};
  auto [s1, free_run] = post("/models/dolphin/run", json{{"initial", "shark-appears"}});
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(free_run, equilibrium_to_json(run(doc.model, init)));
  EXPECT_EQ(free_run["kind"], "limit-cycle");
  EXPECT_EQ(free_run["cycle"].size(), 4u);

  auto [s2, preset] = post("/models/dolphin/run", json{{"initial", init.values}, {"preset", "shark-pursuit"}});
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(preset, equilibrium_to_json(run(doc.model, init, clamps_from_labels(doc.model, {{"srv-threat", 1.0}}))));
  EXPECT_EQ(preset["cycle"].size(), 3u);

  auto [s3, budget] = post("/models/dolphin/run", json{{"initial", init.values}, {"max_iters", 1}});
  EXPECT_EQ(s3, 200);
  EXPECT_EQ(budget["kind"], "not-converged");

  EXPECT_EQ(post("/models/dolphin/run", json{{"preset", "nope"}}).first, 400);
  EXPECT_EQ(post("/models/dolphin/run", json{{"bogus", 1}}).first, 400);
  EXPECT_EQ(post("/models/dolphin/run", std::string("{oops")).first, 400);
  EXPECT_EQ(get("/models").second.size(), 3u);
}

TEST_F(ServiceTest, InfluenceMatchesLibrary) {
  const FcmModel m = psot_model();
  auto [status, body] = get("/models/psot-signs/influence?from=lead&to=PSOT*");
  EXPECT_EQ(status, 200);
  const StateVector point = run(m, zero_state(m.size())).cycle.front();
  EXPECT_EQ(body, influence_to_json(m, total_influence(m, point, m.index_of("lead"), m.index_of("PSOT*"))));
  EXPECT_GT(body["paths"].size(), 0u);

  auto [s2, hard] = get("/models/dolphin/influence?from=herd&to=flee&state=0,0,0,1,0");
  EXPECT_EQ(s2, 422);
  expect_error_body(hard, "non-differentiable-activation");
  EXPECT_EQ(get("/models/dolphin/influence?from=herd").first, 400);
}

TEST_F(ServiceTest, CombineAndQuantize) {
  const std::string dolphin = get("/models/dolphin").second["id"];
  ModelDocument other;
  other.model = make_model({"herd", "flee"});
  other.model.edges.at(0, 1) = 0.6;
  other.model.metadata.name = "second";
  const std::string other_id = post("/models", document_to_string(other)).second["id"];

  auto [s1, combined] = post("/combine", json{{"models", {dolphin, other_id}}, {"weights", {0.75, 0.25}}});
  EXPECT_EQ(s1, 201);
  const json doc = get("/models/" + combined["id"].get<std::string>()).second;
  const FcmModel expected = combine({dolphin_model(), other.model}, FusionWeights{{0.75, 0.25}});
  EXPECT_EQ(model_from_json(doc["model"]), expected);

  auto [s2, bad] = post("/combine", json{{"models", {dolphin, other_id}}, {"weights", {0.5, 0.6}}});
  EXPECT_EQ(s2, 400);
  expect_error_body(bad, "invalid-argument");

  auto [s3, q] = post("/models/thucydides-reference/quantize", std::string());
  EXPECT_EQ(s3, 201);
  const json qdoc = get("/models/" + q["id"].get<std::string>()).second;
  EXPECT_EQ(qdoc["model"]["name"], "thucydides-reference-quantized");
  EXPECT_EQ(model_from_json(qdoc["model"]).edges, quantize(thucydides_model()).edges);
  EXPECT_EQ(post("/models/nope/quantize", std::string()).first, 404);
}

TEST_F(ServiceTest, SeriesUploadAndLearn) {
  const std::string csv = read_file(std::string(FCM_SOURCE_DIR) + "/data/series/trends.csv");
  auto [s1, series] = post("/series", csv);
  EXPECT_EQ(s1, 201);
  EXPECT_EQ(series["samples"], 163);
  EXPECT_EQ(series["labels"], json({"trade", "tariffs", "navy"}));

  ModelDocument doc;
  doc.model = make_model({"trade", "tariffs", "navy", "other"});
  doc.model.edges.at(0, 1) = 0.4;
  doc.model.metadata.name = "trend-map";
  post("/models", document_to_string(doc));

  json cfg{{"law", "discrete-dhl"}, {"mu", 0.2}, {"tracked", json::array({json::array({"trade", "tariffs"})})}};
  auto [s2, learned] = post("/models/trend-map/learn", json{{"series", series["id"]}, {"config", cfg}, {"init", "model"}});
  EXPECT_EQ(s2, 200);
  LearningConfig lc;
  lc.mu = 0.2;
  lc.tracked = {{0, 1}};
  EdgeMatrix init(3);
  init.at(0, 1) = 0.4;
  const TimeSeries ts = parse_timeseries_csv(csv);
  const LearningResult lib = learn_edges(ts, lc, init);
  EXPECT_EQ(learned["edges"], matrix_to_json(lib.edges));
  EXPECT_EQ(learned["trace"].size(), 163u);
  ASSERT_EQ(learned["overlay"].size(), 6u);
  EXPECT_EQ(learned["overlay"][0]["from"], "trade");
  EXPECT_EQ(learned["overlay"][0]["to"], "tariffs");
  EXPECT_EQ(learned["overlay"][0]["current"], 0.4);

  EXPECT_EQ(post("/models/trend-map/learn", json{{"series", "missing"}}).first, 404);
  EXPECT_EQ(post("/models/dolphin/learn", json{{"series", series["id"]}}).first, 400);
  auto [s3, bad_csv] = post("/series", std::string("t,a\n0,1\n1,\n"));
  EXPECT_EQ(s3, 400);
  EXPECT_EQ(bad_csv["message"], "row 3, column 2 (a): missing value");
}

TEST_F(ServiceTest, SweepJobRunsToCompletion) {
  json body{{"outcome_node", "WAR*"},
            {"input_nodes", {"usd", "chnecon", "uspub", "econdep", "NUKE", "dipl", "ShrdCult", "geod"}},
            {"quantize_compare", true},
            {"jobs", 2}};
  auto [s1, started] = post("/models/thucydides-reference/sweep", body);
  ASSERT_EQ(s1, 202);
  const std::string job = started["job"];
  json status;
  for (int i = 0; i < 500; ++i) {
    status = get("/jobs/" + job).second;
    if (status["status"] != "running") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_EQ(status["status"], "done");
  EXPECT_EQ(status["total"], 512);
  EXPECT_EQ(status["done"], 512);

  const FcmModel m = thucydides_model();
  SweepConfig c = SweepConfig::all_inputs(m, m.index_of("WAR*"));
  c.input_nodes.clear();
  for (const auto& l : body["input_nodes"]) c.input_nodes.push_back(m.index_of(l.get<std::string>()));
  EXPECT_EQ(status["result"], quantized_comparison_to_json(compare_quantized(m, c)));

  EXPECT_EQ(get("/jobs/none").first, 404);
  EXPECT_EQ(post("/models/thucydides-reference/sweep", json::object()).first, 400);
  auto [s2, too_many] = post("/models/psot-signs/sweep", json{{"outcome_node", "PSOT*"}});
  EXPECT_EQ(s2, 400);
  expect_error_body(too_many, "invalid-argument");
}

TEST_F(ServiceTest, DirectoryPersistence) {
  const fs::path dir = fs::temp_directory_path() / "fcm-service-models";
  fs::remove_all(dir);
  stop();
  start(dir.string());
  ModelDocument doc;
  doc.model = make_model({"x", "y"});
  doc.model.edges.at(1, 0) = -0.25;
  doc.model.metadata.name = "persisted";
  const std::string id = post("/models", document_to_string(doc)).second["id"];
  EXPECT_TRUE(fs::exists(dir / (id + ".json")));
  EXPECT_EQ(read_file((dir / (id + ".json")).string()), document_to_string(doc));
  std::size_t files = std::distance(fs::directory_iterator(dir), fs::directory_iterator{});
  EXPECT_EQ(files, 1u);

  stop();
  start(dir.string());
  auto [status, body] = get("/models/persisted");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["id"], id);
  EXPECT_EQ(get("/models").second.size(), 4u);
  files = std::distance(fs::directory_iterator(dir), fs::directory_iterator{});
  EXPECT_EQ(files, 1u);
}

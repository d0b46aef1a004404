#ifndef FCM_SERVICE_HPP
#define FCM_SERVICE_HPP

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "fcm/bundled.hpp"
#include "fcm/fusion.hpp"
#include "fcm/inference.hpp"
#include "fcm/influence.hpp"
#include "fcm/learning.hpp"
#include "fcm/model_io.hpp"
#include "fcm/report_io.hpp"
#include "fcm/sweep.hpp"

namespace fcm {

/// 64-bit FNV-1a over the canonical document text, as 16 hex digits.
inline std::string content_id(const std::string& canonical_text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegisteredModel {
  std::string id;
  ModelDocument document;
  bool bundled = false;
};

struct SweepJob {
  std::string id;
  std::string model_id;
  std::size_t total = 0;
  std::shared_ptr<std::atomic<std::size_t>> done = std::make_shared<std::atomic<std::size_t>>(0);
  std::string status = "running";  // running | done | failed
  json result;
  json error;
};

/// Model registry, series uploads and sweep jobs behind the HTTP routes.
/// Every handler calls the same library functions the CLI uses.
class Service {
 public:
  explicit Service(std::string model_dir = {}) : model_dir_(std::move(model_dir)) {
    for (auto& [name, doc] : bundled_documents()) add_model(std::move(doc), true, false);
    if (!model_dir_.empty()) load_directory();
  }

  ~Service() {
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(jobs_mutex_);
      workers.swap(workers_);
    }
    for (auto& t : workers)
      if (t.joinable()) t.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers a validated document; identical content returns the existing id.
  std::string add_model(ModelDocument doc, bool bundled = false, bool persist = true) {
    auto violations = validate_document(doc);
    if (!violations.empty()) throw Error(ErrorKind::validation, "model failed validation", violations);
    const std::string text = document_to_string(doc);
    const std::string id = content_id(text);
    bool fresh = false;
    {
      std::lock_guard<std::mutex> lock(models_mutex_);
      if (!models_.count(id)) {
        models_.emplace(id, RegisteredModel{id, std::move(doc), bundled});
        order_.push_back(id);
        fresh = true;
      }
    }
    if (fresh && persist && !bundled && !model_dir_.empty()) write_file((std::filesystem::path(model_dir_) / (id + ".json")).string(), text);
    return id;
  }

  /// Looks up by content id, then by unique model name.
  RegisteredModel get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(models_mutex_);
    if (auto it = models_.find(key); it != models_.end()) return it->second;
    const RegisteredModel* hit = nullptr;
    for (const auto& id : order_) {
      const auto& r = models_.at(id);
      if (r.document.model.metadata.name == key) {
        if (hit) throw Error(ErrorKind::invalid_argument, "model name '" + key + "' is ambiguous; use the id");
        hit = &r;
      }
    }
    if (!hit) throw NotFound("no model '" + key + "'");
    return *hit;
  }

  json list_models() const {
    std::lock_guard<std::mutex> lock(models_mutex_);
    json out = json::array();
    for (const auto& id : order_) {
      const auto& r = models_.at(id);
      out.push_back(json{{"id", id},
                         {"name", r.document.model.metadata.name},
                         {"nodes", r.document.model.size()},
                         {"bundled", r.bundled}});
    }
    return out;
  }

  std::string add_series(const std::string& csv) {
    TimeSeries ts = parse_timeseries_csv(csv);
    const std::string id = content_id(csv);
    std::lock_guard<std::mutex> lock(models_mutex_);
    series_.emplace(id, std::move(ts));
    return id;
  }

  TimeSeries get_series(const std::string& id) const {
    std::lock_guard<std::mutex> lock(models_mutex_);
    auto it = series_.find(id);
    if (it == series_.end()) throw NotFound("no series '" + id + "'");
    return it->second;
  }

  // ---- engine calls ------------------------------------------------------

  json step_request(const std::string& key, const json& body) const {
    const FcmModel model = get(key).document.model;
    detail::reject_unknown(body, {"state", "clamps"}, "");
    const StateVector state = state_from(model, require(body, "state"));
    const ClampSpec clamps = clamps_from(model, body.value("clamps", json::object()));
    return json{{"state", state_to_json(step(model, state, clamps))}};
  }

  json run_request(const std::string& key, const json& body) const {
    const RegisteredModel r = get(key);
    detail::reject_unknown(body, {"initial", "preset", "clamps", "max_iters"}, "");
    const FcmModel& model = r.document.model;
    StateVector initial = zero_state(model.size());
    if (body.contains("initial")) {
      const json& init = body["initial"];
      if (init.is_string()) {
        auto it = r.document.initial_states.find(init.get<std::string>());
        if (it == r.document.initial_states.end())
          throw Error(ErrorKind::invalid_argument, "unknown initial state '" + init.get<std::string>() + "'");
        initial = StateVector{it->second, 0};
      } else {
        initial = state_from(model, init);
      }
    }
    ClampSpec clamps;
    if (body.contains("preset")) {
      const std::string name = detail::as_string(body["preset"], "/preset");
      auto it = r.document.clamp_presets.find(name);
      if (it == r.document.clamp_presets.end()) throw Error(ErrorKind::invalid_argument, "unknown clamp preset '" + name + "'");
      clamps = clamps_from_labels(model, it->second);
    }
    for (const auto& [id, v] : clamps_from(model, body.value("clamps", json::object())).entries) clamps.set(id, v);
    const int max_iters = body.contains("max_iters") ? body["max_iters"].get<int>() : kDefaultMaxIters;
    return equilibrium_to_json(run(model, initial, clamps, max_iters));
  }

  json influence_request(const std::string& key, const std::string& from, const std::string& to,
                         const std::string& state_spec, std::size_t max_paths) const {
    const RegisteredModel r = get(key);
    const FcmModel& model = r.document.model;
    const NodeId a = model.index_of(from), b = model.index_of(to);
    const StateVector state = operating_point(r, state_spec);
    return influence_to_json(model, total_influence(model, state, a, b, max_paths));
  }

  std::string combine_request(const json& body) {
    detail::reject_unknown(body, {"models", "weights"}, "");
    const json& ids = require(body, "models");
    if (!ids.is_array() || ids.empty()) throw Error(ErrorKind::invalid_argument, "models must be a non-empty array of ids");
    std::vector<FcmModel> models;
    for (const auto& id : ids) models.push_back(get(detail::as_string(id, "/models")).document.model);
    FusionWeights w = FusionWeights::equal(models.size());
    if (body.contains("weights")) w.w = body["weights"].get<std::vector<double>>();
    return add_model(ModelDocument{kFormatVersion, combine(models, w), {}, {}});
  }

  std::string quantize_request(const std::string& key) {
    FcmModel q = quantize(get(key).document.model);
    q.metadata.name += "-quantized";
    return add_model(ModelDocument{kFormatVersion, q, {}, {}});
  }

  json learn_request(const std::string& key, const json& body) const {
    const FcmModel model = get(key).document.model;
    detail::reject_unknown(body, {"series", "csv", "config", "init"}, "");
    TimeSeries ts;
    if (body.contains("series"))
      ts = get_series(detail::as_string(body["series"], "/series"));
    else if (body.contains("csv"))
      ts = parse_timeseries_csv(detail::as_string(body["csv"], "/csv"));
    else
      throw Error(ErrorKind::invalid_argument, "learn needs a series id or inline csv");
    std::vector<NodeId> map;
    for (const auto& label : ts.labels) map.push_back(model.index_of(label));

    const json cfg_json = body.value("config", json::object());
    detail::reject_unknown(cfg_json, {"law", "mu", "h", "iterations", "learn_diagonal", "tracked"}, "/config");
    LearningConfig cfg;
    if (cfg_json.contains("law")) cfg.law = parse_learning_law(cfg_json["law"].get<std::string>());
    cfg.mu = cfg_json.value("mu", cfg.mu);
    cfg.h = cfg_json.value("h", cfg.h);
    cfg.iterations = cfg_json.value("iterations", cfg.iterations);
    cfg.learn_diagonal = cfg_json.value("learn_diagonal", cfg.learn_diagonal);
    if (cfg_json.contains("tracked")) {
      for (const auto& pair : cfg_json["tracked"]) {
        if (!pair.is_array() || pair.size() != 2) throw Error(ErrorKind::invalid_argument, "tracked entries are [from, to] label pairs");
        cfg.tracked.emplace_back(series_index(ts, pair[0].get<std::string>()), series_index(ts, pair[1].get<std::string>()));
      }
    }
    EdgeMatrix init(ts.width());
    const std::string init_mode = body.value("init", std::string("zero"));
    if (init_mode == "model") {
      for (std::size_t i = 0; i < map.size(); ++i)
        for (std::size_t j = 0; j < map.size(); ++j) init.at(i, j) = model.edges.at(map[i], map[j]);
    } else if (init_mode != "zero") {
      throw Error(ErrorKind::invalid_argument, "init must be 'zero' or 'model'");
    }
    const LearningResult result = learn_edges(ts, cfg, init);
    json out = learning_to_json(result, ts.labels);
    json overlay = json::array();
    for (std::size_t i = 0; i < map.size(); ++i)
      for (std::size_t j = 0; j < map.size(); ++j)
        if (i != j || cfg.learn_diagonal)
          overlay.push_back(json{{"from", ts.labels[i]},
                                 {"to", ts.labels[j]},
                                 {"learned", result.edges.at(i, j)},
                                 {"current", model.edges.at(map[i], map[j])}});
    out["overlay"] = overlay;
    return out;
  }

  /// Starts an asynchronous sweep and returns the job id.
  std::string start_sweep(const std::string& key, const json& body) {
    const RegisteredModel r = get(key);
    const FcmModel model = r.document.model;
    const SweepConfig config = sweep_config_from(model, body);
    const bool compare = body.value("quantize_compare", false);
    const unsigned jobs = body.value("jobs", 1u);
    config.check(model);
    require_valid(model);

    auto job = std::make_shared<SweepJob>();
    job->model_id = r.id;
    job->total = static_cast<std::size_t>(config.scenario_count()) * (compare ? 2 : 1);
    std::lock_guard<std::mutex> lock(jobs_mutex_);
    job->id = "job-" + std::to_string(++job_counter_);
    jobs_.emplace(job->id, job);
    workers_.emplace_back([this, job, model, config, compare, jobs] {
      json result;
      json error;
      try {
        if (compare)
          result = quantized_comparison_to_json(compare_quantized(model, config, jobs, job->done.get()));
        else
          result = sweep_report_to_json(run_sweep(model, config, jobs, job->done.get()));
      } catch (const std::exception& e) {
        error = json{{"code", "internal"}, {"message", e.what()}, {"details", json::array()}};
      }
      std::lock_guard<std::mutex> guard(jobs_mutex_);
      if (error.is_null()) {
        job->result = std::move(result);
        job->status = "done";
      } else {
        job->error = std::move(error);
        job->status = "failed";
      }
    });
    return job->id;
  }

  json job_status(const std::string& id) const {
    std::lock_guard<std::mutex> lock(jobs_mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFound("no job '" + id + "'");
    const SweepJob& job = *it->second;
    json out{{"id", job.id},
             {"model", job.model_id},
             {"status", job.status},
             {"done", job.done->load()},
             {"total", job.total}};
    if (job.status == "done") out["result"] = job.result;
    if (job.status == "failed") out["error"] = job.error;
    return out;
  }

  // ---- HTTP --------------------------------------------------------------

  void register_routes(httplib::Server& server) {
    server.Get("/models", [this](const httplib::Request&, httplib::Response& res) {
      handle(res, [&] { reply(res, 200, list_models()); });
    });
    server.Post("/models", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const std::string id = add_model(parse_document_unvalidated(req.body));
        reply(res, 201, json{{"id", id}});
      });
    });
    server.Get("/models/:id", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const RegisteredModel r = get(req.path_params.at("id"));
        json doc = document_to_json(r.document);
        doc["id"] = r.id;
        reply(res, 200, doc);
      });
    });
    server.Post("/models/:id/step", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 200, step_request(req.path_params.at("id"), body_json(req))); });
    });
    server.Post("/models/:id/run", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 200, run_request(req.path_params.at("id"), body_json(req))); });
    });
    server.Post("/models/:id/sweep", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 202, json{{"job", start_sweep(req.path_params.at("id"), body_json(req))}}); });
    });
    server.Get("/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 200, job_status(req.path_params.at("id"))); });
    });
    server.Post("/combine", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 201, json{{"id", combine_request(body_json(req))}}); });
    });
    server.Post("/models/:id/quantize", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 201, json{{"id", quantize_request(req.path_params.at("id"))}}); });
    });
    server.Get("/models/:id/influence", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        if (!req.has_param("from") || !req.has_param("to"))
          throw Error(ErrorKind::invalid_argument, "influence needs 'from' and 'to' query parameters");
        const std::string state = req.has_param("state") ? req.get_param_value("state") : "equilibrium";
        const std::size_t max_paths =
            req.has_param("max_paths") ? std::stoul(req.get_param_value("max_paths")) : kDefaultMaxPaths;
        reply(res, 200, influence_request(req.path_params.at("id"), req.get_param_value("from"),
                                          req.get_param_value("to"), state, max_paths));
      });
    });
    server.Post("/series", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const std::string id = add_series(req.body);
        const TimeSeries ts = get_series(id);
        reply(res, 201, json{{"id", id}, {"labels", ts.labels}, {"samples", ts.size()}, {"zero_range", ts.zero_range}});
      });
    });
    server.Post("/models/:id/learn", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { reply(res, 200, learn_request(req.path_params.at("id"), body_json(req))); });
    });
  }

  static json error_body(const std::string& code, const std::string& message, const std::vector<std::string>& details = {}) {
    return json{{"code", code}, {"message", message}, {"details", details}};
  }

 private:
  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  static void handle(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const NotFound& e) {
      reply(res, 404, error_body("not-found", e.what()));
    } catch (const Error& e) {
      int status = 400;
      if (e.kind() == ErrorKind::validation || e.kind() == ErrorKind::non_differentiable) status = 422;
      if (e.kind() == ErrorKind::io) status = 500;
      reply(res, status, error_body(to_string(e.kind()), e.what(), e.details()));
    } catch (const json::exception& e) {
      reply(res, 400, error_body("parse", e.what()));
    } catch (const std::exception& e) {
      reply(res, 400, error_body("invalid-argument", e.what()));
    }
  }

  static json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      auto [line, col] = detail::line_column(req.body, e.byte);
      throw Error(ErrorKind::parse, "request body syntax error at line " + std::to_string(line) + ", column " +
                                        std::to_string(col));
    }
  }

  static ModelDocument parse_document_unvalidated(const std::string& text) {
    try {
      return document_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      auto [line, col] = detail::line_column(text, e.byte);
      throw Error(ErrorKind::parse, "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col));
    }
  }

  static const json& require(const json& body, const char* key) { return detail::require_field(body, key, ""); }

  static StateVector state_from(const FcmModel& model, const json& j) {
    if (!j.is_array()) throw Error(ErrorKind::invalid_argument, "state must be an array of numbers");
    StateVector s{j.get<std::vector<double>>(), 0};
    if (s.size() != model.size())
      throw Error(ErrorKind::dimension_mismatch, "state has " + std::to_string(s.size()) + " entries for " +
                                                     std::to_string(model.size()) + " nodes");
    return s;
  }

  static ClampSpec clamps_from(const FcmModel& model, const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "clamps must map labels to values");
    std::map<std::string, double> by_label;
    for (auto it = j.begin(); it != j.end(); ++it) by_label[it.key()] = detail::as_number(it.value(), "/clamps/" + it.key());
    return clamps_from_labels(model, by_label);
  }

  static NodeId series_index(const TimeSeries& ts, const std::string& label) {
    for (std::size_t i = 0; i < ts.labels.size(); ++i)
      if (ts.labels[i] == label) return i;
    throw Error(ErrorKind::invalid_argument, "series has no column '" + label + "'");
  }

  /// "equilibrium" (first attractor state from all zeros), "preset:NAME"
  /// (attractor under a clamp preset), or comma-separated values.
  static StateVector operating_point(const RegisteredModel& r, const std::string& spec) {
    const FcmModel& model = r.document.model;
    if (spec == "equilibrium" || spec.rfind("preset:", 0) == 0) {
      ClampSpec clamps;
      if (spec != "equilibrium") {
        auto it = r.document.clamp_presets.find(spec.substr(7));
        if (it == r.document.clamp_presets.end()) throw Error(ErrorKind::invalid_argument, "unknown clamp preset '" + spec.substr(7) + "'");
        clamps = clamps_from_labels(model, it->second);
      }
      EquilibriumResult eq = run(model, zero_state(model.size()), clamps);
      if (!eq.converged()) throw Error(ErrorKind::invalid_argument, "no equilibrium within the iteration limit");
      return eq.cycle.front();
    }
    std::vector<double> values;
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (!detail::parse_double(cell, v)) throw Error(ErrorKind::invalid_argument, "state value '" + cell + "' is not a number");
      values.push_back(v);
    }
    if (values.size() != model.size()) throw Error(ErrorKind::dimension_mismatch, "state does not match the model");
    return StateVector{values, 0};
  }

  static SweepConfig sweep_config_from(const FcmModel& model, const json& body) {
    detail::reject_unknown(body, {"input_nodes", "outcome_node", "clamp_mode", "outcome_rule", "max_iters",
                                  "quantize_compare", "jobs"},
                           "");
    const NodeId outcome = model.index_of(detail::as_string(require(body, "outcome_node"), "/outcome_node"));
    SweepConfig c = SweepConfig::all_inputs(model, outcome);
    if (body.contains("input_nodes")) {
      c.input_nodes.clear();
      for (const auto& l : body["input_nodes"]) c.input_nodes.push_back(model.index_of(detail::as_string(l, "/input_nodes")));
    }
    if (body.contains("clamp_mode")) c.clamp_mode = parse_clamp_mode(body["clamp_mode"].get<std::string>());
    if (body.contains("outcome_rule")) c.outcome_rule = parse_outcome_rule(body["outcome_rule"].get<std::string>());
    if (body.contains("max_iters")) c.max_iters = body["max_iters"].get<int>();
    return c;
  }

  void load_directory() {
    namespace fs = std::filesystem;
    fs::create_directories(model_dir_);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(model_dir_))
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) add_model(load_document(p.string()), false, false);
  }

  std::string model_dir_;
  mutable std::mutex models_mutex_;
  std::map<std::string, RegisteredModel> models_;
  std::vector<std::string> order_;
  std::map<std::string, TimeSeries> series_;

  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<SweepJob>> jobs_;
  std::vector<std::thread> workers_;
  std::size_t job_counter_ = 0;
};

/// Blocks serving on host:port until the server is stopped.
inline bool serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.register_routes(server);
  return server.listen(host, port);
}

}  // namespace fcm

#endif  // FCM_SERVICE_HPP

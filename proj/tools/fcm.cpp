#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fcm/bundled.hpp"
#include "fcm/fusion.hpp"
#include "fcm/inference.hpp"
#include "fcm/influence.hpp"
#include "fcm/learning.hpp"
#include "fcm/model_io.hpp"
#include "fcm/report_io.hpp"
#include "fcm/service.hpp"
#include "fcm/sweep.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fcm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNotConverged = 4;
constexpr int kExitIo = 5;

/// A usage mistake detected after flag parsing (bad label, bad value list).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(s);
  while (std::getline(ss, cell, sep))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  for (const auto& cell : split(s, ',')) {
    double v = 0.0;
    if (!detail::parse_double(cell, v)) throw UsageError("'" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

/// Resolves --model: an existing file, a bundled model name, or a file in
/// one of the FCM_MODEL_PATH directories (with or without ".json").
ModelDocument resolve_model(const std::string& ref) {
  if (fs::is_regular_file(ref)) return load_document(ref);
  auto bundled = bundled_documents();
  if (auto it = bundled.find(ref); it != bundled.end()) return it->second;
  if (const char* path = std::getenv("FCM_MODEL_PATH")) {
    for (const auto& dir : split(path, ':')) {
      for (const std::string& name : {ref, ref + ".json"}) {
        const fs::path candidate = fs::path(dir) / name;
        if (fs::is_regular_file(candidate)) return load_document(candidate.string());
      }
    }
  }
  throw Error(ErrorKind::io, "model '" + ref + "' not found (not a file, bundled name, or entry on FCM_MODEL_PATH)");
}

NodeId label_id(const FcmModel& model, const std::string& label) {
  for (const auto& n : model.nodes)
    if (n.label == label) return n.id;
  throw UsageError("unknown node label '" + label + "'");
}

ClampSpec parse_clamps(const FcmModel& model, const std::vector<std::string>& specs) {
  ClampSpec clamps;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("clamp '" + spec + "' is not label=value");
    double v = 0.0;
    if (!detail::parse_double(spec.substr(eq + 1), v)) throw UsageError("clamp value in '" + spec + "' is not a number");
    clamps.set(label_id(model, spec.substr(0, eq)), v);
  }
  return clamps;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

void print_state_row(std::ostream& os, std::size_t t, const char* phase, const StateVector& s) {
  os << t << "\t" << phase;
  for (double v : s.values) os << "\t" << num(v);
  os << "\n";
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  std::string model;
  std::string init;
  std::string preset;
  std::vector<std::string> clamps;
  int max_iters = kDefaultMaxIters;
  std::string format = "trace";
};

int cmd_run(const RunArgs& a) {
  const ModelDocument doc = resolve_model(a.model);
  const FcmModel& model = doc.model;
  StateVector initial = zero_state(model.size());
  if (!a.init.empty()) {
    if (auto it = doc.initial_states.find(a.init); it != doc.initial_states.end())
      initial = StateVector{it->second, 0};
    else
      initial = StateVector{parse_values(a.init), 0};
    if (initial.size() != model.size())
      throw UsageError("--init has " + std::to_string(initial.size()) + " values for " + std::to_string(model.size()) + " nodes");
  }
  ClampSpec clamps;
  if (!a.preset.empty()) {
    auto it = doc.clamp_presets.find(a.preset);
    if (it == doc.clamp_presets.end()) throw UsageError("unknown preset '" + a.preset + "'");
    clamps = clamps_from_labels(model, it->second);
  }
  for (const auto& [id, v] : parse_clamps(model, a.clamps).entries) clamps.set(id, v);

  const EquilibriumResult eq = run(model, initial, clamps, a.max_iters);
  if (a.format == "json") {
    std::cout << canonical_dump(equilibrium_to_json(eq));
  } else {
    if (a.format == "trace") {
      std::cout << "t\tphase";
      for (const auto& n : model.nodes) std::cout << "\t" << n.label;
      std::cout << "\n";
      std::size_t t = 0;
      for (const auto& s : eq.transient) print_state_row(std::cout, t++, "transient", s);
      for (const auto& s : eq.cycle) print_state_row(std::cout, t++, "cycle", s);
    }
    std::cout << "kind: " << to_string(eq.kind) << "\n";
    std::cout << "transient_length: " << eq.transient.size() << "\n";
    std::cout << "cycle_length: " << eq.cycle.size() << "\n";
    std::cout << "iterations_used: " << eq.iterations_used << "\n";
    if (a.format == "summary") {
      for (const auto& s : eq.cycle) {
        std::cout << "cycle:";
        for (std::size_t i = 0; i < s.size(); ++i) std::cout << " " << model.nodes[i].label << "=" << num(s.values[i]);
        std::cout << "\n";
      }
    }
  }
  return eq.converged() ? kExitOk : kExitNotConverged;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string model;
  std::string inputs;
  std::string outcome = "WAR*";
  std::string mode = "on-off";
  std::string rule = "any";
  int max_iters = kDefaultMaxIters;
  unsigned jobs = 1;
  bool quantize_compare = false;
  std::string out_dir;
  std::string format = "text";
};

void print_sweep(std::ostream& os, const char* title, const SweepReport& r) {
  os << title << ": scenarios=" << r.scenarios << " positive=" << r.outcome_positive_count
     << " negative=" << r.outcome_negative_count << " not_converged=" << r.not_converged_count << "\n";
  char line[128];
  std::snprintf(line, sizeof line, "%s: outcome_fraction=%.4f negative_fraction=%.4f\n", title, r.outcome_fraction,
                r.negative_fraction);
  os << line;
  os << title << ": negative-class profile (label, mean activation)\n";
  for (const auto& [label, v] : ranked_profile(r, Outcome::negative)) {
    std::snprintf(line, sizeof line, "  %-10s %.4f\n", label.c_str(), v);
    os << line;
  }
}

void export_sweep(const std::string& dir, const std::string& prefix, const SweepReport& r) {
  fs::create_directories(dir);
  write_file((fs::path(dir) / (prefix + "report.json")).string(), canonical_dump(sweep_report_to_json(r)));
  write_file((fs::path(dir) / (prefix + "scenarios.csv")).string(), sweep_records_csv(r));
  write_file((fs::path(dir) / (prefix + "profile.csv")).string(), profile_table_csv(r));
}

int cmd_sweep(const SweepArgs& a) {
  const FcmModel model = resolve_model(a.model).model;
  SweepConfig config = SweepConfig::all_inputs(model, label_id(model, a.outcome));
  if (!a.inputs.empty()) {
    config.input_nodes.clear();
    for (const auto& l : split(a.inputs, ',')) config.input_nodes.push_back(label_id(model, l));
  }
  config.clamp_mode = parse_clamp_mode(a.mode);
  config.outcome_rule = parse_outcome_rule(a.rule);
  config.max_iters = a.max_iters;
  if (config.input_nodes.size() > kMaxSweepInputs)
    throw UsageError("refusing to sweep " + std::to_string(config.input_nodes.size()) + " inputs; the limit is " +
                     std::to_string(kMaxSweepInputs));

  if (a.quantize_compare) {
    const QuantizedComparison q = compare_quantized(model, config, a.jobs);
    if (a.format == "json") {
      std::cout << canonical_dump(quantized_comparison_to_json(q));
    } else {
      print_sweep(std::cout, "original", q.original);
      print_sweep(std::cout, "quantized", q.quantized);
      std::cout << "agreement_rate: " << num(q.agreement_rate) << "\n";
    }
    if (!a.out_dir.empty()) {
      export_sweep(a.out_dir, "", q.original);
      export_sweep(a.out_dir, "quantized-", q.quantized);
      write_file((fs::path(a.out_dir) / "comparison.json").string(), canonical_dump(quantized_comparison_to_json(q)));
    }
  } else {
    const SweepReport r = run_sweep(model, config, a.jobs);
    if (a.format == "json")
      std::cout << canonical_dump(sweep_report_to_json(r));
    else
      print_sweep(std::cout, "original", r);
    if (!a.out_dir.empty()) export_sweep(a.out_dir, "", r);
  }
  return kExitOk;
}

// ---- combine / stats / quantize / disconcept -------------------------------

int cmd_combine(const std::string& weights, const std::vector<std::string>& refs, const std::string& out,
                const std::string& name) {
  std::vector<FcmModel> models;
  for (const auto& r : refs) models.push_back(resolve_model(r).model);
  FusionWeights w = FusionWeights::equal(models.size());
  if (!weights.empty()) w.w = parse_values(weights);
  FcmModel fused = combine(models, w);
  if (!name.empty()) fused.metadata.name = name;
  write_output(out, document_to_string(ModelDocument{kFormatVersion, fused, {}, {}}));
  return kExitOk;
}

int cmd_stats(const std::string& dir, const std::string& out) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::io, "no .json models in '" + dir + "'");
  std::vector<FcmModel> models;
  for (const auto& f : files) models.push_back(load_model(f.string()));
  const AlignedModels aligned = align(models);
  EdgeStats stats(aligned.nodes.size());
  for (const auto& e : aligned.edges) stats = update_stats(stats, e);
  json j = edge_stats_to_json(stats);
  json labels = json::array();
  for (const auto& n : aligned.nodes) labels.push_back(n.label);
  j["labels"] = labels;
  write_output(out, canonical_dump(j));
  return kExitOk;
}

int cmd_transform(const std::string& ref, const std::string& out, bool disconcept) {
  FcmModel m = resolve_model(ref).model;
  FcmModel t = disconcept ? disconcept_transform(m) : quantize(m);
  if (!disconcept) t.metadata.name += "-quantized";
  write_output(out, document_to_string(ModelDocument{kFormatVersion, t, {}, {}}));
  return kExitOk;
}

// ---- learn ----------------------------------------------------------------

struct LearnArgs {
  std::string series;
  std::string law = "discrete-dhl";
  double mu = 0.1;
  double h = 0.1;
  int iterations = 1;
  std::string edges = "all";
  std::string out;
  std::string trace_out;
};

int cmd_learn(const LearnArgs& a) {
  const TimeSeries ts = load_timeseries_csv(a.series);
  LearningConfig cfg;
  cfg.law = parse_learning_law(a.law);
  cfg.mu = a.mu;
  cfg.h = a.h;
  cfg.iterations = a.iterations;
  auto index = [&](const std::string& label) -> NodeId {
    for (std::size_t i = 0; i < ts.labels.size(); ++i)
      if (ts.labels[i] == label) return i;
    throw UsageError("series has no column '" + label + "'");
  };
  if (a.edges == "all") {
    for (std::size_t i = 0; i < ts.width(); ++i)
      for (std::size_t j = 0; j < ts.width(); ++j)
        if (i != j) cfg.tracked.emplace_back(i, j);
  } else {
    for (const auto& pair : split(a.edges, ';')) {
      const auto parts = split(pair, ',');
      if (parts.size() != 2) throw UsageError("edge '" + pair + "' is not from,to");
      cfg.tracked.emplace_back(index(parts[0]), index(parts[1]));
    }
  }
  const LearningResult r = learn_edges(ts, cfg, EdgeMatrix(ts.width()));
  write_output(a.out, matrix_csv(r.edges, ts.labels));
  if (!a.trace_out.empty()) write_file(a.trace_out, learning_trace_csv(r, ts.labels));
  return kExitOk;
}

// ---- influence --------------------------------------------------------------

int cmd_influence(const std::string& ref, const std::string& from, const std::string& to, const std::string& state_spec,
                  std::size_t max_paths, const std::string& format) {
  const ModelDocument doc = resolve_model(ref);
  const FcmModel& model = doc.model;
  const NodeId a = label_id(model, from), b = label_id(model, to);
  StateVector state;
  if (state_spec == "equilibrium" || state_spec.rfind("preset:", 0) == 0) {
    ClampSpec clamps;
    if (state_spec != "equilibrium") {
      auto it = doc.clamp_presets.find(state_spec.substr(7));
      if (it == doc.clamp_presets.end()) throw UsageError("unknown preset '" + state_spec.substr(7) + "'");
      clamps = clamps_from_labels(model, it->second);
    }
    const EquilibriumResult eq = run(model, zero_state(model.size()), clamps);
    if (!eq.converged()) {
      std::cerr << "error: no equilibrium within the iteration limit\n";
      return kExitNotConverged;
    }
    state = eq.cycle.front();
  } else if (fs::is_regular_file(state_spec)) {
    state = StateVector{parse_values(read_file(state_spec)), 0};
  } else {
    state = StateVector{parse_values(state_spec), 0};
  }
  const InfluenceReport r = total_influence(model, state, a, b, max_paths);
  if (format == "json") {
    std::cout << canonical_dump(influence_to_json(model, r));
    return kExitOk;
  }
  std::cout << "path\tedge_product\tpsi\tinfluence\tnegative_edges\n";
  for (const auto& p : r.paths) {
    std::string labels;
    for (NodeId id : p.node_ids) labels += (labels.empty() ? "" : "->") + model.nodes[id].label;
    std::cout << labels << "\t" << num(p.edge_product) << "\t" << num(p.weight_psi) << "\t" << num(p.influence) << "\t"
              << p.negative_edges << "\n";
  }
  std::cout << "total: " << num(r.total) << "\n";
  if (r.truncated) std::cout << "warning: path enumeration truncated at " << max_paths << " paths\n";
  if (r.cycle_warning) std::cout << "warning: some path node lies on a feedback cycle; feedforward derivative does not apply\n";
  return kExitOk;
}

// ---- serve ----------------------------------------------------------------

int cmd_serve(const std::string& model_dir, const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("--listen must be host:port");
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("bad port in '" + listen + "'");
  }
  Service service(model_dir);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!serve(service, host, port)) throw Error(ErrorKind::io, "cannot listen on " + listen);
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_mismatch: return kExitUsage;
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::non_differentiable: return kExitValidation;
    case ErrorKind::io: return kExitIo;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy cognitive map engine"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Iterate a model to its equilibrium");
  run_cmd->add_option("-m,--model", run_args.model, "Model file, bundled name, or name on FCM_MODEL_PATH")->required();
  run_cmd->add_option("--init", run_args.init, "Initial state: comma-separated values or a named initial state");
  run_cmd->add_option("--preset", run_args.preset, "Named clamp preset from the model document");
  run_cmd->add_option("--clamp", run_args.clamps, "Clamp label=value (repeatable)");
  run_cmd->add_option("--max-iters", run_args.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  run_cmd->add_option("--format", run_args.format, "Output format")->check(CLI::IsMember({"trace", "summary", "json"}));

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Enumerate every on/off clamp scenario of the input nodes");
  sweep_cmd->add_option("-m,--model", sweep_args.model, "Model")->required();
  sweep_cmd->add_option("--inputs", sweep_args.inputs, "Comma-separated input labels (default: every other node)");
  sweep_cmd->add_option("--outcome", sweep_args.outcome, "Outcome node label");
  sweep_cmd->add_option("--mode", sweep_args.mode, "Clamp mode")->check(CLI::IsMember({"on-off", "on-free"}));
  sweep_cmd->add_option("--rule", sweep_args.rule, "Outcome rule")->check(CLI::IsMember({"any", "all"}));
  sweep_cmd->add_option("--max-iters", sweep_args.max_iters, "Iteration limit per scenario")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("-j,--jobs", sweep_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--quantize-compare", sweep_args.quantize_compare, "Also sweep the sign-quantized model");
  sweep_cmd->add_option("--out-dir", sweep_args.out_dir, "Write report.json, scenarios.csv and profile.csv here");
  sweep_cmd->add_option("--format", sweep_args.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::string weights, combine_out, combine_name;
  std::vector<std::string> combine_models;
  auto* combine_cmd = app.add_subcommand("combine", "Weighted average of models over the union node set");
  combine_cmd->add_option("--weights", weights, "Comma-separated convex weights (default: equal)");
  combine_cmd->add_option("-o,--out", combine_out, "Output document (default: stdout)");
  combine_cmd->add_option("--name", combine_name, "Name of the combined model");
  combine_cmd->add_option("models", combine_models, "Models to combine")->required();

  std::string stats_dir, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Running edge mean and variance over a directory of models");
  stats_cmd->add_option("--stream", stats_dir, "Directory of model documents, read in name order")->required();
  stats_cmd->add_option("-o,--out", stats_out, "Output file (default: stdout)");

  LearnArgs learn_args;
  auto* learn_cmd = app.add_subcommand("learn", "Learn causal edges from a time-series CSV");
  learn_cmd->add_option("--series", learn_args.series, "CSV with a header row; first column is the time index")->required();
  learn_cmd->add_option("--law", learn_args.law, "Learning law")
      ->check(CLI::IsMember({"hebbian", "dhl", "hybrid", "discrete-dhl"}));
  learn_cmd->add_option("--mu", learn_args.mu, "Learning rate for discrete-dhl");
  learn_cmd->add_option("--step", learn_args.h, "Step size h for the continuous laws");
  learn_cmd->add_option("--iterations", learn_args.iterations, "Passes over the series");
  learn_cmd->add_option("--edges", learn_args.edges, "Tracked edges: 'all' or from,to;from,to");
  learn_cmd->add_option("-o,--out", learn_args.out, "Learned matrix CSV (default: stdout)");
  learn_cmd->add_option("--trace", learn_args.trace_out, "Convergence trace CSV");

  std::string inf_model, inf_from, inf_to, inf_state = "equilibrium", inf_format = "table";
  std::size_t inf_max_paths = kDefaultMaxPaths;
  auto* inf_cmd = app.add_subcommand("influence", "Path-by-path causal influence of one node on another");
  inf_cmd->add_option("-m,--model", inf_model, "Model")->required();
  inf_cmd->add_option("--from", inf_from, "Source label")->required();
  inf_cmd->add_option("--to", inf_to, "Target label")->required();
  inf_cmd->add_option("--state", inf_state, "Operating point: values, a file, 'equilibrium' or preset:NAME");
  inf_cmd->add_option("--max-paths", inf_max_paths, "Path enumeration limit");
  inf_cmd->add_option("--format", inf_format, "Output format")->check(CLI::IsMember({"table", "json"}));

  std::string q_model, q_out;
  auto* q_cmd = app.add_subcommand("quantize", "Replace every edge with its sign");
  q_cmd->add_option("-m,--model", q_model, "Model")->required();
  q_cmd->add_option("-o,--out", q_out, "Output document (default: stdout)");

  std::string d_model, d_out;
  auto* d_cmd = app.add_subcommand("disconcept", "Rewrite negative edges as positive edges into negated nodes");
  d_cmd->add_option("-m,--model", d_model, "Model")->required();
  d_cmd->add_option("-o,--out", d_out, "Output document (default: stdout)");

  std::string show_model, show_out;
  auto* show_cmd = app.add_subcommand("show", "Print a model document in canonical form");
  show_cmd->add_option("model", show_model, "Model")->required();
  show_cmd->add_option("-o,--out", show_out, "Output document (default: stdout)");

  std::string serve_dir, serve_listen = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP+JSON service");
  serve_cmd->add_option("--model-dir", serve_dir, "Directory of persisted model documents");
  serve_cmd->add_option("--listen", serve_listen, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_args);
    if (*sweep_cmd) return cmd_sweep(sweep_args);
    if (*combine_cmd) return cmd_combine(weights, combine_models, combine_out, combine_name);
    if (*stats_cmd) return cmd_stats(stats_dir, stats_out);
    if (*learn_cmd) return cmd_learn(learn_args);
    if (*inf_cmd) return cmd_influence(inf_model, inf_from, inf_to, inf_state, inf_max_paths, inf_format);
    if (*q_cmd) return cmd_transform(q_model, q_out, false);
    if (*d_cmd) return cmd_transform(d_model, d_out, true);
    if (*show_cmd) {
      write_output(show_out, document_to_string(resolve_model(show_model)));
      return kExitOk;
    }
    if (*serve_cmd) return cmd_serve(serve_dir, serve_listen);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  - " << d << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

#include "twotruths/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "twotruths/error.hpp"
#include "twotruths/parallel.hpp"
#include "twotruths/rng.hpp"

namespace twotruths {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kModule = "cli";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string fmt_double(double x) {
  if (!std::isfinite(x)) return "";
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(Errc::io, kModule, std::string(what) + " not found: '" + p.string() + "'");
}

template <typename T>
void take(const Json& j, const char* key, T& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

template <typename T>
void take(const Json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    field.reset();
  } else {
    field = j.at(key).get<T>();
  }
}

void take_path(const Json& j, const char* key, fs::path& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<std::string>();
}

void take_path(const Json& j, const char* key, std::optional<fs::path>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    field.reset();
  } else {
    field = fs::path(j.at(key).get<std::string>());
  }
}

Json path_or_null(const std::optional<fs::path>& p) { return p ? Json(p->string()) : Json(nullptr); }

template <typename T>
Json opt_or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

void write_resolved(const fs::path& dir, const std::string& command, const GlobalOptions& g, const Json& cfg,
                    CommandResult& result) {
  Json j = {{"command", command}};
  const Json global = json_of(g);
  for (const auto& [k, v] : global.items()) j[k] = v;
  for (const auto& [k, v] : cfg.items()) j[k] = v;
  const auto path = dir / "resolved_config.json";
  write_json_file(path, j);
  result.outputs.push_back(path);
}

std::map<std::string, LabelMerge> load_merges(const std::optional<fs::path>& path) {
  if (!path) return {};
  require_file(*path, "merge map");
  const Json j = read_json_file(*path);
  // A block-model fixture carries its merge maps under "merges".
  if (j.is_object() && j.contains("B") && j.contains("merges")) return merges_from_json(j.at("merges"));
  return merges_from_json(j);
}

// Truth names in output order: LR and GW first, then the rest alphabetically.
std::vector<std::string> truth_order(const std::map<std::string, LabelMerge>& merges) {
  std::vector<std::string> out;
  for (const char* name : {"LR", "GW"}) {
    if (merges.count(name)) out.emplace_back(name);
  }
  for (const auto& [name, m] : merges) {
    if (name != "LR" && name != "GW") out.push_back(name);
  }
  return out;
}

Partition restricted(const VertexLabels& labels, const std::vector<Vertex>& vertices) {
  std::vector<std::uint32_t> codes;
  codes.reserve(vertices.size());
  for (auto v : vertices) codes.push_back(labels.code(v));
  return Partition(codes);
}

struct ManifestRow {
  fs::path graph;
  fs::path labels;
  std::string id;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  return out;
}

// Relative paths are resolved against the manifest's directory.
std::vector<ManifestRow> load_manifest(const fs::path& path) {
  require_file(path, "manifest");
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, kModule, "cannot open manifest '" + path.string() + "'");
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  const auto base = path.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) {
      throw Error(Errc::parse, kModule,
                  path.string() + ":" + std::to_string(lineno) + ": expected graph_path,label_path,graph_id");
    }
    if (f[0] == "graph_path") continue;
    auto resolve = [&](const std::string& s) { return fs::path(s).is_relative() ? base / s : fs::path(s); };
    rows.push_back({resolve(f[0]), resolve(f[1]), f[2]});
  }
  return rows;
}

std::string partition_csv(const ClusteringRun& run) {
  std::ostringstream s;
  s << "vertex,cluster\n";
  for (std::size_t i = 0; i < run.vertices.size(); ++i) s << run.vertices[i] << ',' << run.assignment[i] << '\n';
  return s.str();
}

}  // namespace

std::vector<EmbeddingMethod> parse_methods(const std::string& name) {
  if (name == "both") return {EmbeddingMethod::lse, EmbeddingMethod::ase};
  return {parse_method(name)};
}

std::map<std::string, LabelMerge> default_hemisphere_merges() {
  return {{"LR", {{"LG", "L"}, {"LW", "L"}, {"RG", "R"}, {"RW", "R"}}},
          {"GW", {{"LG", "G"}, {"LW", "W"}, {"RG", "G"}, {"RW", "W"}}}};
}

// ---- config serialization ----

Json json_of(const GlobalOptions& g) {
  return {{"seed", g.seed}, {"out_dir", g.out_dir.string()}, {"threads", g.threads}};
}

void merge_json(const Json& j, GlobalOptions& g) {
  take(j, "seed", g.seed);
  take_path(j, "out_dir", g.out_dir);
  take(j, "threads", g.threads);
}

Json json_of(const ClusterConfig& c) {
  return {{"graph", c.graph.string()},     {"labels", path_or_null(c.labels)}, {"merges", path_or_null(c.merges)},
          {"method", c.method},            {"d", opt_or_null(c.d)},            {"K", opt_or_null(c.K)},
          {"k_max", c.k_max},              {"elbow", c.elbow},                 {"scree_max", c.scree_max}};
}

void merge_json(const Json& j, ClusterConfig& c) {
  take_path(j, "graph", c.graph);
  take_path(j, "labels", c.labels);
  take_path(j, "merges", c.merges);
  take(j, "method", c.method);
  take(j, "d", c.d);
  take(j, "K", c.K);
  take(j, "k_max", c.k_max);
  take(j, "elbow", c.elbow);
  take(j, "scree_max", c.scree_max);
}

Json json_of(const ProjectConfig& c) {
  return {{"graph", path_or_null(c.graph)},
          {"labels", path_or_null(c.labels)},
          {"manifest", path_or_null(c.manifest)},
          {"merges", path_or_null(c.merges)},
          {"ratio_threshold", c.ratio_threshold}};
}

void merge_json(const Json& j, ProjectConfig& c) {
  take_path(j, "graph", c.graph);
  take_path(j, "labels", c.labels);
  take_path(j, "manifest", c.manifest);
  take_path(j, "merges", c.merges);
  take(j, "ratio_threshold", c.ratio_threshold);
}

Json json_of(const ExperimentConfig& c) {
  return {{"fixture", c.fixture.string()}, {"n", c.n}, {"trials", c.trials}, {"success_ari", c.success_ari}};
}

void merge_json(const Json& j, ExperimentConfig& c) {
  take_path(j, "fixture", c.fixture);
  take(j, "n", c.n);
  take(j, "trials", c.trials);
  take(j, "success_ari", c.success_ari);
}

Json json_of(const ChernoffMapConfig& c) {
  return {{"x_min", c.x_min},       {"x_max", c.x_max}, {"y_min", c.y_min},
          {"y_max", c.y_max},       {"resolution", c.resolution}, {"scale", c.scale},
          {"n_big", c.n_big},       {"curve_points", c.curve_points}};
}

void merge_json(const Json& j, ChernoffMapConfig& c) {
  take(j, "x_min", c.x_min);
  take(j, "x_max", c.x_max);
  take(j, "y_min", c.y_min);
  take(j, "y_max", c.y_max);
  take(j, "resolution", c.resolution);
  take(j, "scale", c.scale);
  take(j, "n_big", c.n_big);
  take(j, "curve_points", c.curve_points);
}

Json json_of(const ScatterConfig& c) {
  return {{"manifest", c.manifest.string()}, {"merges", path_or_null(c.merges)}, {"method", c.method},
          {"k_max", c.k_max},                {"elbow", c.elbow},                 {"scree_max", c.scree_max}};
}

void merge_json(const Json& j, ScatterConfig& c) {
  take_path(j, "manifest", c.manifest);
  take_path(j, "merges", c.merges);
  take(j, "method", c.method);
  take(j, "k_max", c.k_max);
  take(j, "elbow", c.elbow);
  take(j, "scree_max", c.scree_max);
}

Json json_of(const SampleConfig& c) { return {{"params", c.params.string()}, {"n", c.n}}; }

void merge_json(const Json& j, SampleConfig& c) {
  take_path(j, "params", c.params);
  take(j, "n", c.n);
}

// ---- pipeline ----

ClusteringRun spectral_cluster(const Graph& g, EmbeddingMethod method, const PipelineOptions& opts,
                               std::uint64_t seed) {
  ClusteringRun run;
  run.method = method;
  Graph work;
  const Graph* graph = &g;
  if (method == EmbeddingMethod::lse) {
    auto lcc = largest_connected_component(g);
    if (lcc.graph.num_vertices() < g.num_vertices()) {
      spdlog::info("cli: LSE uses the largest connected component ({} of {} vertices)", lcc.graph.num_vertices(),
                   g.num_vertices());
    }
    run.vertices = std::move(lcc.original);
    work = std::move(lcc.graph);
    graph = &work;
  } else {
    run.vertices.resize(g.num_vertices());
    for (std::size_t i = 0; i < run.vertices.size(); ++i) run.vertices[i] = static_cast<Vertex>(i);
  }
  const std::size_t n = graph->num_vertices();
  if (n < 2) throw Error(Errc::invalid_argument, kModule, "graph has fewer than 2 vertices to cluster");

  SolverOptions solver = opts.solver;
  solver.seed = derive_seed(seed, 1);
  const std::size_t m = opts.d ? *opts.d : std::min(opts.scree_max, n - 1);
  const auto pairs = graph_eigenpairs(*graph, method, m, solver);
  run.spectrum = pairs.spectrum;
  std::size_t d = 0;
  if (opts.d) {
    d = *opts.d;
  } else {
    std::vector<double> scree;
    for (double l : pairs.spectrum.eigenvalues) {
      // Magnitude ties may be reordered by sign; keep the scree monotone.
      scree.push_back(scree.empty() ? std::abs(l) : std::min(std::abs(l), scree.back()));
    }
    run.elbow = profile_likelihood_d(scree, opts.elbow);
    d = run.elbow->chosen_d;
  }
  run.embedding = embedding_from(pairs, d, method);

  const std::uint64_t gmm_seed = derive_seed(seed, 2);
  if (opts.K) {
    run.model = gmm::fit(run.embedding.X, *opts.K, gmm_seed, opts.gmm);
  } else {
    run.k_selection = select_k_bic(run.embedding.X, 1, std::min(opts.k_max, n), gmm_seed, opts.gmm);
    run.model = run.k_selection->model;
  }
  run.assignment = gmm::hard_assign(run.model, run.embedding.X);
  return run;
}

// ---- cluster ----

CommandResult cmd_cluster(const ClusterConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  require_file(cfg.graph, "graph file");
  if (cfg.labels) require_file(*cfg.labels, "label file");
  const auto loaded = load_edge_list(cfg.graph);
  const Graph& g = loaded.graph;
  std::optional<VertexLabels> labels;
  if (cfg.labels) labels = load_labels(*cfg.labels, g.num_vertices());
  const auto merges = load_merges(cfg.merges);
  if (!merges.empty() && !labels) throw Error(Errc::invalid_argument, kModule, "merges need a label file");

  std::vector<std::pair<std::string, VertexLabels>> truths;
  if (labels) {
    truths.emplace_back("labels", *labels);
    for (const auto& name : truth_order(merges)) truths.emplace_back(name, labels->merged(merges.at(name)));
  }

  fs::create_directories(global.out_dir);
  PipelineOptions opts;
  opts.d = cfg.d;
  opts.K = cfg.K;
  opts.k_max = cfg.k_max;
  opts.elbow = cfg.elbow;
  opts.scree_max = cfg.scree_max;
  for (auto method : parse_methods(cfg.method)) {
    const std::string tag = to_string(method);
    const auto run = spectral_cluster(g, method, opts, derive_seed(global.seed, method == EmbeddingMethod::lse ? 1 : 2));
    auto emit = [&](const std::string& name, const Json& j) {
      const auto p = global.out_dir / name;
      write_json_file(p, j);
      result.outputs.push_back(p);
    };
    const auto part = global.out_dir / ("partition_" + tag + ".csv");
    write_text_file(part, partition_csv(run));
    result.outputs.push_back(part);
    std::ostringstream emb;
    write_embedding_csv(emb, run.embedding);
    write_text_file(global.out_dir / ("embedding_" + tag + ".csv"), emb.str());
    result.outputs.push_back(global.out_dir / ("embedding_" + tag + ".csv"));
    Json model = json_of(run.model);
    model["method"] = tag;
    model["d"] = run.embedding.dim();
    model["embedded_vertices"] = run.vertices.size();
    model["spectrum"] = json_of(run.spectrum);
    emit("model_" + tag + ".json", model);
    if (run.elbow) emit("elbow_" + tag + ".json", json_of(*run.elbow));
    if (run.k_selection) emit("kselect_" + tag + ".json", json_of(*run.k_selection));
    if (!truths.empty()) {
      Json aris = Json::object();
      const Partition cl(run.assignment);
      for (const auto& [name, t] : truths) aris[name] = json_of(ari(cl, restricted(t, run.vertices)));
      emit("ari_" + tag + ".json", aris);
    }
    spdlog::info("cli: {} d={} K={} on {} vertices", tag, run.embedding.dim(), run.model.components(),
                 run.vertices.size());
  }
  write_resolved(global.out_dir, "cluster", global, json_of(cfg), result);
  return result;
}

// ---- project ----

CommandResult cmd_project(const ProjectConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  std::vector<ManifestRow> items;
  const bool batch = cfg.manifest.has_value();
  if (batch) {
    items = load_manifest(*cfg.manifest);
  } else {
    if (!cfg.graph || !cfg.labels) throw Error(Errc::invalid_argument, kModule, "project needs --graph and --labels or --manifest");
    items.push_back({*cfg.graph, *cfg.labels, cfg.graph->stem().string()});
  }
  const auto merges = load_merges(cfg.merges);
  fs::create_directories(global.out_dir);

  std::ostringstream csv;
  csv << "graph_id,merge,K,a,b,c,x,y,below_rank_one_curve,structure,status,error\n";
  Json all = Json::array();
  Json failures = Json::array();
  for (const auto& item : items) {
    std::vector<std::pair<std::string, SbmParams>> fits;
    std::string error;
    try {
      require_file(item.graph, "graph file");
      require_file(item.labels, "label file");
      const auto g = load_edge_list(item.graph).graph;
      const auto labels = load_labels(item.labels, g.num_vertices());
      std::vector<std::pair<std::string, VertexLabels>> views;
      if (merges.empty()) {
        views.emplace_back("identity", labels);
      } else {
        for (const auto& name : truth_order(merges)) views.emplace_back(name, labels.merged(merges.at(name)));
      }
      for (const auto& [name, view] : views) fits.emplace_back(name, fit_block_model(g, view));
    } catch (const Error& e) {
      if (!batch) throw;
      error = e.what();
    }
    if (!error.empty()) {
      csv << csv_field(item.id) << ",,,,,,,,,,failed," << csv_field(error) << '\n';
      failures.push_back({{"graph_id", item.id}, {"error", error}});
      spdlog::error("{}: {}", item.id, error);
      continue;
    }
    for (const auto& [name, p] : fits) {
      Json entry = {{"graph_id", item.id}, {"merge", name}, {"params", json_of(p)}};
      csv << csv_field(item.id) << ',' << csv_field(name) << ',' << p.blocks();
      if (p.blocks() == 2) {
        const auto eda = eda_point(p);
        const auto cls = classify_structure(p, cfg.ratio_threshold);
        entry["eda"] = json_of(eda);
        entry["structure"] = json_of(cls);
        csv << ',' << fmt_double(p.B(0, 0)) << ',' << fmt_double(p.B(0, 1)) << ',' << fmt_double(p.B(1, 1)) << ','
            << fmt_double(eda.x) << ',' << fmt_double(eda.y) << ',' << (eda.below_rank_one_curve ? "true" : "false")
            << ',' << to_string(cls.kind);
      } else {
        csv << ",,,,,,,";
      }
      csv << ",ok,\n";
      if (!batch) {
        const auto path = global.out_dir / ("sbm_" + name + ".json");
        write_json_file(path, json_of(p));
        result.outputs.push_back(path);
      }
      all.push_back(entry);
    }
  }
  write_text_file(global.out_dir / "projections.csv", csv.str());
  write_json_file(global.out_dir / "projections.json", all);
  result.outputs.push_back(global.out_dir / "projections.csv");
  result.outputs.push_back(global.out_dir / "projections.json");
  if (!failures.empty()) {
    write_json_file(global.out_dir / "failures.json", failures);
    result.outputs.push_back(global.out_dir / "failures.json");
    result.exit_code = 3;
  }
  write_resolved(global.out_dir, "project", global, json_of(cfg), result);
  return result;
}

// ---- experiment ----

ExperimentReport run_two_truths_experiment(const Fixture& fixture, const ExperimentConfig& cfg,
                                           const GlobalOptions& global) {
  for (const char* name : {"LR", "GW"}) {
    if (!fixture.merges.count(name)) {
      throw Error(Errc::invalid_argument, kModule, std::string("fixture must declare the '") + name + "' merge");
    }
  }
  if (cfg.trials == 0) throw Error(Errc::invalid_argument, kModule, "trials must be positive");
  const auto t0 = Clock::now();
  ExperimentReport report;
  report.config = cfg;
  report.seed = global.seed;
  const std::vector<EmbeddingMethod> methods{EmbeddingMethod::lse, EmbeddingMethod::ase};
  report.records.resize(cfg.trials);

  PipelineOptions opts;
  opts.d = 2;
  opts.K = 2;
  parallel_for(cfg.trials, global.threads, [&](std::size_t t) {
    auto& rec = report.records[t];
    rec.trial = t;
    rec.seed = derive_seed(global.seed, t);
    std::optional<SampledSbm> sample;
    std::string sample_error;
    std::optional<Partition> lr, gw;
    try {
      sample = sample_sbm(fixture.params, cfg.n, rec.seed);
      lr = Partition(sample->labels.merged(fixture.merges.at("LR")).codes());
      gw = Partition(sample->labels.merged(fixture.merges.at("GW")).codes());
    } catch (const std::exception& e) {
      sample_error = e.what();
    }
    rec.outcomes.resize(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
      auto& out = rec.outcomes[k];
      out.method = to_string(methods[k]);
      const auto start = Clock::now();
      if (!sample_error.empty()) {
        out.error = sample_error;
        continue;
      }
      try {
        const auto run = spectral_cluster(sample->graph, methods[k], opts, derive_seed(rec.seed, k + 1));
        const Partition cl(run.assignment);
        std::vector<std::uint32_t> a, b;
        for (auto v : run.vertices) {
          a.push_back((*lr)[v]);
          b.push_back((*gw)[v]);
        }
        out.embedded_vertices = run.vertices.size();
        out.d = run.embedding.dim();
        out.K = run.model.components();
        out.ari_lr = ari(cl, Partition(a)).ari;
        out.ari_gw = ari(cl, Partition(b)).ari;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.wall_seconds = seconds_since(start);
    }
  });

  for (const auto& rec : report.records) report.failed_trials += rec.failed();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto tag = to_string(methods[k]);
    double ok_lr = 0, ok_gw = 0, sum_lr = 0, sum_gw = 0, valid = 0;
    for (const auto& rec : report.records) {
      const auto& out = rec.outcomes[k];
      if (!out.error.empty()) continue;
      ok_lr += out.ari_lr > cfg.success_ari;
      ok_gw += out.ari_gw > cfg.success_ari;
      sum_lr += out.ari_lr;
      sum_gw += out.ari_gw;
      valid += 1;
    }
    const double trials = static_cast<double>(cfg.trials);
    report.success[tag] = {{"LR", ok_lr / trials}, {"GW", ok_gw / trials}};
    report.mean_ari[tag] = {{"LR", valid > 0 ? sum_lr / valid : 0.0}, {"GW", valid > 0 ? sum_gw / valid : 0.0}};
  }
  report.wall_seconds = seconds_since(t0);
  return report;
}

bool TrialRecord::failed() const {
  return std::any_of(outcomes.begin(), outcomes.end(), [](const MethodOutcome& o) { return !o.error.empty(); });
}

Json json_of(const ExperimentReport& r) {
  Json records = Json::array();
  Json wall = Json::array();
  for (const auto& rec : r.records) {
    Json j = {{"trial", rec.trial}, {"seed", rec.seed}};
    Json w = Json::object();
    for (const auto& out : rec.outcomes) {
      Json m = {{"embedded_vertices", out.embedded_vertices},
                {"d", out.d},
                {"K", out.K},
                {"ari_LR", out.ari_lr},
                {"ari_GW", out.ari_gw}};
      if (!out.error.empty()) m["error"] = out.error;
      j[out.method] = m;
      w[out.method] = out.wall_seconds;
    }
    records.push_back(j);
    wall.push_back(w);
  }
  return {{"config", json_of(r.config)},
          {"seed", r.seed},
          {"records", records},
          {"failed_trials", r.failed_trials},
          {"success", r.success},
          {"mean_ari", r.mean_ari},
          {"timing", {{"timestamp", timestamp()}, {"total_seconds", r.wall_seconds}, {"record_seconds", wall}}}};
}

CommandResult cmd_experiment_two_truths(const ExperimentConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  require_file(cfg.fixture, "fixture");
  const auto fixture = load_fixture(cfg.fixture);
  fs::create_directories(global.out_dir);
  const auto report = run_two_truths_experiment(fixture, cfg, global);

  std::ostringstream csv;
  csv << "trial,seed,ari_lse_LR,ari_lse_GW,delta_lse,ari_ase_LR,ari_ase_GW,delta_ase\n";
  for (const auto& rec : report.records) {
    csv << rec.trial << ',' << rec.seed;
    for (const auto& out : rec.outcomes) {
      if (out.error.empty()) {
        csv << ',' << fmt_double(out.ari_lr) << ',' << fmt_double(out.ari_gw) << ','
            << fmt_double(out.ari_lr - out.ari_gw);
      } else {
        csv << ",,,";
      }
    }
    csv << '\n';
  }
  write_json_file(global.out_dir / "experiment_report.json", json_of(report));
  write_text_file(global.out_dir / "delta_ari.csv", csv.str());
  result.outputs.push_back(global.out_dir / "experiment_report.json");
  result.outputs.push_back(global.out_dir / "delta_ari.csv");
  write_resolved(global.out_dir, "experiment", global, json_of(cfg), result);
  for (const auto& [method, by_truth] : report.success) {
    spdlog::info("cli: {} success LR={:.3f} GW={:.3f}", method, by_truth.at("LR"), by_truth.at("GW"));
  }
  if (report.failed_trials * 10 > cfg.trials) {
    spdlog::error("cli: {} of {} trials failed", report.failed_trials, cfg.trials);
    result.exit_code = 2;
  }
  return result;
}

// ---- chernoff-map ----

CommandResult cmd_chernoff_map(const ChernoffMapConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  if (cfg.resolution < 1) throw Error(Errc::invalid_argument, kModule, "resolution must be positive");
  if (!(cfg.x_min > 0.0 && cfg.x_max <= 1.0 && cfg.x_min <= cfg.x_max && cfg.y_min > 0.0 && cfg.y_min <= cfg.y_max)) {
    throw Error(Errc::invalid_argument, kModule, "grid must satisfy 0 < x <= 1 and y > 0");
  }
  if (!(cfg.scale > 0.0 && cfg.scale <= 1.0)) throw Error(Errc::invalid_argument, kModule, "scale must lie in (0, 1]");
  auto axis = [&](double lo, double hi, std::size_t i) {
    return cfg.resolution == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.resolution - 1);
  };
  struct Cell {
    double x = 0, y = 0, a = 0, b = 0, c = 0;
    std::optional<ChernoffRatio> ratio;
    std::string flag;
  };
  std::vector<Cell> cells(cfg.resolution * cfg.resolution);
  parallel_for(cells.size(), global.threads, [&](std::size_t idx) {
    Cell& cell = cells[idx];
    cell.x = axis(cfg.x_min, cfg.x_max, idx / cfg.resolution);
    cell.y = axis(cfg.y_min, cfg.y_max, idx % cfg.resolution);
    cell.a = cfg.scale;
    cell.c = cell.x * cfg.scale;
    cell.b = cell.y * cfg.scale;
    if (cell.b > 1.0 || cell.c > 1.0) {
      cell.flag = "out_of_range";
      return;
    }
    if (cell.a == cell.b && cell.b == cell.c) {
      cell.flag = "erdos_renyi";
      return;
    }
    SbmParams p;
    p.pi = Eigen::Vector2d(0.5, 0.5);
    p.B.resize(2, 2);
    p.B << cell.a, cell.b, cell.b, cell.c;
    try {
      cell.ratio = chernoff_ratio(p, cfg.n_big, derive_seed(global.seed, idx));
    } catch (const Error& e) {
      cell.flag = std::string("error: ") + e.what();
    }
  });
  fs::create_directories(global.out_dir);
  std::ostringstream csv;
  csv << "x,y,a,b,c,rho,rho_ase,rho_lse,flag\n";
  for (const auto& cell : cells) {
    csv << fmt_double(cell.x) << ',' << fmt_double(cell.y) << ',' << fmt_double(cell.a) << ',' << fmt_double(cell.b)
        << ',' << fmt_double(cell.c) << ',';
    if (cell.ratio) {
      csv << fmt_double(cell.ratio->rho) << ',' << fmt_double(cell.ratio->ase.value) << ','
          << fmt_double(cell.ratio->lse.value);
    } else {
      csv << ",,";
    }
    csv << ',' << csv_field(cell.flag) << '\n';
  }
  std::ostringstream curve;
  curve << "x,y\n";
  for (std::size_t i = 0; i < cfg.curve_points; ++i) {
    const double x = cfg.curve_points == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(cfg.curve_points - 1);
    curve << fmt_double(x) << ',' << fmt_double(std::sqrt(x)) << '\n';
  }
  write_text_file(global.out_dir / "chernoff_map.csv", csv.str());
  write_text_file(global.out_dir / "sqrt_curve.csv", curve.str());
  result.outputs.push_back(global.out_dir / "chernoff_map.csv");
  result.outputs.push_back(global.out_dir / "sqrt_curve.csv");
  write_resolved(global.out_dir, "chernoff-map", global, json_of(cfg), result);
  return result;
}

// ---- scatter ----

CommandResult cmd_model_selection_scatter(const ScatterConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  const auto rows = load_manifest(cfg.manifest);
  auto merges = load_merges(cfg.merges);
  if (merges.empty()) merges = default_hemisphere_merges();
  const auto truths = truth_order(merges);
  const auto methods = parse_methods(cfg.method);
  PipelineOptions opts;
  opts.k_max = cfg.k_max;
  opts.elbow = cfg.elbow;
  opts.scree_max = cfg.scree_max;

  struct Row {
    std::string id, method, status = "ok", error;
    std::size_t n = 0, embedded = 0, d = 0, K = 0;
    std::vector<double> aris;
  };
  std::vector<Row> out(rows.size() * methods.size());
  parallel_for(rows.size(), global.threads, [&](std::size_t i) {
    const auto& item = rows[i];
    const std::uint64_t seed = derive_seed(global.seed, i);
    std::optional<Graph> g;
    std::vector<VertexLabels> views;
    std::string load_error;
    try {
      require_file(item.graph, "graph file");
      require_file(item.labels, "label file");
      g = load_edge_list(item.graph).graph;
      const auto labels = load_labels(item.labels, g->num_vertices());
      for (const auto& name : truths) views.push_back(labels.merged(merges.at(name)));
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (std::size_t k = 0; k < methods.size(); ++k) {
      Row& row = out[i * methods.size() + k];
      row.id = item.id;
      row.method = to_string(methods[k]);
      if (!load_error.empty()) {
        row.status = "failed";
        row.error = load_error;
        continue;
      }
      row.n = g->num_vertices();
      try {
        const auto run = spectral_cluster(*g, methods[k], opts, derive_seed(seed, k + 1));
        row.embedded = run.vertices.size();
        row.d = run.embedding.dim();
        row.K = run.model.components();
        const Partition cl(run.assignment);
        for (const auto& view : views) row.aris.push_back(ari(cl, restricted(view, run.vertices)).ari);
      } catch (const std::exception& e) {
        row.status = "failed";
        row.error = e.what();
      }
    }
  });

  fs::create_directories(global.out_dir);
  std::ostringstream csv;
  csv << "graph_id,method,n,embedded,d_hat,K_hat";
  for (const auto& name : truths) csv << ",ari_" << name;
  csv << ",status,error\n";
  Json failures = Json::array();
  for (const auto& row : out) {
    csv << csv_field(row.id) << ',' << row.method << ',' << row.n << ',';
    if (row.status == "ok") {
      csv << row.embedded << ',' << row.d << ',' << row.K;
      for (double a : row.aris) csv << ',' << fmt_double(a);
    } else {
      csv << ",,";
      for (std::size_t k = 0; k < truths.size(); ++k) csv << ',';
      failures.push_back({{"graph_id", row.id}, {"method", row.method}, {"error", row.error}});
      spdlog::error("{} ({}): {}", row.id, row.method, row.error);
    }
    csv << ',' << row.status << ',' << csv_field(row.error) << '\n';
  }
  write_text_file(global.out_dir / "scatter.csv", csv.str());
  result.outputs.push_back(global.out_dir / "scatter.csv");
  if (!failures.empty()) {
    write_json_file(global.out_dir / "failures.json", failures);
    result.outputs.push_back(global.out_dir / "failures.json");
    result.exit_code = 3;
  }
  write_resolved(global.out_dir, "scatter", global, json_of(cfg), result);
  return result;
}

// ---- sample ----

CommandResult cmd_sample(const SampleConfig& cfg, const GlobalOptions& global) {
  CommandResult result;
  require_file(cfg.params, "block model file");
  const auto fixture = load_fixture(cfg.params);
  const auto s = sample_sbm(fixture.params, cfg.n, global.seed);
  fs::create_directories(global.out_dir);
  std::ostringstream edges, labels;
  write_edge_list(edges, s.graph);
  write_labels(labels, s.labels);
  write_text_file(global.out_dir / "graph.edges", edges.str());
  write_text_file(global.out_dir / "labels.csv", labels.str());
  write_json_file(global.out_dir / "sbm.json", json_of(fixture));
  result.outputs = {global.out_dir / "graph.edges", global.out_dir / "labels.csv", global.out_dir / "sbm.json"};
  write_resolved(global.out_dir, "sample", global, json_of(cfg), result);
  return result;
}

}  // namespace twotruths

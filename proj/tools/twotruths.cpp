// Command-line front end: cluster, project, chernoff-map, experiment, scatter, sample.
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "twotruths/commands.hpp"
#include "twotruths/error.hpp"

namespace tt = twotruths;

namespace {

// Options bound to a config key; only those given on the command line
// override values loaded from --config.
struct Bound {
  CLI::Option* option;
  std::string key;
};

template <typename T>
void add_bound(CLI::App* app, std::vector<Bound>& bound, const std::string& flag, T& field, const std::string& key,
          const std::string& help) {
  bound.push_back({app->add_option(flag, field, help), key});
}

tt::Json given(const tt::Json& all, const std::vector<Bound>& bound) {
  tt::Json out = tt::Json::object();
  for (const auto& b : bound) {
    if (b.option->count() > 0) out[b.key] = all.at(b.key);
  }
  return out;
}

template <typename Config>
Config resolve(const Config& from_cli, const std::vector<Bound>& bound, const tt::Json* file) {
  Config cfg;
  if (file) tt::merge_json(*file, cfg);
  tt::merge_json(given(tt::json_of(from_cli), bound), cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("twotruths"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Spectral clustering under two truths: ASE vs LSE"};
  app.require_subcommand(1);
  app.fallthrough();

  tt::GlobalOptions g_cli;
  std::vector<Bound> g_bound;
  std::string config_path;
  std::string log_level = "info";
  add_bound(&app, g_bound, "--seed", g_cli.seed, "seed", "Master seed");
  add_bound(&app, g_bound, "--out-dir", g_cli.out_dir, "out_dir", "Output directory");
  add_bound(&app, g_bound, "--threads", g_cli.threads, "threads", "Worker threads (0 = all cores)");
  app.add_option("--config", config_path, "JSON config (e.g. a resolved_config.json); flags take precedence");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  tt::ClusterConfig cluster;
  std::vector<Bound> cluster_bound;
  auto* c = app.add_subcommand("cluster", "GMM on a spectral embedding with automatic d and K");
  add_bound(c, cluster_bound, "--graph", cluster.graph, "graph", "Edge list");
  add_bound(c, cluster_bound, "--labels", cluster.labels, "labels", "Vertex labels (vertex,label)");
  add_bound(c, cluster_bound, "--merges", cluster.merges, "merges", "JSON {name: {label: coarse}}");
  add_bound(c, cluster_bound, "--method", cluster.method, "method", "ase, lse or both");
  add_bound(c, cluster_bound, "-d,--dim", cluster.d, "d", "Embedding dimension (default: profile likelihood)");
  add_bound(c, cluster_bound, "-K,--components", cluster.K, "K", "Mixture components (default: BIC)");
  add_bound(c, cluster_bound, "--k-max", cluster.k_max, "k_max", "Largest K tried by BIC");
  add_bound(c, cluster_bound, "--elbow", cluster.elbow, "elbow", "Which profile-likelihood elbow to use");
  add_bound(c, cluster_bound, "--scree-max", cluster.scree_max, "scree_max", "Eigenvalues computed for the scree");

  tt::ProjectConfig project;
  std::vector<Bound> project_bound;
  auto* p = app.add_subcommand("project", "Block-model projection of labelled graphs");
  add_bound(p, project_bound, "--graph", project.graph, "graph", "Edge list");
  add_bound(p, project_bound, "--labels", project.labels, "labels", "Vertex labels");
  add_bound(p, project_bound, "--manifest", project.manifest, "manifest", "CSV graph_path,label_path,graph_id");
  add_bound(p, project_bound, "--merges", project.merges, "merges", "JSON {name: {label: coarse}}");
  add_bound(p, project_bound, "--ratio-threshold", project.ratio_threshold, "ratio_threshold",
       "Ratio for 'much greater than' in the structure class");

  tt::ChernoffMapConfig cmap;
  std::vector<Bound> cmap_bound;
  auto* m = app.add_subcommand("chernoff-map", "Chernoff ratio over the 2-block (x, y) plane");
  add_bound(m, cmap_bound, "--x-min", cmap.x_min, "x_min", "min(a,c)/max(a,c) lower bound");
  add_bound(m, cmap_bound, "--x-max", cmap.x_max, "x_max", "min(a,c)/max(a,c) upper bound");
  add_bound(m, cmap_bound, "--y-min", cmap.y_min, "y_min", "b/max(a,c) lower bound");
  add_bound(m, cmap_bound, "--y-max", cmap.y_max, "y_max", "b/max(a,c) upper bound");
  add_bound(m, cmap_bound, "--resolution", cmap.resolution, "resolution", "Grid points per axis");
  add_bound(m, cmap_bound, "--scale", cmap.scale, "scale", "max(a,c)");
  add_bound(m, cmap_bound, "--n-big", cmap.n_big, "n_big", "Vertices sampled per grid point");
  add_bound(m, cmap_bound, "--curve-points", cmap.curve_points, "curve_points", "Samples of y = sqrt(x)");

  tt::ExperimentConfig experiment;
  std::vector<Bound> experiment_bound;
  auto* e = app.add_subcommand("experiment", "Two-truths Monte Carlo with d = K = 2");
  add_bound(e, experiment_bound, "--fixture", experiment.fixture, "fixture", "4-block fixture JSON with LR and GW merges");
  add_bound(e, experiment_bound, "-n,--n", experiment.n, "n", "Vertices per sampled graph");
  add_bound(e, experiment_bound, "--trials", experiment.trials, "trials", "Monte Carlo trials");
  add_bound(e, experiment_bound, "--success-ari", experiment.success_ari, "success_ari", "ARI counted as a success");

  tt::ScatterConfig scatter;
  std::vector<Bound> scatter_bound;
  auto* s = app.add_subcommand("scatter", "Automatic (d, K) selection over a batch of graphs");
  add_bound(s, scatter_bound, "--manifest", scatter.manifest, "manifest", "CSV graph_path,label_path,graph_id");
  add_bound(s, scatter_bound, "--merges", scatter.merges, "merges", "JSON {name: {label: coarse}} (default LR and GW)");
  add_bound(s, scatter_bound, "--method", scatter.method, "method", "ase, lse or both");
  add_bound(s, scatter_bound, "--k-max", scatter.k_max, "k_max", "Largest K tried by BIC");
  add_bound(s, scatter_bound, "--elbow", scatter.elbow, "elbow", "Which profile-likelihood elbow to use");
  add_bound(s, scatter_bound, "--scree-max", scatter.scree_max, "scree_max", "Eigenvalues computed for the scree");

  tt::SampleConfig sample;
  std::vector<Bound> sample_bound;
  auto* r = app.add_subcommand("sample", "Draw a graph from a block model JSON");
  add_bound(r, sample_bound, "--params", sample.params, "params", "Block model or fixture JSON");
  add_bound(r, sample_bound, "-n,--n", sample.n, "n", "Vertices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    tt::Json file;
    const tt::Json* file_ptr = nullptr;
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path)) {
        throw tt::Error(tt::Errc::io, "cli", "config file not found: '" + config_path + "'");
      }
      file = tt::read_json_file(config_path);
      file_ptr = &file;
    }
    const auto global = resolve(g_cli, g_bound, file_ptr);

    tt::CommandResult result;
    if (c->parsed()) {
      auto cfg = resolve(cluster, cluster_bound, file_ptr);
      if (cfg.graph.empty()) throw tt::Error(tt::Errc::invalid_argument, "cli", "cluster needs --graph");
      result = tt::cmd_cluster(cfg, global);
    } else if (p->parsed()) {
      result = tt::cmd_project(resolve(project, project_bound, file_ptr), global);
    } else if (m->parsed()) {
      result = tt::cmd_chernoff_map(resolve(cmap, cmap_bound, file_ptr), global);
    } else if (e->parsed()) {
      auto cfg = resolve(experiment, experiment_bound, file_ptr);
      if (cfg.fixture.empty()) throw tt::Error(tt::Errc::invalid_argument, "cli", "experiment needs --fixture");
      result = tt::cmd_experiment_two_truths(cfg, global);
    } else if (s->parsed()) {
      auto cfg = resolve(scatter, scatter_bound, file_ptr);
      if (cfg.manifest.empty()) throw tt::Error(tt::Errc::invalid_argument, "cli", "scatter needs --manifest");
      result = tt::cmd_model_selection_scatter(cfg, global);
    } else if (r->parsed()) {
      auto cfg = resolve(sample, sample_bound, file_ptr);
      if (cfg.params.empty()) throw tt::Error(tt::Errc::invalid_argument, "cli", "sample needs --params");
      result = tt::cmd_sample(cfg, global);
    }
    for (const auto& out : result.outputs) std::cout << out.string() << '\n';
    return result.exit_code;
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 2;
  }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twotruths/json_io.hpp"

namespace twotruths {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  std::size_t threads = 0;  // 0 = available cores
};

/// Exit codes: 0 success, 2 fatal error, 3 partial batch failure.
struct CommandResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> outputs;
};

/// "ase", "lse" or "both".
std::vector<EmbeddingMethod> parse_methods(const std::string& name);

struct ClusterConfig {
  std::filesystem::path graph;
  std::optional<std::filesystem::path> labels;
  /// JSON {name: {label: coarse}}; each merge of the labels is an extra truth.
  std::optional<std::filesystem::path> merges;
  std::string method = "both";
  std::optional<std::size_t> d;  // auto when empty
  std::optional<std::size_t> K;  // auto when empty
  std::size_t k_max = 10;
  std::size_t elbow = 1;
  std::size_t scree_max = 100;
};

struct ProjectConfig {
  std::optional<std::filesystem::path> graph;
  std::optional<std::filesystem::path> labels;
  /// Batch manifest "graph_path,label_path,graph_id"; replaces graph/labels.
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> merges;
  double ratio_threshold = 2.0;
};

struct ExperimentConfig {
  std::filesystem::path fixture;
  std::size_t n = 4000;
  std::size_t trials = 50;
  double success_ari = 0.95;
};

struct ChernoffMapConfig {
  double x_min = 0.05, x_max = 1.0;
  double y_min = 0.05, y_max = 1.0;
  std::size_t resolution = 11;  // grid points per axis
  double scale = 0.4;           // max(a, c)
  std::size_t n_big = 4000;
  std::size_t curve_points = 101;
};

struct ScatterConfig {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> merges;
  std::string method = "both";
  std::size_t k_max = 10;
  std::size_t elbow = 1;
  std::size_t scree_max = 100;
};

struct SampleConfig {
  std::filesystem::path params;
  std::size_t n = 1000;
};

Json json_of(const GlobalOptions& g);
Json json_of(const ClusterConfig& c);
Json json_of(const ProjectConfig& c);
Json json_of(const ExperimentConfig& c);
Json json_of(const ChernoffMapConfig& c);
Json json_of(const ScatterConfig& c);
Json json_of(const SampleConfig& c);

/// Overwrite fields with the keys present in j (the resolved-config schema).
void merge_json(const Json& j, GlobalOptions& g);
void merge_json(const Json& j, ClusterConfig& c);
void merge_json(const Json& j, ProjectConfig& c);
void merge_json(const Json& j, ExperimentConfig& c);
void merge_json(const Json& j, ChernoffMapConfig& c);
void merge_json(const Json& j, ScatterConfig& c);
void merge_json(const Json& j, SampleConfig& c);

/// Left/Right and Gray/White merges over the labels LG, LW, RG, RW.
std::map<std::string, LabelMerge> default_hemisphere_merges();

/// Result of one spectral clustering run (embedding, d and K selection, fit).
struct ClusteringRun {
  EmbeddingMethod method = EmbeddingMethod::ase;
  std::vector<Vertex> vertices;  // input vertex ids that were embedded
  Embedding embedding;
  SpectrumSlice spectrum;
  std::optional<ElbowReport> elbow;
  std::optional<KSelectionReport> k_selection;
  gmm::Model model;
  std::vector<std::uint32_t> assignment;
};

struct PipelineOptions {
  std::optional<std::size_t> d;
  std::optional<std::size_t> K;
  std::size_t k_max = 10;
  std::size_t elbow = 1;
  std::size_t scree_max = 100;
  SolverOptions solver;
  gmm::Options gmm;
};

/// GMM o {ASE, LSE}. LSE runs on the largest connected component.
ClusteringRun spectral_cluster(const Graph& g, EmbeddingMethod method, const PipelineOptions& opts,
                               std::uint64_t seed);

struct MethodOutcome {
  std::string method;
  std::size_t embedded_vertices = 0;
  std::size_t d = 0;
  std::size_t K = 0;
  double ari_lr = 0.0;
  double ari_gw = 0.0;
  std::string error;  // nonempty when this pipeline failed
  double wall_seconds = 0.0;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<MethodOutcome> outcomes;  // LSE then ASE
  bool failed() const;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> records;  // one per trial
  std::size_t failed_trials = 0;
  /// success[method][truth] = fraction of trials with ARI > success_ari.
  std::map<std::string, std::map<std::string, double>> success;
  std::map<std::string, std::map<std::string, double>> mean_ari;
  double wall_seconds = 0.0;
};

/// Runs the trials without writing files.
ExperimentReport run_two_truths_experiment(const Fixture& fixture, const ExperimentConfig& cfg,
                                           const GlobalOptions& global);
/// Deterministic fields at the top level; wall times and the timestamp under "timing".
Json json_of(const ExperimentReport& r);

CommandResult cmd_cluster(const ClusterConfig& cfg, const GlobalOptions& global);
CommandResult cmd_project(const ProjectConfig& cfg, const GlobalOptions& global);
CommandResult cmd_experiment_two_truths(const ExperimentConfig& cfg, const GlobalOptions& global);
CommandResult cmd_chernoff_map(const ChernoffMapConfig& cfg, const GlobalOptions& global);
CommandResult cmd_model_selection_scatter(const ScatterConfig& cfg, const GlobalOptions& global);
CommandResult cmd_sample(const SampleConfig& cfg, const GlobalOptions& global);

}  // namespace twotruths

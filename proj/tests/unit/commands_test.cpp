#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "twotruths/commands.hpp"
#include "twotruths/rng.hpp"

using namespace twotruths;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("twotruths_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

SbmParams two_block(double a, double b, double c) {
  SbmParams p;
  p.pi = Eigen::Vector2d(0.5, 0.5);
  p.B.resize(2, 2);
  p.B << a, b, b, c;
  return p;
}

void write_sample(const SampledSbm& s, const fs::path& graph, const fs::path& labels) {
  std::ostringstream g, l;
  write_edge_list(g, s.graph);
  write_labels(l, s.labels);
  write_text_file(graph, g.str());
  write_text_file(labels, l.str());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TWOTRUTHS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kFixture = TWOTRUTHS_FIXTURE_DIR "/two_truths_4block.json";

}  // namespace

TEST_CASE("LSE clustering recovers affinity blocks") {
  std::vector<double> aris;
  PipelineOptions opts;
  opts.d = 2;
  opts.K = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = sample_sbm(two_block(0.4, 0.05, 0.4), 2000, seed);
    const auto run = spectral_cluster(s.graph, EmbeddingMethod::lse, opts, seed);
    std::vector<std::uint32_t> truth;
    for (auto v : run.vertices) truth.push_back(s.block[v]);
    aris.push_back(ari(Partition(run.assignment), Partition(truth)).ari);
  }
  std::nth_element(aris.begin(), aris.begin() + 5, aris.end());
  CHECK(aris[5] > 0.9);
}

TEST_CASE("cluster command writes every artifact") {
  const auto dir = scratch("cluster");
  const auto s = sample_sbm(two_block(0.4, 0.05, 0.4), 2000, 1);
  write_sample(s, dir / "g.edges", dir / "l.csv");
  ClusterConfig cfg;
  cfg.graph = dir / "g.edges";
  cfg.labels = dir / "l.csv";
  cfg.method = "ase";
  cfg.d = 2;
  cfg.K = 2;
  GlobalOptions g;
  g.out_dir = dir / "out";
  const auto r = cmd_cluster(cfg, g);
  CHECK(r.exit_code == 0);
  for (const char* f : {"partition_ase.csv", "model_ase.json", "embedding_ase.csv", "ari_ase.json", "resolved_config.json"}) {
    CHECK_MESSAGE(fs::exists(g.out_dir / f), f);
  }
  CHECK(lines(g.out_dir / "partition_ase.csv").size() == 2001);
  const auto aris = read_json_file(g.out_dir / "ari_ase.json");
  CHECK(aris.contains("labels"));

  SUBCASE("automatic d and K add the selection reports") {
    ClusterConfig auto_cfg = cfg;
    auto_cfg.d.reset();
    auto_cfg.K.reset();
    cmd_cluster(auto_cfg, g);
    const auto elbow = read_json_file(g.out_dir / "elbow_ase.json");
    const auto ks = read_json_file(g.out_dir / "kselect_ase.json");
    CHECK(elbow["chosen_d"].get<int>() >= 1);
    CHECK(ks["chosen_K"].get<int>() >= 1);
    CHECK(ks["chosen_K"].get<int>() <= 10);
  }
}

TEST_CASE("a fixture file can supply the merge maps") {
  const auto dir = scratch("fixture_merges");
  const auto f = load_fixture(kFixture);
  const auto s = sample_sbm(f.params, 2000, 5);
  write_sample(s, dir / "g.edges", dir / "l.csv");
  ClusterConfig cfg;
  cfg.graph = dir / "g.edges";
  cfg.labels = dir / "l.csv";
  cfg.merges = kFixture;
  cfg.d = 2;
  cfg.K = 2;
  GlobalOptions g;
  g.out_dir = dir / "out";
  REQUIRE(cmd_cluster(cfg, g).exit_code == 0);
  const auto lse = read_json_file(g.out_dir / "ari_lse.json");
  const auto ase = read_json_file(g.out_dir / "ari_ase.json");
  for (const auto& j : {lse, ase}) {
    REQUIRE(j.contains("LR"));
    REQUIRE(j.contains("GW"));
    CHECK(std::max(j["LR"]["ari"].get<double>(), j["GW"]["ari"].get<double>()) > 0.95);
  }
}

TEST_CASE("missing graph file exits with code 2 and names the path") {
  const auto missing = (fs::temp_directory_path() / "twotruths_no_such_graph.edges").string();
  ClusterConfig cfg;
  cfg.graph = missing;
  try {
    cmd_cluster(cfg, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  CHECK(run_cli("cluster --graph " + missing) == 2);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("cluster --no-such-flag") == 2);
}

TEST_CASE("project command") {
  const auto dir = scratch("project");
  const auto fixture = load_fixture(kFixture);
  const auto s = sample_sbm(fixture.params, 800, 2);
  write_sample(s, dir / "g.edges", dir / "l.csv");
  Json merges = Json::object();
  for (const auto& [name, m] : fixture.merges) merges[name] = m;
  write_json_file(dir / "merges.json", merges);
  GlobalOptions g;
  g.out_dir = dir / "out";

  SUBCASE("two rows per graph, one per merge") {
    ProjectConfig cfg;
    cfg.graph = dir / "g.edges";
    cfg.labels = dir / "l.csv";
    cfg.merges = dir / "merges.json";
    CHECK(cmd_project(cfg, g).exit_code == 0);
    const auto rows = lines(g.out_dir / "projections.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].find(",LR,2,") != std::string::npos);
    CHECK(rows[2].find(",GW,2,") != std::string::npos);
    CHECK(rows[1].find("affinity") != std::string::npos);
    CHECK(rows[2].find("core-periphery") != std::string::npos);
  }
  SUBCASE("single label gives one block and no EDA point") {
    std::ostringstream l;
    for (std::size_t i = 0; i < 800; ++i) l << i << ",all\n";
    write_text_file(dir / "one.csv", l.str());
    ProjectConfig cfg;
    cfg.graph = dir / "g.edges";
    cfg.labels = dir / "one.csv";
    cmd_project(cfg, g);
    const auto j = read_json_file(g.out_dir / "projections.json");
    REQUIRE(j.size() == 1);
    CHECK(j[0]["params"]["pi"].size() == 1);
    CHECK_FALSE(j[0].contains("eda"));
  }
  SUBCASE("singleton block") {
    write_text_file(dir / "tiny.edges", "0 1\n1 2\n");
    write_text_file(dir / "tiny.csv", "0,a\n1,a\n2,b\n");
    ProjectConfig cfg;
    cfg.graph = dir / "tiny.edges";
    cfg.labels = dir / "tiny.csv";
    CHECK_ERRC(cmd_project(cfg, g), Errc::degenerate_block);
  }
}

TEST_CASE("experiment command") {
  const auto dir = scratch("experiment");
  GlobalOptions g;
  g.out_dir = dir;
  SUBCASE("one trial gives one record") {
    ExperimentConfig cfg;
    cfg.fixture = kFixture;
    cfg.trials = 1;
    cfg.n = 1000;
    CHECK(cmd_experiment_two_truths(cfg, g).exit_code == 0);
    const auto j = read_json_file(dir / "experiment_report.json");
    CHECK(j["records"].size() == 1);
    CHECK(lines(dir / "delta_ari.csv").size() == 2);
  }
  SUBCASE("Erdos-Renyi fixture gives near-zero ARI") {
    auto f = load_fixture(kFixture);
    f.params.B.setConstant(0.1);
    ExperimentConfig cfg;
    cfg.trials = 3;
    cfg.n = 800;
    const auto r = run_two_truths_experiment(f, cfg, g);
    CHECK(r.failed_trials == 0);
    for (const auto& rec : r.records) {
      for (const auto& out : rec.outcomes) {
        CHECK(std::abs(out.ari_lr) < 0.05);
        CHECK(std::abs(out.ari_gw) < 0.05);
      }
    }
  }
  SUBCASE("fixture without merges") {
    auto f = load_fixture(kFixture);
    f.merges.erase("GW");
    CHECK_ERRC(run_two_truths_experiment(f, {}, g), Errc::invalid_argument);
  }
}

TEST_CASE("chernoff-map command") {
  const auto dir = scratch("cmap");
  ChernoffMapConfig cfg;
  cfg.x_min = 0.1;
  cfg.x_max = 1.0;
  cfg.y_min = 0.1;
  cfg.y_max = 1.0;
  cfg.resolution = 2;
  cfg.n_big = 2000;
  GlobalOptions g;
  g.out_dir = dir;
  cmd_chernoff_map(cfg, g);
  const auto rows = lines(dir / "chernoff_map.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "x,y,a,b,c,rho,rho_ase,rho_lse,flag");
  auto field = [](const std::string& row, int k) {
    std::stringstream s(row);
    std::string f;
    for (int i = 0; i <= k; ++i) std::getline(s, f, ',');
    return f;
  };
  // Rows run x-major: (0.1,0.1), (0.1,1), (1,0.1), (1,1).
  CHECK(std::stod(field(rows[1], 5)) > 1.0);
  CHECK(std::stod(field(rows[3], 5)) < 1.0);
  CHECK(field(rows[4], 5).empty());
  CHECK(rows[4].find("erdos_renyi") != std::string::npos);
  CHECK(lines(dir / "sqrt_curve.csv").size() == 102);
}

TEST_CASE("scatter command") {
  const auto dir = scratch("scatter");
  const auto fixture = load_fixture(kFixture);
  for (int i = 0; i < 2; ++i) {
    const auto s = sample_sbm(fixture.params, 600, 10 + static_cast<std::uint64_t>(i));
    write_sample(s, dir / ("g" + std::to_string(i) + ".edges"), dir / ("l" + std::to_string(i) + ".csv"));
  }
  write_text_file(dir / "empty.edges", "# vertices 600\n");
  write_text_file(dir / "manifest.csv", "graph_path,label_path,graph_id\ng0.edges,l0.csv,a\ng1.edges,l1.csv,b\n");
  write_text_file(dir / "manifest_bad.csv", "g0.edges,l0.csv,a\nempty.edges,l1.csv,bad\n");
  GlobalOptions g;
  g.out_dir = dir / "out";
  ScatterConfig cfg;
  cfg.manifest = dir / "manifest.csv";
  SUBCASE("two graphs give four rows with d and K in range") {
    CHECK(cmd_model_selection_scatter(cfg, g).exit_code == 0);
    const auto rows = lines(g.out_dir / "scatter.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "graph_id,method,n,embedded,d_hat,K_hat,ari_LR,ari_GW,status,error");
    const auto j = read_json_file(g.out_dir / "resolved_config.json");
    CHECK(j["command"] == "scatter");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::stringstream s(rows[i]);
      std::vector<std::string> f;
      for (std::string x; std::getline(s, x, ',');) f.push_back(x);
      const int d = std::stoi(f[4]), K = std::stoi(f[5]);
      CHECK(d >= 1);
      CHECK(K >= 1);
      CHECK(K <= 10);
      CHECK(f[8] == "ok");
    }
  }
  SUBCASE("a failing graph is marked and the rest proceed") {
    cfg.manifest = dir / "manifest_bad.csv";
    CHECK(cmd_model_selection_scatter(cfg, g).exit_code == 3);
    const auto rows = lines(g.out_dir / "scatter.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[1].find(",ok,") != std::string::npos);
    CHECK(rows[3].find(",failed,") != std::string::npos);
    CHECK(read_json_file(g.out_dir / "failures.json").size() >= 1);
  }
}

TEST_CASE("commands are deterministic and their config echo round-trips") {
  const auto dir = scratch("determinism");
  const std::string out1 = (dir / "a").string(), out2 = (dir / "b").string(), out3 = (dir / "c").string();
  REQUIRE(run_cli("sample --params " + kFixture.string() + " -n 500 --seed 4 --out-dir " + out1) == 0);
  REQUIRE(run_cli("sample --params " + kFixture.string() + " -n 500 --seed 4 --out-dir " + out2) == 0);
  CHECK(slurp(dir / "a" / "graph.edges") == slurp(dir / "b" / "graph.edges"));
  CHECK(slurp(dir / "a" / "labels.csv") == slurp(dir / "b" / "labels.csv"));

  const std::string graph = (dir / "a" / "graph.edges").string(), labels = (dir / "a" / "labels.csv").string();
  REQUIRE(run_cli("cluster --graph " + graph + " --labels " + labels + " --method lse -d 2 -K 2 --seed 9 --out-dir " +
                  out3) == 0);
  const auto first = slurp(dir / "c" / "partition_lse.csv");
  const std::string out4 = (dir / "d").string();
  REQUIRE(run_cli("--config " + (dir / "c" / "resolved_config.json").string() + " cluster --out-dir " + out4) == 0);
  CHECK(slurp(dir / "d" / "partition_lse.csv") == first);
  CHECK(slurp(dir / "d" / "model_lse.json") == slurp(dir / "c" / "model_lse.json"));
}

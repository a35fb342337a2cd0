#include "twotruths/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "twotruths/error.hpp"

namespace twotruths {

namespace {

constexpr std::string_view kModule = "json";

// Non-finite values become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (auto k : v) s += (s.empty() ? "" : ",") + std::to_string(k);
  return s;
}

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::parse, kModule, what); }

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, kModule, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    bad("'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::io, kModule, "cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw Error(Errc::io, kModule, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

Json json_of(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json json_of(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    a.push_back(row);
  }
  return a;
}

Json json_of(const SbmParams& p) {
  Json j;
  j["pi"] = json_of(p.pi);
  j["B"] = json_of(p.B);
  if (!p.names.empty()) j["names"] = p.names;
  return j;
}

SbmParams sbm_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("pi") || !j.contains("B")) bad("block model needs \"pi\" and \"B\"");
  SbmParams p;
  try {
    const auto pi = j.at("pi").get<std::vector<double>>();
    const auto B = j.at("B").get<std::vector<std::vector<double>>>();
    p.pi = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    p.B.resize(static_cast<Eigen::Index>(B.size()), static_cast<Eigen::Index>(B.size()));
    for (std::size_t i = 0; i < B.size(); ++i) {
      if (B[i].size() != B.size()) bad("\"B\" must be square");
      for (std::size_t k = 0; k < B.size(); ++k) p.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = B[i][k];
    }
    if (j.contains("names")) p.names = j.at("names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("block model: ") + e.what());
  }
  p.validate();
  return p;
}

std::map<std::string, LabelMerge> merges_from_json(const Json& j) {
  std::map<std::string, LabelMerge> out;
  if (!j.is_object()) bad("merges must be an object of {name: {label: coarse}}");
  try {
    for (const auto& [name, m] : j.items()) out[name] = m.get<LabelMerge>();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("merges: ") + e.what());
  }
  return out;
}

Fixture fixture_from_json(const Json& j) {
  Fixture f;
  f.params = sbm_from_json(j);
  if (j.contains("merges")) f.merges = merges_from_json(j.at("merges"));
  return f;
}

Fixture load_fixture(const std::filesystem::path& path) { return fixture_from_json(read_json_file(path)); }

Json json_of(const Fixture& f) {
  Json j = json_of(f.params);
  if (!f.merges.empty()) {
    Json m = Json::object();
    for (const auto& [name, merge] : f.merges) m[name] = merge;
    j["merges"] = m;
  }
  return j;
}

Json json_of(const SpectrumSlice& s) {
  return {{"eigenvalues", numbers(s.eigenvalues)},
          {"residuals", numbers(s.residuals)},
          {"restarts", s.restarts},
          {"matvecs", s.matvecs}};
}

Json json_of(const StructureClass& c) {
  return {{"kind", to_string(c.kind)},
          {"affinity_margin", number(c.affinity_margin)},
          {"core_periphery_margin", number(c.core_periphery_margin)}};
}

Json json_of(const EdaPoint& p) {
  return {{"x", number(p.x)}, {"y", number(p.y)}, {"below_rank_one_curve", p.below_rank_one_curve}};
}

Json json_of(const gmm::Model& m) {
  Json means = Json::array(), covs = Json::array();
  for (const auto& mu : m.means) means.push_back(json_of(mu));
  for (const auto& S : m.covariances) covs.push_back(json_of(S));
  return {{"K", m.components()},
          {"d", m.dim()},
          {"weights", json_of(m.weights)},
          {"means", means},
          {"covariances", covs},
          {"log_likelihood", number(m.log_likelihood)},
          {"converged", m.converged},
          {"iterations", m.iterations},
          {"reg_floor", number(m.reg_floor)},
          {"failed_inits", m.failed_inits}};
}

Json json_of(const ElbowReport& r) {
  return {{"scree", numbers(r.scree)},
          {"profile_ll", numbers(r.profile_ll)},
          {"chosen_d", r.chosen_d},
          {"elbow_index", r.elbow_index},
          {"elbows", r.elbows}};
}

Json json_of(const KSelectionReport& r) {
  Json c = Json::array();
  for (const auto& k : r.candidates) {
    c.push_back({{"K", k.K},
                 {"included", k.included},
                 {"bic", number(k.bic)},
                 {"log_likelihood", number(k.log_likelihood)},
                 {"converged", k.converged},
                 {"note", k.note}});
  }
  return {{"candidates", c}, {"chosen_K", r.chosen_K}, {"model", json_of(r.model)}};
}

Json json_of(const AriResult& r) {
  Json j = {{"ari", number(r.ari)}, {"contingency", r.contingency}};
  if (r.p_value) {
    j["p_value"] = *r.p_value;
    j["n_permutations"] = r.n_permutations;
  }
  return j;
}

Json json_of(const ChernoffResult& r) {
  Json j = {{"value", number(r.value)}, {"t_star", number(r.t_star)}};
  if (!r.h_curve.empty()) {
    Json c = Json::array();
    for (auto [t, h] : r.h_curve) c.push_back({number(t), number(h)});
    j["h_curve"] = c;
  }
  return j;
}

Json json_of(const ChernoffRatio& r) {
  return {{"rho", number(r.rho)}, {"ase", json_of(r.ase)}, {"lse", json_of(r.lse)}};
}

Json json_of(const Gaussian& g) { return {{"mean", json_of(g.mean)}, {"cov", json_of(g.cov)}}; }

Json json_of(const LimitParams& p) {
  Json sample = Json::array(), scaled = Json::array();
  for (const auto& g : p.sample) sample.push_back(json_of(g));
  for (const auto& g : p.scaled) scaled.push_back(json_of(g));
  return {{"method", to_string(p.method)},
          {"n_big", p.n_big},
          {"d", p.d},
          {"seed", p.seed},
          {"embedded_vertices", p.embedded_vertices},
          {"weights", numbers(p.weights)},
          {"block_sizes", p.block_sizes},
          {"cov_scale", number(p.cov_scale)},
          {"sample", sample},
          {"scaled", scaled}};
}

Json json_of(const KlEstimate& k) {
  return {{"value", number(k.value)},
          {"std_error", number(k.std_error)},
          {"n_samples", k.n_samples},
          {"floored", k.floored}};
}

Json json_of(const GroupingReport& r) {
  Json parts = Json::array(), directed = Json::array();
  for (const auto& s : r.partitions) {
    parts.push_back({{"partition", join(s.side_a) + "|" + join(s.side_b)},
                     {"side_a", s.side_a},
                     {"side_b", s.side_b},
                     {"kl_ab", json_of(s.kl_ab)},
                     {"kl_ba", json_of(s.kl_ba)},
                     {"score", number(s.score)}});
  }
  for (const auto& s : r.directed) directed.push_back({{"subset", s.subset}, {"kl", json_of(s.kl)}});
  return {{"method", r.method},
          {"n_samples", r.n_samples},
          {"best", join(r.best().side_a) + "|" + join(r.best().side_b)},
          {"best_directed", r.best_directed().subset},
          {"partitions", parts},
          {"directed", directed}};
}

}  // namespace twotruths

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "twotruths/chernoff.hpp"
#include "twotruths/eval.hpp"
#include "twotruths/gmm.hpp"
#include "twotruths/graph.hpp"
#include "twotruths/model_selection.hpp"
#include "twotruths/sbm.hpp"
#include "twotruths/spectral.hpp"

namespace twotruths {

using Json = nlohmann::ordered_json;

/// Block model plus the named label merges that define its coarse truths.
struct Fixture {
  SbmParams params;
  std::map<std::string, LabelMerge> merges;
};

Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// {"pi": [...], "B": [[...]], "names": [...]}; names omitted when empty.
Json json_of(const SbmParams& p);
SbmParams sbm_from_json(const Json& j);
/// Reads "pi", "B", optional "names" and optional "merges": {name: {fine: coarse}}.
Fixture fixture_from_json(const Json& j);
Fixture load_fixture(const std::filesystem::path& path);
Json json_of(const Fixture& f);
std::map<std::string, LabelMerge> merges_from_json(const Json& j);

Json json_of(const Eigen::VectorXd& v);
Json json_of(const Eigen::MatrixXd& m);
Json json_of(const SpectrumSlice& s);
Json json_of(const StructureClass& c);
Json json_of(const EdaPoint& p);
Json json_of(const gmm::Model& m);
Json json_of(const ElbowReport& r);
Json json_of(const KSelectionReport& r);
Json json_of(const AriResult& r);
Json json_of(const ChernoffResult& r);
Json json_of(const ChernoffRatio& r);
Json json_of(const Gaussian& g);
Json json_of(const LimitParams& p);
Json json_of(const KlEstimate& k);
Json json_of(const GroupingReport& r);

}  // namespace twotruths

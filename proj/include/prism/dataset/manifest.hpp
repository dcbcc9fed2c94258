#ifndef PRISM_DATASET_MANIFEST_HPP
#define PRISM_DATASET_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"
#include "prism/distortions/spec.hpp"
#include "prism/prompts/request.hpp"

namespace prism {

inline constexpr int kManifestSchemaVersion = 1;

enum class Split { train, val, test };

inline std::string_view name(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + std::string(s) + "'");
}

/// One benchmark row. Paths are relative to the manifest's directory.
struct Triplet {
  std::uint64_t id = 0;
  std::uint64_t clean_id = 0;
  std::string clean_path;
  std::string distorted_path;
  std::optional<std::string> depth_path;
  std::string prompt;
  std::vector<DistortionSpec> applied_specs;
  LabelSet applied_labels;
  LabelSet target_labels;
  PromptMode mode = PromptMode::full;
  Split split = Split::train;
  std::uint64_t seed = 0;

  std::vector<DistortionKind> applied_kinds() const { return kinds_of(applied_specs); }

  bool operator==(const Triplet&) const = default;
};

inline nlohmann::json to_json(const Triplet& t) {
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : t.applied_specs) specs.push_back(to_json(s));
  return {{"schema_version", kManifestSchemaVersion},
          {"id", t.id},
          {"clean_id", t.clean_id},
          {"clean_path", t.clean_path},
          {"distorted_path", t.distorted_path},
          {"depth_path", t.depth_path ? nlohmann::json(*t.depth_path) : nlohmann::json(nullptr)},
          {"prompt", t.prompt},
          {"applied_specs", specs},
          {"applied_labels", t.applied_labels.names()},
          {"target_labels", t.target_labels.names()},
          {"mode", name(t.mode)},
          {"split", name(t.split)},
          {"seed", t.seed}};
}

/// Strict: unknown tags, version mismatch and broken label/mode relations are errors.
inline Triplet triplet_from_json(const nlohmann::json& j) {
  Triplet t;
  try {
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion)
      throw ParseError("unsupported schema_version " + j.at("schema_version").dump());
    t.id = j.at("id").get<std::uint64_t>();
    t.clean_id = j.value("clean_id", t.id);
    t.clean_path = j.at("clean_path").get<std::string>();
    t.distorted_path = j.at("distorted_path").get<std::string>();
    if (j.contains("depth_path") && !j.at("depth_path").is_null())
      t.depth_path = j.at("depth_path").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    for (const auto& s : j.at("applied_specs")) t.applied_specs.push_back(spec_from_json(s));
    t.applied_labels = labels_from_names(j.at("applied_labels").get<std::vector<std::string>>());
    t.target_labels = labels_from_names(j.at("target_labels").get<std::vector<std::string>>());
    t.mode = parse_prompt_mode(j.at("mode").get<std::string>());
    t.split = parse_split(j.at("split").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest record: ") + e.what());
  }
  if (t.applied_specs.empty()) throw ParseError("manifest record: no applied specs");
  if (kinds_to_labels(t.applied_kinds()) != t.applied_labels)
    throw ParseError("manifest record: applied_labels disagree with applied_specs");
  if (!satisfies_mode({t.target_labels, t.mode, t.prompt, {}}, t.applied_labels))
    throw ParseError("manifest record: target_labels violate mode " + std::string(name(t.mode)));
  return t;
}

inline void write_manifest(const std::vector<Triplet>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& t : rows) out << to_json(t).dump() << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

inline std::vector<Triplet> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<Triplet> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(triplet_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), lineno);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return rows;
}

inline std::vector<Triplet> filter_split(const std::vector<Triplet>& rows, Split s) {
  std::vector<Triplet> out;
  for (const auto& t : rows)
    if (t.split == s) out.push_back(t);
  return out;
}

}  // namespace prism

#endif

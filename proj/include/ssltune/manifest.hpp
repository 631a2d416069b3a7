#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssltune/codec.hpp"
#include "ssltune/error.hpp"
#include "ssltune/percent.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/templates.hpp"

namespace ssltune {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kManifestFormat = "ssltune-manifest/1";

enum class TaskTag { rotation, colorization, correspondence, external };

inline constexpr std::array<TaskTag, 4> kAllTasks = {TaskTag::rotation, TaskTag::colorization,
                                                     TaskTag::correspondence, TaskTag::external};
inline constexpr std::array<TaskTag, 3> kSslTasks = {TaskTag::rotation, TaskTag::colorization,
                                                     TaskTag::correspondence};

inline constexpr std::string_view to_string(TaskTag t) noexcept {
  switch (t) {
    case TaskTag::rotation: return "rotation";
    case TaskTag::colorization: return "colorization";
    case TaskTag::correspondence: return "correspondence";
    case TaskTag::external: return "external";
  }
  return "external";
}

inline std::optional<TaskTag> parse_task(std::string_view s) noexcept {
  for (TaskTag t : kAllTasks)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

inline constexpr bool is_ssl(TaskTag t) noexcept { return t != TaskTag::external; }

struct Turn {
  std::string from;
  std::string value;

  friend bool operator==(const Turn&, const Turn&) = default;
};

// One image-instruction-response triplet. `instruction` carries one
// "<image>" token per entry in `images`. External records may continue
// with further turns; those are kept verbatim in `extra_turns`.
struct InstructionSample {
  std::string id;
  TaskTag task = TaskTag::external;
  std::vector<std::string> images;
  std::string instruction;
  std::string response;
  std::vector<Turn> extra_turns;
  Json meta = Json::object();
  Json extra = Json::object();  // unrecognized top-level fields of external records

  friend bool operator==(const InstructionSample&, const InstructionSample&) = default;
};

struct TaskCounts {
  std::array<std::uint64_t, 4> values{};

  std::uint64_t& operator[](TaskTag t) noexcept { return values[std::size_t(t)]; }
  std::uint64_t operator[](TaskTag t) const noexcept { return values[std::size_t(t)]; }
  std::uint64_t ssl_total() const noexcept {
    return values[0] + values[1] + values[2];
  }

  friend bool operator==(const TaskCounts&, const TaskCounts&) = default;
};

inline TaskCounts count_tasks(const std::vector<InstructionSample>& samples) {
  TaskCounts c;
  for (const auto& s : samples) ++c[s.task];
  return c;
}

struct ManifestHeader {
  std::string tool_version{kToolVersion};
  std::string kind = "ssl";  // ssl | mixed | external
  std::uint64_t seed = 0;
  std::optional<Percent> rho;
  std::string rng{kRngAlgorithm};
  TaskCounts task_counts;
  Json template_versions = Json::object();
  Json source_digests = Json::object();
  Json config = Json::object();
  Json notes = Json::object();

  friend bool operator==(const ManifestHeader&, const ManifestHeader&) = default;
};

struct DatasetManifest {
  ManifestHeader header;
  std::vector<InstructionSample> samples;

  // Recomputes header.task_counts from the samples.
  void sync_counts() { header.task_counts = count_tasks(samples); }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

namespace detail {

inline Json rho_to_json(const std::optional<Percent>& rho) {
  if (!rho) return nullptr;
  if (rho->denominator() == 1) return rho->numerator();
  return rho->to_double();
}

inline Json sample_to_json(const InstructionSample& s) {
  Json j;
  j["id"] = s.id;
  j["task"] = std::string(to_string(s.task));
  if (s.images.size() == 1)
    j["image"] = s.images.front();
  else if (!s.images.empty())
    j["image"] = s.images;
  Json conv = Json::array();
  conv.push_back({{"from", "human"}, {"value", s.instruction}});
  conv.push_back({{"from", "gpt"}, {"value", s.response}});
  for (const auto& t : s.extra_turns) conv.push_back({{"from", t.from}, {"value", t.value}});
  j["conversations"] = std::move(conv);
  if (is_ssl(s.task) || !s.meta.empty()) j["meta"] = s.meta;
  for (const auto& [k, v] : s.extra.items()) j[k] = v;
  return j;
}

inline Json header_to_json(const ManifestHeader& h) {
  Json j;
  j["format"] = std::string(kManifestFormat);
  j["tool_version"] = h.tool_version;
  j["kind"] = h.kind;
  j["seed"] = h.seed;
  j["rho"] = rho_to_json(h.rho);
  j["rng"] = h.rng;
  Json counts = Json::object();
  for (TaskTag t : kAllTasks) counts[std::string(to_string(t))] = h.task_counts[t];
  j["task_counts"] = std::move(counts);
  j["template_versions"] = h.template_versions;
  j["source_digests"] = h.source_digests;
  j["config"] = h.config;
  j["notes"] = h.notes;
  return j;
}

template <typename T>
T require_field(const Json& obj, const char* key, long record) {
  if (!obj.is_object()) throw SchemaError(record, "", "expected a JSON object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(record, key, "missing");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(record, key, "has the wrong type");
  }
}

inline InstructionSample sample_from_json(const Json& j, long record) {
  if (!j.is_object()) throw SchemaError(record, "", "record is not a JSON object");
  InstructionSample s;
  s.id = require_field<std::string>(j, "id", record);
  if (s.id.empty()) throw SchemaError(record, "id", "empty id");

  if (const auto it = j.find("task"); it != j.end()) {
    if (!it->is_string()) throw SchemaError(record, "task", "must be a string");
    const auto tag = parse_task(it->get<std::string>());
    if (!tag) throw SchemaError(record, "task", "unknown task '" + it->get<std::string>() + "'");
    s.task = *tag;
  }

  if (const auto it = j.find("image"); it != j.end()) {
    if (it->is_string()) {
      s.images.push_back(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& e : *it) {
        if (!e.is_string()) throw SchemaError(record, "image", "entries must be strings");
        s.images.push_back(e.get<std::string>());
      }
    } else {
      throw SchemaError(record, "image", "must be a string or an array of strings");
    }
  }

  const auto conv_it = j.find("conversations");
  if (conv_it == j.end() || !conv_it->is_array())
    throw SchemaError(record, "conversations", "missing or not an array");
  const Json& conv = *conv_it;
  if (conv.size() < 2) throw SchemaError(record, "conversations", "needs at least two turns");
  std::vector<Turn> turns;
  for (const auto& t : conv) {
    if (!t.is_object() || !t.contains("from") || !t.contains("value") ||
        !t["from"].is_string() || !t["value"].is_string())
      throw SchemaError(record, "conversations", "turns need string 'from' and 'value'");
    turns.push_back({t["from"].get<std::string>(), t["value"].get<std::string>()});
  }
  if (turns[0].from != "human") throw SchemaError(record, "conversations", "first turn must be human");
  if (turns[1].from != "gpt") throw SchemaError(record, "conversations", "second turn must be gpt");
  s.instruction = turns[0].value;
  s.response = turns[1].value;
  s.extra_turns.assign(turns.begin() + 2, turns.end());

  if (const auto it = j.find("meta"); it != j.end()) {
    if (!it->is_object()) throw SchemaError(record, "meta", "must be an object");
    s.meta = *it;
  }
  for (const auto& [k, v] : j.items())
    if (k != "id" && k != "task" && k != "image" && k != "conversations" && k != "meta")
      s.extra[k] = v;
  return s;
}

// Invariants shared by every record regardless of origin.
inline void check_sample(const InstructionSample& s, long record) {
  if (s.response.empty()) throw SchemaError(record, "response", "empty response");
  std::size_t tokens = count_image_tokens(s.instruction);
  for (const auto& t : s.extra_turns)
    if (t.from == "human") tokens += count_image_tokens(t.value);
  if (tokens != s.images.size())
    throw SchemaError(record, "conversations",
                      std::to_string(tokens) + " <image> placeholders for " +
                          std::to_string(s.images.size()) + " images");
  if (is_ssl(s.task)) {
    if (s.images.empty() || s.images.size() > 2)
      throw SchemaError(record, "image", "self-supervised samples carry 1 or 2 images");
    if (!s.meta.is_object() || s.meta.empty())
      throw SchemaError(record, "meta", "self-supervised samples need an answer-key record");
  }
}

inline ManifestHeader header_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError(-1, "", "header is not an object");
  ManifestHeader h;
  if (const auto it = j.find("format"); it != j.end() && *it != std::string(kManifestFormat))
    throw SchemaError(-1, "format", "unsupported manifest format");
  h.tool_version = require_field<std::string>(j, "tool_version", -1);
  h.kind = require_field<std::string>(j, "kind", -1);
  h.seed = require_field<std::uint64_t>(j, "seed", -1);
  if (const auto it = j.find("rho"); it != j.end() && !it->is_null()) {
    if (it->is_number_unsigned() || it->is_number_integer()) {
      if (it->get<std::int64_t>() < 0) throw SchemaError(-1, "rho", "must be >= 0");
      h.rho = Percent::parse(std::to_string(it->get<std::int64_t>()));
    } else if (it->is_number_float()) {
      try {
        h.rho = Percent::from_double(it->get<double>());
      } catch (const ConfigError& e) {
        throw SchemaError(-1, "rho", e.what());
      }
    } else {
      throw SchemaError(-1, "rho", "must be a number or null");
    }
  }
  h.rng = require_field<std::string>(j, "rng", -1);
  const Json counts = require_field<Json>(j, "task_counts", -1);
  if (!counts.is_object()) throw SchemaError(-1, "task_counts", "must be an object");
  for (const auto& [k, v] : counts.items()) {
    const auto tag = parse_task(k);
    if (!tag) throw SchemaError(-1, "task_counts", "unknown task '" + k + "'");
    if (!v.is_number_unsigned()) throw SchemaError(-1, "task_counts", "counts must be unsigned");
    h.task_counts[*tag] = v.get<std::uint64_t>();
  }
  auto object_or_empty = [&](const char* key) -> Json {
    const auto it = j.find(key);
    if (it == j.end()) return Json::object();
    if (!it->is_object()) throw SchemaError(-1, key, "must be an object");
    return *it;
  };
  h.template_versions = object_or_empty("template_versions");
  h.source_digests = object_or_empty("source_digests");
  h.config = object_or_empty("config");
  h.notes = object_or_empty("notes");
  return h;
}

}  // namespace detail

inline Json manifest_to_json(const DatasetManifest& m) {
  Json j;
  j["header"] = detail::header_to_json(m.header);
  Json samples = Json::array();
  for (const auto& s : m.samples) samples.push_back(detail::sample_to_json(s));
  j["samples"] = std::move(samples);
  return j;
}

// Canonical serialization: fixed key order, two-space indent, raw UTF-8,
// trailing newline.
inline std::string dump_manifest(const DatasetManifest& m) {
  return manifest_to_json(m).dump(2, ' ', false) + "\n";
}

// Parses and validates. Accepts either the full {header, samples} form or
// a bare array of conversation records; the latter gets a synthesized
// header of kind "external".
inline DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  const Json* records = nullptr;
  bool synthesized = false;
  if (j.is_array()) {
    records = &j;
    synthesized = true;
    m.header.kind = "external";
  } else if (j.is_object()) {
    if (!j.contains("header")) throw SchemaError(-1, "header", "missing");
    if (!j.contains("samples") || !j["samples"].is_array())
      throw SchemaError(-1, "samples", "missing or not an array");
    m.header = detail::header_from_json(j["header"]);
    records = &j["samples"];
  } else {
    throw SchemaError(-1, "", "manifest must be a JSON object or array");
  }

  std::unordered_set<std::string> ids;
  m.samples.reserve(records->size());
  for (std::size_t i = 0; i < records->size(); ++i) {
    InstructionSample s = detail::sample_from_json((*records)[i], long(i));
    detail::check_sample(s, long(i));
    if (!ids.insert(s.id).second) throw SchemaError(long(i), "id", "duplicate id '" + s.id + "'");
    m.samples.push_back(std::move(s));
  }

  const TaskCounts observed = count_tasks(m.samples);
  if (synthesized) {
    m.header.task_counts = observed;
  } else if (!(observed == m.header.task_counts)) {
    for (TaskTag t : kAllTasks)
      if (observed[t] != m.header.task_counts[t])
        throw SchemaError(-1, "task_counts",
                          std::string(to_string(t)) + " declared " +
                              std::to_string(m.header.task_counts[t]) + ", observed " +
                              std::to_string(observed[t]));
  }
  return m;
}

inline DatasetManifest parse_manifest(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(-1, "", std::string("invalid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  const std::string text = dump_manifest(m);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ssltune

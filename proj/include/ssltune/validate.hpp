#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "ssltune/colorization.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/rotation.hpp"

namespace ssltune {

struct AnswerKeyMismatch {
  std::size_t index = 0;
  std::string id;
  TaskTag task = TaskTag::external;
  std::string expected;  // response re-derived from meta, empty if underivable
  std::string actual;
  std::string reason;
};

struct AnswerKeyReport {
  std::size_t checked = 0;
  std::vector<AnswerKeyMismatch> mismatches;

  bool ok() const noexcept { return mismatches.empty(); }
};

namespace detail {

struct MetaError {
  std::string reason;
};

inline const Json& meta_field(const Json& meta, const char* key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw MetaError{std::string("meta.") + key + " missing"};
  return *it;
}

inline int meta_int(const Json& meta, const char* key) {
  const Json& v = meta_field(meta, key);
  if (!v.is_number_integer()) throw MetaError{std::string("meta.") + key + " is not an integer"};
  return v.get<int>();
}

inline Rgb meta_rgb(const Json& v) {
  if (!v.is_array() || v.size() != 3) throw MetaError{"rgb must be a 3-element array"};
  Rgb c;
  std::uint8_t* ch[3] = {&c.r, &c.g, &c.b};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number_integer() || v[i].get<int>() < 0 || v[i].get<int>() > 255)
      throw MetaError{"rgb channel out of range"};
    *ch[i] = std::uint8_t(v[i].get<int>());
  }
  return c;
}

inline Point meta_point(const Json& v) {
  if (!v.is_object() || !v.contains("x") || !v.contains("y") || !v["x"].is_number_integer() ||
      !v["y"].is_number_integer())
    throw MetaError{"point must be {x, y} integers"};
  return {v["x"].get<int>(), v["y"].get<int>()};
}

inline std::string derive_rotation(const InstructionSample& s) {
  const int theta = meta_int(s.meta, "theta");
  if (std::find(kRotationAngles.begin(), kRotationAngles.end(), theta) == kRotationAngles.end())
    throw MetaError{"meta.theta is not one of 0, 90, 180, 270"};
  return std::to_string(theta);
}

inline std::string derive_colorization(const InstructionSample& s) {
  const Json& points = meta_field(s.meta, "points");
  const Json& cands = meta_field(s.meta, "candidates");
  const Json& perm = meta_field(s.meta, "permutation");
  if (!points.is_array() || !cands.is_array() || !perm.is_array())
    throw MetaError{"points, candidates and permutation must be arrays"};
  const std::size_t K = points.size();
  if (K < 2 || cands.size() != K || perm.size() != K)
    throw MetaError{"points, candidates and permutation disagree in length"};

  std::vector<Rgb> truth(K);
  for (std::size_t k = 0; k < K; ++k) {
    truth[k] = meta_rgb(meta_field(points[k], "rgb"));
    const Json& label = meta_field(points[k], "label");
    if (!label.is_string() || label.get<std::string>() != point_label(int(k)))
      throw MetaError{"point labels must run A, B, C, ..."};
  }
  std::vector<bool> used(K, false);
  for (std::size_t j = 0; j < K; ++j) {
    if (!perm[j].is_number_integer()) throw MetaError{"permutation entries must be integers"};
    const int p = perm[j].get<int>();
    if (p < 0 || std::size_t(p) >= K || used[std::size_t(p)])
      throw MetaError{"permutation is not a permutation of 0..K-1"};
    used[std::size_t(p)] = true;
    const Rgb shown = meta_rgb(meta_field(cands[j], "rgb"));
    if (!(shown == truth[std::size_t(p)]))
      throw MetaError{"candidate " + std::to_string(j + 1) + " does not hold its point's color"};
    const Json& name = meta_field(cands[j], "name");
    if (!name.is_string()) throw MetaError{"candidate name must be a string"};
    if (s.instruction.find(format_candidate(int(j + 1), shown, name.get<std::string>())) ==
        std::string::npos)
      throw MetaError{"candidate " + std::to_string(j + 1) + " is not listed in the instruction"};
  }

  // Independent of the permutation: locate each true color in the list.
  std::vector<int> slot_of_point(K);
  for (std::size_t k = 0; k < K; ++k) {
    int found = -1;
    for (std::size_t j = 0; j < K; ++j)
      if (meta_rgb(cands[j]["rgb"]) == truth[k]) {
        if (found != -1) throw MetaError{"ambiguous candidate colors"};
        found = int(j) + 1;
      }
    if (found == -1) throw MetaError{"a point's color is missing from the candidates"};
    slot_of_point[k] = found;
    const Json& index = meta_field(points[k], "index");
    if (!index.is_number_integer() || index.get<int>() != found)
      throw MetaError{"meta.points[" + std::to_string(k) + "].index disagrees with candidates"};
  }
  return format_color_answer(slot_of_point);
}

inline std::string derive_correspondence(const InstructionSample& s) {
  const int answer = meta_int(s.meta, "answer");
  if (answer < 0 || answer > 2) throw MetaError{"meta.answer must be 0, 1 or 2"};
  const Json& cands = meta_field(s.meta, "candidates");
  if (!cands.is_array() || cands.size() != 3) throw MetaError{"meta.candidates needs 3 points"};
  const Point target = meta_point(meta_field(s.meta, "target"));
  const Json& distractors = meta_field(s.meta, "distractors");
  if (!distractors.is_array() || distractors.size() != 2)
    throw MetaError{"meta.distractors needs 2 points"};
  std::vector<Point> expected_set = {target, meta_point(distractors[0]),
                                     meta_point(distractors[1])};
  std::vector<Point> shown = {meta_point(cands[0]), meta_point(cands[1]), meta_point(cands[2])};
  if (!(shown[std::size_t(answer)] == target))
    throw MetaError{"candidate at the answer index is not the target"};
  auto key = [](Point p) { return std::pair(p.y, p.x); };
  auto less = [&](Point a, Point b) { return key(a) < key(b); };
  std::sort(expected_set.begin(), expected_set.end(), less);
  std::sort(shown.begin(), shown.end(), less);
  if (expected_set != shown)
    throw MetaError{"candidates are not a permutation of target and distractors"};
  return std::to_string(answer);
}

}  // namespace detail

// Re-derives every self-supervised response from its answer-key record and
// reports disagreements. External samples are not checked.
inline AnswerKeyReport validate_answer_keys(const DatasetManifest& m) {
  AnswerKeyReport report;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    if (!is_ssl(s.task)) continue;
    ++report.checked;
    std::string expected;
    std::string reason;
    try {
      switch (s.task) {
        case TaskTag::rotation: expected = detail::derive_rotation(s); break;
        case TaskTag::colorization: expected = detail::derive_colorization(s); break;
        case TaskTag::correspondence: expected = detail::derive_correspondence(s); break;
        case TaskTag::external: break;
      }
    } catch (const detail::MetaError& e) {
      reason = e.reason;
    } catch (const nlohmann::json::exception& e) {
      reason = std::string("malformed meta: ") + e.what();
    }
    if (reason.empty() && expected == s.response) continue;
    if (reason.empty()) reason = "response disagrees with answer key";
    report.mismatches.push_back({i, s.id, s.task, expected, s.response, reason});
  }
  return report;
}

}  // namespace ssltune

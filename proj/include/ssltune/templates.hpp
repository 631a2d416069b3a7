#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ssltune/codec.hpp"
#include "ssltune/error.hpp"

namespace ssltune {

inline constexpr std::string_view kImageToken = "<image>";

// Instruction text with `{name}` placeholders. Literal braces are not
// supported; every `{...}` is a placeholder.
struct PromptTemplate {
  std::string task;
  std::string version;
  std::string text;

  std::set<std::string> placeholders() const {
    std::set<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
      const std::size_t end = text.find('}', pos);
      if (end == std::string::npos)
        throw TemplateError(task + "/" + version + ": unterminated placeholder");
      names.insert(text.substr(pos + 1, end - pos - 1));
      pos = end + 1;
    }
    return names;
  }

  // Throws unless every name in `required` appears in the text.
  void require(const std::vector<std::string>& required) const {
    const auto have = placeholders();
    for (const auto& name : required)
      if (!have.contains(name))
        throw TemplateError(task + "/" + version + ": missing placeholder {" + name + "}");
  }

  std::string render(const std::map<std::string, std::string>& vars) const {
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const std::size_t open = text.find('{', pos);
      if (open == std::string::npos) {
        out.append(text, pos);
        break;
      }
      const std::size_t close = text.find('}', open);
      if (close == std::string::npos)
        throw TemplateError(task + "/" + version + ": unterminated placeholder");
      out.append(text, pos, open - pos);
      const std::string name = text.substr(open + 1, close - open - 1);
      const auto it = vars.find(name);
      if (it == vars.end())
        throw TemplateError(task + "/" + version + ": no value for placeholder {" + name + "}");
      out += it->second;
      pos = close + 1;
    }
    return out;
  }
};

// Prefixes one image token per image, each followed by a newline.
inline std::string with_image_tokens(std::size_t n_images, std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i < n_images; ++i) {
    out += kImageToken;
    out += '\n';
  }
  out += body;
  return out;
}

inline std::size_t count_image_tokens(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(kImageToken); pos != std::string_view::npos;
       pos = text.find(kImageToken, pos + kImageToken.size()))
    ++n;
  return n;
}

namespace templates {

inline constexpr std::string_view kDefaultVersion = "v1";

inline const std::vector<std::string>& required_placeholders(std::string_view task) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> color = {"labels", "candidates", "answer_format"};
  if (task == "colorization") return color;
  return none;
}

inline PromptTemplate builtin(std::string_view task) {
  if (task == "rotation")
    return {"rotation", "v1",
            "The image may have been rotated clockwise by a multiple of 90 degrees. What is the "
            "rotation angle of this image? Answer with one of: 0, 90, 180, 270."};
  if (task == "colorization")
    return {"colorization", "v1",
            "This is a grayscale version of a color photo. The red circles mark points labeled "
            "{labels}. Below is a shuffled, numbered list of the colors these points had before "
            "the grayscale conversion (mean RGB over a small neighborhood):\n{candidates}\n"
            "Match each labeled point to the number of its original color. Answer in the format "
            "{answer_format}."};
  if (task == "correspondence-side-by-side")
    return {"correspondence-side-by-side", "v1",
            "The image shows two views side by side. In the left view a query point on an object "
            "is marked with a red circle labeled Q. In the right view three candidate points are "
            "marked with red circles labeled 0, 1 and 2. Which candidate point corresponds to the "
            "same location on the object as the query point? Answer with a single digit: 0, 1 or "
            "2."};
  if (task == "correspondence-multi-image")
    return {"correspondence-multi-image", "v1",
            "In the first image a query point on an object is marked with a red circle labeled Q. "
            "In the second image three candidate points are marked with red circles labeled 0, 1 "
            "and 2. Which candidate point corresponds to the same location on the object as the "
            "query point? Answer with a single digit: 0, 1 or 2."};
  throw TemplateError("no built-in template for task '" + std::string(task) + "'");
}

// Reads `<dir>/<task>_<version>.txt` (trailing newlines stripped) and
// checks the generator's required placeholders.
inline PromptTemplate load(const std::filesystem::path& dir, std::string_view task,
                           std::string_view version = kDefaultVersion) {
  const auto path = dir / (std::string(task) + "_" + std::string(version) + ".txt");
  const auto bytes = read_file(path);
  std::string text(bytes.begin(), bytes.end());
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  PromptTemplate tpl{std::string(task), std::string(version), std::move(text)};
  tpl.require(required_placeholders(task));
  return tpl;
}

// Loads from `dir` when given, otherwise the built-in text.
inline PromptTemplate resolve(const std::filesystem::path& dir, std::string_view task) {
  if (dir.empty()) return builtin(task);
  return load(dir, task);
}

}  // namespace templates

}  // namespace ssltune

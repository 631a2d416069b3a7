#pragma once

// Command-line driver. Every subcommand is a pure function of its
// configuration, seed and input files; thread count never changes output.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ssltune/codec.hpp"
#include "ssltune/colorization.hpp"
#include "ssltune/correspondence.hpp"
#include "ssltune/digest.hpp"
#include "ssltune/error.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/mixer.hpp"
#include "ssltune/parallel.hpp"
#include "ssltune/rotation.hpp"
#include "ssltune/templates.hpp"
#include "ssltune/validate.hpp"
#include "ssltune/views.hpp"

#ifndef SSLTUNE_DEFAULT_VOCAB
#define SSLTUNE_DEFAULT_VOCAB "assets/xkcd_colors.csv"
#endif

namespace ssltune::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> n;
  std::string corpus;
  std::string out;
  std::string templates;
  std::string vocab = SSLTUNE_DEFAULT_VOCAB;
  std::string pairs;
  std::string layout = "side-by-side";
  std::string base;
  std::vector<std::string> ssl;
  std::string rho = "0";
  std::string tasks = "rotation,colorization,correspondence";
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  ColorTaskConfig color;
  ViewConfig views;
  unsigned threads = default_threads();
};

namespace detail {

template <typename T>
T config_value(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline Range config_range(const Json& j, const char* key) {
  const auto v = config_value<std::vector<double>>(j, key);
  if (v.size() != 2) throw ConfigError(std::string("config key '") + key + "' needs [lo, hi]");
  return {v[0], v[1]};
}

inline std::string rho_string(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned() || v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return Percent::from_double(v.get<double>()).to_string();
  throw ConfigError("config key 'rho' must be a number");
}

// Overlays a JSON config file onto `cfg`. Unknown keys are rejected.
inline void apply_config(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") cfg.seed = config_value<std::uint64_t>(j, "seed");
    else if (key == "n") cfg.n = config_value<std::uint64_t>(j, "n");
    else if (key == "corpus") cfg.corpus = config_value<std::string>(j, "corpus");
    else if (key == "out") cfg.out = config_value<std::string>(j, "out");
    else if (key == "templates") cfg.templates = config_value<std::string>(j, "templates");
    else if (key == "vocab") cfg.vocab = config_value<std::string>(j, "vocab");
    else if (key == "pairs") cfg.pairs = config_value<std::string>(j, "pairs");
    else if (key == "layout") cfg.layout = config_value<std::string>(j, "layout");
    else if (key == "base") cfg.base = config_value<std::string>(j, "base");
    else if (key == "ssl") cfg.ssl = config_value<std::vector<std::string>>(j, "ssl");
    else if (key == "rho") cfg.rho = rho_string(v);
    else if (key == "tasks") cfg.tasks = config_value<std::string>(j, "tasks");
    else if (key == "threads") cfg.threads = std::max(1u, config_value<unsigned>(j, "threads"));
    else if (key == "weights") {
      if (!v.is_object()) throw ConfigError("config key 'weights' must be an object");
      for (const auto& [task, w] : v.items()) {
        const auto tag = parse_task(task);
        if (!tag || !is_ssl(*tag)) throw ConfigError("unknown task weight '" + task + "'");
        if (!w.is_number()) throw ConfigError("task weights must be numbers");
        cfg.weights[std::size_t(*tag)] = w.get<double>();
      }
    } else if (key == "colorization") {
      if (!v.is_object()) throw ConfigError("config key 'colorization' must be an object");
      for (const auto& [k, _] : v.items()) {
        if (k == "K") cfg.color.K = config_value<int>(v, "K");
        else if (k == "r") cfg.color.r = config_value<int>(v, "r");
        else if (k == "delta") cfg.color.delta = config_value<double>(v, "delta");
        else if (k == "margin") cfg.color.margin = config_value<int>(v, "margin");
        else if (k == "max_attempts") cfg.color.max_attempts = config_value<int>(v, "max_attempts");
        else throw ConfigError("unknown colorization key '" + k + "'");
      }
    } else if (key == "views") {
      if (!v.is_object()) throw ConfigError("config key 'views' must be an object");
      for (const auto& [k, _] : v.items()) {
        if (k == "area_range") cfg.views.area_range = config_range(v, "area_range");
        else if (k == "ar_range") cfg.views.ar_range = config_range(v, "ar_range");
        else if (k == "out_size") cfg.views.out_size = config_value<int>(v, "out_size");
        else if (k == "flip_prob") cfg.views.flip_prob = config_value<double>(v, "flip_prob");
        else if (k == "brightness") cfg.views.jitter.brightness = config_range(v, "brightness");
        else if (k == "contrast") cfg.views.jitter.contrast = config_range(v, "contrast");
        else if (k == "saturation") cfg.views.jitter.saturation = config_range(v, "saturation");
        else if (k == "hue") cfg.views.jitter.hue = config_range(v, "hue");
        else throw ConfigError("unknown views key '" + k + "'");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

inline std::array<bool, 3> parse_task_list(const std::string& list) {
  std::array<bool, 3> enabled{false, false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto tag = parse_task(item);
    if (!tag || !is_ssl(*tag)) throw ConfigError("unknown task '" + item + "'");
    enabled[std::size_t(*tag)] = true;
  }
  return enabled;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Images under `root`, sorted by their generic relative path.
inline std::vector<std::string> scan_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("corpus " + root.string() + " is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower(entry.path().extension().string());
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      out.push_back(entry.path().lexically_relative(root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string zero_pad(std::uint64_t v, int width = 6) {
  std::string s = std::to_string(v);
  if (int(s.size()) < width) s.insert(0, std::size_t(width) - s.size(), '0');
  return s;
}

enum class Outcome { ok, skipped, failed };

struct WorkItem {
  Outcome outcome = Outcome::failed;
  GeneratedSample generated;
  std::vector<std::vector<std::uint8_t>> pngs;
  std::string source;
  std::string source_digest;
  std::string message;
};

struct GenerationResult {
  std::vector<InstructionSample> samples;
  std::uint64_t attempts = 0;
  std::map<std::string, std::uint64_t> skipped;
  std::vector<std::pair<std::string, std::string>> sources;  // first-use order
};

// Runs `make(attempt)` in parallel batches and consumes results strictly in
// attempt order until `n` samples exist. Attempt a always uses the same
// input and RNG stream, so output is independent of batching and threads.
// Fails when a full `cycle` of consecutive attempts yields nothing.
template <typename Make>
GenerationResult generate(std::string_view task, std::uint64_t n, std::uint64_t cycle,
                          unsigned threads, const fs::path& out_dir, Make&& make) {
  GenerationResult res;
  fs::create_directories(out_dir / "images");
  std::map<std::string, bool> seen_sources;
  std::uint64_t since_success = 0;
  const std::uint64_t batch = std::max<std::uint64_t>(64, std::uint64_t(threads) * 8);
  std::uint64_t attempt = 0;
  while (res.samples.size() < n) {
    const std::uint64_t remaining = n - res.samples.size();
    const std::uint64_t size = std::min(batch, std::max<std::uint64_t>(remaining, 1));
    std::vector<WorkItem> items(size);
    parallel_for(size, threads, [&](std::size_t i) { items[i] = make(attempt + i); });
    for (std::uint64_t i = 0; i < size && res.samples.size() < n; ++i) {
      WorkItem& item = items[i];
      ++res.attempts;
      if (item.outcome == Outcome::failed)
        throw Error("attempt " + std::to_string(attempt + i) + " (" + item.source +
                    "): " + item.message);
      if (item.outcome == Outcome::skipped) {
        ++res.skipped[item.message];
        if (++since_success >= cycle)
          throw Error("no usable " + std::string(task) + " input in " + std::to_string(cycle) +
                      " consecutive attempts (last: " + item.source + ")");
        continue;
      }
      since_success = 0;
      InstructionSample s = std::move(item.generated.sample);
      s.id = std::string(task) + "-" + zero_pad(res.samples.size());
      s.images.clear();
      for (std::size_t k = 0; k < item.pngs.size(); ++k) {
        const std::string ref = "images/" + s.id +
                                (item.pngs.size() > 1 ? "-" + std::to_string(k + 1) : "") + ".png";
        write_file(out_dir / ref, item.pngs[k]);
        s.images.push_back(ref);
      }
      if (!seen_sources.contains(item.source)) {
        seen_sources[item.source] = true;
        res.sources.emplace_back(item.source, item.source_digest);
      }
      res.samples.push_back(std::move(s));
    }
    attempt += size;
  }
  return res;
}

inline std::string sources_digest(const std::vector<std::pair<std::string, std::string>>& sources) {
  std::string lines;
  for (const auto& [ref, digest] : sources) lines += ref + "\t" + digest + "\n";
  return sha256_hex(lines);
}

inline DatasetManifest ssl_manifest(TaskTag task, const RunConfig& cfg, GenerationResult res,
                                    Json config, Json template_versions, Json digests) {
  DatasetManifest m;
  m.header.kind = "ssl";
  m.header.seed = cfg.seed;
  m.header.template_versions = std::move(template_versions);
  m.header.source_digests = std::move(digests);
  m.header.config = std::move(config);
  Json skipped = Json::object();
  for (const auto& [reason, count] : res.skipped) skipped[reason] = count;
  m.header.notes = Json{{"task", std::string(to_string(task))},
                        {"attempts", res.attempts},
                        {"sources_used", res.sources.size()},
                        {"skipped", std::move(skipped)}};
  m.samples = std::move(res.samples);
  m.sync_counts();
  return m;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

inline WorkItem encode_item(GeneratedSample g, std::string source, std::string digest) {
  WorkItem item;
  item.outcome = Outcome::ok;
  for (const auto& img : g.images) item.pngs.push_back(encode_png(img));
  g.images.clear();
  item.generated = std::move(g);
  item.source = std::move(source);
  item.source_digest = std::move(digest);
  return item;
}

inline int cmd_gen_rotation(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "--corpus");
  require(cfg.out, "--out");
  const fs::path root(cfg.corpus);
  const auto corpus = scan_corpus(root);
  if (corpus.empty()) throw Error("corpus " + cfg.corpus + " holds no PNG/JPEG images");
  const PromptTemplate tpl = templates::resolve(cfg.templates, "rotation");
  const std::uint64_t n = cfg.n.value_or(corpus.size());
  const fs::path out_dir(cfg.out);

  auto res = generate("rotation", n, corpus.size(), cfg.threads, out_dir, [&](std::uint64_t a) {
    const std::string& ref = corpus[a % corpus.size()];
    WorkItem item;
    item.source = ref;
    try {
      const auto bytes = read_file(root / ref);
      RngStream rng = RngStream::derive(cfg.seed, "rotation", a);
      return encode_item(gen_rotation_sample(ref, decode_image(bytes), rng, tpl), ref,
                         sha256_hex(bytes));
    } catch (const std::exception& e) {
      item.outcome = Outcome::failed;
      item.message = e.what();
    }
    return item;
  });

  Json config{{"command", "gen-rotation"}, {"seed", cfg.seed},      {"n", n},
              {"corpus", cfg.corpus},      {"templates", cfg.templates}};
  const Json digests{{"corpus", sources_digest(res.sources)}};
  const auto m = ssl_manifest(TaskTag::rotation, cfg, std::move(res), std::move(config),
                              Json{{"rotation", tpl.version}}, digests);
  write_manifest(m, out_dir / "manifest.json");
  out << "wrote " << m.samples.size() << " rotation samples to " << (out_dir / "manifest.json").string()
      << "\n";
  return kExitOk;
}

inline Json color_config_json(const ColorTaskConfig& c) {
  return Json{{"K", c.K}, {"r", c.r}, {"delta", c.delta}, {"margin", c.margin},
              {"max_attempts", c.max_attempts}};
}

inline int cmd_gen_color(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "--corpus");
  require(cfg.out, "--out");
  cfg.color.validate();
  const fs::path root(cfg.corpus);
  const auto corpus = scan_corpus(root);
  if (corpus.empty()) throw Error("corpus " + cfg.corpus + " holds no PNG/JPEG images");
  const auto vocab_bytes = read_file(cfg.vocab);
  const ColorVocab vocab = ColorVocab::parse_csv(
      std::string_view(reinterpret_cast<const char*>(vocab_bytes.data()), vocab_bytes.size()));
  const PromptTemplate tpl = templates::resolve(cfg.templates, "colorization");
  const std::uint64_t n = cfg.n.value_or(corpus.size());
  const fs::path out_dir(cfg.out);

  auto res = generate("colorization", n, corpus.size(), cfg.threads, out_dir, [&](std::uint64_t a) {
    const std::string& ref = corpus[a % corpus.size()];
    WorkItem item;
    item.source = ref;
    try {
      const auto bytes = read_file(root / ref);
      const ImageBuffer img = decode_image(bytes);
      RngStream rng = RngStream::derive(cfg.seed, "colorization", a);
      return encode_item(gen_color_sample(ref, img, vocab, cfg.color, rng, tpl), ref,
                         sha256_hex(bytes));
    } catch (const GrayscaleSource&) {
      item.outcome = Outcome::skipped;
      item.message = "grayscale";
    } catch (const RejectionExhausted&) {
      item.outcome = Outcome::skipped;
      item.message = "rejection_exhausted";
    } catch (const DegenerateImage&) {
      item.outcome = Outcome::skipped;
      item.message = "too_small";
    } catch (const std::exception& e) {
      item.outcome = Outcome::failed;
      item.message = e.what();
    }
    return item;
  });

  Json config{{"command", "gen-color"},  {"seed", cfg.seed},
              {"n", n},                  {"corpus", cfg.corpus},
              {"vocab", cfg.vocab},      {"templates", cfg.templates},
              {"colorization", color_config_json(cfg.color)}};
  const Json digests{{"corpus", sources_digest(res.sources)}, {"vocab", sha256_hex(vocab_bytes)}};
  const auto m = ssl_manifest(TaskTag::colorization, cfg, std::move(res), std::move(config),
                              Json{{"colorization", tpl.version}}, digests);
  write_manifest(m, out_dir / "manifest.json");
  out << "wrote " << m.samples.size() << " colorization samples to "
      << (out_dir / "manifest.json").string() << "\n";
  return kExitOk;
}

inline int cmd_gen_corr(const RunConfig& cfg, std::ostream& out) {
  require(cfg.pairs, "--pairs");
  require(cfg.out, "--out");
  const CorrLayout layout = parse_layout(cfg.layout);
  const fs::path pairs_path(cfg.pairs);
  const auto pairs = read_pair_manifest(pairs_path);
  if (pairs.empty()) throw Error("pair manifest " + cfg.pairs + " is empty");
  const fs::path base_dir = pairs_path.parent_path();
  const std::string tpl_task = layout == CorrLayout::side_by_side ? "correspondence-side-by-side"
                                                                  : "correspondence-multi-image";
  const PromptTemplate tpl = templates::resolve(cfg.templates, tpl_task);
  const std::uint64_t n = cfg.n.value_or(pairs.size());
  const fs::path out_dir(cfg.out);

  auto res = generate("correspondence", n, pairs.size(), cfg.threads, out_dir, [&](std::uint64_t a) {
    const std::size_t p = a % pairs.size();
    const auto& rec = pairs[p];
    WorkItem item;
    item.source = "pair " + std::to_string(p) + " (" + rec.image1 + ", " + rec.image2 + ")";
    try {
      const PairData data = load_pair(rec, base_dir);
      RngStream rng = RngStream::derive(cfg.seed, "correspondence", a);
      auto g = gen_corr_sample(data, layout, rng, tpl);
      g.sample.meta["pair_index"] = p;
      return encode_item(std::move(g), item.source, "");
    } catch (const RegionTooSmall&) {
      item.outcome = Outcome::skipped;
      item.message = "region_too_small";
    } catch (const EmptyRegion&) {
      item.outcome = Outcome::skipped;
      item.message = "empty_region";
    } catch (const std::exception& e) {
      item.outcome = Outcome::failed;
      item.message = e.what();
    }
    return item;
  });

  Json config{{"command", "gen-corr"}, {"seed", cfg.seed},       {"n", n},
              {"pairs", cfg.pairs},    {"layout", cfg.layout},   {"templates", cfg.templates}};
  const Json digests{{"pairs", sha256_hex(read_file(pairs_path))}};
  const auto m = ssl_manifest(TaskTag::correspondence, cfg, std::move(res), std::move(config),
                              Json{{tpl_task, tpl.version}}, digests);
  write_manifest(m, out_dir / "manifest.json");
  out << "wrote " << m.samples.size() << " correspondence samples to "
      << (out_dir / "manifest.json").string() << "\n";
  return kExitOk;
}

inline int cmd_gen_views(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "--corpus");
  require(cfg.out, "--out");
  ViewConfig vc = cfg.views;
  if (!cfg.n) throw UsageError("--n (number of views) is required");
  vc.n_views = *cfg.n;
  vc.validate();
  const auto bytes = read_file(cfg.corpus);
  const ImageBuffer img = decode_image(bytes);
  const fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);

  std::vector<Json> logs(vc.n_views);
  parallel_for(vc.n_views, cfg.threads, [&](std::size_t i) {
    View v = gen_view_at(img, vc, cfg.seed, i);
    write_png(v.image, out_dir / ("view_" + zero_pad(i) + ".png"));
    logs[i] = view_log_json(v.log);
  });

  Json doc{{"tool_version", std::string(kToolVersion)},
           {"rng", std::string(kRngAlgorithm)},
           {"seed", cfg.seed},
           {"source", cfg.corpus},
           {"source_digest", sha256_hex(bytes)},
           {"source_width", img.width()},
           {"source_height", img.height()},
           {"config", view_config_json(vc)},
           {"views", logs}};
  const std::string text = doc.dump(2) + "\n";
  write_file(out_dir / "views.json",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  out << "wrote " << vc.n_views << " views to " << out_dir.string() << "\n";
  return kExitOk;
}

// Re-roots a manifest-relative image path so it resolves from `to_dir`.
inline std::string rebase_path(const std::string& ref, const fs::path& from_dir,
                               const fs::path& to_dir) {
  const fs::path p(ref);
  if (p.is_absolute()) return ref;
  const fs::path abs = fs::absolute(from_dir / p).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(to_dir).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

// `path` (relative to the working directory or absolute) expressed
// relative to `dir`.
inline std::string relative_to(const std::string& path, const fs::path& dir) {
  const fs::path abs = fs::absolute(path).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(dir).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

inline int cmd_mix(const RunConfig& cfg, std::ostream& out) {
  require(cfg.base, "--base");
  require(cfg.out, "--out");
  MixConfig mc;
  mc.rho = Percent::parse(cfg.rho);
  mc.enabled = parse_task_list(cfg.tasks);
  mc.weights = cfg.weights;
  mc.seed = cfg.seed;
  mc.validate();

  const fs::path out_path(cfg.out);
  const fs::path out_dir = out_path.parent_path();
  const DatasetManifest base = read_manifest(cfg.base);
  std::vector<InstructionSample> pool;
  Json template_versions = Json::object();
  Json ssl_digests = Json::array();
  for (const auto& path : cfg.ssl) {
    const DatasetManifest m = read_manifest(path);
    const fs::path from_dir = fs::path(path).parent_path();
    for (auto s : m.samples) {
      for (auto& img : s.images) img = rebase_path(img, from_dir, out_dir);
      pool.push_back(std::move(s));
    }
    for (const auto& [k, v] : m.header.template_versions.items()) template_versions[k] = v;
    ssl_digests.push_back(sha256_hex(read_file(path)));
  }

  const std::uint64_t n_ssl = ssl_count(mc.rho, base.samples.size());
  const TaskAllocation alloc = allocate_tasks(n_ssl, mc);
  DatasetManifest d_ssl;
  try {
    d_ssl.samples = select_ssl(pool, alloc);
  } catch (const ConfigError& e) {
    throw Error(e.what());
  }
  d_ssl.sync_counts();

  // Input paths are recorded relative to the output file, like image paths.
  Json ssl_refs = Json::array();
  for (const auto& path : cfg.ssl) ssl_refs.push_back(relative_to(path, out_dir));
  Json weights = Json::object();
  Json allocation = Json::object();
  for (TaskTag t : kSslTasks) {
    weights[std::string(to_string(t))] = mc.enabled[std::size_t(t)] ? mc.weights[std::size_t(t)] : 0.0;
    allocation[std::string(to_string(t))] = alloc[std::size_t(t)];
  }
  Json config{{"command", "mix"},       {"seed", cfg.seed}, {"rho", mc.rho.to_string()},
              {"tasks", cfg.tasks},     {"weights", weights}, {"allocation", allocation},
              {"base", relative_to(cfg.base, out_dir)}, {"ssl", ssl_refs}};
  if (fs::path(cfg.out).has_parent_path()) fs::create_directories(out_dir);
  DatasetManifest mixed = mix(base, d_ssl, cfg.seed, mc.rho, std::move(config));
  mixed.header.template_versions = std::move(template_versions);
  mixed.header.source_digests["base_file"] = sha256_hex(read_file(cfg.base));
  mixed.header.source_digests["ssl_files"] = std::move(ssl_digests);
  write_manifest(mixed, out_path);
  out << "mixed " << base.samples.size() << " base + " << d_ssl.samples.size()
      << " SSL samples (rho=" << mc.rho.to_string() << "%) into " << out_path.string() << "\n";
  return kExitOk;
}

// Decimal rendering of 100 * num / den with six fractional digits,
// computed in integers.
inline std::string percent_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return "undefined";
  const unsigned __int128 scaled = static_cast<unsigned __int128>(num) * 100 * 1000000;
  const auto q = std::uint64_t(scaled / den);
  std::string frac = std::to_string(q % 1000000);
  frac.insert(0, 6 - frac.size(), '0');
  return std::to_string(q / 1000000) + "." + frac;
}

inline std::uint64_t instruction_count(const DatasetManifest& m) {
  if (m.header.notes.contains("n_inst") && m.header.notes["n_inst"].is_number_unsigned())
    return m.header.notes["n_inst"].get<std::uint64_t>();
  return m.header.task_counts[TaskTag::external];
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  DatasetManifest m;
  try {
    m = read_manifest(path);
  } catch (const SchemaError& e) {
    err << "invalid manifest " << path << ": " << e.what() << "\n";
    return kExitData;
  }
  const auto report = validate_answer_keys(m);
  for (const auto& mm : report.mismatches)
    err << "record " << mm.index << " (" << mm.id << ", " << to_string(mm.task)
        << "): " << mm.reason << "; expected '" << mm.expected << "', got '" << mm.actual
        << "'\n";
  bool rho_ok = true;
  if (m.header.rho) {
    const std::uint64_t n_inst = instruction_count(m);
    const std::uint64_t want = ssl_count(*m.header.rho, n_inst);
    if (m.header.task_counts.ssl_total() != want) {
      rho_ok = false;
      err << "header: rho=" << m.header.rho->to_string() << "% of " << n_inst << " requires "
          << want << " SSL samples, found " << m.header.task_counts.ssl_total() << "\n";
    }
  }
  if (!report.ok() || !rho_ok) {
    if (!report.ok())
      err << "first failing record: " << report.mismatches.front().index << " ("
          << report.mismatches.front().id << ")\n";
    return kExitData;
  }
  out << "OK " << path << ": " << m.samples.size() << " samples, " << report.checked
      << " answer keys verified\n";
  return kExitOk;
}

inline int cmd_stats(const std::string& path, std::ostream& out) {
  const DatasetManifest m = read_manifest(path);
  const auto& c = m.header.task_counts;
  out << "manifest: " << path << "\n";
  out << "kind: " << m.header.kind << "\n";
  out << "samples: " << m.samples.size() << "\n";
  for (TaskTag t : kAllTasks) out << "  " << to_string(t) << ": " << c[t] << "\n";
  const std::uint64_t n_inst = instruction_count(m);
  const std::uint64_t n_ssl = c.ssl_total();
  out << "n_inst: " << n_inst << "\n";
  out << "n_ssl: " << n_ssl << "\n";
  out << "realized_rho: " << percent_ratio(n_ssl, n_inst) << " (100 * " << n_ssl << " / "
      << n_inst << ")\n";
  if (m.header.rho) {
    out << "declared_rho: " << m.header.rho->to_string() << "\n";
    out << "declared_rho_budget: " << ssl_count(*m.header.rho, n_inst) << "\n";
  }

  std::array<std::uint64_t, 4> angles{};
  std::array<std::uint64_t, 3> answers{};
  double min_color_dist = -1.0;
  int min_edge = -1;
  for (const auto& s : m.samples) {
    try {
      if (s.task == TaskTag::rotation) {
        const int theta = s.meta.at("theta").get<int>();
        if (theta % 90 == 0 && theta >= 0 && theta < 360) ++angles[std::size_t(theta / 90)];
      } else if (s.task == TaskTag::correspondence) {
        const int a = s.meta.at("answer").get<int>();
        if (a >= 0 && a < 3) ++answers[std::size_t(a)];
      } else if (s.task == TaskTag::colorization) {
        const Json& pts = s.meta.at("points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const Rgb ci = ssltune::detail::meta_rgb(pts[i]["rgb"]);
          for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double d = std::sqrt(double(rgb_distance2(ci, ssltune::detail::meta_rgb(pts[j]["rgb"]))));
            if (min_color_dist < 0 || d < min_color_dist) min_color_dist = d;
          }
          const int e = std::min(pts[i]["x"].get<int>(), pts[i]["y"].get<int>());
          if (min_edge < 0 || e < min_edge) min_edge = e;
        }
      }
    } catch (const nlohmann::json::exception&) {
      // malformed meta is reported by `validate`
    } catch (const ssltune::detail::MetaError&) {
    }
  }
  if (c[TaskTag::rotation])
    out << "rotation_angles: 0=" << angles[0] << " 90=" << angles[1] << " 180=" << angles[2]
        << " 270=" << angles[3] << "\n";
  if (c[TaskTag::colorization]) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", min_color_dist);
    out << "colorization_min_pairwise_rgb_distance: " << buf << "\n";
    out << "colorization_min_top_left_offset: " << min_edge << "\n";
  }
  if (c[TaskTag::correspondence])
    out << "correspondence_answers: 0=" << answers[0] << " 1=" << answers[1] << " 2=" << answers[2]
        << "\n";
  const auto report = validate_answer_keys(m);
  out << "answer_key_mismatches: " << report.mismatches.size() << "\n";
  return kExitOk;
}

}  // namespace detail

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"ssltune: self-supervised instruction sample generation and mixing"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RunConfig flags;
  std::string config_path;
  std::string manifest_path;
  std::uint64_t n_flag = 0;
  std::string rho_flag;
  std::vector<CLI::Option*> given;

  auto add = [&](CLI::App* sub, const std::string& name) {
    CLI::Option* o = nullptr;
    if (name == "--seed") o = sub->add_option("--seed", flags.seed, "64-bit seed (default 0)");
    else if (name == "--n") o = sub->add_option("--n", n_flag, "number of samples / views");
    else if (name == "--corpus") o = sub->add_option("--corpus", flags.corpus, "image directory (or image file for gen-views)");
    else if (name == "--out") o = sub->add_option("--out", flags.out, "output directory (file for mix)");
    else if (name == "--templates") o = sub->add_option("--templates", flags.templates, "template directory");
    else if (name == "--vocab") o = sub->add_option("--vocab", flags.vocab, "color vocabulary CSV");
    else if (name == "--pairs") o = sub->add_option("--pairs", flags.pairs, "pair manifest JSON");
    else if (name == "--layout") o = sub->add_option("--layout", flags.layout, "side-by-side | multi-image")->check(CLI::IsMember({"side-by-side", "multi-image"}));
    else if (name == "--rho") o = sub->add_option("--rho", rho_flag, "SSL injection ratio in percent");
    else if (name == "--tasks") o = sub->add_option("--tasks", flags.tasks, "comma-separated SSL tasks");
    else if (name == "--base") o = sub->add_option("--base", flags.base, "base instruction manifest");
    else if (name == "--ssl") o = sub->add_option("--ssl", flags.ssl, "SSL manifest (repeatable)");
    else if (name == "--threads") o = sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    else if (name == "--config") {
      sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
      return;
    }
    given.push_back(o);
  };

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> flags;
  };
  const std::vector<Sub> subs = {
      {"gen-rotation", "generate rotation-prediction samples",
       {"--corpus", "--n", "--seed", "--out", "--templates", "--config", "--threads"}},
      {"gen-color", "generate point-wise colorization samples",
       {"--corpus", "--n", "--seed", "--out", "--vocab", "--templates", "--config", "--threads"}},
      {"gen-corr", "generate point-correspondence samples",
       {"--pairs", "--n", "--seed", "--out", "--layout", "--templates", "--config", "--threads"}},
      {"gen-views", "synthesize augmented views from one image",
       {"--corpus", "--n", "--seed", "--out", "--config", "--threads"}},
      {"mix", "inject SSL samples into a base manifest at ratio rho",
       {"--base", "--ssl", "--rho", "--tasks", "--seed", "--out", "--config"}},
  };
  std::map<std::string, CLI::App*> commands;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    for (const auto& f : s.flags) add(sub, f);
    commands[s.name] = sub;
  }
  for (const char* name : {"validate", "stats"}) {
    CLI::App* sub = app.add_subcommand(
        name, std::string(name) == "validate" ? "check schema and answer keys"
                                              : "print per-task counts and realized rho");
    sub->add_option("manifest", manifest_path, "manifest JSON")->required();
    commands[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string command;
  for (const auto& [name, sub] : commands)
    if (sub->parsed()) command = name;

  try {
    if (command == "validate") return detail::cmd_validate(manifest_path, out, err);
    if (command == "stats") return detail::cmd_stats(manifest_path, out);

    // defaults < config file < flags
    RunConfig cfg;
    if (!config_path.empty()) {
      const auto bytes = read_file(config_path);
      Json j;
      try {
        j = Json::parse(bytes.begin(), bytes.end());
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
      detail::apply_config(cfg, j);
    }
    auto was_given = [&](const std::string& name) {
      return std::any_of(given.begin(), given.end(), [&](CLI::Option* o) {
        return o && o->count() > 0 && o->get_name() == name;
      });
    };
    if (was_given("--seed")) cfg.seed = flags.seed;
    if (was_given("--n")) cfg.n = n_flag;
    if (was_given("--corpus")) cfg.corpus = flags.corpus;
    if (was_given("--out")) cfg.out = flags.out;
    if (was_given("--templates")) cfg.templates = flags.templates;
    if (was_given("--vocab")) cfg.vocab = flags.vocab;
    if (was_given("--pairs")) cfg.pairs = flags.pairs;
    if (was_given("--layout")) cfg.layout = flags.layout;
    if (was_given("--rho")) cfg.rho = rho_flag;
    if (was_given("--tasks")) cfg.tasks = flags.tasks;
    if (was_given("--base")) cfg.base = flags.base;
    if (was_given("--ssl")) cfg.ssl = flags.ssl;
    if (was_given("--threads")) cfg.threads = flags.threads;

    if (command == "gen-rotation") return detail::cmd_gen_rotation(cfg, out);
    if (command == "gen-color") return detail::cmd_gen_color(cfg, out);
    if (command == "gen-corr") return detail::cmd_gen_corr(cfg, out);
    if (command == "gen-views") return detail::cmd_gen_views(cfg, out);
    if (command == "mix") return detail::cmd_mix(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TemplateError& e) {
    err << "template error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << "unknown command\n";
  return kExitUsage;
}

}  // namespace ssltune::cli

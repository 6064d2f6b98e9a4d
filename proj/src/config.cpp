#include "sonicforge/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sonicforge/errors.hpp"
#include "sonicforge/rng.hpp"
#include "sonicforge/toy_sources.hpp"

namespace sonicforge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, v));
  }
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string unescape(const std::string& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '\\' && i + 1 < v.size()) {
      ++i;
      out += v[i] == 'n' ? '\n' : v[i];
    } else {
      out += v[i];
    }
  }
  return out;
}

std::string escape(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (c == '\n') out += "\\n";
    else if (c == '\\') out += "\\\\";
    else out += c;
  }
  return out;
}

std::filesystem::path resolve(const std::string& v, const std::filesystem::path& base) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string source_spec(const std::string& v, const std::filesystem::path& base) {
  return v == "toy" ? v : resolve(v, base).string();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value,
                    const std::filesystem::path& base) {
  const std::string v = trim(value);
  BinThresholds& th = build.thresholds;
  MarginTable& mg = build.margins;
  auto num = [&] { return to_double(key, v); };

  if (key == "seed") {
    seed = to_u64(key, v);
    build.seed = seed;
  } else if (key == "per_cell") {
    per_cell = to_u64(key, v);
    if (per_cell == 0) throw ConfigError("per_cell must be positive");
    build.per_cell = per_cell;
  } else if (key == "workers") {
    const auto w = to_u64(key, v);
    if (w == 0 || w > 1024) throw ConfigError("workers must be in [1, 1024]");
    workers = static_cast<int>(w);
  } else if (key == "out") {
    out = resolve(v, base);
  } else if (key == "pool") {
    pool = source_spec(v, base);
  } else if (key == "ir_bank") {
    ir_bank = source_spec(v, base);
  } else if (key == "pool_seed") {
    pool_seed = to_u64(key, v);
  } else if (key == "session_lufs") {
    build.session_lufs = num();
  } else if (key == "attributes") {
    build.attributes.clear();
    if (v == "all") {
      build.attributes.assign(kAllAttributes.begin(), kAllAttributes.end());
    } else {
      for (const auto& a : split_list(v)) build.attributes.push_back(parse_attribute(a));
    }
    if (build.attributes.empty()) throw ConfigError("attributes is empty");
  } else if (key == "tasks") {
    build.tasks.clear();
    for (const auto& t : split_list(v)) build.tasks.push_back(parse_task(t));
    if (build.tasks.empty()) throw ConfigError("tasks is empty");
  } else if (key == "threshold.pitch") {
    th.pitch_midi = num();
  } else if (key == "threshold.loudness") {
    th.loudness_lufs = num();
  } else if (key == "threshold.velocity") {
    th.velocity = num();
  } else if (key == "threshold.duration") {
    th.duration_s = num();
  } else if (key == "threshold.tempo") {
    th.tempo_bpm = num();
  } else if (key == "margin.pitch") {
    mg.pitch_semitones = num();
  } else if (key == "margin.loudness") {
    mg.loudness_lu = num();
  } else if (key == "margin.velocity") {
    mg.velocity = num();
  } else if (key == "margin.duration") {
    mg.duration_ratio = num();
  } else if (key == "margin.tempo") {
    mg.tempo_ratio = num();
  } else if (key == "margin.count") {
    mg.count_delta = static_cast<int>(to_u64(key, v));
  } else if (key == "held.lufs") {
    build.held.lufs_lu = num();
  } else if (key == "held.duration") {
    build.held.duration_rel = num();
  } else if (key == "held.f0") {
    build.held.f0_rel = num();
  } else if (key == "guard.pitch") {
    build.guards.pitch_semitones = num();
  } else if (key == "guard.loudness") {
    build.guards.loudness_lu = num();
  } else if (key == "guard.velocity") {
    build.guards.velocity = num();
  } else if (key == "guard.duration") {
    build.guards.duration_s = num();
  } else if (key == "guard.tempo") {
    build.guards.tempo_bpm = num();
  } else if (key.rfind("template.", 0) == 0) {
    // template.<attribute>.<task> = text, "\n" for line breaks
    const auto rest = key.substr(9);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ConfigError("template key needs <attribute>.<task>: " + key);
    const Attribute a = parse_attribute(rest.substr(0, dot));
    const Task t = parse_task(rest.substr(dot + 1));
    const std::string text = unescape(v);
    if (text.find("{a}") == std::string::npos || text.find("{b}") == std::string::npos) {
      throw ConfigError(key + ": template must contain {a} and {b}");
    }
    const Template& old = build.templates.get(a, t);
    const std::string id =
        old.text == text ? old.id
                         : fmt::format("{}-{}-custom-{:08x}", to_string(a),
                                       t == Task::Recognition ? "rec" : "cmp",
                                       static_cast<std::uint32_t>(hash_name(text)));
    build.templates.set(a, t, {id, text});
  } else if (key == "generate.attribute") {
    generate.attribute = parse_attribute(v);
  } else if (key == "generate.task") {
    generate.task = parse_task(v);
  } else if (key == "generate.input") {
    generate.input = resolve(v, base);
  } else if (key == "generate.input_b") {
    generate.input_b = v.empty() ? std::filesystem::path{} : resolve(v, base);
  } else if (key == "generate.magnitude") {
    generate.magnitude = num();
  } else if (key == "generate.reference") {
    if (v.empty() || v == "default") generate.reference.reset();
    else generate.reference = num();
  } else if (key == "generate.label") {
    generate.label = v;
  } else if (key == "generate.label_b") {
    generate.label_b = v;
  } else if (key == "generate.distractor") {
    generate.distractor = v;
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

std::string RunConfig::resolved() const {
  std::string s;
  auto line = [&](const std::string& k, const auto& v) { s += fmt::format("{} = {}\n", k, v); };
  const auto& th = build.thresholds;
  const auto& mg = build.margins;
  line("seed", seed);
  line("per_cell", per_cell);
  line("workers", workers);
  line("out", out.string());
  line("pool", pool);
  line("ir_bank", ir_bank);
  line("pool_seed", pool_seed);
  line("session_lufs", build.session_lufs);
  std::vector<std::string> names;
  for (auto a : build.attributes) names.emplace_back(to_string(a));
  line("attributes", fmt::format("{}", fmt::join(names, ",")));
  names.clear();
  for (auto t : build.tasks) names.emplace_back(to_string(t));
  line("tasks", fmt::format("{}", fmt::join(names, ",")));
  line("threshold.pitch", th.pitch_midi);
  line("threshold.loudness", th.loudness_lufs);
  line("threshold.velocity", th.velocity);
  line("threshold.duration", th.duration_s);
  line("threshold.tempo", th.tempo_bpm);
  line("margin.pitch", mg.pitch_semitones);
  line("margin.loudness", mg.loudness_lu);
  line("margin.velocity", mg.velocity);
  line("margin.duration", mg.duration_ratio);
  line("margin.tempo", mg.tempo_ratio);
  line("margin.count", mg.count_delta);
  line("held.lufs", build.held.lufs_lu);
  line("held.duration", build.held.duration_rel);
  line("held.f0", build.held.f0_rel);
  line("guard.pitch", build.guards.pitch_semitones);
  line("guard.loudness", build.guards.loudness_lu);
  line("guard.velocity", build.guards.velocity);
  line("guard.duration", build.guards.duration_s);
  line("guard.tempo", build.guards.tempo_bpm);
  for (auto a : kAllAttributes) {
    for (auto t : {Task::Recognition, Task::Comparison}) {
      if (!build.templates.contains(a, t)) continue;
      line(fmt::format("template.{}.{}", to_string(a), to_string(t)),
           escape(build.templates.get(a, t).text));
    }
  }
  line("generate.attribute", to_string(generate.attribute));
  line("generate.task", to_string(generate.task));
  line("generate.input", generate.input.string());
  line("generate.input_b", generate.input_b.string());
  line("generate.magnitude", generate.magnitude);
  line("generate.reference",
       generate.reference ? fmt::format("{}", *generate.reference) : std::string("default"));
  line("generate.label", generate.label);
  line("generate.label_b", generate.label_b);
  line("generate.distractor", generate.distractor);
  return s;
}

RunConfig default_run_config() {
  RunConfig cfg;
  if (const char* env = std::getenv("SONIC_FORGE_SEED"); env && *env) {
    cfg.set("seed", env);
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
  RunConfig cfg = default_run_config();
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1), base);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

Sources load_sources(const RunConfig& cfg) {
  Sources s;
  s.pool = cfg.pool == "toy" ? make_toy_pool(cfg.pool_seed) : load_pool_manifest(cfg.pool);
  s.bank = cfg.ir_bank == "toy" ? make_toy_ir_bank(cfg.pool_seed) : load_ir_bank(cfg.ir_bank);
  return s;
}

}  // namespace sonicforge

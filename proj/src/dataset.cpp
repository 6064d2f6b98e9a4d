#include "sonicforge/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sonicforge/errors.hpp"

namespace sonicforge {
namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const TransformConfig& t) {
  return json{{"kind", to_string(t.kind)},
              {"label", t.label},
              {"magnitude", t.magnitude},
              {"seed", t.seed}};
}

json to_json(const StimulusRecipe& s) {
  json ops = json::array();
  for (const auto& t : s.ops) ops.push_back(to_json(t));
  return json{{"final_lufs", opt(s.final_lufs)},
              {"label", s.label},
              {"ops", ops},
              {"pre_lufs", opt(s.pre_lufs)},
              {"source", s.source},
              {"value", s.value}};
}

json to_json(const TaskItem& item) {
  json stimuli = json::array();
  for (const auto& s : item.stimuli) stimuli.push_back(to_json(s));
  json provenance{{"distractor", item.distractor},
                  {"gold", item.gold},
                  {"index", item.index},
                  {"seed", item.seed},
                  {"stimuli", stimuli},
                  {"subject", item.subject},
                  {"target_segment", item.target_segment},
                  {"template_id", item.template_id}};
  return json{{"answer", std::string(1, item.answer)},
              {"attribute", to_string(item.attribute)},
              {"audio_path", item.audio_path},
              {"id", item.id},
              {"instruction", item.instruction},
              {"option_a", item.option_a},
              {"option_b", item.option_b},
              {"provenance", provenance},
              {"split", item.split},
              {"task", to_string(item.task)}};
}

std::optional<double> get_opt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

TaskItem from_json(const json& j) {
  TaskItem item;
  item.id = j.at("id").get<std::string>();
  item.task = parse_task(j.at("task").get<std::string>());
  item.attribute = parse_attribute(j.at("attribute").get<std::string>());
  item.audio_path = j.at("audio_path").get<std::string>();
  item.instruction = j.at("instruction").get<std::string>();
  item.option_a = j.at("option_a").get<std::string>();
  item.option_b = j.at("option_b").get<std::string>();
  const auto answer = j.at("answer").get<std::string>();
  if (answer != "A" && answer != "B") throw FormatError(item.id + ": answer must be A or B");
  item.answer = answer[0];
  item.split = j.at("split").get<std::string>();
  const json& p = j.at("provenance");
  item.distractor = p.at("distractor").get<std::string>();
  item.gold = p.at("gold").get<std::string>();
  item.index = p.at("index").get<std::size_t>();
  item.seed = p.at("seed").get<std::uint64_t>();
  item.subject = p.at("subject").get<std::string>();
  item.target_segment = p.at("target_segment").get<int>();
  item.template_id = p.at("template_id").get<std::string>();
  for (const auto& s : p.at("stimuli")) {
    StimulusRecipe r;
    r.source = s.at("source").get<std::string>();
    r.label = s.at("label").get<std::string>();
    r.value = s.at("value").get<double>();
    r.pre_lufs = get_opt(s, "pre_lufs");
    r.final_lufs = get_opt(s, "final_lufs");
    for (const auto& o : s.at("ops")) {
      r.ops.push_back({parse_attribute(o.at("kind").get<std::string>()),
                       o.at("magnitude").get<double>(), o.at("seed").get<std::uint64_t>(),
                       o.at("label").get<std::string>()});
    }
    item.stimuli.push_back(std::move(r));
  }
  return item;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string item_to_json(const TaskItem& item) { return to_json(item).dump(); }

TaskItem item_from_json(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed item JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed item JSON: ") + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string render_index_csv(const std::vector<TaskItem>& items) {
  std::string s = "id,attribute,task,audio_path,answer,split\n";
  for (const auto& it : items) {
    s += fmt::format("{},{},{},{},{},{}\n", csv_field(it.id), to_string(it.attribute),
                     to_string(it.task), csv_field(it.audio_path), it.answer, csv_field(it.split));
  }
  return s;
}

void emit_dataset(std::vector<TaskItem> items, const std::filesystem::path& out_dir) {
  std::sort(items.begin(), items.end(),
            [](const TaskItem& a, const TaskItem& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].id == items[i - 1].id) throw IntegrityError("duplicate item id " + items[i].id);
  }
  for (const auto& it : items) {
    if (!std::filesystem::is_regular_file(out_dir / it.audio_path)) {
      throw IntegrityError(fmt::format("{} references missing audio {}", it.id, it.audio_path));
    }
  }
  json array = json::array();
  std::string lines;
  for (const auto& it : items) {
    json j = to_json(it);
    lines += j.dump() + "\n";
    array.push_back(std::move(j));
  }
  write_atomic(out_dir / "annotations.json", array.dump(2) + "\n");
  write_atomic(out_dir / "annotations.jsonl", lines);
  write_atomic(out_dir / "index.csv", render_index_csv(items));
}

std::vector<TaskItem> load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "annotations.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const json j = json::parse(ss.str());
    if (!j.is_array()) throw FormatError(path.string() + " is not a JSON array");
    std::vector<TaskItem> items;
    for (const auto& e : j) items.push_back(from_json(e));
    return items;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

BuildResult plan_dataset(const BuildConfig& config, const RenderContext& ctx) {
  BuildResult result;
  for (auto a : config.attributes) {
    for (auto t : config.tasks) {
      try {
        auto cell = plan_cell(a, t, config, ctx);
        std::move(cell.begin(), cell.end(), std::back_inserter(result.items));
      } catch (const PoolExhaustedError& e) {
        result.failures.push_back({a, t, e.what()});
      } catch (const ConfigError& e) {
        result.failures.push_back({a, t, e.what()});
      }
    }
  }
  result.items = balance_answers(std::move(result.items), config.seed);
  for (auto& it : result.items) {
    it.instruction = fill_template(config.templates.get(it.attribute, it.task), it.option_a,
                                   it.option_b, it.subject);
  }
  std::sort(result.items.begin(), result.items.end(),
            [](const TaskItem& x, const TaskItem& y) { return x.id < y.id; });
  return result;
}

BuildResult build_dataset(const BuildConfig& config, const RenderContext& ctx,
                          const std::filesystem::path& out_dir, int workers) {
  auto result = plan_dataset(config, ctx);
  render_audio(result.items, ctx, out_dir, workers);
  emit_dataset(result.items, out_dir);
  return result;
}

}  // namespace sonicforge

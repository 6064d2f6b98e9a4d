#include "sonicforge/evaluator.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>
#include <sstream>

#include "sonicforge/errors.hpp"

namespace sonicforge {

const std::array<std::string_view, kPatternCount> kAnswerPatterns = {
    R"(^\s*([ab])\s*[.)]?\s*$)",
    R"(\boption\s*[:\-]?\s*([ab])\b)",
    R"(\banswer\s*[:\-]?\s*([ab])\b)",
    R"(^\s*\(?\s*([ab])\s*\)?\s*$)",
    R"(\b([ab])\b)",
};

namespace {

const std::array<std::regex, kPatternCount>& compiled() {
  static const std::array<std::regex, kPatternCount> re = [] {
    std::array<std::regex, kPatternCount> out;
    for (int k = 0; k < kPatternCount; ++k) {
      out[k] = std::regex(std::string(kAnswerPatterns[k]),
                          std::regex::ECMAScript | std::regex::icase);
    }
    return out;
  }();
  return re;
}

std::string strip(std::string_view s) {
  constexpr std::string_view ws = " \t\n\v\f\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<Choice> letter(const std::string& s) {
  if (s == "a") return Choice::A;
  if (s == "b") return Choice::B;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::A: return "A";
    case Choice::B: return "B";
    default: return "abstain";
  }
}

std::optional<Choice> match_pattern(int k, std::string_view text) {
  if (k < 1 || k > kPatternCount) throw ArgumentError(fmt::format("no pattern {}", k));
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, compiled()[k - 1])) return std::nullopt;
  return letter(lower(m[1].str()));
}

std::optional<std::pair<int, Choice>> first_pattern(std::string_view text) {
  for (int k = 1; k <= kPatternCount; ++k) {
    if (auto c = match_pattern(k, text)) return std::make_pair(k, *c);
  }
  return std::nullopt;
}

Extraction extract_answer_detail(std::string_view raw_text) {
  const std::string s = lower(strip(raw_text));
  if (auto c = letter(s)) return {*c, 1, 0};
  std::string cleaned = s;
  for (char& c : cleaned) {
    if (std::string_view("()[]{}.:-").find(c) != std::string_view::npos) c = ' ';
  }
  if (auto c = letter(strip(cleaned))) return {*c, 2, 0};
  if (auto p = first_pattern(s)) return {p->second, 3, p->first};
  return {};
}

Choice extract_answer(std::string_view raw_text) { return extract_answer_detail(raw_text).choice; }

EvalReport score(const std::vector<TaskItem>& dataset, const std::vector<ModelResponse>& responses) {
  if (dataset.empty()) throw InputError("cannot score an empty dataset");
  std::map<std::string, const ModelResponse*> by_id;
  for (const auto& r : responses) {
    if (!by_id.emplace(r.item_id, &r).second) {
      throw InputError("duplicate response for item " + r.item_id);
    }
  }
  std::set<std::string> known;
  for (const auto& it : dataset) known.insert(it.id);
  for (const auto& [id, r] : by_id) {
    if (!known.count(id)) throw InputError("response for unknown item " + id);
  }
  EvalReport report;
  for (const auto& it : dataset) {
    const auto found = by_id.find(it.id);
    const Choice c = found == by_id.end() ? Choice::Abstain : extract_answer(found->second->raw_text);
    CellScore& cell = report.per_cell[{it.attribute, it.task}];
    for (CellScore* s : {&cell, &report.overall}) {
      ++s->total;
      if (c == Choice::Abstain) ++s->abstained;
      else if ((c == Choice::A ? 'A' : 'B') == it.answer) ++s->correct;
    }
  }
  for (auto a : kAllAttributes) {
    const auto r = report.per_cell.find({a, Task::Recognition});
    const auto c = report.per_cell.find({a, Task::Comparison});
    if (r == report.per_cell.end() || c == report.per_cell.end()) continue;
    const double R = r->second.accuracy(), C = c->second.accuracy();
    report.deltas[a] = R > 0.0 ? std::optional<double>((C - R) / R) : std::nullopt;
  }
  return report;
}

std::string format_delta(const std::optional<double>& delta) {
  if (!delta) return "n/a";
  // One decimal, half away from zero.
  const double pct = std::round(*delta * 1000.0 + (*delta >= 0 ? 1e-9 : -1e-9)) / 10.0;
  return fmt::format("{:+.1f}%", pct == 0.0 ? 0.0 : pct);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "table" || name == "table-text" || name == "txt") return ReportFormat::Table;
  if (name == "csv") return ReportFormat::Csv;
  throw ConfigError(fmt::format("unknown report format '{}'", name));
}

namespace {

std::string fixed4(double v) { return fmt::format("{:.4f}", v); }

std::string render_json(const EvalReport& rep) {
  using nlohmann::ordered_json;
  auto cell_json = [](const CellScore& s) {
    return ordered_json{{"total", s.total},
                        {"correct", s.correct},
                        {"abstained", s.abstained},
                        {"accuracy", fixed4(s.accuracy())},
                        {"abstention_rate", fixed4(s.abstention_rate())}};
  };
  ordered_json cells = ordered_json::array();
  for (const auto& [key, s] : rep.per_cell) {
    auto j = cell_json(s);
    j["attribute"] = to_string(key.first);
    j["task"] = to_string(key.second);
    cells.push_back(std::move(j));
  }
  ordered_json deltas = ordered_json::object();
  for (const auto& [a, d] : rep.deltas) deltas[std::string(to_string(a))] = format_delta(d);
  ordered_json j{{"overall", cell_json(rep.overall)}, {"cells", cells}, {"deltas", deltas}};
  return j.dump(2) + "\n";
}

std::string render_csv(const EvalReport& rep) {
  std::string s = "attribute,task,total,correct,abstained,accuracy,abstention_rate,delta\n";
  for (const auto& [key, c] : rep.per_cell) {
    const auto d = rep.deltas.find(key.first);
    s += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(key.first), to_string(key.second),
                     c.total, c.correct, c.abstained, fixed4(c.accuracy()),
                     fixed4(c.abstention_rate()),
                     d == rep.deltas.end() ? std::string() : format_delta(d->second));
  }
  const auto& o = rep.overall;
  s += fmt::format("all,all,{},{},{},{},{},\n", o.total, o.correct, o.abstained,
                   fixed4(o.accuracy()), fixed4(o.abstention_rate()));
  return s;
}

std::string render_table(const EvalReport& rep) {
  std::string s = fmt::format("{:<14} {:>8} {:>8} {:>8}\n", "attribute", "R", "C", "delta");
  std::set<Attribute> attrs;
  for (const auto& [key, c] : rep.per_cell) attrs.insert(key.first);
  auto acc = [&](Attribute a, Task t) {
    const auto it = rep.per_cell.find({a, t});
    return it == rep.per_cell.end() ? std::string("-") : fmt::format("{:.2f}", it->second.accuracy());
  };
  for (auto a : attrs) {
    const auto d = rep.deltas.find(a);
    s += fmt::format("{:<14} {:>8} {:>8} {:>8}\n", to_string(a), acc(a, Task::Recognition),
                     acc(a, Task::Comparison),
                     d == rep.deltas.end() ? std::string("-") : format_delta(d->second));
  }
  s += fmt::format("overall accuracy {:.4f}, abstention {:.4f}, items {}\n",
                   rep.overall.accuracy(), rep.overall.abstention_rate(), rep.overall.total);
  return s;
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return render_json(report);
    case ReportFormat::Csv: return render_csv(report);
    default: return render_table(report);
  }
}

ParsedResponses parse_responses_jsonl(const std::string& text) {
  ParsedResponses out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.responses.push_back(
          {j.at("item_id").get<std::string>(), j.at("raw_text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      out.warnings.push_back(fmt::format("line {}: skipped ({})", lineno, e.what()));
    }
  }
  return out;
}

}  // namespace sonicforge

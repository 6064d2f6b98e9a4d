#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sonicforge/builder.hpp"

namespace sonicforge {

enum class Choice { A, B, Abstain };
std::string_view to_string(Choice c);

/// Where in the cascade a choice was found. stage 1 exact, 2 normalized,
/// 3 pattern (1-based `pattern`), 0 abstain.
struct Extraction {
  Choice choice = Choice::Abstain;
  int stage = 0;
  int pattern = 0;
};

inline constexpr int kPatternCount = 5;
/// Stage-3 extraction expressions, in order.
extern const std::array<std::string_view, kPatternCount> kAnswerPatterns;

Extraction extract_answer_detail(std::string_view raw_text);
Choice extract_answer(std::string_view raw_text);
/// Pattern `k` (1-based) alone, case-insensitive.
std::optional<Choice> match_pattern(int k, std::string_view text);
/// First of the five patterns that matches, with its index.
std::optional<std::pair<int, Choice>> first_pattern(std::string_view text);

struct ModelResponse {
  std::string item_id;
  std::string raw_text;
};

struct CellScore {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
  double abstention_rate() const { return total ? static_cast<double>(abstained) / total : 0.0; }
  double wrong_rate() const {
    return total ? static_cast<double>(total - correct - abstained) / total : 0.0;
  }
};

struct EvalReport {
  CellScore overall;
  std::map<std::pair<Attribute, Task>, CellScore> per_cell;
  /// (C - R) / R per attribute with both tasks present; nullopt when R = 0.
  std::map<Attribute, std::optional<double>> deltas;
};

/// Missing responses count as abstentions. InputError on an empty dataset,
/// a duplicate response id or an id absent from the dataset.
EvalReport score(const std::vector<TaskItem>& dataset, const std::vector<ModelResponse>& responses);

/// "+14.3%", or "n/a" when undefined.
std::string format_delta(const std::optional<double>& delta);

enum class ReportFormat { Json, Table, Csv };
ReportFormat parse_report_format(std::string_view name);
std::string render_report(const EvalReport& report, ReportFormat format);

struct ParsedResponses {
  std::vector<ModelResponse> responses;
  std::vector<std::string> warnings;  // one per skipped row
};

/// JSONL rows {"item_id": ..., "raw_text": ...}; malformed rows are skipped
/// with a warning.
ParsedResponses parse_responses_jsonl(const std::string& text);

}  // namespace sonicforge

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sonicforge/builder.hpp"

namespace sonicforge {

/// One item as a single-line JSON object with sorted keys.
std::string item_to_json(const TaskItem& item);
/// FormatError on malformed JSON or a missing field.
TaskItem item_from_json(const std::string& text);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Sorts by id and writes annotations.json, annotations.jsonl and index.csv
/// under `out_dir`. IntegrityError if an audio file is missing; nothing is
/// written in that case.
void emit_dataset(std::vector<TaskItem> items, const std::filesystem::path& out_dir);

/// Reads annotations.json. IoError if absent, FormatError if malformed.
std::vector<TaskItem> load_dataset(const std::filesystem::path& dir);

std::string render_index_csv(const std::vector<TaskItem>& items);

struct CellFailure {
  Attribute attribute;
  Task task;
  std::string reason;
};

struct BuildResult {
  std::vector<TaskItem> items;  // sorted by id
  std::vector<CellFailure> failures;
};

/// Plans every configured cell, balances answers and refreshes the
/// instruction text. A cell the pool cannot supply is recorded and skipped.
BuildResult plan_dataset(const BuildConfig& config, const RenderContext& ctx);

/// plan_dataset, then audio rendering and emission.
BuildResult build_dataset(const BuildConfig& config, const RenderContext& ctx,
                          const std::filesystem::path& out_dir, int workers);

}  // namespace sonicforge

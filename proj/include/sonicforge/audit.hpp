#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sonicforge/analysis.hpp"
#include "sonicforge/builder.hpp"

namespace sonicforge {

struct Violation {
  std::string item_id;
  std::string check;  // geometry, unreadable, regenerability, label, closure, margin, dominance
  std::string detail;
};

struct ClipReport {
  std::string item_id;
  int segment = 1;
  AnalysisReport analysis;
};

struct AuditReport {
  std::size_t items = 0;
  std::size_t stimuli = 0;
  std::size_t comparison_pairs = 0;
  std::size_t margin_pass = 0;
  std::size_t dominance_pass = 0;
  std::size_t closure_checks = 0;
  std::vector<Violation> violations;
  std::vector<ClipReport> clips;

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& check) const;
};

/// Runs every check over the emitted files under `dir`: exact geometry,
/// byte-identical regeneration from provenance, gold label against
/// provenance, transform closure, comparison margins and single-attribute
/// dominance. Items are audited in parallel; results keep item order.
AuditReport audit_dataset(const std::vector<TaskItem>& items, const std::filesystem::path& dir,
                          const RenderContext& ctx, const BuildConfig& cfg, int workers);

/// Summary and violations as JSON.
std::string audit_to_json(const AuditReport& report);
/// One analysis object per clip segment.
std::string clips_to_jsonl(const AuditReport& report);

/// Least-squares inter-onset period of a regular onset train; nullopt with
/// fewer than three onsets.
std::optional<double> onset_period(const std::vector<double>& times_s);

}  // namespace sonicforge

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sonicforge/analysis.hpp"
#include "sonicforge/attribute.hpp"
#include "sonicforge/audio_ops.hpp"
#include "sonicforge/pool.hpp"
#include "sonicforge/transforms.hpp"

namespace sonicforge {

struct BinThresholds {
  double pitch_midi = 65.0;
  double loudness_lufs = -15.0;
  double velocity = 75.0;
  double duration_s = 2.4;
  double tempo_bpm = 100.0;

  double for_attribute(Attribute a) const;  // ArgumentError for non-scalar
  friend bool operator==(const BinThresholds&, const BinThresholds&) = default;
};

enum class Bin { Low, High };
std::string_view to_string(Bin b);

/// value >= threshold is high.
Bin classify_bin(double value, Attribute attribute, const BinThresholds& thresholds = {});

/// Minimum contrasts between the two stimuli of a comparison pair.
struct MarginTable {
  double pitch_semitones = 1.0;
  double loudness_lu = 3.0;
  double velocity = 30.0;
  double duration_ratio = 1.3;
  double tempo_ratio = 1.1;
  int count_delta = 1;

  /// Whether two canonical values meet the floor for `a`.
  bool satisfied(Attribute a, double x, double y) const;
};

/// "Held constant" limits for non-target measures inside a pair.
struct HeldTolerance {
  double lufs_lu = 0.5;
  double duration_rel = 0.02;
  double f0_rel = 0.02;
};

enum class Measure { Lufs, F0, Duration, Centroid };
/// Target measure plus the measures it physically drags along.
bool entailed(Attribute a, Measure m);

/// Distance of recognition targets from the bin boundary.
struct GuardBands {
  double pitch_semitones = 2.0;
  double loudness_lu = 3.0;
  double velocity = 10.0;
  double duration_s = 0.3;
  double tempo_bpm = 10.0;
};

/// Apportions n draws over bins in proportion to their pool counts (largest
/// remainder, ties to the lower index).
std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& bin_sizes,
                                           std::size_t n);

struct MeasuredValues {
  std::optional<double> lufs;
  std::optional<double> f0_hz;
  std::optional<double> duration_s;
};

struct Candidate {
  std::string id;
  double value = 0.0;
  MeasuredValues measured;
};

/// `first` holds less of the attribute than `second`.
struct ComparisonPair {
  Candidate first;
  Candidate second;
};

/// Seeded draw of one low-bin and one high-bin candidate that meet the
/// margin floor and whose measured non-target values agree within the held
/// tolerances. PoolExhaustedError names the failing constraint.
ComparisonPair sample_comparison_pair(const std::vector<Candidate>& pool, Attribute attribute,
                                      const MarginTable& margins, std::uint64_t seed,
                                      const BinThresholds& thresholds = {},
                                      const HeldTolerance& held = {});

/// Question text with {a}, {b} and optionally {x} placeholders.
struct Template {
  std::string id;
  std::string text;
};

class TemplateBank {
 public:
  static TemplateBank defaults();
  void set(Attribute a, Task t, Template tpl);
  const Template& get(Attribute a, Task t) const;  // ConfigError if missing
  bool contains(Attribute a, Task t) const;

 private:
  std::map<std::pair<Attribute, Task>, Template> templates_;
};

std::string fill_template(const Template& tpl, const std::string& a, const std::string& b,
                          const std::string& x = {});

/// Everything needed to regenerate one 4 s stimulus.
struct StimulusRecipe {
  std::string source;                 // pool clip id
  std::vector<TransformConfig> ops;
  std::optional<double> pre_lufs;     // normalization before the ops
  std::optional<double> final_lufs;   // normalization after fitting
  double value = 0.0;                 // canonical attribute value
  std::string label;                  // canonical category, if any

  friend bool operator==(const StimulusRecipe&, const StimulusRecipe&) = default;
};

struct TaskItem {
  std::string id;
  Task task = Task::Recognition;
  Attribute attribute = Attribute::Pitch;
  std::string audio_path;  // relative to the dataset root
  std::string instruction;
  std::string option_a;
  std::string option_b;
  char answer = 'A';
  std::string template_id;
  std::uint64_t seed = 0;
  std::size_t index = 0;   // position within its cell
  std::string subject;     // {x} in the template, e.g. an instrument
  std::string gold;        // recognition: gold option text
  std::string distractor;  // recognition: the other option text
  int target_segment = 0;  // comparison: 1 or 2
  std::vector<StimulusRecipe> stimuli;
  std::string split = "test";

  friend bool operator==(const TaskItem&, const TaskItem&) = default;
};

struct RenderContext {
  const ClipPool* pool = nullptr;
  const IrBank* bank = nullptr;
  ClipGeometry geometry;
};

Waveform render_stimulus(const StimulusRecipe& recipe, const RenderContext& ctx);
/// One stimulus for recognition, stimuli joined by the gap for comparison.
Waveform render_item_audio(const TaskItem& item, const RenderContext& ctx);

struct BuildConfig {
  std::uint64_t seed = 0;
  std::size_t per_cell = 100;
  double session_lufs = -26.0;
  std::vector<Attribute> attributes{kAllAttributes.begin(), kAllAttributes.end()};
  std::vector<Task> tasks{Task::Recognition, Task::Comparison};
  BinThresholds thresholds;
  MarginTable margins;
  HeldTolerance held;
  GuardBands guards;
  TemplateBank templates = TemplateBank::defaults();
};

/// Recognition item: the gold label goes to option A or B by a coin flip
/// drawn from `seed`.
TaskItem assemble_recognition(Attribute attribute, const std::string& gold,
                              const std::string& distractor, const TemplateBank& templates,
                              std::uint64_t seed, const std::string& subject = {});
/// Comparison item: options name the segments, `target_first` says whether
/// the segment with more of the property comes first.
TaskItem assemble_comparison(Attribute attribute, bool target_first,
                             const TemplateBank& templates, const std::string& subject = {});

/// All items of one (attribute, task) cell, in plan order, with ids
/// assigned. PoolExhaustedError when the pool cannot supply the cell.
std::vector<TaskItem> plan_cell(Attribute attribute, Task task, const BuildConfig& config,
                                const RenderContext& ctx);

/// Equalizes A/B answers within each cell by flipping a seeded subset of the
/// majority: recognition swaps option texts, comparison swaps segments.
std::vector<TaskItem> balance_answers(std::vector<TaskItem> items, std::uint64_t seed);

/// Swaps options (recognition) or segments (comparison); the answer letter
/// follows.
void flip_item(TaskItem& item);

/// `{attr}-{rec|cmp}-{NNNN}-{parameters}`; also sets audio_path.
void assign_identity(TaskItem& item);

/// Gold option text of a recognition stimulus, from its canonical value or
/// category.
std::string recognition_label(Attribute a, const StimulusRecipe& s,
                              const BinThresholds& thresholds);
/// Larger means more of the property a comparison asks about.
double comparison_key(Attribute a, const StimulusRecipe& s, const std::string& subject);

/// Recomputes the gold answer from provenance alone.
char expected_answer(const TaskItem& item, const BinThresholds& thresholds);

/// Writes each item's WAV (parallel over items).
void render_audio(const std::vector<TaskItem>& items, const RenderContext& ctx,
                  const std::filesystem::path& out_dir, int workers);

/// Writes the item's audio and returns it with paths set.
TaskItem build_recognition_item(const StimulusRecipe& stimulus, Attribute attribute,
                                const std::string& gold, const std::string& distractor,
                                const TemplateBank& templates, std::uint64_t seed,
                                const RenderContext& ctx, const std::filesystem::path& out_dir,
                                const std::string& subject = {});
TaskItem build_comparison_item(const StimulusRecipe& less, const StimulusRecipe& more,
                               Attribute attribute, const TemplateBank& templates,
                               std::uint64_t seed, const RenderContext& ctx,
                               const std::filesystem::path& out_dir,
                               const std::string& subject = {});

}  // namespace sonicforge

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonicforge/waveform.hpp"

namespace sonicforge {

/// One source clip with free-form labels, e.g. {"role": "tonal", "midi": "60"}.
struct PoolClip {
  std::string id;
  std::string source;  // corpus id or "synthetic"
  std::map<std::string, std::string> labels;
  Waveform audio;

  std::optional<std::string> label(const std::string& key) const;
};

/// Labeled clip set, ordered by id so seeded draws do not depend on
/// insertion order.
class ClipPool {
 public:
  void add(PoolClip clip);
  const PoolClip& get(const std::string& id) const;  // ConfigError if absent
  const PoolClip* find(const std::string& id) const;
  std::vector<const PoolClip*> with_label(const std::string& key,
                                          const std::string& value) const;
  std::vector<std::string> label_values(const std::string& key) const;
  std::size_t size() const noexcept { return clips_.size(); }
  const std::map<std::string, PoolClip>& clips() const noexcept { return clips_; }

 private:
  std::map<std::string, PoolClip> clips_;
};

/// Manifest CSV with header `id,path,source,labels`; labels are
/// `key=value` pairs joined by ';'. Paths resolve against the manifest's
/// directory. Audio is resampled to 48 kHz on load.
ClipPool load_pool_manifest(const std::filesystem::path& manifest);

/// Mono impulse response; the first sample above 1e-6 of the peak marks the
/// direct path.
struct ImpulseResponse {
  ImpulseResponse() = default;
  ImpulseResponse(Waveform ir, std::string label);

  Waveform samples;
  std::string label;
  std::size_t direct_index = 0;

  bool is_unit_impulse() const;
  double energy() const;
};

/// Label → impulse response. "early" is the early-reflection pattern used by
/// distance rendering; "dry" and "room-*" labels drive reverberation.
class IrBank {
 public:
  void add(ImpulseResponse ir);
  const ImpulseResponse& get(const std::string& label) const;  // ConfigError
  bool contains(const std::string& label) const;
  std::vector<std::string> labels() const;
  std::vector<std::string> room_labels() const;

 private:
  std::map<std::string, ImpulseResponse> irs_;
};

/// Directory holding `manifest.csv` with rows `label,file`.
IrBank load_ir_bank(const std::filesystem::path& dir);

}  // namespace sonicforge

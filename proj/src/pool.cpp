#include "sonicforge/pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sonicforge/audio_ops.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/wav_io.hpp"

namespace sonicforge {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::size_t min_fields) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() < min_fields) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(min_fields) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

Waveform to_reference_rate(Waveform w) {
  return w.sample_rate() == kReferenceRate ? w : resample(w, kReferenceRate);
}

}  // namespace

std::optional<std::string> PoolClip::label(const std::string& key) const {
  auto it = labels.find(key);
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

void ClipPool::add(PoolClip clip) {
  if (clip.audio.empty()) throw ArgumentError("pool clip '" + clip.id + "' is empty");
  std::string id = clip.id;
  if (!clips_.emplace(id, std::move(clip)).second) {
    throw ConfigError("duplicate pool clip id '" + id + "'");
  }
}

const PoolClip* ClipPool::find(const std::string& id) const {
  auto it = clips_.find(id);
  return it == clips_.end() ? nullptr : &it->second;
}

const PoolClip& ClipPool::get(const std::string& id) const {
  if (const PoolClip* c = find(id)) return *c;
  throw ConfigError("no pool clip '" + id + "'");
}

std::vector<const PoolClip*> ClipPool::with_label(const std::string& key,
                                                  const std::string& value) const {
  std::vector<const PoolClip*> out;
  for (const auto& [id, clip] : clips_) {
    auto it = clip.labels.find(key);
    if (it != clip.labels.end() && it->second == value) out.push_back(&clip);
  }
  return out;
}

std::vector<std::string> ClipPool::label_values(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [id, clip] : clips_) {
    auto it = clip.labels.find(key);
    if (it != clip.labels.end()) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ClipPool load_pool_manifest(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  ClipPool pool;
  for (const auto& row : read_csv(manifest, 4)) {
    PoolClip clip;
    clip.id = row[0];
    clip.source = row[2];
    for (const auto& pair : split(row[3], ';')) {
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      if (eq == std::string::npos) {
        throw FormatError("label '" + pair + "' in " + manifest.string() + " lacks '='");
      }
      clip.labels[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
    }
    clip.audio = to_reference_rate(load_wav(base / row[1]));
    pool.add(std::move(clip));
  }
  return pool;
}

ImpulseResponse::ImpulseResponse(Waveform ir, std::string lbl)
    : samples(std::move(ir)), label(std::move(lbl)) {
  if (samples.empty()) throw ArgumentError("impulse response '" + label + "' is empty");
  if (samples.channels() != 1) {
    throw ArgumentError("impulse response '" + label + "' must be mono");
  }
  const auto x = samples.channel(0);
  float peak = 0.0f;
  for (float v : x) {
    if (!std::isfinite(v)) throw ArgumentError("impulse response '" + label + "' is not finite");
    peak = std::max(peak, std::abs(v));
  }
  if (peak == 0.0f) throw ArgumentError("impulse response '" + label + "' is silent");
  const float floor = peak * 1e-6f;
  while (std::abs(x[direct_index]) <= floor) ++direct_index;
}

bool ImpulseResponse::is_unit_impulse() const {
  const auto x = samples.channel(0);
  if (x[0] != 1.0f) return false;
  return std::all_of(x.begin() + 1, x.end(), [](float v) { return v == 0.0f; });
}

double ImpulseResponse::energy() const {
  double e = 0.0;
  for (float v : samples.channel(0)) e += static_cast<double>(v) * v;
  return e;
}

void IrBank::add(ImpulseResponse ir) {
  std::string label = ir.label;
  irs_.insert_or_assign(label, std::move(ir));
}

bool IrBank::contains(const std::string& label) const { return irs_.count(label) != 0; }

const ImpulseResponse& IrBank::get(const std::string& label) const {
  auto it = irs_.find(label);
  if (it == irs_.end()) throw ConfigError("IR bank has no '" + label + "' response");
  return it->second;
}

std::vector<std::string> IrBank::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, ir] : irs_) out.push_back(label);
  return out;
}

std::vector<std::string> IrBank::room_labels() const {
  std::vector<std::string> out;
  for (const auto& [label, ir] : irs_) {
    if (label.rfind("room-", 0) == 0) out.push_back(label);
  }
  return out;
}

IrBank load_ir_bank(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.csv";
  if (!std::filesystem::exists(manifest)) {
    throw ConfigError("IR bank " + dir.string() + " has no manifest.csv");
  }
  IrBank bank;
  for (const auto& row : read_csv(manifest, 2)) {
    Waveform w = to_reference_rate(load_wav(dir / row[1]));
    if (w.channels() != 1) w = Waveform::mono(w.sample_rate(), w.mixdown());
    bank.add(ImpulseResponse(std::move(w), row[0]));
  }
  return bank;
}

}  // namespace sonicforge

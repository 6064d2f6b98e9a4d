#include "sonicforge/attribute.hpp"

#include <algorithm>
#include <cctype>

#include "sonicforge/errors.hpp"

namespace sonicforge {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Pitch: return "pitch";
    case Attribute::Brightness: return "brightness";
    case Attribute::Loudness: return "loudness";
    case Attribute::Velocity: return "velocity";
    case Attribute::Duration: return "duration";
    case Attribute::Tempo: return "tempo";
    case Attribute::Direction: return "direction";
    case Attribute::Distance: return "distance";
    case Attribute::Reverberation: return "reverberation";
    case Attribute::Timbre: return "timbre";
    case Attribute::Texture: return "texture";
    case Attribute::Counting: return "counting";
  }
  return "unknown";
}

std::string_view to_string(Task t) {
  return t == Task::Recognition ? "recognition" : "comparison";
}

Attribute parse_attribute(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Attribute a : kAllAttributes) {
    if (to_string(a) == lower) return a;
  }
  throw ConfigError("unknown attribute '" + std::string(name) + "'");
}

Task parse_task(std::string_view name) {
  if (name == "recognition") return Task::Recognition;
  if (name == "comparison") return Task::Comparison;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

bool has_scalar_threshold(Attribute a) {
  return a == Attribute::Pitch || a == Attribute::Loudness || a == Attribute::Velocity ||
         a == Attribute::Duration || a == Attribute::Tempo;
}

}  // namespace sonicforge

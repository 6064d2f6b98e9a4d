#pragma once

#include <array>
#include <string>
#include <string_view>

namespace sonicforge {

enum class Attribute {
  Pitch,
  Brightness,
  Loudness,
  Velocity,
  Duration,
  Tempo,
  Direction,
  Distance,
  Reverberation,
  Timbre,
  Texture,
  Counting,
};

inline constexpr std::array<Attribute, 12> kAllAttributes = {
    Attribute::Pitch,     Attribute::Brightness, Attribute::Loudness,
    Attribute::Velocity,  Attribute::Duration,   Attribute::Tempo,
    Attribute::Direction, Attribute::Distance,   Attribute::Reverberation,
    Attribute::Timbre,    Attribute::Texture,    Attribute::Counting,
};

enum class Task { Recognition, Comparison };

std::string_view to_string(Attribute a);
std::string_view to_string(Task t);
/// Case-insensitive; throws ConfigError on unknown names.
Attribute parse_attribute(std::string_view name);
Task parse_task(std::string_view name);

/// Attributes binned by a scalar threshold.
bool has_scalar_threshold(Attribute a);

}  // namespace sonicforge

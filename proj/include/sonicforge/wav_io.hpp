#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sonicforge/waveform.hpp"

namespace sonicforge {

/// Reads RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples, 1 or 2
/// channels. 16-bit values are scaled by 1/32768.
Waveform load_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const std::uint8_t> bytes);

/// Writes 16-bit PCM, no dither. Output bytes are a pure function of `w`.
void save_wav(const Waveform& w, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const Waveform& w);

}  // namespace sonicforge

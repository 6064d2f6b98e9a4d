#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonicforge/pool.hpp"

namespace sonicforge {

/// Synthetic stand-ins for the corpora a full build draws from: harmonic
/// instrument notes, single-hit events, textures and rhythm loops, all at
/// 48 kHz. Every clip is a pure function of `seed`.
///
/// Labels:
///   role=tonal   instrument, midi, envelope (sustained|percussive)
///   role=event   event
///   role=texture texture
///   role=rhythm  bpm
ClipPool make_toy_pool(std::uint64_t seed);

/// "dry" (unit impulse), "early" (sparse early reflections) and three
/// decaying-noise rooms "room-small", "room-medium", "room-large".
IrBank make_toy_ir_bank(std::uint64_t seed);

std::vector<std::string> toy_instruments();
std::vector<std::string> toy_textures();

}  // namespace sonicforge

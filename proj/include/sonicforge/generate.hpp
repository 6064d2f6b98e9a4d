#pragma once

#include <filesystem>

#include "sonicforge/config.hpp"

namespace sonicforge {

/// Renders the single item described by `cfg.generate` into `out_dir`
/// (audio under audio/<attribute>/<task>/, annotation in item.json).
/// The comparison reference defaults to the unmodified input, the opposite
/// sector, near/far or dry counterpart, or a count one lower (one higher for
/// a single event). ConfigError when the pair misses its margin.
TaskItem run_generate(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace sonicforge

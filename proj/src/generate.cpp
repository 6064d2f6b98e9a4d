#include "sonicforge/generate.hpp"

#include <fmt/format.h>

#include <cmath>

#include "sonicforge/dataset.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/rng.hpp"
#include "sonicforge/toy_sources.hpp"
#include "sonicforge/wav_io.hpp"

namespace sonicforge {
namespace {

constexpr const char* kInput = "input";
constexpr const char* kInputB = "input-b";

class Generator {
 public:
  Generator(const RunConfig& cfg, const ClipPool& pool) : cfg_(cfg), g_(cfg.generate), pool_(pool) {}

  StimulusRecipe stimulus(double m, bool target) const {
    const Attribute a = g_.attribute;
    StimulusRecipe r;
    r.source = kInput;
    r.final_lufs = cfg_.build.session_lufs;
    const Waveform& src = pool_.get(kInput).audio;
    switch (a) {
      case Attribute::Pitch: {
        const auto f0 = estimate_f0(src);
        if (!f0) throw ConfigError("input has no detectable pitch");
        r.value = round6(hz_to_midi(*f0) + m);
        if (m != 0.0) r.ops.push_back({a, m, 0, {}});
        break;
      }
      case Attribute::Brightness:
        r.value = m;
        r.label = m > 0.0 ? "bright" : m < 0.0 ? "dark" : "flat";
        if (m != 0.0) r.ops.push_back({a, m, 0, {}});
        break;
      case Attribute::Loudness:
        r.value = m;
        r.final_lufs = m;
        r.ops.push_back({a, m, 0, {}});
        break;
      case Attribute::Velocity:
        r.value = m;
        r.pre_lufs = cfg_.build.session_lufs;
        r.final_lufs.reset();
        r.ops.push_back({a, m, 0, {}});
        break;
      case Attribute::Duration:
        r.value = round6(active_duration(src) * m);
        if (m != 1.0) r.ops.push_back({a, m, 0, {}});
        break;
      case Attribute::Tempo: {
        const auto bpm = estimate_tempo(src);
        if (!bpm) throw ConfigError("input has no regular beat");
        r.value = round6(*bpm * m);
        if (m != 1.0) r.ops.push_back({a, m, 0, {}});
        break;
      }
      case Attribute::Direction:
        r.value = wrap_azimuth(m);
        r.label = sector_of(r.value) == Sector::Front ? "front" : "back";
        r.ops.push_back({a, r.value, 0, {}});
        break;
      case Attribute::Distance:
        r.value = m != 0.0 ? 1.0 : 0.0;
        r.label = m != 0.0 ? "far" : "near";
        r.ops.push_back({a, r.value, 0, {}});
        break;
      case Attribute::Reverberation:
        if (m == 0.0) {
          r.label = "dry";
        } else {
          if (g_.label.empty()) throw ConfigError("reverberation needs generate.label naming an IR");
          r.value = 1.0;
          r.label = g_.label;
          r.ops.push_back({a, 1.0, 0, g_.label});
        }
        break;
      case Attribute::Timbre:
      case Attribute::Texture:
        if (!target) r.source = kInputB;
        r.label = target ? g_.label : g_.label_b;
        if (r.label.empty()) {
          throw ConfigError(fmt::format("{} needs generate.label{}", to_string(a), target ? "" : "_b"));
        }
        break;
      case Attribute::Counting: {
        const long n = std::lround(m);
        if (n < 1 || n > kMaxCount) throw ConfigError(fmt::format("count {} outside 1..{}", m, kMaxCount));
        r.value = static_cast<double>(n);
        r.ops.push_back({a, r.value, mix_seed(cfg_.seed, target ? 1 : 2), {}});
        break;
      }
    }
    return r;
  }

  double default_reference() const {
    const double m = g_.magnitude;
    switch (g_.attribute) {
      case Attribute::Loudness: return cfg_.build.session_lufs;
      case Attribute::Velocity: return 127.0;
      case Attribute::Duration:
      case Attribute::Tempo: return 1.0;
      case Attribute::Direction: return wrap_azimuth(180.0 - m);
      case Attribute::Distance:
      case Attribute::Reverberation: return m != 0.0 ? 0.0 : 1.0;
      case Attribute::Counting: return m > 1.0 ? m - 1.0 : m + 1.0;
      default: return 0.0;
    }
  }

 private:
  static double round6(double x) { return std::round(x * 1e6) / 1e6; }

  const RunConfig& cfg_;
  const GenerateSpec& g_;
  const ClipPool& pool_;
};

PoolClip input_clip(const std::string& id, const std::filesystem::path& path,
                    const std::string& label_key, const std::string& label) {
  if (path.empty()) throw ConfigError(fmt::format("generate needs an input for '{}'", id));
  Waveform w = load_wav(path);
  if (w.sample_rate() != kReferenceRate) w = resample(w, kReferenceRate);
  PoolClip c{id, "user", {}, std::move(w)};
  if (!label.empty()) c.labels[label_key] = label;
  return c;
}

}  // namespace

TaskItem run_generate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const GenerateSpec& g = cfg.generate;
  const Attribute a = g.attribute;
  const bool two_inputs = a == Attribute::Timbre || a == Attribute::Texture;
  const std::string key = a == Attribute::Timbre ? "instrument" : "texture";

  ClipPool pool;
  pool.add(input_clip(kInput, g.input, key, g.label));
  if (two_inputs && g.task == Task::Comparison) pool.add(input_clip(kInputB, g.input_b, key, g.label_b));
  IrBank bank;
  if (a == Attribute::Distance || a == Attribute::Reverberation) {
    bank = cfg.ir_bank == "toy" ? make_toy_ir_bank(cfg.pool_seed) : load_ir_bank(cfg.ir_bank);
  }
  const RenderContext ctx{&pool, &bank, {}};
  const Generator gen(cfg, pool);
  const StimulusRecipe target = gen.stimulus(g.magnitude, true);

  if (g.task == Task::Recognition) {
    const std::string gold = recognition_label(a, target, cfg.build.thresholds);
    std::string distractor = g.distractor;
    if (distractor.empty()) {
      if (two_inputs) throw ConfigError(fmt::format("{} recognition needs generate.distractor", to_string(a)));
      distractor = a == Attribute::Counting
                       ? fmt::format("{:.0f}", gen.default_reference())
                       : recognition_label(a, gen.stimulus(gen.default_reference(), false),
                                           cfg.build.thresholds);
    }
    if (distractor == gold) {
      throw ConfigError(fmt::format("distractor '{}' equals the gold label", distractor));
    }
    auto item = build_recognition_item(target, a, gold, distractor, cfg.build.templates, cfg.seed,
                                       ctx, out_dir);
    write_atomic(out_dir / "item.json", item_to_json(item) + "\n");
    return item;
  }

  const StimulusRecipe ref = gen.stimulus(g.reference.value_or(gen.default_reference()), false);
  const std::string subject = two_inputs ? target.label : std::string();
  const double kt = comparison_key(a, target, subject), kr = comparison_key(a, ref, subject);
  const bool labels_differ = two_inputs ? target.label != ref.label : true;
  if (kt == kr || !labels_differ || !cfg.build.margins.satisfied(a, ref.value, target.value)) {
    throw ConfigError(fmt::format("{} pair misses its margin (reference {}, target {})",
                                  to_string(a), ref.value, target.value));
  }
  const auto& less = kt > kr ? ref : target;
  const auto& more = kt > kr ? target : ref;
  auto item = build_comparison_item(less, more, a, cfg.build.templates, cfg.seed, ctx, out_dir,
                                    subject);
  write_atomic(out_dir / "item.json", item_to_json(item) + "\n");
  return item;
}

}  // namespace sonicforge

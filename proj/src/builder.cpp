#include "sonicforge/builder.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>

#include "sonicforge/errors.hpp"
#include "sonicforge/loudness.hpp"
#include "sonicforge/rng.hpp"
#include "sonicforge/wav_io.hpp"

namespace sonicforge {
namespace {

double q6(double x) { return std::round(x * 1e6) / 1e6; }

struct Range {
  double lo;
  double hi;
};

std::uint64_t cell_seed(std::uint64_t seed, Attribute a, Task t) {
  return mix_seed(seed, hash_name(fmt::format("{}/{}", to_string(a), to_string(t))));
}

std::pair<std::string, std::string> bin_labels(Attribute a) {
  switch (a) {
    case Attribute::Pitch: return {"low", "high"};
    case Attribute::Loudness: return {"quiet", "loud"};
    case Attribute::Velocity: return {"soft", "hard"};
    case Attribute::Duration: return {"short", "long"};
    case Attribute::Tempo: return {"slow", "fast"};
    case Attribute::Brightness: return {"dark", "bright"};
    case Attribute::Direction: return {"back", "front"};
    case Attribute::Distance: return {"far", "near"};
    case Attribute::Reverberation: return {"dry", "reverberant"};
    default: return {"", ""};
  }
}

std::string bin_label(Attribute a, Bin b) {
  auto [low, high] = bin_labels(a);
  return b == Bin::Low ? low : high;
}

/// Recognition target ranges, clear of the boundary by the guard band.
std::pair<Range, Range> guarded_ranges(Attribute a, const BinThresholds& th,
                                       const GuardBands& g) {
  const double t = th.for_attribute(a);
  std::pair<Range, Range> r;
  switch (a) {
    case Attribute::Pitch:
      r = {{t - 13.0, t - g.pitch_semitones}, {t + g.pitch_semitones, t + 13.0}};
      break;
    case Attribute::Loudness:
      r = {{t - 12.0, t - g.loudness_lu}, {t + g.loudness_lu, t + 6.0}};
      break;
    case Attribute::Velocity:
      r = {{30.0, t - g.velocity}, {t + g.velocity, 127.0}};
      break;
    case Attribute::Duration:
      r = {{1.0, t - g.duration_s}, {t + g.duration_s, 3.4}};
      break;
    default:
      r = {{62.0, t - g.tempo_bpm}, {t + g.tempo_bpm, 155.0}};
      break;
  }
  if (!(r.first.lo < r.first.hi) || !(r.second.lo < r.second.hi)) {
    throw ConfigError(fmt::format("threshold {} leaves an empty {} bin", t, to_string(a)));
  }
  return r;
}

/// Canonical values are whole MIDI notes, velocities and BPM; LUFS to 0.1,
/// seconds to 0.01.
double value_step(Attribute a) {
  switch (a) {
    case Attribute::Loudness: return 0.1;
    case Attribute::Duration: return 0.01;
    default: return 1.0;
  }
}

double draw_in(Rng& rng, Attribute a, Range r) {
  const double step = value_step(a);
  const double lo = std::ceil(r.lo / step - 1e-9), hi = std::floor(r.hi / step + 1e-9);
  const double k = std::clamp(std::round(rng.uniform(r.lo, r.hi) / step), lo, hi);
  return q6(k * step);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

std::string format_value(Attribute a, double v) {
  switch (a) {
    case Attribute::Pitch: return fmt::format("midi{:.0f}", v);
    case Attribute::Loudness: return fmt::format("lufs{:+.1f}", v);
    case Attribute::Velocity: return fmt::format("vel{:.0f}", v);
    case Attribute::Duration: return fmt::format("dur{:.2f}s", v);
    case Attribute::Tempo: return fmt::format("bpm{:.0f}", v);
    case Attribute::Brightness: return fmt::format("tilt{:+.1f}", v);
    case Attribute::Direction: return fmt::format("az{:+.0f}", v);
    case Attribute::Counting: return fmt::format("n{:.0f}", v);
    default: return {};
  }
}

std::string stimulus_tag(Attribute a, const StimulusRecipe& s) {
  switch (a) {
    case Attribute::Distance:
    case Attribute::Reverberation:
    case Attribute::Timbre:
    case Attribute::Texture:
      return s.label;
    default:
      return format_value(a, s.value);
  }
}

}  // namespace

double comparison_key(Attribute a, const StimulusRecipe& s, const std::string& subject) {
  switch (a) {
    case Attribute::Direction: return sector_of(s.value) == Sector::Front ? 1.0 : 0.0;
    case Attribute::Distance: return s.label == "near" ? 1.0 : 0.0;
    case Attribute::Reverberation: return s.label == "dry" ? 0.0 : 1.0;
    case Attribute::Timbre:
    case Attribute::Texture: return s.label == subject ? 1.0 : 0.0;
    default: return s.value;
  }
}

std::string recognition_label(Attribute a, const StimulusRecipe& s,
                              const BinThresholds& th) {
  if (has_scalar_threshold(a)) return bin_label(a, classify_bin(s.value, a, th));
  switch (a) {
    case Attribute::Brightness: return bin_label(a, s.value > 0.0 ? Bin::High : Bin::Low);
    case Attribute::Direction:
      return bin_label(a, sector_of(s.value) == Sector::Front ? Bin::High : Bin::Low);
    case Attribute::Distance:
    case Attribute::Reverberation: return bin_label(a, s.label == "dry" || s.label == "far" ? Bin::Low : Bin::High);
    case Attribute::Counting: return fmt::format("{:.0f}", s.value);
    default: return s.label;
  }
}

namespace {

constexpr double kMinTempoStretch = 0.75;
constexpr double kDirectionMinCentroidHz = kPinnaCutoffHz / 4.0;
constexpr int kPairAttempts = 32;
constexpr double kMaxTempoStretch = 1.4;

/// Planned contrasts sit above the audited floor by the oracles' tolerance.
MarginTable planning_margins(MarginTable m) {
  m.pitch_semitones += 0.5;
  m.loudness_lu += 0.5;
  m.duration_ratio *= 1.03;
  m.tempo_ratio *= 1.03;
  return m;
}

TransformConfig op(Attribute kind, double magnitude, std::uint64_t seed = 0,
                   std::string label = {}) {
  return TransformConfig{kind, q6(magnitude), seed, std::move(label)};
}

class CellPlanner {
 public:
  CellPlanner(Attribute a, Task t, const BuildConfig& cfg, const RenderContext& ctx)
      : attr_(a), task_(t), cfg_(cfg), ctx_(ctx), seed_(cell_seed(cfg.seed, a, t)) {
    if (!ctx.pool) throw ConfigError("no clip pool configured");
  }

  std::vector<TaskItem> plan() {
    std::vector<TaskItem> items;
    if (task_ == Task::Recognition) {
      const auto targets = recognition_targets();
      for (std::size_t i = 0; i < cfg_.per_cell; ++i) {
        items.push_back(recognition(i, mix_seed(seed_, i), targets[i]));
      }
    } else {
      for (std::size_t i = 0; i < cfg_.per_cell; ++i) {
        items.push_back(comparison(i, mix_seed(seed_, i)));
      }
    }
    return items;
  }

 private:
  std::string name() const { return std::string(to_string(attr_)); }

  [[noreturn]] void exhausted(const std::string& what) const {
    throw PoolExhaustedError(fmt::format("{} {}: {}", name(), to_string(task_), what));
  }

  std::vector<const PoolClip*> tonal(const std::string& envelope = {}) const {
    auto all = ctx_.pool->with_label("role", "tonal");
    std::vector<const PoolClip*> out;
    for (const auto* c : all) {
      if (!c->label("midi")) continue;
      if (!envelope.empty() && c->label("envelope") != envelope) continue;
      out.push_back(c);
    }
    if (out.empty()) {
      exhausted(envelope.empty() ? "no tonal clips with a midi label"
                                 : "no " + envelope + " tonal clips with a midi label");
    }
    return out;
  }

  double clip_active(const PoolClip& c) {
    auto it = active_.find(c.id);
    if (it != active_.end()) return it->second;
    const double d = active_duration(c.audio);
    active_.emplace(c.id, d);
    return d;
  }

  const std::vector<const PoolClip*>& single_onset_events() {
    if (!events_) {
      events_.emplace();
      for (const auto* c : ctx_.pool->with_label("role", "event")) {
        const auto probe = synthesize_count(c->audio, 1, ctx_.geometry.recognition_len_s, 0);
        if (count_onsets(probe).count != 1) continue;
        // Must reach the session level without clipping.
        const double lufs = measure_integrated_lufs(probe).integrated_lufs;
        if (probe.peak() * std::pow(10.0, (cfg_.session_lufs - lufs) / 20.0) > 1.0) continue;
        events_->push_back(c);
      }
    }
    if (events_->empty()) exhausted("no event clip has a single onset and headroom at the session level");
    return *events_;
  }

  std::vector<std::string> categories(const std::string& key) const {
    std::vector<std::string> out;
    if (key == "instrument") {
      std::set<std::string> s;
      for (const auto* c : ctx_.pool->with_label("role", "tonal")) {
        if (auto i = c->label("instrument"); i && c->label("midi")) s.insert(*i);
      }
      out.assign(s.begin(), s.end());
    } else {
      out = ctx_.pool->label_values(key);
    }
    if (out.size() < 2) exhausted("fewer than two '" + key + "' categories");
    return out;
  }

  StimulusRecipe base(const PoolClip& src, double value, std::string label = {}) const {
    StimulusRecipe r;
    r.source = src.id;
    r.value = q6(value);
    r.label = std::move(label);
    r.final_lufs = cfg_.session_lufs;
    return r;
  }

  /// Scalar stimulus for each of `values`, all from one source clip.
  std::vector<StimulusRecipe> scalar_stimuli(const std::vector<double>& values, Rng& rng) {
    std::vector<StimulusRecipe> out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    switch (attr_) {
      case Attribute::Pitch: {
        std::vector<const PoolClip*> ok;
        for (const auto* c : tonal()) {
          const double m = std::stod(*c->label("midi"));
          if (std::abs(*lo - m) <= 12.0 && std::abs(*hi - m) <= 12.0) ok.push_back(c);
        }
        if (ok.empty()) exhausted("no tonal clip within 12 semitones of the targets");
        const PoolClip& src = *pick(rng, ok);
        const double m = std::stod(*src.label("midi"));
        for (double v : values) {
          auto r = base(src, v);
          r.ops.push_back(op(Attribute::Pitch, v - m));
          out.push_back(std::move(r));
        }
        break;
      }
      case Attribute::Loudness: {
        const PoolClip& src = *pick(rng, tonal("sustained"));
        for (double v : values) {
          auto r = base(src, v);
          r.ops.push_back(op(Attribute::Loudness, v));
          r.final_lufs = q6(v);
          out.push_back(std::move(r));
        }
        break;
      }
      case Attribute::Velocity: {
        const PoolClip& src = *pick(rng, tonal("percussive"));
        for (double v : values) {
          auto r = base(src, v);
          r.pre_lufs = cfg_.session_lufs;
          r.final_lufs.reset();
          r.ops.push_back(op(Attribute::Velocity, v));
          out.push_back(std::move(r));
        }
        break;
      }
      case Attribute::Duration: {
        std::vector<const PoolClip*> ok;
        for (const auto* c : tonal("sustained")) {
          const double d = clip_active(*c);
          if (d > 0.0 && *lo / d >= 0.5 && *hi / d <= 2.0) ok.push_back(c);
        }
        if (ok.empty()) exhausted("no sustained clip can be stretched to the targets");
        const PoolClip& src = *pick(rng, ok);
        const double d = clip_active(src);
        for (double v : values) {
          auto r = base(src, v);
          r.ops.push_back(op(Attribute::Duration, v / d));
          out.push_back(std::move(r));
        }
        break;
      }
      default: {  // tempo
        // Loops of one kit share their pattern; each value takes the loop
        // needing the smallest stretch.
        std::map<std::string, std::vector<const PoolClip*>> kits;
        for (const auto* c : ctx_.pool->with_label("role", "rhythm")) {
          if (c->label("bpm")) kits[c->label("kit").value_or("")].push_back(c);
        }
        std::vector<std::string> kit_names;
        for (const auto& [k, v] : kits) kit_names.push_back(k);
        rng.shuffle(kit_names.begin(), kit_names.end());
        for (const auto& kit : kit_names) {
          std::vector<const PoolClip*> chosen;
          for (double v : values) {
            const PoolClip* best = nullptr;
            double best_cost = 0.0;
            for (const auto* c : kits[kit]) {
              const double stretch = std::stod(*c->label("bpm")) / v;
              if (stretch < kMinTempoStretch || stretch > kMaxTempoStretch) continue;
              if (c->audio.duration_s() * stretch < ctx_.geometry.recognition_len_s + 0.25) continue;
              const double cost = std::abs(std::log(stretch));
              if (!best || cost < best_cost) {
                best = c;
                best_cost = cost;
              }
            }
            if (!best) break;
            chosen.push_back(best);
          }
          if (chosen.size() != values.size()) continue;
          for (std::size_t k = 0; k < values.size(); ++k) {
            auto r = base(*chosen[k], values[k]);
            r.ops.push_back(op(Attribute::Tempo, values[k] / std::stod(*chosen[k]->label("bpm"))));
            out.push_back(std::move(r));
          }
          return out;
        }
        exhausted("no rhythm kit reaches the target tempi within the stretch limits");
      }
    }
    return out;
  }

  StimulusRecipe categorical_stimulus(const std::string& category, const PoolClip* shared,
                                      Rng& rng, std::uint64_t seed) {
    switch (attr_) {
      case Attribute::Brightness: {
        const double mag = std::round(rng.uniform(4.0, 9.0) * 10.0) / 10.0;
        const double tilt = category == "bright" ? mag : -mag;
        auto r = base(*shared, tilt, category);
        r.ops.push_back(op(Attribute::Brightness, tilt));
        return r;
      }
      case Attribute::Direction: {
        const double az = category == "front" ? std::round(rng.uniform(-60.0, 60.0))
                                              : wrap_azimuth(std::round(rng.uniform(120.0, 239.0)));
        auto r = base(*shared, az, category);
        r.ops.push_back(op(Attribute::Direction, az));
        return r;
      }
      case Attribute::Distance: {
        if (!ctx_.bank || !ctx_.bank->contains("early")) {
          throw ConfigError("distance items need an IR bank with an 'early' response");
        }
        const double far = category == "far" ? 1.0 : 0.0;
        auto r = base(*shared, far, category);
        r.ops.push_back(op(Attribute::Distance, far));
        return r;
      }
      case Attribute::Reverberation: {
        if (category == "dry") return base(*shared, 0.0, "dry");
        if (!ctx_.bank || ctx_.bank->room_labels().empty()) {
          throw ConfigError("reverberation items need an IR bank with 'room-*' responses");
        }
        const auto rooms = ctx_.bank->room_labels();
        const std::string room = pick(rng, rooms);
        auto r = base(*shared, 1.0, room);
        r.ops.push_back(op(Attribute::Reverberation, 1.0, 0, room));
        return r;
      }
      case Attribute::Timbre: {
        const double norm = std::round(rng.uniform(55.0, 72.0));
        std::vector<const PoolClip*> ok;
        for (const auto* c : ctx_.pool->with_label("instrument", category)) {
          if (auto m = c->label("midi"); m && std::abs(norm - std::stod(*m)) <= 12.0) ok.push_back(c);
        }
        if (ok.empty()) exhausted("no " + category + " clip within 12 semitones of the pitch norm");
        const PoolClip& src = *pick(rng, ok);
        auto r = base(src, norm, category);
        r.ops.push_back(op(Attribute::Timbre, norm - std::stod(*src.label("midi"))));
        return r;
      }
      case Attribute::Texture: {
        const auto clips = ctx_.pool->with_label("texture", category);
        if (clips.empty()) exhausted("no texture clips labeled " + category);
        return base(*pick(rng, clips), 0.0, category);
      }
      default: {  // counting
        const double n = std::stod(category);
        auto r = base(*shared, n);
        r.ops.push_back(op(Attribute::Counting, n, seed));
        return r;
      }
    }
  }

  std::vector<std::string> category_space() {
    switch (attr_) {
      case Attribute::Timbre: return categories("instrument");
      case Attribute::Texture: return categories("texture");
      case Attribute::Counting: {
        std::vector<std::string> out;
        for (int n = 1; n <= kMaxCount; ++n) out.push_back(std::to_string(n));
        return out;
      }
      default: {
        auto [low, high] = bin_labels(attr_);
        return {low, high};
      }
    }
  }

  /// Gold labels in plan order: stratified over bins (or categories), then
  /// shuffled with the cell seed.
  std::vector<std::string> recognition_targets() {
    const auto space = category_space();
    const auto counts =
        stratified_counts(std::vector<std::size_t>(space.size(), 1), cfg_.per_cell);
    std::vector<std::string> out;
    for (std::size_t k = 0; k < space.size(); ++k) out.insert(out.end(), counts[k], space[k]);
    Rng rng(mix_seed(seed_, hash_name("targets")));
    rng.shuffle(out.begin(), out.end());
    return out;
  }

  const PoolClip* shared_source(Rng& rng) {
    if (attr_ == Attribute::Counting) return pick(rng, single_onset_events());
    if (attr_ == Attribute::Timbre || attr_ == Attribute::Texture) return nullptr;
    if (attr_ == Attribute::Direction) {
      // The back render differs only above the pinna cutoff.
      if (!direction_sources_) {
        direction_sources_.emplace();
        for (const auto* c : tonal("sustained")) {
          if (spectral_centroid(c->audio) >= kDirectionMinCentroidHz) direction_sources_->push_back(c);
        }
      }
      if (direction_sources_->empty()) exhausted("no sustained clip with enough high-frequency content");
      return pick(rng, *direction_sources_);
    }
    return pick(rng, tonal("sustained"));
  }

  TaskItem recognition(std::size_t index, std::uint64_t seed, const std::string& gold) {
    Rng rng(seed);
    StimulusRecipe stim;
    std::string distractor;
    if (has_scalar_threshold(attr_)) {
      const auto ranges = guarded_ranges(attr_, cfg_.thresholds, cfg_.guards);
      const bool high = gold == bin_label(attr_, Bin::High);
      const double v = draw_in(rng, attr_, high ? ranges.second : ranges.first);
      stim = scalar_stimuli({v}, rng).front();
      distractor = bin_label(attr_, high ? Bin::Low : Bin::High);
    } else {
      const PoolClip* shared = shared_source(rng);
      stim = categorical_stimulus(gold, shared, rng, mix_seed(seed, 1));
      auto space = category_space();
      space.erase(std::remove(space.begin(), space.end(), gold), space.end());
      distractor = pick(rng, space);
    }
    TaskItem item = assemble_recognition(attr_, gold, distractor, cfg_.templates,
                                         mix_seed(seed, hash_name("coin")));
    item.seed = seed;
    item.index = index;
    item.stimuli = {std::move(stim)};
    return item;
  }

  TaskItem comparison(std::size_t index, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<StimulusRecipe> pair;  // {less, more}
    std::string subject;
    if (has_scalar_threshold(attr_)) {
      const auto ranges = guarded_ranges(attr_, cfg_.thresholds, cfg_.guards);
      // A drawn pair may be out of reach of every source; redraw a bounded
      // number of times.
      for (int attempt = 0; pair.empty(); ++attempt) {
        std::vector<Candidate> pool;
        for (int k = 0; k < 6; ++k) {
          pool.push_back({fmt::format("low{}", k), draw_in(rng, attr_, ranges.first), {}});
          pool.push_back({fmt::format("high{}", k), draw_in(rng, attr_, ranges.second), {}});
        }
        const auto chosen = sample_comparison_pair(
            pool, attr_, planning_margins(cfg_.margins),
            mix_seed(seed, hash_name("pair") + static_cast<std::uint64_t>(attempt)),
            cfg_.thresholds, cfg_.held);
        try {
          pair = scalar_stimuli({chosen.first.value, chosen.second.value}, rng);
        } catch (const PoolExhaustedError&) {
          if (attempt + 1 == kPairAttempts) throw;
        }
      }
    } else {
      const auto space = category_space();
      const PoolClip* shared = shared_source(rng);
      std::string less, more;
      if (attr_ == Attribute::Counting) {
        int a = 0, b = 0;
        while (std::abs(a - b) < cfg_.margins.count_delta) {
          a = rng.range(1, kMaxCount);
          b = rng.range(1, kMaxCount);
        }
        less = std::to_string(std::min(a, b));
        more = std::to_string(std::max(a, b));
      } else if (attr_ == Attribute::Timbre || attr_ == Attribute::Texture) {
        auto shuffled = space;
        rng.shuffle(shuffled.begin(), shuffled.end());
        less = shuffled[0];
        more = shuffled[1];
        subject = more;
      } else {
        less = space[0];
        more = space[1];
      }
      if (attr_ == Attribute::Timbre) {
        // Both instruments share one pitch norm.
        const std::uint64_t norm_seed = rng.next();
        Rng ra(norm_seed), rb(norm_seed);
        auto a = categorical_stimulus(less, shared, ra, 0);
        auto b = categorical_stimulus(more, shared, rb, 0);
        pair = {std::move(a), std::move(b)};
      } else {
        auto a = categorical_stimulus(less, shared, rng, mix_seed(seed, 1));
        auto b = categorical_stimulus(more, shared, rng, mix_seed(seed, 2));
        pair = {std::move(a), std::move(b)};
      }
    }
    Rng coin(mix_seed(seed, hash_name("coin")));
    const bool target_first = coin.coin();
    TaskItem item = assemble_comparison(attr_, target_first, cfg_.templates, subject);
    item.seed = seed;
    item.index = index;
    item.stimuli = target_first ? std::vector<StimulusRecipe>{pair[1], pair[0]} : pair;
    return item;
  }

  Attribute attr_;
  Task task_;
  const BuildConfig& cfg_;
  const RenderContext& ctx_;
  std::uint64_t seed_;
  std::map<std::string, double> active_;
  std::optional<std::vector<const PoolClip*>> events_;
  std::optional<std::vector<const PoolClip*>> direction_sources_;
};

Waveform apply_op(const Waveform& w, const TransformConfig& t, const RenderContext& ctx) {
  switch (t.kind) {
    case Attribute::Pitch:
    case Attribute::Timbre: return pitch_shift(w, t.magnitude);
    case Attribute::Brightness: return brightness_shape(w, t.magnitude);
    case Attribute::Loudness: return gain_to_target(w, t.magnitude).waveform;
    case Attribute::Velocity: return velocity_scale(w, t.magnitude / 127.0);
    case Attribute::Duration: return time_stretch(w, t.magnitude);
    case Attribute::Tempo: return time_stretch(w, 1.0 / t.magnitude);
    case Attribute::Direction:
      return render_direction(w.channels() == 1 ? w : Waveform::mono(w.sample_rate(), w.mixdown()),
                              t.magnitude);
    case Attribute::Distance:
      if (!ctx.bank) throw ConfigError("distance rendering needs an IR bank");
      return render_distance(w, t.magnitude != 0.0, *ctx.bank);
    case Attribute::Reverberation:
      if (!ctx.bank) throw ConfigError("reverberation needs an IR bank");
      return apply_reverb(w, ctx.bank->get(t.label));
    case Attribute::Counting:
      return synthesize_count(w, static_cast<int>(std::lround(t.magnitude)),
                              ctx.geometry.recognition_len_s, t.seed);
    case Attribute::Texture: return w;
  }
  return w;
}

}  // namespace

double BinThresholds::for_attribute(Attribute a) const {
  switch (a) {
    case Attribute::Pitch: return pitch_midi;
    case Attribute::Loudness: return loudness_lufs;
    case Attribute::Velocity: return velocity;
    case Attribute::Duration: return duration_s;
    case Attribute::Tempo: return tempo_bpm;
    default: throw ArgumentError(fmt::format("{} has no scalar threshold", to_string(a)));
  }
}

std::string_view to_string(Bin b) { return b == Bin::Low ? "low" : "high"; }

Bin classify_bin(double value, Attribute attribute, const BinThresholds& thresholds) {
  return value >= thresholds.for_attribute(attribute) ? Bin::High : Bin::Low;
}

bool MarginTable::satisfied(Attribute a, double x, double y) const {
  const double lo = std::min(x, y), hi = std::max(x, y);
  switch (a) {
    case Attribute::Pitch: return hi - lo >= pitch_semitones;
    case Attribute::Loudness: return hi - lo >= loudness_lu;
    case Attribute::Velocity: return hi - lo >= velocity;
    case Attribute::Duration: return lo > 0.0 && hi / lo >= duration_ratio;
    case Attribute::Tempo: return lo > 0.0 && hi / lo >= tempo_ratio;
    case Attribute::Counting: return hi - lo >= count_delta;
    case Attribute::Direction: {
      const Sector sx = sector_of(x), sy = sector_of(y);
      return sx != Sector::Neither && sy != Sector::Neither && sx != sy;
    }
    default: return x != y;
  }
}

bool entailed(Attribute a, Measure m) {
  switch (a) {
    case Attribute::Pitch: return m == Measure::F0 || m == Measure::Centroid;
    case Attribute::Brightness: return m == Measure::Centroid;
    case Attribute::Loudness: return m == Measure::Lufs;
    case Attribute::Velocity: return m == Measure::Lufs || m == Measure::Centroid;
    case Attribute::Duration: return m == Measure::Duration;
    case Attribute::Tempo: return m == Measure::Duration;
    case Attribute::Direction:
    case Attribute::Distance: return m == Measure::Centroid;
    case Attribute::Reverberation: return m == Measure::Duration || m == Measure::Centroid;
    case Attribute::Timbre: return m == Measure::Centroid || m == Measure::Duration;
    case Attribute::Texture: return m == Measure::Centroid || m == Measure::F0;
    case Attribute::Counting: return m == Measure::Duration;
  }
  return false;
}

std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& bin_sizes,
                                           std::size_t n) {
  const std::size_t total = std::accumulate(bin_sizes.begin(), bin_sizes.end(), std::size_t{0});
  std::vector<std::size_t> out(bin_sizes.size(), 0);
  if (total == 0) return out;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < bin_sizes.size(); ++i) {
    out[i] = n * bin_sizes[i] / total;
    assigned += out[i];
    remainders.emplace_back(n * bin_sizes[i] % total, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[remainders[k].second];
  return out;
}

namespace {

bool held_ok(Attribute a, const MeasuredValues& x, const MeasuredValues& y,
             const HeldTolerance& held) {
  if (!entailed(a, Measure::Lufs) && x.lufs && y.lufs &&
      std::abs(*x.lufs - *y.lufs) > held.lufs_lu) {
    return false;
  }
  if (!entailed(a, Measure::F0) && x.f0_hz && y.f0_hz &&
      std::abs(*x.f0_hz / *y.f0_hz - 1.0) > held.f0_rel) {
    return false;
  }
  if (!entailed(a, Measure::Duration) && x.duration_s && y.duration_s) {
    const double m = std::max(*x.duration_s, *y.duration_s);
    if (m > 0.0 && std::abs(*x.duration_s - *y.duration_s) / m > held.duration_rel) return false;
  }
  return true;
}

}  // namespace

ComparisonPair sample_comparison_pair(const std::vector<Candidate>& pool, Attribute attribute,
                                      const MarginTable& margins, std::uint64_t seed,
                                      const BinThresholds& thresholds,
                                      const HeldTolerance& held) {
  std::vector<const Candidate*> low, high;
  for (const auto& c : pool) {
    (classify_bin(c.value, attribute, thresholds) == Bin::Low ? low : high).push_back(&c);
  }
  const auto name = to_string(attribute);
  if (low.empty()) throw PoolExhaustedError(fmt::format("no {} candidates in the low bin", name));
  if (high.empty()) throw PoolExhaustedError(fmt::format("no {} candidates in the high bin", name));
  Rng rng(seed);
  rng.shuffle(low.begin(), low.end());
  rng.shuffle(high.begin(), high.end());
  bool any_margin = false;
  for (const auto* a : low) {
    for (const auto* b : high) {
      if (!margins.satisfied(attribute, a->value, b->value)) continue;
      any_margin = true;
      if (held_ok(attribute, a->measured, b->measured, held)) return {*a, *b};
    }
  }
  if (!any_margin) throw PoolExhaustedError(fmt::format("no {} pair meets the margin floor", name));
  throw PoolExhaustedError(
      fmt::format("no {} pair keeps non-target measures within tolerance", name));
}

TemplateBank TemplateBank::defaults() {
  TemplateBank bank;
  const std::string choose = "\nA: {a}\nB: {b}\nAnswer with A or B.";
  const std::string two = "The recording contains two clips separated by a short silence. ";
  auto rec = [&](Attribute a, const std::string& q) {
    bank.set(a, Task::Recognition,
             {fmt::format("{}-rec-v1", to_string(a)), "Listen to the clip. " + q + choose});
  };
  auto cmp = [&](Attribute a, const std::string& q) {
    bank.set(a, Task::Comparison, {fmt::format("{}-cmp-v1", to_string(a)), two + q + choose});
  };
  rec(Attribute::Pitch, "Is the pitch of the sound high or low?");
  rec(Attribute::Brightness, "Does the sound have a bright or a dark tone?");
  rec(Attribute::Loudness, "Is the sound loud or quiet?");
  rec(Attribute::Velocity, "Was the sound struck hard or soft?");
  rec(Attribute::Duration, "Is the sound event long or short?");
  rec(Attribute::Tempo, "Is the rhythm fast or slow?");
  rec(Attribute::Direction, "Does the sound come from the front or from the back?");
  rec(Attribute::Distance, "Does the sound source seem near or far?");
  rec(Attribute::Reverberation, "Was the sound recorded in a dry space or in a reverberant room?");
  rec(Attribute::Timbre, "Which instrument is playing?");
  rec(Attribute::Texture, "Which sound texture is this?");
  rec(Attribute::Counting, "How many sound events occur in the clip?");
  cmp(Attribute::Pitch, "Which clip has a higher pitch?");
  cmp(Attribute::Brightness, "Which clip is brighter?");
  cmp(Attribute::Loudness, "Which clip is louder?");
  cmp(Attribute::Velocity, "Which clip was struck harder?");
  cmp(Attribute::Duration, "Which clip is longer?");
  cmp(Attribute::Tempo, "Which clip has a faster tempo?");
  cmp(Attribute::Direction, "Which clip comes from in front of the listener?");
  cmp(Attribute::Distance, "Which clip sounds closer?");
  cmp(Attribute::Reverberation, "Which clip is more reverberant?");
  cmp(Attribute::Timbre, "Which clip is played by the {x}?");
  cmp(Attribute::Texture, "Which clip sounds like {x}?");
  cmp(Attribute::Counting, "Which clip contains more sound events?");
  return bank;
}

void TemplateBank::set(Attribute a, Task t, Template tpl) {
  templates_.insert_or_assign({a, t}, std::move(tpl));
}

bool TemplateBank::contains(Attribute a, Task t) const { return templates_.count({a, t}) != 0; }

const Template& TemplateBank::get(Attribute a, Task t) const {
  auto it = templates_.find({a, t});
  if (it == templates_.end()) {
    throw ConfigError(fmt::format("no {} template for {}", to_string(t), to_string(a)));
  }
  return it->second;
}

std::string fill_template(const Template& tpl, const std::string& a, const std::string& b,
                          const std::string& x) {
  std::string out;
  const std::string& s = tpl.text;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '{' && i + 2 < s.size() && s[i + 2] == '}') {
      const char key = s[i + 1];
      if (key == 'a' || key == 'b' || key == 'x') {
        out += key == 'a' ? a : key == 'b' ? b : x;
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

TaskItem assemble_recognition(Attribute attribute, const std::string& gold,
                              const std::string& distractor, const TemplateBank& templates,
                              std::uint64_t seed, const std::string& subject) {
  const Template& tpl = templates.get(attribute, Task::Recognition);
  TaskItem item;
  item.task = Task::Recognition;
  item.attribute = attribute;
  item.template_id = tpl.id;
  item.subject = subject;
  item.gold = gold;
  item.distractor = distractor;
  Rng coin(seed);
  const bool gold_first = coin.coin();
  item.option_a = gold_first ? gold : distractor;
  item.option_b = gold_first ? distractor : gold;
  item.answer = gold_first ? 'A' : 'B';
  item.instruction = fill_template(tpl, item.option_a, item.option_b, subject);
  return item;
}

TaskItem assemble_comparison(Attribute attribute, bool target_first,
                             const TemplateBank& templates, const std::string& subject) {
  const Template& tpl = templates.get(attribute, Task::Comparison);
  TaskItem item;
  item.task = Task::Comparison;
  item.attribute = attribute;
  item.template_id = tpl.id;
  item.subject = subject;
  item.option_a = "the first clip";
  item.option_b = "the second clip";
  item.target_segment = target_first ? 1 : 2;
  item.answer = target_first ? 'A' : 'B';
  item.instruction = fill_template(tpl, item.option_a, item.option_b, subject);
  return item;
}

void flip_item(TaskItem& item) {
  if (item.task == Task::Recognition) {
    const std::string a = item.option_a;
    // Instruction text lists the options in order, so rebuild it by swapping.
    const auto pos_a = item.instruction.rfind("A: " + item.option_a);
    const auto pos_b = item.instruction.rfind("B: " + item.option_b);
    if (pos_a != std::string::npos && pos_b != std::string::npos && pos_a < pos_b) {
      std::string text = item.instruction.substr(0, pos_a);
      text += "A: " + item.option_b;
      text += item.instruction.substr(pos_a + 3 + item.option_a.size(),
                                      pos_b - (pos_a + 3 + item.option_a.size()));
      text += "B: " + a;
      text += item.instruction.substr(pos_b + 3 + item.option_b.size());
      item.instruction = text;
    }
    item.option_a = item.option_b;
    item.option_b = a;
  } else {
    std::swap(item.stimuli[0], item.stimuli[1]);
    item.target_segment = 3 - item.target_segment;
  }
  item.answer = item.answer == 'A' ? 'B' : 'A';
  assign_identity(item);
}

void assign_identity(TaskItem& item) {
  std::string tag;
  for (std::size_t i = 0; i < item.stimuli.size(); ++i) {
    if (i > 0) tag += "_vs_";
    tag += stimulus_tag(item.attribute, item.stimuli[i]);
  }
  const auto attr = to_string(item.attribute);
  item.id = fmt::format("{}-{}-{:04d}-{}", attr,
                        item.task == Task::Recognition ? "rec" : "cmp", item.index, tag);
  item.audio_path = fmt::format("audio/{}/{}/{}.wav", attr, to_string(item.task), item.id);
}

char expected_answer(const TaskItem& item, const BinThresholds& thresholds) {
  if (item.task == Task::Recognition) {
    if (item.stimuli.size() != 1) return '?';
    const std::string gold = recognition_label(item.attribute, item.stimuli[0], thresholds);
    if (item.option_a == gold) return 'A';
    if (item.option_b == gold) return 'B';
    return '?';
  }
  if (item.stimuli.size() != 2) return '?';
  const double k1 = comparison_key(item.attribute, item.stimuli[0], item.subject);
  const double k2 = comparison_key(item.attribute, item.stimuli[1], item.subject);
  if (k1 == k2) return '?';
  return k1 > k2 ? 'A' : 'B';
}

std::vector<TaskItem> plan_cell(Attribute attribute, Task task, const BuildConfig& config,
                                const RenderContext& ctx) {
  auto items = CellPlanner(attribute, task, config, ctx).plan();
  for (auto& item : items) assign_identity(item);
  return items;
}

std::vector<TaskItem> balance_answers(std::vector<TaskItem> items, std::uint64_t seed) {
  std::map<std::pair<Attribute, Task>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < items.size(); ++i) {
    cells[{items[i].attribute, items[i].task}].push_back(i);
  }
  for (const auto& [cell, members] : cells) {
    auto count = [&](std::size_t upto, char letter) {
      std::size_t c = 0;
      for (std::size_t k = 0; k < upto; ++k) c += items[members[k]].answer == letter;
      return c;
    };
    const std::size_t n = members.size();
    const std::size_t a = count(n, 'A'), b = n - a;
    if ((a > b ? a - b : b - a) <= 1) continue;
    // An odd last item keeps its coin flip; the even prefix is made exact.
    const std::size_t m = n - n % 2;
    const std::size_t pa = count(m, 'A'), pb = m - pa;
    const char majority = pa > pb ? 'A' : 'B';
    const std::size_t flips = (pa > pb ? pa - pb : pb - pa) / 2;
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < m; ++k) {
      if (items[members[k]].answer == majority) candidates.push_back(members[k]);
    }
    Rng rng(mix_seed(seed, hash_name(fmt::format("balance/{}/{}", to_string(cell.first),
                                                 to_string(cell.second)))));
    rng.shuffle(candidates.begin(), candidates.end());
    for (std::size_t k = 0; k < flips; ++k) flip_item(items[candidates[k]]);
  }
  return items;
}

Waveform render_stimulus(const StimulusRecipe& recipe, const RenderContext& ctx) {
  if (!ctx.pool) throw ConfigError("no clip pool configured");
  Waveform w = ctx.pool->get(recipe.source).audio;
  if (w.sample_rate() != ctx.geometry.sample_rate) w = resample(w, ctx.geometry.sample_rate);
  if (recipe.pre_lufs) w = gain_to_target(w, *recipe.pre_lufs).waveform;
  for (const auto& t : recipe.ops) w = apply_op(w, t, ctx);
  w = fit_to_reference(w, ctx.geometry);
  if (recipe.final_lufs) w = gain_to_target(w, *recipe.final_lufs).waveform;
  return w;
}

Waveform render_item_audio(const TaskItem& item, const RenderContext& ctx) {
  if (item.task == Task::Recognition) {
    if (item.stimuli.size() != 1) throw InputError(item.id + ": recognition needs one stimulus");
    return render_stimulus(item.stimuli[0], ctx);
  }
  if (item.stimuli.size() != 2) throw InputError(item.id + ": comparison needs two stimuli");
  return concat_with_gap(render_stimulus(item.stimuli[0], ctx),
                         render_stimulus(item.stimuli[1], ctx), ctx.geometry);
}

void render_audio(const std::vector<TaskItem>& items, const RenderContext& ctx,
                  const std::filesystem::path& out_dir, int workers) {
  for (const auto& item : items) {
    std::filesystem::create_directories((out_dir / item.audio_path).parent_path());
  }
  std::vector<std::exception_ptr> errors(items.size());
  const int threads = std::max(1, workers);
  const auto n = static_cast<long long>(items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      const auto& item = items[static_cast<std::size_t>(i)];
      save_wav(render_item_audio(item, ctx), out_dir / item.audio_path);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

TaskItem build_recognition_item(const StimulusRecipe& stimulus, Attribute attribute,
                                const std::string& gold, const std::string& distractor,
                                const TemplateBank& templates, std::uint64_t seed,
                                const RenderContext& ctx, const std::filesystem::path& out_dir,
                                const std::string& subject) {
  TaskItem item = assemble_recognition(attribute, gold, distractor, templates,
                                       mix_seed(seed, hash_name("coin")), subject);
  item.seed = seed;
  item.stimuli = {stimulus};
  assign_identity(item);
  render_audio({item}, ctx, out_dir, 1);
  return item;
}

TaskItem build_comparison_item(const StimulusRecipe& less, const StimulusRecipe& more,
                               Attribute attribute, const TemplateBank& templates,
                               std::uint64_t seed, const RenderContext& ctx,
                               const std::filesystem::path& out_dir,
                               const std::string& subject) {
  Rng coin(mix_seed(seed, hash_name("coin")));
  const bool target_first = coin.coin();
  TaskItem item = assemble_comparison(attribute, target_first, templates, subject);
  item.seed = seed;
  item.stimuli = target_first ? std::vector<StimulusRecipe>{more, less}
                              : std::vector<StimulusRecipe>{less, more};
  assign_identity(item);
  render_audio({item}, ctx, out_dir, 1);
  return item;
}

}  // namespace sonicforge

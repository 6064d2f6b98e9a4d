#include "sonicforge/audit.hpp"

#include <fmt/format.h>

#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "sonicforge/errors.hpp"
#include "sonicforge/loudness.hpp"
#include "sonicforge/wav_io.hpp"

namespace sonicforge {
namespace {

constexpr double kClosureRel = 0.01;
constexpr double kLufsTol = 0.2;

struct SourceFacts {
  std::optional<double> f0_hz;
  double active_s = 0.0;
  std::optional<double> period_s;
};

struct Segment {
  Waveform audio;
  AnalysisReport analysis;
  float peak = 0.0f;
  std::optional<double> ear_centroid_hz;  // mean over channels
};

/// Per-ear centroid; a stereo mixdown would comb-filter on the ITD.
std::optional<double> ear_centroid(const Waveform& w, const AnalysisReport& a) {
  if (w.channels() == 1) return a.centroid_hz;
  double sum = 0.0;
  for (int c = 0; c < w.channels(); ++c) {
    const auto ch = w.channel(c);
    const Waveform mono = Waveform::mono(w.sample_rate(), std::vector<float>(ch.begin(), ch.end()));
    if (mono.peak() == 0.0f) return std::nullopt;
    sum += spectral_centroid(mono);
  }
  return sum / w.channels();
}

struct ItemResult {
  std::vector<Violation> violations;
  std::vector<ClipReport> clips;
  std::size_t stimuli = 0;
  std::size_t closure_checks = 0;
  bool pair = false;
  bool margin_ok = false;
  bool dominance_ok = false;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Waveform slice(const Waveform& w, std::size_t begin, std::size_t frames) {
  std::vector<std::vector<float>> ch;
  for (const auto& c : w.planar()) ch.emplace_back(c.begin() + begin, c.begin() + begin + frames);
  return Waveform(w.sample_rate(), std::move(ch));
}

bool rel_close(double measured, double expected, double rel) {
  return std::abs(measured - expected) <= rel * std::abs(expected);
}

class ItemAuditor {
 public:
  ItemAuditor(const std::filesystem::path& dir, const RenderContext& ctx, const BuildConfig& cfg,
              const std::map<std::string, SourceFacts>& facts)
      : dir_(dir), ctx_(ctx), cfg_(cfg), facts_(facts) {}

  ItemResult run(const TaskItem& item) const {
    ItemResult r;
    auto fail = [&](const std::string& check, const std::string& detail) {
      r.violations.push_back({item.id, check, detail});
    };
    std::vector<std::uint8_t> bytes;
    Waveform w;
    try {
      bytes = read_bytes(dir_ / item.audio_path);
      w = decode_wav(bytes);
    } catch (const Error& e) {
      fail("unreadable", e.what());
      return r;
    }

    const auto& g = ctx_.geometry;
    const bool rec = item.task == Task::Recognition;
    const std::size_t want = rec ? g.recognition_frames() : g.comparison_frames();
    if (w.sample_rate() != g.sample_rate || w.frames() != want) {
      fail("geometry", fmt::format("{} frames at {} Hz, expected {} at {} Hz", w.frames(),
                                   w.sample_rate(), want, g.sample_rate));
    }

    try {
      if (encode_wav(render_item_audio(item, ctx_)) != bytes) {
        fail("regenerability", "re-rendered audio differs from the file");
      }
    } catch (const Error& e) {
      fail("regenerability", e.what());
    }

    const char expected = expected_answer(item, cfg_.thresholds);
    if (expected != item.answer) {
      fail("label", fmt::format("answer {} but provenance implies {}", item.answer, expected));
    }
    if (item.instruction.find(item.option_a) == std::string::npos ||
        item.instruction.find(item.option_b) == std::string::npos) {
      fail("label", "instruction does not contain both options");
    }

    if (w.sample_rate() != g.sample_rate || w.frames() != want) return r;
    const std::size_t n = g.recognition_frames();
    std::vector<Waveform> parts;
    if (rec) {
      parts.push_back(w);
    } else {
      parts.push_back(slice(w, 0, n));
      parts.push_back(slice(w, n + g.gap_frames(), n));
    }
    if (parts.size() != item.stimuli.size()) {
      fail("label", "stimulus count does not match the task");
      return r;
    }
    std::vector<Segment> segs;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Segment s;
      s.analysis = analyze(parts[k]);
      s.peak = parts[k].peak();
      s.ear_centroid_hz = ear_centroid(parts[k], s.analysis);
      s.audio = std::move(parts[k]);
      r.clips.push_back({item.id, static_cast<int>(k + 1), s.analysis});
      closure(item, item.stimuli[k], s, r);
      segs.push_back(std::move(s));
    }
    r.stimuli = segs.size();
    if (!rec) {
      r.pair = true;
      const std::size_t before = r.violations.size();
      margin(item, segs, r);
      r.margin_ok = r.violations.size() == before;
      const std::size_t before_dom = r.violations.size();
      dominance(item, segs, r);
      r.dominance_ok = r.violations.size() == before_dom;
    }
    return r;
  }

 private:
  void closure(const TaskItem& item, const StimulusRecipe& s, const Segment& seg,
               ItemResult& r) const {
    auto fail = [&](const std::string& detail) {
      r.violations.push_back({item.id, "closure", detail});
    };
    const auto fit = facts_.find(s.source);
    const SourceFacts* src = fit == facts_.end() ? nullptr : &fit->second;
    for (const auto& op : s.ops) {
      switch (op.kind) {
        case Attribute::Pitch:
        case Attribute::Timbre: {
          if (!src || !src->f0_hz) break;
          ++r.closure_checks;
          const double target = *src->f0_hz * std::exp2(op.magnitude / 12.0);
          if (!seg.analysis.f0_hz || !rel_close(*seg.analysis.f0_hz, target, kClosureRel)) {
            fail(fmt::format("pitch target {:.2f} Hz, measured {}", target,
                             seg.analysis.f0_hz ? fmt::format("{:.2f} Hz", *seg.analysis.f0_hz)
                                                : std::string("none")));
          }
          break;
        }
        case Attribute::Duration: {
          if (!src) break;
          ++r.closure_checks;
          const double target = src->active_s * op.magnitude;
          if (!rel_close(seg.analysis.active_duration_s, target, kClosureRel)) {
            fail(fmt::format("stretch target {:.4f} s, measured {:.4f} s", target,
                             seg.analysis.active_duration_s));
          }
          break;
        }
        case Attribute::Tempo: {
          if (!src || !src->period_s) break;
          ++r.closure_checks;
          const double target = *src->period_s / op.magnitude;
          const auto period = onset_period(seg.analysis.onset_times_s);
          if (!period || !rel_close(*period, target, kClosureRel)) {
            fail(fmt::format("beat period target {:.4f} s, measured {}", target,
                             period ? fmt::format("{:.4f} s", *period) : std::string("none")));
          }
          break;
        }
        case Attribute::Counting: {
          ++r.closure_checks;
          const auto n = static_cast<std::size_t>(std::lround(op.magnitude));
          if (seg.analysis.onset_count != n) {
            fail(fmt::format("{} events placed, {} onsets detected", n, seg.analysis.onset_count));
          }
          break;
        }
        default: break;
      }
    }
    if (s.final_lufs) {
      ++r.closure_checks;
      const auto& l = seg.analysis.integrated_lufs;
      if (!l || std::abs(*l - *s.final_lufs) > kLufsTol) {
        fail(fmt::format("loudness target {:.2f} LUFS, measured {}", *s.final_lufs,
                         l ? fmt::format("{:.2f}", *l) : std::string("below gate")));
      }
    }
  }

  void margin(const TaskItem& item, const std::vector<Segment>& segs, ItemResult& r) const {
    auto fail = [&](const std::string& detail) {
      r.violations.push_back({item.id, "margin", detail});
    };
    const Attribute a = item.attribute;
    const auto& s0 = item.stimuli[0];
    const auto& s1 = item.stimuli[1];
    // m = index of the stimulus with more of the property per the gold answer.
    const std::size_t m = item.answer == 'A' ? 0 : 1;
    const std::size_t l = 1 - m;
    const auto& A = segs[m].analysis;
    const auto& B = segs[l].analysis;
    const auto& mg = cfg_.margins;
    switch (a) {
      case Attribute::Pitch: {
        if (!A.f0_hz || !B.f0_hz) {
          fail("pitch undefined in a segment");
          break;
        }
        const double st = 12.0 * std::log2(*A.f0_hz / *B.f0_hz);
        if (st < mg.pitch_semitones) fail(fmt::format("pitch contrast {:.2f} st", st));
        break;
      }
      case Attribute::Loudness: {
        if (!A.integrated_lufs || !B.integrated_lufs) {
          fail("loudness below gate");
          break;
        }
        const double d = *A.integrated_lufs - *B.integrated_lufs;
        if (d < mg.loudness_lu) fail(fmt::format("loudness contrast {:.2f} LU", d));
        break;
      }
      case Attribute::Velocity: {
        const double d = item.stimuli[m].value - item.stimuli[l].value;
        if (d < mg.velocity) fail(fmt::format("velocity contrast {:.0f}", d));
        if (!(segs[m].peak > segs[l].peak)) fail("harder strike does not have the higher peak");
        if (!A.integrated_lufs || !B.integrated_lufs || *A.integrated_lufs <= *B.integrated_lufs) {
          fail("harder strike is not louder");
        }
        break;
      }
      case Attribute::Duration: {
        const double ratio = B.active_duration_s > 0.0 ? A.active_duration_s / B.active_duration_s : 0.0;
        if (ratio < mg.duration_ratio) fail(fmt::format("duration ratio {:.3f}", ratio));
        break;
      }
      case Attribute::Tempo: {
        const auto pa = onset_period(A.onset_times_s), pb = onset_period(B.onset_times_s);
        const double ratio = pa && pb ? *pb / *pa : 0.0;
        if (ratio < mg.tempo_ratio) fail(fmt::format("tempo ratio {:.3f}", ratio));
        break;
      }
      case Attribute::Brightness:
        if (!A.centroid_hz || !B.centroid_hz || *A.centroid_hz <= *B.centroid_hz) {
          fail("brighter clip does not have the higher centroid");
        }
        break;
      case Attribute::Direction:
        if (!mg.satisfied(a, s0.value, s1.value)) fail("azimuths are not in opposite sectors");
        if (sector_of(item.stimuli[m].value) != Sector::Front) fail("target clip is not frontal");
        if (!segs[m].ear_centroid_hz || !segs[l].ear_centroid_hz ||
            *segs[m].ear_centroid_hz <= *segs[l].ear_centroid_hz) {
          fail("front clip is not brighter than the back clip");
        }
        break;
      case Attribute::Distance: {
        if (!ctx_.bank || !ctx_.bank->contains("early")) {
          fail("no early response to measure");
          break;
        }
        const auto& early = ctx_.bank->get("early");
        const double drr = direct_to_reverberant_db(distance_response(early, false)) -
                           direct_to_reverberant_db(distance_response(early, true));
        if (item.stimuli[m].label != "near" || item.stimuli[l].label != "far") {
          fail("pair is not near versus far");
        }
        if (drr < 6.0) fail(fmt::format("DRR separation {:.2f} dB", drr));
        break;
      }
      case Attribute::Reverberation:
        if (item.stimuli[l].label != "dry" || item.stimuli[m].label == "dry") {
          fail("pair is not dry versus room");
        }
        if (A.active_duration_s <= B.active_duration_s) fail("reverberant clip has no longer decay");
        break;
      case Attribute::Timbre:
      case Attribute::Texture:
        if (s0.label == s1.label) fail("both clips share a category");
        if (item.stimuli[m].label != item.subject) fail("target clip does not match the question");
        break;
      case Attribute::Counting: {
        const double d = static_cast<double>(A.onset_count) - static_cast<double>(B.onset_count);
        if (d < mg.count_delta) {
          fail(fmt::format("onset counts {} vs {}", A.onset_count, B.onset_count));
        }
        break;
      }
    }
  }

  void dominance(const TaskItem& item, const std::vector<Segment>& segs, ItemResult& r) const {
    auto fail = [&](const std::string& detail) {
      r.violations.push_back({item.id, "dominance", detail});
    };
    const Attribute a = item.attribute;
    const auto& x = segs[0].analysis;
    const auto& y = segs[1].analysis;
    const auto& held = cfg_.held;
    if (!entailed(a, Measure::Lufs) && x.integrated_lufs && y.integrated_lufs) {
      const double d = std::abs(*x.integrated_lufs - *y.integrated_lufs);
      if (d > held.lufs_lu) fail(fmt::format("loudness differs by {:.2f} LU", d));
    }
    if (!entailed(a, Measure::F0) && x.f0_hz && y.f0_hz) {
      const double d = std::abs(*x.f0_hz / *y.f0_hz - 1.0);
      if (d > held.f0_rel) fail(fmt::format("f0 differs by {:.2f}%", 100.0 * d));
    }
    if (!entailed(a, Measure::Duration)) {
      const double hi = std::max(x.active_duration_s, y.active_duration_s);
      const double d = hi > 0.0 ? std::abs(x.active_duration_s - y.active_duration_s) / hi : 0.0;
      if (d > held.duration_rel) fail(fmt::format("duration differs by {:.2f}%", 100.0 * d));
    }
  }

  const std::filesystem::path& dir_;
  const RenderContext& ctx_;
  const BuildConfig& cfg_;
  const std::map<std::string, SourceFacts>& facts_;
};

std::map<std::string, SourceFacts> measure_sources(const std::vector<TaskItem>& items,
                                                   const RenderContext& ctx) {
  std::map<std::string, std::set<Attribute>> needs;
  for (const auto& it : items) {
    for (const auto& s : it.stimuli) {
      for (const auto& op : s.ops) needs[s.source].insert(op.kind);
    }
  }
  std::map<std::string, SourceFacts> out;
  for (const auto& [id, kinds] : needs) {
    const PoolClip* clip = ctx.pool ? ctx.pool->find(id) : nullptr;
    if (!clip) continue;
    SourceFacts f;
    if (kinds.count(Attribute::Pitch) || kinds.count(Attribute::Timbre)) {
      f.f0_hz = estimate_f0(clip->audio);
    }
    if (kinds.count(Attribute::Duration)) f.active_s = active_duration(clip->audio);
    if (kinds.count(Attribute::Tempo)) f.period_s = onset_period(count_onsets(clip->audio).times_s);
    out.emplace(id, f);
  }
  return out;
}

nlohmann::json report_json(const AnalysisReport& a) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"active_duration_s", a.active_duration_s},
              {"centroid_hz", opt(a.centroid_hz)},
              {"f0_hz", opt(a.f0_hz)},
              {"integrated_lufs", opt(a.integrated_lufs)},
              {"onset_count", a.onset_count},
              {"onset_times_s", a.onset_times_s}};
}

}  // namespace

std::size_t AuditReport::count(const std::string& check) const {
  std::size_t n = 0;
  for (const auto& v : violations) n += v.check == check;
  return n;
}

std::optional<double> onset_period(const std::vector<double>& t) {
  const std::size_t n = t.size();
  if (n < 3) return std::nullopt;
  const double mean_i = (static_cast<double>(n) - 1.0) / 2.0;
  double mean_t = 0.0;
  for (double v : t) mean_t += v;
  mean_t /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(i) - mean_i;
    num += di * (t[i] - mean_t);
    den += di * di;
  }
  return num / den;
}

AuditReport audit_dataset(const std::vector<TaskItem>& items, const std::filesystem::path& dir,
                          const RenderContext& ctx, const BuildConfig& cfg, int workers) {
  const auto facts = measure_sources(items, ctx);
  const ItemAuditor auditor(dir, ctx, cfg, facts);
  std::vector<ItemResult> results(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  const auto n = static_cast<long long>(items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (long long i = 0; i < n; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = auditor.run(items[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  AuditReport report;
  report.items = items.size();
  for (auto& r : results) {
    report.stimuli += r.stimuli;
    report.closure_checks += r.closure_checks;
    if (r.pair) {
      ++report.comparison_pairs;
      report.margin_pass += r.margin_ok;
      report.dominance_pass += r.dominance_ok;
    }
    std::move(r.violations.begin(), r.violations.end(), std::back_inserter(report.violations));
    std::move(r.clips.begin(), r.clips.end(), std::back_inserter(report.clips));
  }
  return report;
}

std::string audit_to_json(const AuditReport& report) {
  using nlohmann::json;
  json v = json::array();
  for (const auto& x : report.violations) {
    v.push_back(json{{"check", x.check}, {"detail", x.detail}, {"item_id", x.item_id}});
  }
  json j{{"items", report.items},
         {"stimuli", report.stimuli},
         {"closure_checks", report.closure_checks},
         {"comparison_pairs", report.comparison_pairs},
         {"margin_pass", report.margin_pass},
         {"dominance_pass", report.dominance_pass},
         {"violation_count", report.violations.size()},
         {"violations", v}};
  return j.dump(2) + "\n";
}

std::string clips_to_jsonl(const AuditReport& report) {
  std::string out;
  for (const auto& c : report.clips) {
    auto j = report_json(c.analysis);
    j["item_id"] = c.item_id;
    j["segment"] = c.segment;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace sonicforge

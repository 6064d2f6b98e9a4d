#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sonicforge/builder.hpp"
#include "sonicforge/dataset.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/loudness.hpp"
#include "sonicforge/toy_sources.hpp"
#include "sonicforge/wav_io.hpp"
#include "support/tempdir.hpp"

using namespace sonicforge;

namespace {

const ClipPool& pool() {
  static const ClipPool p = make_toy_pool(3);
  return p;
}

const IrBank& bank() {
  static const IrBank b = make_toy_ir_bank(3);
  return b;
}

RenderContext ctx() { return RenderContext{&pool(), &bank(), {}}; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Candidate> midi_pool(const std::vector<double>& notes) {
  std::vector<Candidate> out;
  for (double n : notes) out.push_back({"m" + std::to_string(static_cast<int>(n)), n, {}});
  return out;
}

TaskItem fake_item(Attribute a, Task t, std::size_t index, char answer) {
  TaskItem it;
  it.attribute = a;
  it.task = t;
  it.index = index;
  it.answer = answer;
  StimulusRecipe s;
  s.source = "x";
  s.value = static_cast<double>(index);
  if (t == Task::Recognition) {
    it.option_a = answer == 'A' ? "high" : "low";
    it.option_b = answer == 'A' ? "low" : "high";
    it.instruction = "Q\nA: " + it.option_a + "\nB: " + it.option_b + "\nAnswer with A or B.";
    it.stimuli = {s};
  } else {
    it.option_a = "the first clip";
    it.option_b = "the second clip";
    it.target_segment = answer == 'A' ? 1 : 2;
    StimulusRecipe s2 = s;
    s2.value += 100.0;
    it.stimuli = answer == 'A' ? std::vector<StimulusRecipe>{s2, s} : std::vector<StimulusRecipe>{s, s2};
  }
  assign_identity(it);
  return it;
}

std::pair<int, int> count_ab(const std::vector<TaskItem>& items) {
  int a = 0, b = 0;
  for (const auto& it : items) (it.answer == 'A' ? a : b)++;
  return {a, b};
}

}  // namespace

TEST_CASE("bins split at the default thresholds") {
  CHECK(classify_bin(66.0, Attribute::Pitch) == Bin::High);
  CHECK(classify_bin(64.0, Attribute::Pitch) == Bin::Low);
  CHECK(classify_bin(2.0, Attribute::Duration) == Bin::Low);
  CHECK(classify_bin(100.0, Attribute::Tempo) == Bin::High);
  CHECK(classify_bin(-10.0, Attribute::Loudness) == Bin::High);
  CHECK(classify_bin(74.0, Attribute::Velocity) == Bin::Low);
  CHECK_THROWS_AS(classify_bin(1.0, Attribute::Timbre), ArgumentError);
  BinThresholds custom;
  custom.pitch_midi = 70.0;
  CHECK(classify_bin(66.0, Attribute::Pitch, custom) == Bin::Low);
}

TEST_CASE("comparison pair meets the semitone margin") {
  const auto cands = midi_pool({60, 72});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = sample_comparison_pair(cands, Attribute::Pitch, MarginTable{}, seed);
    CHECK(p.second.value - p.first.value >= 1.0);
    CHECK(p.first.value == 60.0);
  }
}

TEST_CASE("comparison pair is seeded") {
  const auto cands = midi_pool({50, 55, 60, 62, 66, 70, 74, 78});
  const auto a = sample_comparison_pair(cands, Attribute::Pitch, MarginTable{}, 11);
  const auto b = sample_comparison_pair(cands, Attribute::Pitch, MarginTable{}, 11);
  CHECK(a.first.id == b.first.id);
  CHECK(a.second.id == b.second.id);
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto p = sample_comparison_pair(cands, Attribute::Pitch, MarginTable{}, s);
    seen.insert(p.first.id + p.second.id);
  }
  CHECK(seen.size() > 3);
}

TEST_CASE("one-bin pool is exhausted") {
  CHECK_THROWS_AS(sample_comparison_pair(midi_pool({50, 55, 60}), Attribute::Pitch, MarginTable{}, 1),
                  PoolExhaustedError);
  CHECK_THROWS_WITH(sample_comparison_pair(midi_pool({70, 72}), Attribute::Pitch, MarginTable{}, 1),
                    Catch::Matchers::ContainsSubstring("low bin"));
}

TEST_CASE("margin floor filters pairs") {
  MarginTable wide;
  wide.pitch_semitones = 20.0;
  CHECK_THROWS_WITH(sample_comparison_pair(midi_pool({60, 72}), Attribute::Pitch, wide, 1),
                    Catch::Matchers::ContainsSubstring("margin"));
  MarginTable m;
  CHECK(m.satisfied(Attribute::Duration, 2.0, 2.6));
  CHECK_FALSE(m.satisfied(Attribute::Duration, 2.0, 2.5));
  CHECK(m.satisfied(Attribute::Tempo, 100.0, 110.0));
  CHECK_FALSE(m.satisfied(Attribute::Tempo, 100.0, 109.0));
  CHECK(m.satisfied(Attribute::Loudness, -20.0, -17.0));
  CHECK(m.satisfied(Attribute::Direction, 10.0, 170.0));
  CHECK_FALSE(m.satisfied(Attribute::Direction, 10.0, 50.0));
  CHECK(m.satisfied(Attribute::Counting, 2.0, 3.0));
  CHECK_FALSE(m.satisfied(Attribute::Counting, 3.0, 3.0));
}

TEST_CASE("held tolerances reject confounded pairs") {
  std::vector<Candidate> c{{"lo", 60.0, {-20.0, std::nullopt, 2.0}},
                           {"hi-loud", 72.0, {-18.0, std::nullopt, 2.0}},
                           {"hi-ok", 73.0, {-20.2, std::nullopt, 2.01}}};
  for (std::uint64_t s = 0; s < 10; ++s) {
    CHECK(sample_comparison_pair(c, Attribute::Pitch, MarginTable{}, s).second.id == "hi-ok");
  }
  c.pop_back();
  CHECK_THROWS_WITH(sample_comparison_pair(c, Attribute::Pitch, MarginTable{}, 1),
                    Catch::Matchers::ContainsSubstring("tolerance"));
}

TEST_CASE("stratified draw keeps bin proportions") {
  const auto c = stratified_counts({70, 30}, 100);
  CHECK(c == std::vector<std::size_t>{70, 30});
  const auto d = stratified_counts({1, 1}, 7);
  CHECK(d == std::vector<std::size_t>{4, 3});
  const auto e = stratified_counts({5, 3, 2}, 20);
  CHECK(e == std::vector<std::size_t>{10, 6, 4});
  const auto f = stratified_counts({2, 1}, 10);
  CHECK(std::abs(static_cast<double>(f[0]) / 10.0 - 2.0 / 3.0) <= 0.05 + 1e-12);
}

TEST_CASE("recognition of a loud clip answers loud") {
  testsig::TempDir dir("rec");
  StimulusRecipe s;
  s.source = "tonal-organ-60";
  s.value = -10.0;
  s.final_lufs = -10.0;
  const auto th = BinThresholds{};
  const std::string gold = recognition_label(Attribute::Loudness, s, th);
  CHECK(gold == "loud");
  const auto item = build_recognition_item(s, Attribute::Loudness, gold, "quiet",
                                           TemplateBank::defaults(), 5, ctx(), dir.path());
  CHECK((item.answer == 'A' ? item.option_a : item.option_b) == "loud");
  CHECK(item.instruction.find("loud") != std::string::npos);
  CHECK(item.instruction.find("quiet") != std::string::npos);
  const auto w = load_wav(dir.path() / item.audio_path);
  CHECK(w.frames() == 192000);
  CHECK(std::abs(measure_integrated_lufs(w).integrated_lufs + 10.0) <= 0.2);
  CHECK(expected_answer(item, th) == item.answer);
}

TEST_CASE("recognition item is reproducible") {
  testsig::TempDir a("repa"), b("repb");
  StimulusRecipe s;
  s.source = "tonal-flute-64";
  s.value = 5.0;
  s.label = "bright";
  s.final_lufs = -26.0;
  s.ops = {{Attribute::Brightness, 5.0, 0, {}}};
  const auto i1 = build_recognition_item(s, Attribute::Brightness, "bright", "dark",
                                         TemplateBank::defaults(), 42, ctx(), a.path());
  const auto i2 = build_recognition_item(s, Attribute::Brightness, "bright", "dark",
                                         TemplateBank::defaults(), 42, ctx(), b.path());
  CHECK(i1 == i2);
  CHECK(slurp(a.path() / i1.audio_path) == slurp(b.path() / i2.audio_path));
}

TEST_CASE("dry clip answers dry") {
  testsig::TempDir dir("dry");
  StimulusRecipe s;
  s.source = "tonal-strings-60";
  s.label = "dry";
  s.final_lufs = -26.0;
  const std::string gold = recognition_label(Attribute::Reverberation, s, {});
  CHECK(gold == "dry");
  const auto item = build_recognition_item(s, Attribute::Reverberation, gold, "reverberant",
                                           TemplateBank::defaults(), 3, ctx(), dir.path());
  CHECK((item.answer == 'A' ? item.option_a : item.option_b) == "dry");
}

TEST_CASE("option letter follows a seeded coin") {
  std::set<char> letters;
  for (std::uint64_t s = 0; s < 16; ++s) {
    letters.insert(assemble_recognition(Attribute::Pitch, "high", "low", TemplateBank::defaults(), s).answer);
  }
  CHECK(letters.size() == 2);
}

TEST_CASE("comparison answer follows segment order") {
  testsig::TempDir dir("cmp");
  StimulusRecipe quiet, loud;
  quiet.source = loud.source = "tonal-organ-60";
  quiet.value = -24.0;
  quiet.final_lufs = -24.0;
  loud.value = -16.0;
  loud.final_lufs = -16.0;
  bool saw_second = false;
  for (std::uint64_t seed = 0; seed < 8 && !saw_second; ++seed) {
    const auto item = build_comparison_item(quiet, loud, Attribute::Loudness,
                                            TemplateBank::defaults(), seed, ctx(), dir.path());
    const auto w = load_wav(dir.path() / item.audio_path);
    CHECK(w.frames() == 408000);
    CHECK(w.duration_s() == 8.5);
    if (item.stimuli[1] == loud) {
      saw_second = true;
      CHECK(item.answer == 'B');
      CHECK(item.target_segment == 2);
    } else {
      CHECK(item.answer == 'A');
    }
  }
  CHECK(saw_second);
}

TEST_CASE("flipping a comparison swaps segments and answer") {
  testsig::TempDir dir("flip");
  StimulusRecipe quiet, loud;
  quiet.source = loud.source = "tonal-organ-60";
  quiet.value = -24.0;
  quiet.final_lufs = -24.0;
  loud.value = -16.0;
  loud.final_lufs = -16.0;
  auto item = build_comparison_item(quiet, loud, Attribute::Loudness, TemplateBank::defaults(), 1,
                                    ctx(), dir.path());
  auto flipped = item;
  flip_item(flipped);
  CHECK(flipped.answer != item.answer);
  CHECK(flipped.stimuli[0] == item.stimuli[1]);
  CHECK(flipped.stimuli[1] == item.stimuli[0]);
  CHECK(flipped.id != item.id);
  CHECK(expected_answer(flipped, {}) == flipped.answer);
  const auto w1 = render_item_audio(item, ctx());
  const auto w2 = render_item_audio(flipped, ctx());
  const auto& g = ctx().geometry;
  const auto n = g.recognition_frames();
  const auto off = n + g.gap_frames();
  CHECK(std::equal(w1.channel(0).begin(), w1.channel(0).begin() + n, w2.channel(0).begin() + off));
}

TEST_CASE("recognition flip swaps option text") {
  auto item = assemble_recognition(Attribute::Pitch, "high", "low", TemplateBank::defaults(), 4);
  item.stimuli = {StimulusRecipe{"s", {}, {}, {}, 70.0, {}}};
  const auto before = item;
  flip_item(item);
  CHECK(item.option_a == before.option_b);
  CHECK(item.option_b == before.option_a);
  CHECK(item.answer != before.answer);
  CHECK(item.instruction.find("A: " + item.option_a) != std::string::npos);
  CHECK(item.instruction.find("B: " + item.option_b) != std::string::npos);
  CHECK(expected_answer(item, {}) == item.answer);
}

TEST_CASE("balance yields 50/50 on a 100-item cell") {
  std::vector<TaskItem> items;
  for (std::size_t i = 0; i < 100; ++i) items.push_back(fake_item(Attribute::Pitch, Task::Comparison, i, i < 80 ? 'A' : 'B'));
  const auto out = balance_answers(items, 9);
  CHECK(count_ab(out) == std::pair<int, int>{50, 50});
  for (const auto& it : out) CHECK(expected_answer(it, {}) == it.answer);
}

TEST_CASE("balanced cell is left alone") {
  std::vector<TaskItem> items;
  for (std::size_t i = 0; i < 10; ++i) items.push_back(fake_item(Attribute::Pitch, Task::Recognition, i, i % 2 ? 'A' : 'B'));
  CHECK(balance_answers(items, 1) == items);
}

TEST_CASE("odd cell balances to within one") {
  std::vector<TaskItem> items;
  for (std::size_t i = 0; i < 7; ++i) items.push_back(fake_item(Attribute::Tempo, Task::Recognition, i, 'B'));
  const auto [a, b] = count_ab(balance_answers(items, 2));
  CHECK(std::abs(a - b) == 1);
  CHECK(a + b == 7);
}

TEST_CASE("balance is per cell") {
  std::vector<TaskItem> items;
  for (std::size_t i = 0; i < 6; ++i) items.push_back(fake_item(Attribute::Pitch, Task::Recognition, i, 'A'));
  for (std::size_t i = 0; i < 6; ++i) items.push_back(fake_item(Attribute::Pitch, Task::Comparison, i, 'B'));
  const auto out = balance_answers(items, 2);
  const std::vector<TaskItem> rec(out.begin(), out.begin() + 6), cmp(out.begin() + 6, out.end());
  CHECK(count_ab(rec) == std::pair<int, int>{3, 3});
  CHECK(count_ab(cmp) == std::pair<int, int>{3, 3});
}

TEST_CASE("identity encodes attribute and parameters") {
  auto it = fake_item(Attribute::Tempo, Task::Comparison, 7, 'B');
  CHECK(it.id == "tempo-cmp-0007-bpm7_vs_bpm107");
  CHECK(it.audio_path == "audio/tempo/comparison/tempo-cmp-0007-bpm7_vs_bpm107.wav");
}

TEST_CASE("missing template is a config error") {
  TemplateBank empty;
  CHECK_THROWS_AS(assemble_recognition(Attribute::Pitch, "high", "low", empty, 1), ConfigError);
  CHECK_THROWS_AS(empty.get(Attribute::Timbre, Task::Comparison), ConfigError);
}

TEST_CASE("template placeholders") {
  const Template t{"t", "Which clip is the {x}?\nA: {a}\nB: {b} {c}"};
  CHECK(fill_template(t, "one", "two", "flute") == "Which clip is the flute?\nA: one\nB: two {c}");
  const auto bank = TemplateBank::defaults();
  for (auto a : kAllAttributes) {
    for (auto task : {Task::Recognition, Task::Comparison}) {
      const auto& tpl = bank.get(a, task);
      CHECK(tpl.text.find("{a}") != std::string::npos);
      CHECK(tpl.text.find("{b}") != std::string::npos);
    }
  }
}

TEST_CASE("item JSON round-trips") {
  BuildConfig cfg;
  cfg.per_cell = 3;
  cfg.attributes = {Attribute::Velocity, Attribute::Reverberation};
  const auto plan = plan_dataset(cfg, ctx());
  REQUIRE(plan.items.size() == 12);
  for (const auto& it : plan.items) CHECK(item_from_json(item_to_json(it)) == it);
  CHECK_THROWS_AS(item_from_json("{\"id\": 3}"), FormatError);
  CHECK_THROWS_AS(item_from_json("not json"), FormatError);
}

TEST_CASE("full-size plan has 2400 balanced items") {
  BuildConfig cfg;
  cfg.seed = 2024;
  const auto plan = plan_dataset(cfg, ctx());
  CHECK(plan.failures.empty());
  REQUIRE(plan.items.size() == 2400);
  std::map<std::pair<Attribute, Task>, std::pair<int, int>> cells;
  for (const auto& it : plan.items) {
    auto& c = cells[{it.attribute, it.task}];
    (it.answer == 'A' ? c.first : c.second)++;
    CHECK(expected_answer(it, cfg.thresholds) == it.answer);
  }
  CHECK(cells.size() == 24);
  for (const auto& [key, ab] : cells) CHECK(ab == std::pair<int, int>{50, 50});
}

TEST_CASE("recognition bins are stratified") {
  BuildConfig cfg;
  cfg.per_cell = 40;
  for (auto a : {Attribute::Pitch, Attribute::Loudness, Attribute::Velocity, Attribute::Duration, Attribute::Tempo}) {
    const auto items = plan_cell(a, Task::Recognition, cfg, ctx());
    int high = 0;
    for (const auto& it : items) {
      const Bin b = classify_bin(it.stimuli[0].value, a);
      high += b == Bin::High;
      // Guard band keeps targets away from the boundary.
      CHECK(std::abs(it.stimuli[0].value - cfg.thresholds.for_attribute(a)) >= 0.3 - 1e-9);
    }
    CHECK(high == 20);
  }
}

TEST_CASE("emit writes a sorted index and is byte-stable") {
  BuildConfig cfg;
  cfg.seed = 5;
  auto plan = plan_dataset(cfg, ctx());
  testsig::TempDir a("emita"), b("emitb");
  for (const auto* d : {&a, &b}) {
    for (const auto& it : plan.items) {
      const auto p = d->path() / it.audio_path;
      std::filesystem::create_directories(p.parent_path());
      std::ofstream(p).put('x');
    }
  }
  emit_dataset(plan.items, a.path());
  auto reversed = plan_dataset(cfg, ctx()).items;
  std::reverse(reversed.begin(), reversed.end());
  emit_dataset(reversed, b.path());
  const auto csv = slurp(a.path() / "index.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2401);
  CHECK(csv.rfind("id,attribute,task,audio_path,answer,split\n", 0) == 0);
  CHECK(slurp(a.path() / "annotations.json") == slurp(b.path() / "annotations.json"));
  CHECK(slurp(a.path() / "annotations.jsonl") == slurp(b.path() / "annotations.jsonl"));
  CHECK(csv == slurp(b.path() / "index.csv"));
  CHECK(load_dataset(a.path()) == plan.items);
}

TEST_CASE("dangling audio is an integrity error") {
  BuildConfig cfg;
  cfg.per_cell = 2;
  cfg.attributes = {Attribute::Pitch};
  const auto plan = plan_dataset(cfg, ctx());
  testsig::TempDir dir("dangle");
  for (std::size_t i = 1; i < plan.items.size(); ++i) {
    const auto p = dir.path() / plan.items[i].audio_path;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p).put('x');
  }
  CHECK_THROWS_AS(emit_dataset(plan.items, dir.path()), IntegrityError);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "annotations.json"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "index.csv"));
}

TEST_CASE("empty pool fails the cell") {
  ClipPool empty;
  const RenderContext c{&empty, &bank(), {}};
  BuildConfig cfg;
  cfg.per_cell = 2;
  CHECK_THROWS_AS(plan_cell(Attribute::Pitch, Task::Recognition, cfg, c), PoolExhaustedError);
  CHECK_THROWS_AS(plan_cell(Attribute::Counting, Task::Comparison, cfg, c), PoolExhaustedError);
  const auto plan = plan_dataset(cfg, c);
  CHECK(plan.items.empty());
  CHECK(plan.failures.size() == 24);
}

TEST_CASE("missing IR bank entries are config errors") {
  IrBank dry_only;
  dry_only.add(ImpulseResponse(Waveform::mono(48000, {1.0f}), "dry"));
  const RenderContext c{&pool(), &dry_only, {}};
  BuildConfig cfg;
  cfg.per_cell = 2;
  CHECK_THROWS_AS(plan_cell(Attribute::Distance, Task::Recognition, cfg, c), ConfigError);
  CHECK_THROWS_AS(plan_cell(Attribute::Reverberation, Task::Comparison, cfg, c), ConfigError);
}

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sonicforge/dataset.hpp"
#include "sonicforge/toy_sources.hpp"
#include "sonicforge/wav_io.hpp"
#include "support/tempdir.hpp"

namespace fs = std::filesystem;
using namespace sonicforge;

namespace {

struct Run {
  int code;
  std::string output;
};

Run sf(const std::string& args) {
  const std::string cmd = std::string(SONIC_FORGE_EXE) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const PoolClip& sustained_tonal(const ClipPool& pool) {
  for (const auto* c : pool.with_label("role", "tonal")) {
    if (c->label("envelope") == "sustained") return *c;
  }
  FAIL("no sustained clip");
  throw;
}

// One 96-item build shared by the build, verify and evaluate cases.
const fs::path& built() {
  static testsig::TempDir dir("cli-build");
  static const bool ok = [] {
    const auto r = sf("build --seed 3 --per-cell 4 --out " + q(dir.path() / "ds"));
    INFO(r.output);
    REQUIRE(r.code == 0);
    return true;
  }();
  (void)ok;
  return dir.path();
}

void write_responses(const fs::path& path, const std::vector<TaskItem>& items,
                     const std::function<std::string(const TaskItem&)>& text) {
  std::ofstream out(path);
  for (const auto& it : items) {
    out << nlohmann::json{{"item_id", it.id}, {"raw_text", text(it)}}.dump() << "\n";
  }
}

}  // namespace

TEST_CASE("generate: pitch comparison from one clip") {
  testsig::TempDir dir("cli-gen");
  const auto pool = make_toy_pool(0);
  save_wav(sustained_tonal(pool).audio, dir.path() / "note.wav");
  const std::string args = "--set generate.attribute=pitch generate.task=comparison "
                           "generate.magnitude=2 generate.input=" + q(dir.path() / "note.wav");

  const auto r1 = sf("generate " + args + " --out " + q(dir.path() / "a"));
  INFO(r1.output);
  REQUIRE(r1.code == 0);
  const auto item = item_from_json(slurp(dir.path() / "a" / "item.json"));
  CHECK(item.task == Task::Comparison);
  const auto wav = load_wav(dir.path() / "a" / item.audio_path);
  CHECK(wav.frames() == 408000);
  CHECK(wav.sample_rate() == 48000);

  const auto r2 = sf("generate " + args + " --out " + q(dir.path() / "b"));
  REQUIRE(r2.code == 0);
  CHECK(slurp(dir.path() / "a" / item.audio_path) == slurp(dir.path() / "b" / item.audio_path));
  CHECK(slurp(dir.path() / "a" / "item.json") == slurp(dir.path() / "b" / "item.json"));
}

TEST_CASE("generate: missing input exits 2 and names the path") {
  testsig::TempDir dir("cli-missing");
  const auto missing = dir.path() / "nowhere.wav";
  const auto r = sf("generate --set generate.input=" + q(missing) + " --out " + q(dir.path() / "o"));
  CHECK(r.code == 2);
  CHECK(r.output.find("nowhere.wav") != std::string::npos);
}

TEST_CASE("generate: margin below the floor exits 1") {
  testsig::TempDir dir("cli-floor");
  const auto pool = make_toy_pool(0);
  save_wav(sustained_tonal(pool).audio, dir.path() / "note.wav");
  const auto r = sf("generate --set generate.attribute=pitch generate.magnitude=0.5 generate.input=" +
                    q(dir.path() / "note.wav") + " --out " + q(dir.path() / "o"));
  CHECK(r.code == 1);
  CHECK(r.output.find("margin") != std::string::npos);
}

TEST_CASE("bad flags and keys exit 1") {
  CHECK(sf("build --set nonsense=1 --out /tmp/unused").code == 1);
  CHECK(sf("frobnicate").code == 1);
}

TEST_CASE("build: toy config with 4 per cell") {
  const auto ds = built() / "ds";
  const auto items = load_dataset(ds);
  CHECK(items.size() == 96);
  CHECK(fs::exists(ds / "config.resolved"));
  CHECK(fs::exists(ds / "annotations.jsonl"));
  CHECK(fs::exists(ds / "index.csv"));
}

TEST_CASE("build: a pool with no rhythm loops skips tempo and exits 1") {
  testsig::TempDir dir("cli-pool");
  const auto pool = make_toy_pool(0);
  std::ofstream manifest(dir.path() / "pool.csv");
  manifest << "id,path,source,labels\n";
  for (const auto& [id, clip] : pool.clips()) {
    if (clip.label("role") == "rhythm") continue;
    save_wav(clip.audio, dir.path() / (id + ".wav"));
    std::string labels;
    for (const auto& [k, v] : clip.labels) labels += (labels.empty() ? "" : ";") + k + "=" + v;
    manifest << id << "," << id << ".wav," << clip.source << "," << labels << "\n";
  }
  manifest.close();
  const auto r = sf("build --no-audit --per-cell 2 --set attributes=tempo,counting pool=" +
                    q(dir.path() / "pool.csv") + " --out " + q(dir.path() / "ds"));
  INFO(r.output);
  CHECK(r.code == 1);
  CHECK(r.output.find("cell tempo recognition skipped") != std::string::npos);
  CHECK(r.output.find("cell tempo comparison skipped") != std::string::npos);
  const auto items = load_dataset(dir.path() / "ds");
  CHECK(items.size() == 4);
  for (const auto& it : items) CHECK(it.attribute == Attribute::Counting);
}

TEST_CASE("verify: fresh build passes, corruption is reported") {
  const auto ds = built() / "ds";
  const auto fresh = sf("verify " + q(ds));
  INFO(fresh.output);
  CHECK(fresh.code == 0);
  CHECK(fs::exists(ds / "verify" / "audit.json"));
  CHECK(fs::exists(ds / "verify" / "analysis.jsonl"));

  testsig::TempDir dir("cli-verify");
  const auto copy = dir.path() / "ds";
  fs::copy(ds, copy, fs::copy_options::recursive);
  const auto items = load_dataset(copy);
  const auto& victim = items.front();
  const auto wav = load_wav(copy / victim.audio_path);
  std::vector<std::vector<float>> cut;
  for (const auto& ch : wav.planar()) cut.emplace_back(ch.begin(), ch.begin() + 1000);
  save_wav(Waveform(wav.sample_rate(), cut), copy / victim.audio_path);

  const auto bad = sf("verify " + q(copy));
  CHECK(bad.code == 1);
  CHECK(bad.output.find(victim.id + " [geometry]") != std::string::npos);
}

TEST_CASE("verify: tampered answer is reported") {
  const auto ds = built() / "ds";
  testsig::TempDir dir("cli-tamper");
  const auto copy = dir.path() / "ds";
  fs::copy(ds, copy, fs::copy_options::recursive);
  auto j = nlohmann::json::parse(slurp(copy / "annotations.json"));
  const std::string id = j[0]["id"];
  j[0]["answer"] = j[0]["answer"] == "A" ? "B" : "A";
  std::ofstream(copy / "annotations.json") << j.dump(2) << "\n";
  const auto r = sf("verify " + q(copy));
  CHECK(r.code == 1);
  CHECK(r.output.find(id + " [label]") != std::string::npos);
}

TEST_CASE("verify: unreadable dataset exits 2") {
  CHECK(sf("verify /nonexistent/sonicforge").code == 2);
}

TEST_CASE("evaluate: oracle, constant and empty responders") {
  const auto ds = built() / "ds";
  const auto items = load_dataset(ds);
  testsig::TempDir dir("cli-eval");

  write_responses(dir.path() / "oracle.jsonl", items, [](const TaskItem& it) { return std::string(1, it.answer); });
  const auto oracle = sf("evaluate " + q(ds) + " --responses " + q(dir.path() / "oracle.jsonl") +
                         " --report-dir " + q(dir.path() / "oracle"));
  INFO(oracle.output);
  REQUIRE(oracle.code == 0);
  CHECK(oracle.output.find("accuracy 1.0000") != std::string::npos);
  for (const char* f : {"report.json", "report.csv", "report.txt"}) CHECK(fs::exists(dir.path() / "oracle" / f));

  write_responses(dir.path() / "a.jsonl", items, [](const TaskItem&) { return std::string("A"); });
  const auto constant = sf("evaluate " + q(ds) + " --responses " + q(dir.path() / "a.jsonl") +
                           " --report-dir " + q(dir.path() / "a"));
  REQUIRE(constant.code == 0);
  CHECK(constant.output.find("accuracy 0.5000") != std::string::npos);

  std::ofstream(dir.path() / "empty.jsonl").close();
  const auto empty = sf("evaluate " + q(ds) + " --responses " + q(dir.path() / "empty.jsonl") +
                        " --report-dir " + q(dir.path() / "empty"));
  REQUIRE(empty.code == 0);
  CHECK(empty.output.find("accuracy 0.0000  abstention 1.0000") != std::string::npos);

  std::ofstream(dir.path() / "junk.jsonl") << "{broken\n";
  const auto junk = sf("evaluate " + q(ds) + " --responses " + q(dir.path() / "junk.jsonl") +
                       " --report-dir " + q(dir.path() / "junk"));
  CHECK(junk.code == 0);
  CHECK(junk.output.find("warning") != std::string::npos);

  CHECK(sf("evaluate " + q(ds) + " --responses " + q(dir.path() / "absent.jsonl")).code == 2);
}

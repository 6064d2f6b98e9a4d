#include <catch_amalgamated.hpp>

#include <string>

#include "sonicforge/errors.hpp"
#include "sonicforge/evaluator.hpp"
#include "sonicforge/rng.hpp"
#include "support/extraction_cases.hpp"

using namespace sonicforge;

namespace {

TaskItem item(const std::string& id, Attribute a, Task t, char answer) {
  TaskItem it;
  it.id = id;
  it.attribute = a;
  it.task = t;
  it.answer = answer;
  return it;
}

}  // namespace

TEST_CASE("extraction table") {
  STATIC_REQUIRE(std::size(testsig::kExtractionCases) == 30);
  for (const auto& c : testsig::kExtractionCases) {
    INFO("raw: [" << c.raw << "]");
    const auto e = extract_answer_detail(c.raw);
    CHECK(e.choice == c.want);
    CHECK(e.stage == c.stage);
    CHECK(e.pattern == c.pattern);
    CHECK(extract_answer(c.raw) == c.want);
  }
}

TEST_CASE("short exemplars match their own patterns") {
  CHECK(first_pattern("A") == std::make_pair(1, Choice::A));
  CHECK(first_pattern("a.") == std::make_pair(1, Choice::A));
  CHECK(first_pattern("b)") == std::make_pair(1, Choice::B));
  CHECK(first_pattern("Option: A") == std::make_pair(2, Choice::A));
  CHECK(first_pattern("Answer: a") == std::make_pair(3, Choice::A));
  CHECK(first_pattern("(A)") == std::make_pair(4, Choice::A));
}

TEST_CASE("each pattern fires when earlier ones do not") {
  const std::pair<const char*, int> crafted[] = {
      {"b )", 1}, {"option:b", 2}, {"answer-a", 3}, {"( b", 4}, {"maybe b", 5}};
  for (const auto& [text, k] : crafted) {
    INFO(text);
    for (int j = 1; j < k; ++j) CHECK_FALSE(match_pattern(j, text));
    REQUIRE(match_pattern(k, text));
    CHECK(first_pattern(text)->first == k);
  }
}

TEST_CASE("stage one wins over later stages") {
  for (const char* s : {"a", "B", " b ", "A\n"}) {
    CHECK(extract_answer_detail(s).stage == 1);
  }
}

TEST_CASE("patterns are case-insensitive and word-bounded") {
  CHECK(match_pattern(2, "OPTION: B") == Choice::B);
  CHECK_FALSE(match_pattern(2, "adoption a"));
  CHECK_FALSE(match_pattern(5, "abba"));
  CHECK_THROWS_AS(match_pattern(6, "a"), ArgumentError);
}

TEST_CASE("scoring counts abstentions as wrong") {
  const std::vector<TaskItem> ds{item("1", Attribute::Pitch, Task::Recognition, 'A'),
                                 item("2", Attribute::Pitch, Task::Recognition, 'B'),
                                 item("3", Attribute::Pitch, Task::Recognition, 'A'),
                                 item("4", Attribute::Pitch, Task::Recognition, 'B')};
  const auto r = score(ds, {{"1", "A"}, {"2", "Answer: B"}, {"3", "no idea"}, {"4", "A"}});
  CHECK(r.overall.accuracy() == 0.5);
  CHECK(r.overall.abstention_rate() == 0.25);
  const auto& cell = r.per_cell.at({Attribute::Pitch, Task::Recognition});
  CHECK(cell.accuracy() + cell.wrong_rate() + cell.abstention_rate() == Catch::Approx(1.0));
}

TEST_CASE("perfect responses") {
  std::vector<TaskItem> ds;
  std::vector<ModelResponse> rs;
  for (int i = 0; i < 10; ++i) {
    ds.push_back(item(std::to_string(i), Attribute::Tempo, i % 2 ? Task::Comparison : Task::Recognition,
                      i % 3 ? 'A' : 'B'));
    rs.push_back({std::to_string(i), std::string(1, ds.back().answer)});
  }
  const auto r = score(ds, rs);
  CHECK(r.overall.accuracy() == 1.0);
  CHECK(r.overall.abstention_rate() == 0.0);
  CHECK(format_delta(r.deltas.at(Attribute::Tempo)) == "+0.0%");
}

TEST_CASE("missing responses abstain") {
  const std::vector<TaskItem> ds{item("1", Attribute::Pitch, Task::Recognition, 'A'),
                                 item("2", Attribute::Pitch, Task::Recognition, 'B')};
  const auto r = score(ds, {{"1", "A"}});
  CHECK(r.overall.correct == 1);
  CHECK(r.overall.abstained == 1);
  const auto none = score(ds, {});
  CHECK(none.overall.accuracy() == 0.0);
  CHECK(none.overall.abstention_rate() == 1.0);
}

TEST_CASE("relative delta for C 0.80 and R 0.70") {
  std::vector<TaskItem> ds;
  std::vector<ModelResponse> rs;
  for (int i = 0; i < 100; ++i) {
    const auto rid = "r" + std::to_string(i), cid = "c" + std::to_string(i);
    ds.push_back(item(rid, Attribute::Loudness, Task::Recognition, 'A'));
    ds.push_back(item(cid, Attribute::Loudness, Task::Comparison, 'B'));
    rs.push_back({rid, i < 70 ? "A" : "B"});
    rs.push_back({cid, i < 80 ? "B" : "A"});
  }
  const auto r = score(ds, rs);
  CHECK(r.per_cell.at({Attribute::Loudness, Task::Recognition}).accuracy() == Catch::Approx(0.70));
  CHECK(r.per_cell.at({Attribute::Loudness, Task::Comparison}).accuracy() == Catch::Approx(0.80));
  CHECK(format_delta(r.deltas.at(Attribute::Loudness)) == "+14.3%");
}

TEST_CASE("delta rounding and undefined delta") {
  CHECK(format_delta(0.8 / 0.7 - 1.0) == "+14.3%");
  CHECK(format_delta(-0.05) == "-5.0%");
  CHECK(format_delta(std::nullopt) == "n/a");
  const std::vector<TaskItem> ds{item("r", Attribute::Pitch, Task::Recognition, 'A'),
                                 item("c", Attribute::Pitch, Task::Comparison, 'A')};
  const auto r = score(ds, {{"r", "B"}, {"c", "A"}});
  CHECK_FALSE(r.deltas.at(Attribute::Pitch).has_value());
  CHECK(render_report(r, ReportFormat::Csv).find("n/a") != std::string::npos);
}

TEST_CASE("input errors") {
  const std::vector<TaskItem> ds{item("1", Attribute::Pitch, Task::Recognition, 'A')};
  CHECK_THROWS_AS(score({}, {}), InputError);
  CHECK_THROWS_AS(score(ds, {{"1", "A"}, {"1", "B"}}), InputError);
  CHECK_THROWS_AS(score(ds, {{"9", "A"}}), InputError);
}

TEST_CASE("random responder sits near chance on a balanced cell") {
  std::vector<TaskItem> ds;
  for (int i = 0; i < 100; ++i) {
    ds.push_back(item(std::to_string(i), Attribute::Timbre, Task::Recognition, i % 2 ? 'A' : 'B'));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<ModelResponse> rs;
    for (const auto& it : ds) rs.push_back({it.id, rng.coin() ? "A" : "B"});
    const double acc = score(ds, rs).overall.accuracy();
    CHECK(acc >= 0.35);
    CHECK(acc <= 0.65);
  }
}

TEST_CASE("report renderings") {
  std::vector<TaskItem> ds;
  std::vector<ModelResponse> rs;
  for (int i = 0; i < 6; ++i) {
    ds.push_back(item("p" + std::to_string(i), Attribute::Pitch, i < 3 ? Task::Recognition : Task::Comparison, 'A'));
    ds.push_back(item("q" + std::to_string(i), Attribute::Counting, Task::Recognition, 'B'));
    rs.push_back({"p" + std::to_string(i), i % 2 ? "A" : "B"});
  }
  const auto r = score(ds, rs);
  const auto json = render_report(r, ReportFormat::Json);
  CHECK(json == render_report(score(ds, rs), ReportFormat::Json));
  CHECK(json.find("\"overall\"") != std::string::npos);
  const auto csv = render_report(r, ReportFormat::Csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 + 1);
  CHECK(csv.find("all,all,12,") != std::string::npos);
  const auto table = render_report(r, ReportFormat::Table);
  CHECK(table.find("pitch") != std::string::npos);
  CHECK(table.find("counting") != std::string::npos);
  CHECK(parse_report_format("csv") == ReportFormat::Csv);
  CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
}

TEST_CASE("malformed response rows are skipped") {
  const auto p = parse_responses_jsonl(
      "{\"item_id\": \"1\", \"raw_text\": \"A\"}\n"
      "not json\n"
      "\n"
      "{\"item_id\": \"2\"}\n"
      "{\"item_id\": \"3\", \"raw_text\": \"(b)\"}\n");
  REQUIRE(p.responses.size() == 2);
  CHECK(p.responses[1].item_id == "3");
  CHECK(p.warnings.size() == 2);
}

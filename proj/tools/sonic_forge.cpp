// sonic-forge: generate, build, verify and evaluate from the command line.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sonicforge/audit.hpp"
#include "sonicforge/config.hpp"
#include "sonicforge/dataset.hpp"
#include "sonicforge/errors.hpp"
#include "sonicforge/evaluator.hpp"
#include "sonicforge/generate.hpp"

namespace fs = std::filesystem;
using namespace sonicforge;

namespace {

struct CommonOptions {
  std::string config;
  std::string seed;
  std::string out;
  std::string workers;
  std::string per_cell;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Config file (key = value lines)");
    cmd->add_option("--seed", seed, "Master seed (default: config, then SONIC_FORGE_SEED, then 0)");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--workers", workers, "Worker threads");
    cmd->add_option("--per-cell", per_cell, "Items per (attribute, task) cell");
    cmd->add_option("--set", sets, "Override any config key, KEY=VALUE")->take_all();
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? default_run_config() : load_run_config(config);
    const fs::path here = fs::current_path();
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1), here);
    }
    if (!seed.empty()) cfg.set("seed", seed);
    if (!out.empty()) cfg.set("out", out, here);
    if (!workers.empty()) cfg.set("workers", workers);
    if (!per_cell.empty()) cfg.set("per_cell", per_cell);
    return cfg;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_audit(const AuditReport& a) {
  fmt::print("audit: {} items, {} stimuli, {} closure checks, margin {}/{} pairs, dominance {}/{} pairs\n",
             a.items, a.stimuli, a.closure_checks, a.margin_pass, a.comparison_pairs,
             a.dominance_pass, a.comparison_pairs);
  for (const auto& v : a.violations) fmt::print("  {} [{}] {}\n", v.item_id, v.check, v.detail);
  fmt::print("{} violation(s)\n", a.violations.size());
}

int cmd_build(const RunConfig& cfg, bool audit) {
  const Sources src = load_sources(cfg);
  const RenderContext ctx{&src.pool, &src.bank, {}};
  fs::create_directories(cfg.out);
  write_atomic(cfg.out / "config.resolved", cfg.resolved());
  const auto result = build_dataset(cfg.build, ctx, cfg.out, cfg.workers);

  std::map<std::pair<Attribute, Task>, std::pair<int, int>> cells;
  for (const auto& it : result.items) {
    auto& c = cells[{it.attribute, it.task}];
    (it.answer == 'A' ? c.first : c.second)++;
  }
  for (const auto& [key, ab] : cells) {
    fmt::print("{:<14} {:<12} {:>4} items  A {:>3}  B {:>3}\n", to_string(key.first),
               to_string(key.second), ab.first + ab.second, ab.first, ab.second);
  }
  for (const auto& f : result.failures) {
    fmt::print(stderr, "cell {} {} skipped: {}\n", to_string(f.attribute), to_string(f.task), f.reason);
  }
  fmt::print("{} items written to {}\n", result.items.size(), cfg.out.string());
  bool ok = result.failures.empty();
  if (audit) {
    const auto report = audit_dataset(result.items, cfg.out, ctx, cfg.build, cfg.workers);
    print_audit(report);
    ok = ok && report.ok();
  }
  return ok ? 0 : 1;
}

int cmd_generate(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  write_atomic(cfg.out / "config.resolved", cfg.resolved());
  const TaskItem item = run_generate(cfg, cfg.out);
  fmt::print("{} -> {} (answer {})\n", item.id, (cfg.out / item.audio_path).string(), item.answer);
  return 0;
}

int cmd_verify(const fs::path& dir, int workers_override) {
  RunConfig cfg = load_run_config(dir / "config.resolved");
  if (workers_override > 0) cfg.workers = workers_override;
  const auto items = load_dataset(dir);
  const Sources src = load_sources(cfg);
  const RenderContext ctx{&src.pool, &src.bank, {}};
  const auto report = audit_dataset(items, dir, ctx, cfg.build, cfg.workers);
  write_atomic(dir / "verify" / "audit.json", audit_to_json(report));
  write_atomic(dir / "verify" / "analysis.jsonl", clips_to_jsonl(report));
  print_audit(report);
  return report.ok() ? 0 : 1;
}

int cmd_evaluate(const fs::path& dir, const fs::path& responses, const fs::path& out) {
  const auto items = load_dataset(dir);
  const auto parsed = parse_responses_jsonl(read_file(responses));
  for (const auto& w : parsed.warnings) fmt::print(stderr, "warning: {}\n", w);
  const auto report = score(items, parsed.responses);
  write_atomic(out / "report.json", render_report(report, ReportFormat::Json));
  write_atomic(out / "report.csv", render_report(report, ReportFormat::Csv));
  write_atomic(out / "report.txt", render_report(report, ReportFormat::Table));
  fmt::print("accuracy {:.4f}  abstention {:.4f}  items {}\n", report.overall.accuracy(),
             report.overall.abstention_rate(), report.overall.total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled audio attribute stimuli and benchmark items"};
  app.require_subcommand(1);

  CommonOptions gen_opts, build_opts, verify_opts, eval_opts;
  auto* gen = app.add_subcommand("generate", "Render one item from generate.* config keys");
  gen_opts.attach(gen);

  auto* build = app.add_subcommand("build", "Plan, render and emit a full dataset");
  build_opts.attach(build);
  bool no_audit = false;
  build->add_flag("--no-audit", no_audit, "Skip the post-build audit");

  auto* verify = app.add_subcommand("verify", "Audit an emitted dataset");
  std::string verify_dir;
  verify->add_option("dataset", verify_dir, "Dataset directory (default: --out)");
  verify_opts.attach(verify);

  auto* evaluate = app.add_subcommand("evaluate", "Score a response file against a dataset");
  std::string eval_dir, responses, report_dir;
  evaluate->add_option("dataset", eval_dir, "Dataset directory")->required();
  evaluate->add_option("--responses", responses, "JSONL rows {item_id, raw_text}")->required();
  evaluate->add_option("--report-dir", report_dir, "Report directory (default: <dataset>/eval)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(gen_opts.resolve());
    if (*build) return cmd_build(build_opts.resolve(), !no_audit);
    if (*verify) {
      fs::path dir = verify_dir;
      if (dir.empty()) {
        if (verify_opts.out.empty()) throw ConfigError("verify needs a dataset directory");
        dir = verify_opts.out;
      }
      const int workers = verify_opts.workers.empty() ? 0 : std::stoi(verify_opts.workers);
      return cmd_verify(dir, workers);
    }
    const fs::path out = report_dir.empty() ? fs::path(eval_dir) / "eval" : fs::path(report_dir);
    return cmd_evaluate(eval_dir, responses, out);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return static_cast<int>(e.error_class());
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}

// fedsim command-line front end: run scenarios, inspect reports, check the
// calibrated profile.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedsim/error.hpp"
#include "fedsim/metrics/calibration.hpp"
#include "fedsim/metrics/config.hpp"
#include "fedsim/metrics/report.hpp"
#include "fedsim/metrics/scenario.hpp"

namespace fs = std::filesystem;
using namespace fedsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheckFailed = 3;

void write_run(const fs::path& dir, const RunResult& run) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, dir.string());
  write_file((dir / "report.json").string(), export_summary(run.report));
  write_file((dir / "samples.csv").string(), export_samples(run.samples));
}

void print_report(const RunReport& r) {
  fmt::print("scenario   {} (seed {}, {} run{}, exposure {})\n", r.scenario, r.seed, r.runs.size(),
             r.runs.size() == 1 ? "" : "s", r.exposure);
  if (r.latency) {
    fmt::print("latency    p50 {:.1f} ms  p90 {:.1f} ms  stddev {:.1f} ms  n {}\n", r.latency->p50_ms,
               r.latency->p90_ms, r.latency->stddev_ms, r.latency->n);
  } else {
    fmt::print("latency    no data\n");
  }
  fmt::print("cpu        median {:.2f}%\n", r.cpu.median_pct);
  fmt::print("mem        median {:.2f}%\n", r.mem.median_pct);
  fmt::print("frames     generated {}  consumed {}  dropped {}  in flight {}\n", r.frames.generated,
             r.frames.consumed, r.frames.dropped, r.frames.in_flight);
  fmt::print("qos        {} at {} ms ({} violations{})\n", r.qos.pass ? "pass" : "fail", r.qos.threshold_ms,
             r.qos.violations, r.qos.no_data ? ", no data" : "");
  for (const auto& p : r.provisioning) {
    fmt::print("provision  {}: control plane {:.1f} s, all ready {:.1f} s\n", p.cluster, p.cp_ready_at.to_seconds(),
               p.all_ready_at.to_seconds());
  }
  if (r.runs.size() > 1) {
    for (const auto& run : r.runs) {
      fmt::print("  seed {:<6} p50 {:>7.1f}  p90 {:>7.1f}  cpu {:>6.2f}%\n", run.seed,
                 run.latency ? run.latency->p50_ms : 0.0, run.latency ? run.latency->p90_ms : 0.0,
                 run.cpu_median_pct);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cluster XR streaming simulator"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a scenario and export its report");
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned repeat = 1;
  unsigned threads = 0;
  run_cmd->add_option("--scenario", scenario_path, "Scenario config (JSON)")->required();
  run_cmd->add_option("--seed", seed, "Seed; overrides FEDSIM_SEED and the config");
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--repeat", repeat, "Number of consecutive seeds to run")->check(CLI::PositiveNumber);
  run_cmd->add_option("--threads", threads, "Worker threads for --repeat (0 = all cores)");

  auto* report_cmd = app.add_subcommand("report", "Summarise an exported run");
  std::string in_dir;
  report_cmd->add_option("--in", in_dir, "Directory written by run")->required();

  auto* cal_cmd = app.add_subcommand("calibrate", "Evaluate a built-in profile against its targets");
  std::string profile = kPaperV1;
  bool check = false;
  cal_cmd->add_option("--profile", profile, "Profile name");
  cal_cmd->add_flag("--check", check, "Exit 3 if any target is missed");

  auto* sc_cmd = app.add_subcommand("scenarios", "Write the built-in scenario configs");
  std::string sc_out;
  sc_cmd->add_option("--out", sc_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      ScenarioConfig cfg = load_scenario(scenario_path);
      cfg.seed = resolve_seed(cfg, seed);
      if (repeat == 1) {
        const auto result = run_scenario(cfg);
        write_run(out_dir, result);
        print_report(result.report);
      } else {
        const auto results = run_repeated(cfg, repeat, threads);
        write_run(out_dir, results.front());
        for (std::size_t i = 1; i < results.size(); ++i) {
          write_run(fs::path(out_dir) / fmt::format("seed-{}", results[i].report.seed), results[i]);
        }
        print_report(results.front().report);
      }
      return kExitOk;
    }
    if (*report_cmd) {
      print_report(parse_summary(read_file((fs::path(in_dir) / "report.json").string())));
      return kExitOk;
    }
    if (*cal_cmd) {
      bool all = true;
      for (const auto& line : check_profile(profile)) {
        all = all && line.pass;
        fmt::print("{} {}{}\n", line.pass ? "PASS" : "FAIL", line.name, line.detail.empty() ? "" : ": " + line.detail);
      }
      fmt::print("{}: {}\n", profile, all ? "all targets met" : "targets missed");
      return (check && !all) ? kExitCheckFailed : kExitOk;
    }
    if (*sc_cmd) {
      std::error_code ec;
      fs::create_directories(sc_out, ec);
      if (ec) fail(ErrorCode::kIoError, sc_out);
      auto configs = paper_v1_scenarios();
      configs.push_back(synthetic_xr_scenario());
      for (const auto& c : configs) {
        const auto path = fs::path(sc_out) / (c.name + ".json");
        write_file(path.string(), dump_scenario(c));
        fmt::print("{}\n", path.string());
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "fedsim: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitConfig : kExitError;
  }
  return kExitOk;
}

// imes_tc: generate scenarios, run one day, compare clearing protocols.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "imes/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace imes;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kInput = 3, kInfeasible = 4, kNotCleared = 5 };

bool non_empty_dir(const fs::path& p) { return fs::exists(p) && fs::is_directory(p) && !fs::is_empty(p); }

fs::path write_certificate(const fs::path& dir, const MesError& e, Mode mode, Protocol protocol, std::uint64_t seed) {
  fs::create_directories(dir);
  const auto file = dir / "infeasibility.json";
  nlohmann::ordered_json j;
  j["mes_id"] = e.mes_id;
  j["period"] = e.period;
  j["phase1_infeasibility"] = e.certificate;
  j["mode"] = to_string(mode);
  j["protocol"] = to_string(protocol);
  j["seed"] = seed;
  j["message"] = e.what();
  std::ofstream(file) << j.dump(2) << '\n';
  return file;
}

void print_summary(const SimRun& r) {
  fmt::print("mode {} protocol {} seed {}\n", to_string(r.mode), to_string(r.protocol), r.seed);
  fmt::print("total cost: {:.2f} yuan\n", r.total_cost);
  fmt::print("RES accommodation: {:.4f}%\n", 100.0 * r.accommodation());
  fmt::print("transformer violations: {}\n", r.violations);
  const auto st = iteration_stats(r);
  fmt::print("iterations per congested clearing: max {} avg {:.2f} over {} clearings\n", st.max, st.avg, st.congested);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transactive control of interconnected multi-energy systems"};
  app.require_subcommand(1);

  int mes = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool force = false;
  auto* gen = app.add_subcommand("generate", "Write a random scenario directory");
  gen->add_option("--mes", mes, "Number of MESs")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--force", force, "Overwrite a non-empty output directory");

  std::string run_scenario, run_out, mode_name, protocol_name = "2s-tc";
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "Simulate one day");
  run->add_option("--scenario", run_scenario, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("--mode", mode_name, "nca | ca | ca-fil")
      ->required()
      ->check(CLI::IsMember({"nca", "ca", "ca-fil"}));
  run->add_option("--protocol", protocol_name, "sg-rtc | 2s-tc")->check(CLI::IsMember({"sg-rtc", "2s-tc"}));
  run->add_option("--seed", run_seed, "Forecast seed")->required();
  run->add_option("--out", run_out, "Output directory")->required();

  std::string cmp_scenario;
  std::uint64_t cmp_seed = 0;
  auto* cmp = app.add_subcommand("compare", "Run SG-RTC and 2S-TC on identical forecasts; writes compare.csv");
  cmp->add_option("--scenario", cmp_scenario, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--seed", cmp_seed, "Forecast seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*gen) {
    const fs::path out(gen_out);
    if (non_empty_dir(out) && !force) {
      fmt::print(stderr, "error: {} exists and is not empty (use --force)\n", out.string());
      return kUsage;
    }
    try {
      const auto s = random_case(mes, gen_seed);
      if (force) fs::remove_all(out);
      write_scenario(s, out);
      fmt::print("scenario {} -> {}\n", s.id, out.string());
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(out)) files.push_back(e.path().filename().string());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) fmt::print("  {}\n", f);
      fmt::print("transformer limit: {:.6f} MW\n", s.grid.transformer_import_max);
    } catch (const std::exception& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kInput;
    }
    return kOk;
  }

  Scenario scenario;
  try {
    scenario = read_scenario(*run ? run_scenario : cmp_scenario);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: invalid scenario: {}\n", e.what());
    return kInput;
  }

  if (*run) {
    const Mode mode = mode_name == "nca" ? Mode::NCA : mode_name == "ca" ? Mode::CA : Mode::CAFIL;
    const Protocol protocol = protocol_name == "sg-rtc" ? Protocol::SGRTC : Protocol::TwoStage;
    SimRun r;
    try {
      r = run_day(scenario, mode, protocol, run_seed);
    } catch (const MesError& e) {
      const auto cert = write_certificate(run_out, e, mode, protocol, run_seed);
      fmt::print(stderr, "error: {}\ncertificate: {}\n", e.what(), cert.string());
      return kInfeasible;
    }
    write_run(r, run_out);
    print_summary(r);
    fmt::print("outputs: {}\n", run_out);
    return mode == Mode::NCA || r.violations == 0 ? kOk : kNotCleared;
  }

  ProtocolComparison c;
  try {
    c = compare_protocols(scenario, cmp_seed);
  } catch (const MesError& e) {
    const auto cert = write_certificate(".", e, Mode::CA, Protocol::TwoStage, cmp_seed);
    fmt::print(stderr, "error: {}\ncertificate: {}\n", e.what(), cert.string());
    return kInfeasible;
  }
  {
    std::ofstream out("compare.csv");
    write_compare_csv(c, out);
  }
  fmt::print("{:<12}{:>16}{:>16}\n", "", "SG-RTC", "2S-TC");
  fmt::print("{:<12}{:>16.2f}{:>16.2f}\n", "cost", c.sg_rtc.total_cost, c.two_stage.total_cost);
  fmt::print("{:<12}{:>16}{:>16}\n", "max iter", c.sg_stats.max, c.ts_stats.max);
  fmt::print("{:<12}{:>16.2f}{:>16.2f}\n", "avg iter", c.sg_stats.avg, c.ts_stats.avg);
  fmt::print("gap: {:.4f}%\n", 100.0 * c.gap);
  fmt::print("wrote compare.csv\n");
  return kOk;
}

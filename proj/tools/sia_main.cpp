#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sia/run.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitFailed = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<std::size_t> n_rollouts;
  std::optional<std::size_t> stride;
  std::optional<double> alpha_surprisal;
  bool allow_degenerate = false;
  std::optional<std::size_t> limit;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration JSON file");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--backend", f.backend, "backend kind: synthetic or http");
  cmd->add_option("--n-rollouts", f.n_rollouts, "rollouts per checkpoint");
  cmd->add_option("--stride", f.stride, "checkpoint stride in tokens");
  cmd->add_option("--alpha-surprisal", f.alpha_surprisal, "gold-surprisal smoothing");
  cmd->add_flag("--allow-degenerate", f.allow_degenerate,
                "permit temperature 0 (collapses rollout entropy)");
  cmd->add_option("--limit", f.limit, "stop collect after this many pairs");
}

sia::RunConfig resolve_config(const CommonFlags& f) {
  sia::RunConfig c;
  if (!f.config_path.empty())
    c = sia::load_run_config(f.config_path);
  if (f.seed)
    c.seed = *f.seed;
  if (f.out)
    c.out_dir = *f.out;
  if (f.backend)
    c.backend_kind = *f.backend;
  if (f.n_rollouts)
    c.estimation.n_rollouts = *f.n_rollouts;
  if (f.stride)
    c.estimation.stride = *f.stride;
  if (f.alpha_surprisal)
    c.estimation.alpha_surprisal = *f.alpha_surprisal;
  if (f.allow_degenerate)
    c.estimation.allow_degenerate = true;
  if (f.limit)
    c.limit_pairs = *f.limit;
  return c;
}

int status_code(sia::RunStatus s) {
  switch (s) {
  case sia::RunStatus::clean:
    return kExitClean;
  case sia::RunStatus::partial:
    return kExitPartial;
  case sia::RunStatus::failed:
    return kExitFailed;
  }
  return kExitFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy-dynamics rollout harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string ablate_kind;
  std::string report_format = "csv";
  std::vector<std::string> report_paths;
  std::uint64_t verify_seed = 1;
  std::size_t verify_trials = 20;

  auto* collect = app.add_subcommand("collect", "sample traces and rollout entropies");
  add_common(collect, flags);
  auto* analyze = app.add_subcommand("analyze", "compute diagnostics from trajectories");
  add_common(analyze, flags);
  auto* ablate = app.add_subcommand("ablate", "shuffle or mc_fidelity ablation");
  add_common(ablate, flags);
  ablate->add_option("kind", ablate_kind, "shuffle | mc_fidelity")->required();
  auto* verify = app.add_subcommand("verify", "information-theoretic self checks");
  verify->add_option("--seed", verify_seed, "battery seed");
  verify->add_option("--trials", verify_trials, "randomized worlds per identity");
  auto* report = app.add_subcommand("report", "merge report files into a table");
  report->add_option("files", report_paths, "report.json files")->required();
  report->add_option("--format", report_format, "csv | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitClean : kExitUsage;
  }

  try {
    if (collect->parsed()) {
      auto outcome = sia::cmd_collect(resolve_config(flags));
      std::cout << "collect: " << outcome.completed << " completed, " << outcome.skipped
                << " skipped, " << outcome.failed << " failed across " << outcome.questions
                << " questions\n";
      return status_code(outcome.status);
    }
    if (analyze->parsed()) {
      auto outcome = sia::cmd_analyze(resolve_config(flags));
      std::cout << "analyze: " << outcome.trajectories << " trajectories\n";
      return status_code(outcome.status);
    }
    if (ablate->parsed()) {
      auto outcome = sia::cmd_ablate(resolve_config(flags), ablate_kind);
      std::cout << "ablate " << ablate_kind << ": mean rho " << outcome.original_mean_rho
                << " -> " << outcome.ablated_mean_rho << " over " << outcome.n << " traces\n";
      return status_code(outcome.status);
    }
    if (verify->parsed())
      return sia::cmd_verify({verify_seed, verify_trials}, std::cout) ? kExitClean
                                                                      : kExitFailed;
    if (report->parsed()) {
      std::cout << sia::cmd_report(report_paths, report_format);
      return kExitClean;
    }
  } catch (const sia::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}

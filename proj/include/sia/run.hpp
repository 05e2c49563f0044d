#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sia/diagnostics.hpp"
#include "sia/rollout.hpp"

namespace sia {

struct WorldConfig {
  std::string kind = "aligned"; // "aligned" | "misaligned"
  std::uint64_t seed = 1;
  WorldSizes sizes{2, 3, 4};
  std::size_t horizon = 4;
  double lambda = 0.7;  // aligned generator parameter
  std::string path;     // load a serialized world instead of generating
};

struct RunConfig {
  std::string backend_kind = "synthetic"; // "synthetic" | "http"
  HttpBackendConfig http;
  WorldConfig world;
  std::string dataset_path;
  std::string dataset_format = "synthetic";
  std::size_t n_questions = 8; // synthetic datasets only
  DecodingParams decoding;
  EstimationOptions estimation;
  std::size_t m_trajectories = 4;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  GroupLabels labels{"synthetic", "synthetic", "base"};
  std::optional<std::size_t> limit_pairs; // stop collect early (smoke runs)
};

RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& c);
RunConfig load_run_config(const std::string& path);
void validate_config(const RunConfig& c);

std::unique_ptr<CompletionBackend> make_backend(const RunConfig& c);
std::vector<QuestionInstance> load_questions(const RunConfig& c);

std::string question_to_json(const QuestionInstance& q);
QuestionInstance question_from_json(const std::string& line);

// FNV-1a over raw bytes, rendered as "fnv1a:<hex>"
std::string content_hash(const std::string& bytes);

enum class RunStatus { clean, partial, failed };

struct CollectOutcome {
  RunStatus status = RunStatus::clean;
  std::size_t questions = 0;
  std::size_t completed = 0; // (question, trajectory) pairs written this run
  std::size_t skipped = 0;   // pairs already present (resume)
  std::size_t failed = 0;
};

// Writes out_dir/{questions.jsonl, traces/, trajectories/, manifest.json}.
// One file per (question, trajectory) pair; pairs whose trajectory file
// already exists are skipped, making interrupted runs resumable.
CollectOutcome cmd_collect(const RunConfig& c);

struct AnalyzeOutcome {
  RunStatus status = RunStatus::clean;
  std::size_t trajectories = 0;
};

// Reads trajectories and writes reports/report.json plus the CSV tables.
AnalyzeOutcome cmd_analyze(const RunConfig& c);

struct AblateOutcome {
  RunStatus status = RunStatus::clean;
  double original_mean_rho = 0;
  double ablated_mean_rho = 0;
  std::size_t n = 0;
};

// kind "shuffle": re-estimates on permuted prefixes. kind "mc_fidelity":
// re-estimates with the coarse (stride 4, N=32) preset.
AblateOutcome cmd_ablate(const RunConfig& c, const std::string& kind);

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 20;
};

// Theory checks over enumerated worlds; prints one pass/fail line per check.
bool cmd_verify(const VerifyOptions& opts, std::ostream& out);

// Merges report.json files into a flat table ("csv" or "json").
std::string cmd_report(const std::vector<std::string>& report_paths, const std::string& format);

} // namespace sia

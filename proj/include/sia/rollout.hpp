#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sia/answers.hpp"
#include "sia/dataset.hpp"
#include "sia/oracle_lab.hpp"

namespace sia {

struct DecodingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 600;
};

struct RetryPolicy {
  int max_attempts = 3;
  int initial_backoff_ms = 250;
};

struct CompletionRequest {
  std::string prompt;
  DecodingParams params;
  std::size_t n = 1;
  std::uint64_t seed = 0; // honored by deterministic backends, recorded otherwise
};

class CompletionBackend {
public:
  virtual ~CompletionBackend() = default;
  virtual std::vector<std::string> complete(const CompletionRequest& req) = 0;
  virtual bool deterministic() const { return false; }
};

// In-process backend over an enumerated world. Question prompts use the form
// "synthetic://q=<q>;gold=<a>". A prompt without a newline asks for a full
// reasoning trace; a prompt with a newline treats the remainder as a
// whitespace-separated step-token prefix and returns answer continuations
// sampled from the world's posterior at that prefix.
class SyntheticBackend : public CompletionBackend {
public:
  explicit SyntheticBackend(WorldBundle world);

  std::vector<std::string> complete(const CompletionRequest& req) override;
  bool deterministic() const override { return true; }

  const WorldBundle& world() const { return world_; }

private:
  WorldBundle world_;
  TabularAutoregressiveModel trace_model_; // step conditionals used for trace growth
};

// Questions drawn from the world's (Q, A) joint; ids "synq-<i>".
std::vector<QuestionInstance> synthetic_questions(const WorldBundle& world, std::size_t count,
                                                  std::uint64_t seed);

struct HttpBackendConfig {
  std::string endpoint; // scheme://host[:port]
  std::string model;
  std::string auth_env;     // environment variable holding the bearer token
  int timeout_seconds = 120;
  RetryPolicy retry;
};

// OpenAI-compatible completions client: POST {endpoint}/v1/completions with
// {model, prompt, temperature, top_p, max_tokens, n}; answers read from
// choices[*].text. Transport errors and HTTP 429/5xx are retried with
// exponential backoff.
class HttpBackend : public CompletionBackend {
public:
  explicit HttpBackend(HttpBackendConfig config);

  std::vector<std::string> complete(const CompletionRequest& req) override;
  std::size_t retries_used() const { return retries_.load(); }

private:
  HttpBackendConfig config_;
  std::atomic<std::size_t> retries_{0};
};

struct CheckpointPlan {
  std::size_t stride = 0;
  std::vector<std::size_t> positions; // strictly increasing, contains 0 and K
};

// Default stride is max(1, K/20); 0 and K are always present.
CheckpointPlan plan_checkpoints(std::size_t trace_length,
                                std::optional<std::size_t> stride = std::nullopt);

struct TraceRecord {
  std::string question_id;
  std::size_t trajectory_index = 0;
  std::vector<std::string> tokens; // reasoning tokens, answer delimiter excluded
  std::string raw_text;
  AnswerLabel final_answer;
  bool is_correct = false;
  DecodingParams decoding;
  std::vector<std::size_t> checkpoint_positions;
  std::uint64_t seed = 0;
};

struct CheckpointEstimate {
  std::size_t k = 0;
  double entropy_nats = 0;
  double gold_surprisal_nats = 0;
  std::map<std::string, std::size_t> counts; // answer label -> rollout count
  bool degenerate = false;                   // every rollout failed to parse
};

struct EntropyTrajectory {
  std::string question_id;
  std::size_t trajectory_index = 0;
  std::size_t mc_samples = 0;
  double alpha_entropy = 0;
  double alpha_surprisal = 0;
  bool is_correct = false;
  std::vector<CheckpointEstimate> checkpoints;
};

struct EstimationOptions {
  std::size_t n_rollouts = 16;
  double alpha_entropy = 0.0;
  double alpha_surprisal = 0.5;
  std::optional<std::size_t> stride;
  bool allow_degenerate = false; // permit temperature <= 0
  std::size_t max_inflight = 8;
};

// Stable per-checkpoint seed (FNV-1a over the identifying tuple), so results
// do not depend on estimation order.
std::uint64_t checkpoint_seed(std::uint64_t run_seed, const std::string& question_id,
                              std::size_t trajectory_index, std::size_t k);

// One trace at a fixed trajectory index; nullopt on generation failure.
std::optional<TraceRecord> generate_single_trajectory(CompletionBackend& backend,
                                                      const QuestionInstance& question,
                                                      std::size_t trajectory_index,
                                                      const DecodingParams& params,
                                                      std::uint64_t run_seed,
                                                      const EstimationOptions& opts = {});

std::vector<TraceRecord> generate_trajectories(CompletionBackend& backend,
                                               const QuestionInstance& question, std::size_t m,
                                               const DecodingParams& params,
                                               std::uint64_t run_seed,
                                               const EstimationOptions& opts = {});

CheckpointEstimate estimate_conditional_entropy(CompletionBackend& backend,
                                                const QuestionInstance& question,
                                                const std::vector<std::string>& prefix_tokens,
                                                std::size_t k, const DecodingParams& params,
                                                const EstimationOptions& opts,
                                                std::uint64_t seed);

EntropyTrajectory evaluate_trace(CompletionBackend& backend, const QuestionInstance& question,
                                 const TraceRecord& trace, std::uint64_t run_seed,
                                 const EstimationOptions& opts);

std::vector<EntropyTrajectory> evaluate_question(CompletionBackend& backend,
                                                 const QuestionInstance& question, std::size_t m,
                                                 const DecodingParams& params,
                                                 std::uint64_t run_seed,
                                                 const EstimationOptions& opts);

// Uniform permutation of the first k tokens, deterministic under seed.
std::vector<std::string> shuffle_prefix(const TraceRecord& trace, std::size_t k,
                                        std::uint64_t seed);

// --- trace.v1 / trajectory.v1 JSONL ----------------------------------------

std::string trace_to_json(const TraceRecord& t);
TraceRecord trace_from_json(const std::string& line);

std::string trajectory_to_json(const EntropyTrajectory& t);
EntropyTrajectory trajectory_from_json(const std::string& line);

} // namespace sia

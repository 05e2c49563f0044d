#include "sia/rollout.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace sia {

using nlohmann::json;

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(const std::vector<double>& pmf, std::mt19937_64& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc)
      return i;
  }
  return pmf.size() - 1;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok)
    out.push_back(tok);
  return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i)
      out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

struct SyntheticPrompt {
  std::size_t q = 0;
  std::size_t gold = 0;
  bool is_trace_request = false;
  std::vector<std::size_t> prefix;
};

SyntheticPrompt parse_synthetic_prompt(const std::string& prompt, const WorldSizes& sizes) {
  SyntheticPrompt out;
  auto nl = prompt.find('\n');
  std::string head = prompt.substr(0, nl);
  out.is_trace_request = nl == std::string::npos;
  const std::string scheme = "synthetic://";
  if (head.rfind(scheme, 0) != 0)
    throw GenerationError("synthetic backend: unrecognized prompt '" + head + "'");
  std::size_t q = 0, gold = 0;
  if (std::sscanf(head.c_str() + scheme.size(), "q=%zu;gold=%zu", &q, &gold) != 2)
    throw GenerationError("synthetic backend: malformed prompt '" + head + "'");
  if (q >= sizes.q_size || gold >= sizes.a_size)
    throw GenerationError("synthetic backend: prompt indices out of range");
  out.q = q;
  out.gold = gold;
  if (!out.is_trace_request) {
    for (const std::string& tok : split_ws(prompt.substr(nl + 1))) {
      char* end = nullptr;
      unsigned long v = std::strtoul(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0' || v >= sizes.c_size)
        throw GenerationError("synthetic backend: bad prefix token '" + tok + "'");
      out.prefix.push_back(static_cast<std::size_t>(v));
    }
  }
  return out;
}

std::vector<std::size_t> decode_trace(std::size_t flat, std::size_t c_size,
                                      std::size_t horizon) {
  std::vector<std::size_t> c(horizon, 0);
  for (std::size_t i = horizon; i-- > 0;) {
    c[i] = flat % c_size;
    flat /= c_size;
  }
  return c;
}

} // namespace

SyntheticBackend::SyntheticBackend(WorldBundle world) : world_(std::move(world)) {
  trace_model_ = world_.model ? *world_.model : exact_conditionals(world_.truth);
}

std::vector<std::string> SyntheticBackend::complete(const CompletionRequest& req) {
  const WorldSizes& sizes = world_.truth.sizes();
  const std::size_t horizon = world_.truth.horizon();
  SyntheticPrompt p = parse_synthetic_prompt(req.prompt, sizes);
  std::mt19937_64 rng(req.seed);
  std::vector<std::string> out;
  out.reserve(req.n);

  if (p.is_trace_request) {
    for (std::size_t i = 0; i < req.n; ++i) {
      std::vector<std::size_t> c;
      if (world_.kind == "aligned") {
        // coupling-consistent trace: condition on the gold answer
        std::size_t flat = sample_index(world_.truth.trace_conditional(p.q, p.gold), rng);
        c = decode_trace(flat, sizes.c_size, horizon);
      } else {
        for (std::size_t k = 0; k < horizon; ++k) {
          const double* row = trace_model_.step_row(k, p.q, trace_model_.prefix_flat(c));
          c.push_back(sample_index({row, row + sizes.c_size}, rng));
        }
      }
      ProbDist post = world_.kind == "aligned"
                          ? world_.truth.answer_posterior(p.q, c)
                          : [&] {
                              const double* row =
                                  trace_model_.answer_row(p.q, trace_model_.prefix_flat(c));
                              return ProbDist({row, row + sizes.a_size});
                            }();
      std::size_t a = sample_index(post.mass(), rng);
      std::string text;
      for (std::size_t v : c)
        text += std::to_string(v) + " ";
      text += "#### " + std::to_string(a);
      out.push_back(std::move(text));
    }
    return out;
  }

  if (p.prefix.size() > horizon)
    throw GenerationError("synthetic backend: prefix longer than horizon");
  ProbDist post = world_.kind == "aligned"
                      ? world_.truth.answer_posterior(p.q, p.prefix)
                      : trace_model_.internal_posterior(p.q, p.prefix);
  for (std::size_t i = 0; i < req.n; ++i)
    out.push_back("#### " + std::to_string(sample_index(post.mass(), rng)));
  return out;
}

std::vector<QuestionInstance> synthetic_questions(const WorldBundle& world, std::size_t count,
                                                  std::uint64_t seed) {
  std::vector<double> qa = world.truth.qa_marginal();
  std::size_t a_size = world.truth.sizes().a_size;
  std::mt19937_64 rng(seed);
  std::vector<QuestionInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t cell = sample_index(qa, rng);
    std::size_t q = cell / a_size, a = cell % a_size;
    if (world.model) {
      // Hallucination regime: gold is the answer the model hedges on, the one
      // whose posterior its confident trace-following never moves.
      std::size_t n_traces = 1;
      for (std::size_t t = 0; t < world.horizon; ++t)
        n_traces *= world.truth.sizes().c_size;
      const auto& rows = world.model->answer_rows;
      for (std::size_t cand = 0; cand < a_size; ++cand) {
        double first = rows[(q * n_traces) * a_size + cand];
        bool constant = true;
        for (std::size_t cflat = 1; cflat < n_traces && constant; ++cflat)
          constant = rows[(q * n_traces + cflat) * a_size + cand] == first;
        if (constant) {
          a = cand;
          break;
        }
      }
    }
    QuestionInstance inst;
    inst.id = "synq-" + std::to_string(i);
    inst.task_kind = TaskKind::numeric;
    inst.prompt_text = "synthetic://q=" + std::to_string(q) + ";gold=" + std::to_string(a);
    inst.gold_answer = AnswerLabel::numeric(std::to_string(a));
    out.push_back(std::move(inst));
  }
  return out;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty())
    throw ValidationError("HttpBackend: endpoint required");
}

std::vector<std::string> HttpBackend::complete(const CompletionRequest& req) {
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  json body{{"model", config_.model},
            {"prompt", req.prompt},
            {"temperature", req.params.temperature},
            {"top_p", req.params.top_p},
            {"max_tokens", req.params.max_tokens},
            {"n", req.n}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      auto backoff = std::chrono::milliseconds(config_.retry.initial_backoff_ms) * (1 << (attempt - 1));
      std::this_thread::sleep_for(backoff);
    }
    auto res = client.Post("/v1/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      json j = json::parse(res->body);
      std::vector<std::string> out;
      for (const auto& choice : j.at("choices"))
        out.push_back(choice.at("text").get<std::string>());
      if (out.empty())
        throw GenerationError("http backend: response carried no choices");
      return out;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    throw GenerationError("http backend: status " + std::to_string(res->status) + ": " +
                          res->body);
  }
  throw GenerationError("http backend: unreachable after " +
                        std::to_string(config_.retry.max_attempts) + " attempts (" +
                        last_error + ")");
}

CheckpointPlan plan_checkpoints(std::size_t trace_length, std::optional<std::size_t> stride) {
  CheckpointPlan plan;
  plan.stride = stride.value_or(std::max<std::size_t>(1, trace_length / 20));
  if (plan.stride == 0)
    throw ValidationError("plan_checkpoints: stride must be positive");
  for (std::size_t k = 0; k < trace_length; k += plan.stride)
    plan.positions.push_back(k);
  plan.positions.push_back(trace_length);
  return plan;
}

std::uint64_t checkpoint_seed(std::uint64_t run_seed, const std::string& question_id,
                              std::size_t trajectory_index, std::size_t k) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  mix(run_seed, 8);
  for (char c : question_id)
    mix(static_cast<unsigned char>(c), 1);
  mix(0x1F, 1); // terminator so ids are not prefix-ambiguous
  mix(trajectory_index, 8);
  mix(k, 8);
  return h;
}

namespace {

constexpr std::size_t kTraceTag = std::numeric_limits<std::size_t>::max();

std::vector<std::string> reasoning_tokens(const std::string& completion) {
  std::vector<std::string> tokens = split_ws(completion);
  auto it = std::find_if(tokens.begin(), tokens.end(),
                         [](const std::string& t) { return t.rfind("####", 0) == 0; });
  tokens.erase(it, tokens.end());
  return tokens;
}

void require_stochastic(const DecodingParams& params, const EstimationOptions& opts) {
  if (params.temperature <= 0.0 && !opts.allow_degenerate)
    throw ValidationError("temperature <= 0 collapses rollout entropy; "
                          "pass allow_degenerate to override");
}

} // namespace

std::optional<TraceRecord> generate_single_trajectory(CompletionBackend& backend,
                                                      const QuestionInstance& question,
                                                      std::size_t trajectory_index,
                                                      const DecodingParams& params,
                                                      std::uint64_t run_seed,
                                                      const EstimationOptions& opts) {
  require_stochastic(params, opts);
  CompletionRequest req;
  req.prompt = question.prompt_text;
  req.params = params;
  req.n = 1;
  req.seed = checkpoint_seed(run_seed, question.id, trajectory_index, kTraceTag);
  std::string text;
  try {
    text = backend.complete(req).at(0);
  } catch (const GenerationError&) {
    return std::nullopt;
  }
  TraceRecord t;
  t.question_id = question.id;
  t.trajectory_index = trajectory_index;
  t.raw_text = text;
  t.tokens = reasoning_tokens(text);
  t.final_answer = extract_answer(text, question.task_kind,
                                  question.choice_set.empty() ? nullptr : &question.choice_set);
  t.is_correct = label_correctness(t.final_answer, question.gold_answer);
  t.decoding = params;
  t.checkpoint_positions = plan_checkpoints(t.tokens.size(), opts.stride).positions;
  t.seed = req.seed;
  return t;
}

std::vector<TraceRecord> generate_trajectories(CompletionBackend& backend,
                                               const QuestionInstance& question, std::size_t m,
                                               const DecodingParams& params,
                                               std::uint64_t run_seed,
                                               const EstimationOptions& opts) {
  if (m < 1)
    throw ValidationError("generate_trajectories: M must be >= 1");
  std::vector<TraceRecord> out;
  for (std::size_t i = 0; i < m; ++i)
    // failed traces shrink the returned count; callers report the shortfall
    if (auto t = generate_single_trajectory(backend, question, i, params, run_seed, opts))
      out.push_back(std::move(*t));
  return out;
}

CheckpointEstimate estimate_conditional_entropy(CompletionBackend& backend,
                                                const QuestionInstance& question,
                                                const std::vector<std::string>& prefix_tokens,
                                                std::size_t k, const DecodingParams& params,
                                                const EstimationOptions& opts,
                                                std::uint64_t seed) {
  if (opts.n_rollouts < 1)
    throw ValidationError("estimate_conditional_entropy: N must be >= 1");
  require_stochastic(params, opts);
  CompletionRequest req;
  req.prompt = question.prompt_text + "\n" + join_ws(prefix_tokens);
  req.params = params;
  req.n = opts.n_rollouts;
  req.seed = seed;
  std::vector<std::string> completions = backend.complete(req);

  std::vector<AnswerLabel> labels;
  for (const std::string& text : completions)
    labels.push_back(extract_answer(text, question.task_kind,
                                    question.choice_set.empty() ? nullptr
                                                                : &question.choice_set));
  CheckpointEstimate est;
  est.k = k;
  est.degenerate =
      std::all_of(labels.begin(), labels.end(), [](const AnswerLabel& l) { return l.is_null(); });
  EmpiricalAnswerDist plug_in(labels, opts.alpha_entropy, question.gold_answer);
  EmpiricalAnswerDist smoothed(labels, opts.alpha_surprisal, question.gold_answer);
  est.entropy_nats = plug_in.entropy_nats();
  est.gold_surprisal_nats = smoothed.surprisal_nats(question.gold_answer);
  for (const auto& [label, count] : plug_in.counts())
    if (count > 0)
      est.counts[label.to_string()] = count;
  return est;
}

EntropyTrajectory evaluate_trace(CompletionBackend& backend, const QuestionInstance& question,
                                 const TraceRecord& trace, std::uint64_t run_seed,
                                 const EstimationOptions& opts) {
  EntropyTrajectory traj;
  traj.question_id = trace.question_id;
  traj.trajectory_index = trace.trajectory_index;
  traj.mc_samples = opts.n_rollouts;
  traj.alpha_entropy = opts.alpha_entropy;
  traj.alpha_surprisal = opts.alpha_surprisal;
  traj.is_correct = trace.is_correct;
  traj.checkpoints.resize(trace.checkpoint_positions.size());

  const auto& positions = trace.checkpoint_positions;
  std::size_t width = std::max<std::size_t>(1, opts.max_inflight);
  for (std::size_t base = 0; base < positions.size(); base += width) {
    std::size_t end = std::min(positions.size(), base + width);
    std::vector<std::future<CheckpointEstimate>> wave;
    for (std::size_t i = base; i < end; ++i) {
      std::size_t k = positions[i];
      wave.push_back(std::async(std::launch::async, [&, k] {
        std::vector<std::string> prefix(trace.tokens.begin(), trace.tokens.begin() + k);
        std::uint64_t seed =
            checkpoint_seed(run_seed, trace.question_id, trace.trajectory_index, k);
        return estimate_conditional_entropy(backend, question, prefix, k, trace.decoding, opts,
                                            seed);
      }));
    }
    for (std::size_t i = base; i < end; ++i)
      traj.checkpoints[i] = wave[i - base].get();
  }
  return traj;
}

std::vector<EntropyTrajectory> evaluate_question(CompletionBackend& backend,
                                                 const QuestionInstance& question, std::size_t m,
                                                 const DecodingParams& params,
                                                 std::uint64_t run_seed,
                                                 const EstimationOptions& opts) {
  std::vector<EntropyTrajectory> out;
  for (const TraceRecord& trace :
       generate_trajectories(backend, question, m, params, run_seed, opts))
    out.push_back(evaluate_trace(backend, question, trace, run_seed, opts));
  return out;
}

std::vector<std::string> shuffle_prefix(const TraceRecord& trace, std::size_t k,
                                        std::uint64_t seed) {
  if (k > trace.tokens.size())
    throw ValidationError("shuffle_prefix: k exceeds trace length");
  std::vector<std::string> prefix(trace.tokens.begin(), trace.tokens.begin() + k);
  std::mt19937_64 rng(seed);
  for (std::size_t i = prefix.size(); i > 1; --i)
    std::swap(prefix[i - 1], prefix[rng() % i]);
  return prefix;
}

// --- serialization ----------------------------------------------------------

namespace {

json decoding_to_json(const DecodingParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}};
}

DecodingParams decoding_from_json(const json& j) {
  DecodingParams p;
  p.temperature = j.at("temperature").get<double>();
  p.top_p = j.at("top_p").get<double>();
  p.max_tokens = j.at("max_tokens").get<int>();
  return p;
}

void require_schema(const json& j, const std::string& expected) {
  std::string found = j.value("schema", "<missing>");
  if (found != expected)
    throw ValidationError("schema mismatch: expected " + expected + ", found " + found);
}

} // namespace

std::string trace_to_json(const TraceRecord& t) {
  json j{{"schema", "trace.v1"},
         {"question_id", t.question_id},
         {"trajectory_index", t.trajectory_index},
         {"tokens", t.tokens},
         {"text", t.raw_text},
         {"final_answer", t.final_answer.to_string()},
         {"is_correct", t.is_correct},
         {"decoding", decoding_to_json(t.decoding)},
         {"checkpoints", t.checkpoint_positions},
         {"seed", t.seed}};
  return j.dump();
}

TraceRecord trace_from_json(const std::string& line) {
  json j = json::parse(line);
  require_schema(j, "trace.v1");
  TraceRecord t;
  t.question_id = j.at("question_id").get<std::string>();
  t.trajectory_index = j.at("trajectory_index").get<std::size_t>();
  t.tokens = j.at("tokens").get<std::vector<std::string>>();
  t.raw_text = j.at("text").get<std::string>();
  t.final_answer = AnswerLabel::from_string(j.at("final_answer").get<std::string>());
  t.is_correct = j.at("is_correct").get<bool>();
  t.decoding = decoding_from_json(j.at("decoding"));
  t.checkpoint_positions = j.at("checkpoints").get<std::vector<std::size_t>>();
  t.seed = j.at("seed").get<std::uint64_t>();
  if (t.checkpoint_positions.empty() || t.checkpoint_positions.front() != 0 ||
      t.checkpoint_positions.back() != t.tokens.size() ||
      !std::is_sorted(t.checkpoint_positions.begin(), t.checkpoint_positions.end()))
    throw ValidationError("trace.v1: invalid checkpoint positions");
  return t;
}

std::string trajectory_to_json(const EntropyTrajectory& t) {
  json checkpoints = json::array();
  for (const CheckpointEstimate& c : t.checkpoints) {
    json counts = json::object();
    for (const auto& [label, n] : c.counts)
      counts[label] = n;
    // JSON has no infinity; an unsmoothed zero-mass gold serializes as null
    json surprisal = std::isfinite(c.gold_surprisal_nats) ? json(c.gold_surprisal_nats)
                                                          : json(nullptr);
    checkpoints.push_back({{"k", c.k},
                           {"entropy_nats", c.entropy_nats},
                           {"gold_surprisal_nats", surprisal},
                           {"counts", counts},
                           {"degenerate", c.degenerate}});
  }
  json j{{"schema", "trajectory.v1"},
         {"question_id", t.question_id},
         {"trajectory_index", t.trajectory_index},
         {"mc_samples", t.mc_samples},
         {"alpha_entropy", t.alpha_entropy},
         {"alpha_surprisal", t.alpha_surprisal},
         {"is_correct", t.is_correct},
         {"checkpoints", checkpoints}};
  return j.dump();
}

EntropyTrajectory trajectory_from_json(const std::string& line) {
  json j = json::parse(line);
  require_schema(j, "trajectory.v1");
  EntropyTrajectory t;
  t.question_id = j.at("question_id").get<std::string>();
  t.trajectory_index = j.at("trajectory_index").get<std::size_t>();
  t.mc_samples = j.at("mc_samples").get<std::size_t>();
  t.alpha_entropy = j.at("alpha_entropy").get<double>();
  t.alpha_surprisal = j.at("alpha_surprisal").get<double>();
  t.is_correct = j.at("is_correct").get<bool>();
  for (const json& cj : j.at("checkpoints")) {
    CheckpointEstimate c;
    c.k = cj.at("k").get<std::size_t>();
    c.entropy_nats = cj.at("entropy_nats").get<double>();
    const json& sj = cj.at("gold_surprisal_nats");
    c.gold_surprisal_nats = sj.is_null() ? kInf : sj.get<double>();
    c.degenerate = cj.at("degenerate").get<bool>();
    for (auto it = cj.at("counts").begin(); it != cj.at("counts").end(); ++it)
      c.counts[it.key()] = it.value().get<std::size_t>();
    t.checkpoints.push_back(std::move(c));
  }
  if (t.checkpoints.empty() || t.checkpoints.front().k != 0)
    throw ValidationError("trajectory.v1: missing k=0 checkpoint");
  return t;
}

} // namespace sia

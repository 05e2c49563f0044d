#include "sia/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sia {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kStages{"base", "sft", "sft+rl"};

json config_to_json(const RunConfig& c) {
  json j;
  j["schema"] = "config.v1";
  j["backend"] = {{"kind", c.backend_kind},
                  {"endpoint", c.http.endpoint},
                  {"model", c.http.model},
                  {"auth_env", c.http.auth_env},
                  {"timeout_seconds", c.http.timeout_seconds},
                  {"retry_max_attempts", c.http.retry.max_attempts},
                  {"retry_initial_backoff_ms", c.http.retry.initial_backoff_ms}};
  j["world"] = {{"kind", c.world.kind},
                {"seed", c.world.seed},
                {"q_size", c.world.sizes.q_size},
                {"c_size", c.world.sizes.c_size},
                {"a_size", c.world.sizes.a_size},
                {"horizon", c.world.horizon},
                {"lambda", c.world.lambda},
                {"path", c.world.path}};
  j["dataset"] = {{"path", c.dataset_path},
                  {"format", c.dataset_format},
                  {"n_questions", c.n_questions}};
  j["decoding"] = {{"temperature", c.decoding.temperature},
                   {"top_p", c.decoding.top_p},
                   {"max_tokens", c.decoding.max_tokens}};
  j["estimation"] = {{"n_rollouts", c.estimation.n_rollouts},
                     {"m_trajectories", c.m_trajectories},
                     {"stride", c.estimation.stride ? json(*c.estimation.stride) : json(nullptr)},
                     {"alpha_entropy", c.estimation.alpha_entropy},
                     {"alpha_surprisal", c.estimation.alpha_surprisal},
                     {"allow_degenerate", c.estimation.allow_degenerate},
                     {"max_inflight", c.estimation.max_inflight}};
  j["labels"] = {{"model_tag", c.labels.model_tag},
                 {"dataset_tag", c.labels.dataset_tag},
                 {"training_stage", c.labels.training_stage}};
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["limit_pairs"] = c.limit_pairs ? json(*c.limit_pairs) : json(nullptr);
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("backend")) {
    const json& b = j["backend"];
    c.backend_kind = b.value("kind", c.backend_kind);
    c.http.endpoint = b.value("endpoint", c.http.endpoint);
    c.http.model = b.value("model", c.http.model);
    c.http.auth_env = b.value("auth_env", c.http.auth_env);
    c.http.timeout_seconds = b.value("timeout_seconds", c.http.timeout_seconds);
    c.http.retry.max_attempts = b.value("retry_max_attempts", c.http.retry.max_attempts);
    c.http.retry.initial_backoff_ms =
        b.value("retry_initial_backoff_ms", c.http.retry.initial_backoff_ms);
  }
  if (j.contains("world")) {
    const json& w = j["world"];
    c.world.kind = w.value("kind", c.world.kind);
    c.world.seed = w.value("seed", c.world.seed);
    c.world.sizes.q_size = w.value("q_size", c.world.sizes.q_size);
    c.world.sizes.c_size = w.value("c_size", c.world.sizes.c_size);
    c.world.sizes.a_size = w.value("a_size", c.world.sizes.a_size);
    c.world.horizon = w.value("horizon", c.world.horizon);
    c.world.lambda = w.value("lambda", c.world.lambda);
    c.world.path = w.value("path", c.world.path);
  }
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    c.dataset_path = d.value("path", c.dataset_path);
    c.dataset_format = d.value("format", c.dataset_format);
    c.n_questions = d.value("n_questions", c.n_questions);
  }
  if (j.contains("decoding")) {
    const json& d = j["decoding"];
    c.decoding.temperature = d.value("temperature", c.decoding.temperature);
    c.decoding.top_p = d.value("top_p", c.decoding.top_p);
    c.decoding.max_tokens = d.value("max_tokens", c.decoding.max_tokens);
  }
  if (j.contains("estimation")) {
    const json& e = j["estimation"];
    c.estimation.n_rollouts = e.value("n_rollouts", c.estimation.n_rollouts);
    c.m_trajectories = e.value("m_trajectories", c.m_trajectories);
    if (e.contains("stride") && !e["stride"].is_null())
      c.estimation.stride = e["stride"].get<std::size_t>();
    c.estimation.alpha_entropy = e.value("alpha_entropy", c.estimation.alpha_entropy);
    c.estimation.alpha_surprisal = e.value("alpha_surprisal", c.estimation.alpha_surprisal);
    c.estimation.allow_degenerate = e.value("allow_degenerate", c.estimation.allow_degenerate);
    c.estimation.max_inflight = e.value("max_inflight", c.estimation.max_inflight);
  }
  if (j.contains("labels")) {
    const json& l = j["labels"];
    c.labels.model_tag = l.value("model_tag", c.labels.model_tag);
    c.labels.dataset_tag = l.value("dataset_tag", c.labels.dataset_tag);
    c.labels.training_stage = l.value("training_stage", c.labels.training_stage);
  }
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("limit_pairs") && !j["limit_pairs"].is_null())
    c.limit_pairs = j["limit_pairs"].get<std::size_t>();
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw ValidationError("cannot open '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw ValidationError("cannot write '" + p.string() + "'");
  out << content;
}

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

WorldBundle build_world(const RunConfig& c) {
  if (!c.world.path.empty())
    return world_from_json(read_file(c.world.path));
  if (c.world.kind == "aligned")
    return WorldBundle::aligned(c.world.seed, c.world.sizes, c.world.horizon, c.world.lambda);
  if (c.world.kind == "misaligned")
    return WorldBundle::misaligned(c.world.seed, c.world.sizes, c.world.horizon);
  throw ValidationError("world.kind: expected aligned or misaligned, got '" + c.world.kind +
                        "'");
}

std::string fmt6(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << v;
  return os.str();
}

double round6(double v) { return std::stod(fmt6(v)); }

std::string pair_name(const std::string& question_id, std::size_t index) {
  return question_id + "-" + std::to_string(index) + ".jsonl";
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir))
    return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file())
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EntropyTrajectory> load_trajectories(const fs::path& dir) {
  std::vector<EntropyTrajectory> out;
  for (const fs::path& p : sorted_files(dir)) {
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty())
        out.push_back(trajectory_from_json(line));
  }
  return out;
}

} // namespace

RunConfig config_from_json_text(const std::string& text) {
  return config_from_json(json::parse(text));
}

std::string config_to_json_text(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

RunConfig load_run_config(const std::string& path) {
  try {
    return config_from_json_text(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void validate_config(const RunConfig& c) {
  if (c.backend_kind != "synthetic" && c.backend_kind != "http")
    throw ValidationError("backend.kind: expected synthetic or http");
  if (c.backend_kind == "http" && c.http.endpoint.empty())
    throw ValidationError("backend.endpoint: required for the http backend");
  if (c.backend_kind == "synthetic" && c.dataset_format != "synthetic")
    throw ValidationError("dataset.format: the synthetic backend requires synthetic questions");
  if (!kStages.count(c.labels.training_stage))
    throw ValidationError("labels.training_stage: expected base, sft, or sft+rl");
  if (c.dataset_format != "synthetic") {
    dataset_format_from_string(c.dataset_format);
    if (!fs::exists(c.dataset_path))
      throw ValidationError("dataset.path: '" + c.dataset_path + "' does not exist");
  }
  if (!c.world.path.empty() && !fs::exists(c.world.path))
    throw ValidationError("world.path: '" + c.world.path + "' does not exist");
  if (c.m_trajectories < 1)
    throw ValidationError("estimation.m_trajectories: must be >= 1");
  if (c.estimation.n_rollouts < 1)
    throw ValidationError("estimation.n_rollouts: must be >= 1");
  if (c.out_dir.empty())
    throw ValidationError("out_dir: required");
}

std::unique_ptr<CompletionBackend> make_backend(const RunConfig& c) {
  if (c.backend_kind == "synthetic")
    return std::make_unique<SyntheticBackend>(build_world(c));
  return std::make_unique<HttpBackend>(c.http);
}

std::vector<QuestionInstance> load_questions(const RunConfig& c) {
  if (c.dataset_format == "synthetic")
    return synthetic_questions(build_world(c), c.n_questions,
                               checkpoint_seed(c.seed, "questions", 0, 0));
  return load_dataset(c.dataset_path, dataset_format_from_string(c.dataset_format));
}

std::string question_to_json(const QuestionInstance& q) {
  json choices = json::array();
  for (const auto& [letter, text] : q.choice_set)
    choices.push_back({{"label", std::string(1, letter)}, {"text", text}});
  json j{{"schema", "question.v1"},
         {"id", q.id},
         {"task_kind", q.task_kind == TaskKind::numeric ? "numeric" : "multiple_choice"},
         {"prompt", q.prompt_text},
         {"gold", q.gold_answer.to_string()},
         {"choices", choices}};
  return j.dump();
}

QuestionInstance question_from_json(const std::string& line) {
  json j = json::parse(line);
  if (j.value("schema", "") != "question.v1")
    throw ValidationError("question.v1: schema mismatch");
  QuestionInstance q;
  q.id = j.at("id").get<std::string>();
  q.task_kind =
      j.at("task_kind").get<std::string>() == "numeric" ? TaskKind::numeric
                                                        : TaskKind::multiple_choice;
  q.prompt_text = j.at("prompt").get<std::string>();
  q.gold_answer = AnswerLabel::from_string(j.at("gold").get<std::string>());
  for (const json& cj : j.at("choices"))
    q.choice_set.emplace_back(cj.at("label").get<std::string>().at(0),
                              cj.at("text").get<std::string>());
  return q;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << "fnv1a:" << std::hex << h;
  return os.str();
}

CollectOutcome cmd_collect(const RunConfig& c) {
  validate_config(c);
  const std::string started = iso_now();
  fs::path out(c.out_dir);
  fs::create_directories(out / "traces");
  fs::create_directories(out / "trajectories");
  fs::create_directories(out / "reports");

  auto backend = make_backend(c);
  auto questions = load_questions(c);

  if (c.backend_kind == "synthetic")
    write_file(out / "world.json", world_to_json(build_world(c)));
  {
    std::string lines;
    for (const auto& q : questions)
      lines += question_to_json(q) + "\n";
    write_file(out / "questions.jsonl", lines);
  }

  CollectOutcome outcome;
  outcome.questions = questions.size();
  bool truncated = false;
  for (const auto& q : questions) {
    for (std::size_t i = 0; i < c.m_trajectories && !truncated; ++i) {
      fs::path traj_path = out / "trajectories" / pair_name(q.id, i);
      if (fs::exists(traj_path)) {
        ++outcome.skipped;
        continue;
      }
      auto trace = generate_single_trajectory(*backend, q, i, c.decoding, c.seed, c.estimation);
      if (!trace) {
        ++outcome.failed;
        continue;
      }
      auto traj = evaluate_trace(*backend, q, *trace, c.seed, c.estimation);
      write_file(out / "traces" / pair_name(q.id, i), trace_to_json(*trace) + "\n");
      write_file(traj_path, trajectory_to_json(traj) + "\n");
      ++outcome.completed;
      if (c.limit_pairs && outcome.completed >= *c.limit_pairs)
        truncated = true;
    }
    if (truncated)
      break;
  }

  if (outcome.completed + outcome.skipped == 0)
    outcome.status = RunStatus::failed;
  else if (outcome.failed > 0 || truncated)
    outcome.status = RunStatus::partial;

  json files = json::object();
  for (const char* sub : {"traces", "trajectories"})
    for (const fs::path& p : sorted_files(out / sub))
      files[sub + std::string("/") + p.filename().string()] = content_hash(read_file(p));
  for (const char* name : {"questions.jsonl", "world.json"})
    if (fs::exists(out / name))
      files[name] = content_hash(read_file(out / name));

  json manifest{{"schema", "manifest.v1"},
                {"config", config_to_json(c)},
                {"started_at", started},
                {"finished_at", iso_now()},
                {"resumed", outcome.skipped > 0},
                {"counts",
                 {{"questions", outcome.questions},
                  {"completed", outcome.completed},
                  {"skipped", outcome.skipped},
                  {"failed", outcome.failed}}},
                {"files", files}};
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

namespace {

json rho_rows_to_json(const std::vector<AlignmentTableRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"model_tag", r.group.model_tag},
                   {"dataset_tag", r.group.dataset_tag},
                   {"training_stage", r.group.training_stage},
                   {"mean_rho", round6(r.mean_rho)},
                   {"n_defined", r.n_defined},
                   {"n_undefined", r.n_undefined},
                   {"ci_lo", round6(r.ci_lo)},
                   {"ci_hi", round6(r.ci_hi)}});
  return out;
}

} // namespace

AnalyzeOutcome cmd_analyze(const RunConfig& c) {
  fs::path out(c.out_dir);
  auto trajectories = load_trajectories(out / "trajectories");
  if (trajectories.empty())
    throw ValidationError("no trajectories under '" + (out / "trajectories").string() +
                          "'; run collect first");
  fs::create_directories(out / "reports");

  std::vector<LabeledAlignment> labeled;
  std::vector<std::pair<std::string, SaturationReport>> saturation;
  for (const auto& t : trajectories) {
    labeled.push_back({c.labels, sia_alignment(t)});
    saturation.emplace_back(t.question_id + "/" + std::to_string(t.trajectory_index),
                            saturation_detect(t));
  }
  auto rho_rows = aggregate_alignment(labeled, 1000, 0.95, c.seed);
  auto gain = gain_curve(trajectories, default_grid(), 0.05, 1000, 0.95, c.seed);
  auto auc = auc_curve(trajectories, default_grid(), 1000, 0.95, c.seed);

  write_file(out / "reports" / "rho_table.csv", rho_table_csv(rho_rows));
  write_file(out / "reports" / "gain_curve.csv", gain_curve_csv(gain));
  write_file(out / "reports" / "auc_curve.csv", auc_curve_csv(auc));
  write_file(out / "reports" / "saturation.csv", saturation_csv(saturation));

  json gain_json = json::array();
  auto emit_gain = [&gain_json](const char* cls, const std::vector<GainCurvePoint>& pts) {
    for (const auto& p : pts)
      gain_json.push_back({{"class", cls},
                           {"s", round6(p.s)},
                           {"mean_gain", round6(p.mean_gain)},
                           {"ci_lo", round6(p.ci_lo)},
                           {"ci_hi", round6(p.ci_hi)},
                           {"n", p.n}});
  };
  emit_gain("correct", gain.correct);
  emit_gain("incorrect", gain.incorrect);
  json auc_json = json::array();
  for (const auto& p : auc)
    auc_json.push_back({{"s", round6(p.s)},
                        {"auc", p.auc ? json(round6(*p.auc)) : json(nullptr)},
                        {"n_correct", p.n_correct},
                        {"n_incorrect", p.n_incorrect},
                        {"ci_lo", round6(p.ci_lo)},
                        {"ci_hi", round6(p.ci_hi)}});
  json sat_json = json::array();
  for (const auto& [id, r] : saturation)
    sat_json.push_back({{"trace_id", id},
                        {"plateau_detected", r.plateau_detected},
                        {"onset_checkpoint", r.onset_checkpoint},
                        {"plateau_level", round6(r.plateau_level)},
                        {"rebound_detected", r.rebound_detected},
                        {"insufficient_checkpoints", r.insufficient_checkpoints}});

  json report{{"schema", "report.v1"},
              {"group",
               {{"model_tag", c.labels.model_tag},
                {"dataset_tag", c.labels.dataset_tag},
                {"training_stage", c.labels.training_stage}}},
              {"counts",
               {{"trajectories", trajectories.size()}, {"gain_excluded", gain.excluded}}},
              {"rho_table", rho_rows_to_json(rho_rows)},
              {"gain_curve", gain_json},
              {"auc_curve", auc_json},
              {"saturation", sat_json}};
  write_file(out / "reports" / "report.json", report.dump(2) + "\n");

  AnalyzeOutcome outcome;
  outcome.trajectories = trajectories.size();
  return outcome;
}

AblateOutcome cmd_ablate(const RunConfig& c, const std::string& kind) {
  if (kind != "shuffle" && kind != "mc_fidelity")
    throw ValidationError("ablate: unknown kind '" + kind + "' (shuffle or mc_fidelity)");
  fs::path out(c.out_dir);
  if (!fs::exists(out / "questions.jsonl") || sorted_files(out / "traces").empty())
    throw ValidationError("no collected traces under '" + c.out_dir + "'; run collect first");

  std::map<std::string, QuestionInstance> questions;
  {
    std::istringstream in(read_file(out / "questions.jsonl"));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) {
        auto q = question_from_json(line);
        questions[q.id] = q;
      }
  }
  auto originals = load_trajectories(out / "trajectories");
  if (originals.empty())
    throw ValidationError("no trajectories under '" + c.out_dir + "'; run collect first");
  auto backend = make_backend(c);

  std::vector<EntropyTrajectory> ablated;
  for (const fs::path& p : sorted_files(out / "traces")) {
    TraceRecord trace = trace_from_json(read_file(p));
    const QuestionInstance& q = questions.at(trace.question_id);
    if (kind == "shuffle") {
      ablated.push_back(evaluate_shuffled_trace(*backend, q, trace, c.seed, c.estimation));
    } else {
      // coarse-estimator preset: stride 4, 32 rollouts
      EstimationOptions coarse = c.estimation;
      coarse.n_rollouts = 32;
      coarse.stride = 4;
      TraceRecord replanned = trace;
      replanned.checkpoint_positions = plan_checkpoints(trace.tokens.size(), 4).positions;
      ablated.push_back(evaluate_trace(*backend, q, replanned, c.seed, coarse));
    }
  }

  auto orig_rho = mean_rho(originals);
  auto abl_rho = mean_rho(ablated);
  if (!orig_rho || !abl_rho)
    throw ValidationError("ablate: alignment undefined on every trajectory");

  AblateOutcome outcome;
  outcome.original_mean_rho = *orig_rho;
  outcome.ablated_mean_rho = *abl_rho;
  outcome.n = ablated.size();

  fs::create_directories(out / "reports");
  if (kind == "shuffle") {
    std::vector<ShuffleAblationRow> rows{
        {c.labels, *orig_rho, *abl_rho, ablated.size()}};
    write_file(out / "reports" / "shuffle_ablation.csv", shuffle_ablation_csv(rows));
  }
  json report{{"schema", "report.v1"},
              {"kind", "ablation/" + kind},
              {"group",
               {{"model_tag", c.labels.model_tag},
                {"dataset_tag", c.labels.dataset_tag},
                {"training_stage", c.labels.training_stage}}},
              {"original_mean_rho", round6(*orig_rho)},
              {"ablated_mean_rho", round6(*abl_rho)},
              {"delta", round6(*abl_rho - *orig_rho)},
              {"n", ablated.size()}};
  write_file(out / "reports" / ("ablate_" + kind + ".json"), report.dump(2) + "\n");
  return outcome;
}

// --- verify -----------------------------------------------------------------

namespace {

std::vector<double> random_pmf(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> m(n);
  double total = 0;
  for (double& x : m) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = -std::log(1.0 - u) + 1e-12;
    total += x;
  }
  for (double& x : m)
    x /= total;
  return m;
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

} // namespace

bool cmd_verify(const VerifyOptions& opts, std::ostream& os) {
  std::mt19937_64 rng(opts.seed);
  std::vector<Check> checks;

  {
    // telescoping and KL chain identities on random enumerated worlds
    double max_tel = 0, max_chain = 0, max_xent = 0;
    for (std::size_t t = 0; t < opts.trials; ++t) {
      WorldSizes sizes{2, 2, 3};
      std::size_t horizon = 2;
      ExactJoint w(sizes, horizon, random_pmf(2 * 4 * 3, rng));
      ExactJoint v(sizes, horizon, random_pmf(2 * 4 * 3, rng));
      auto full = exact_prefix_quantities(w, horizon);
      double lhs = full.h_a_given_q - full.info;
      max_tel = std::max(max_tel, std::fabs(lhs - full.h_a_given_qc));
      double cmi_sum = 0;
      for (double x : full.per_step_cmi)
        cmi_sum += x;
      max_tel = std::max(max_tel, std::fabs(cmi_sum - full.info));
      auto chain = kl_chain_decomposition(w.table(), v.table(), "Q", w.prefix_axes(horizon), "A");
      max_chain = std::max(max_chain, std::fabs(chain.joint_kl - chain.marginal_kl -
                                                chain.expected_conditional_kl));
      auto ce = cross_entropy_decomposition(w.table(), v.table());
      max_xent = std::max(max_xent, std::fabs(ce.cross_entropy - ce.entropy_r - ce.kl));
    }
    checks.push_back({"identity.telescoping", max_tel < 1e-12,
                      "max_residual=" + std::to_string(max_tel)});
    checks.push_back({"identity.kl_chain", max_chain < 1e-12,
                      "max_residual=" + std::to_string(max_chain)});
    checks.push_back({"identity.cross_entropy", max_xent < 1e-12,
                      "max_residual=" + std::to_string(max_xent)});
  }

  {
    // Fano dominance on aligned worlds, |A| in {3,4,5}
    bool ok = true;
    double min_margin = kInf;
    for (std::size_t a_size : {3, 4, 5}) {
      auto w = generate_aligned_world(opts.seed + a_size, {2, 3, a_size}, 3, 0.6);
      for (std::size_t k = 0; k <= 3; ++k) {
        auto q = exact_prefix_quantities(w, k);
        double bound = fano_error_lower_bound(q.h_a_given_qc, a_size);
        double margin = bayes_error(w, k) - bound;
        min_margin = std::min(min_margin, margin);
        if (margin < -1e-12)
          ok = false;
      }
    }
    checks.push_back({"bound.fano", ok, "min_margin=" + std::to_string(min_margin)});
  }

  {
    // Pinsker and entropy-continuity dominance on random pairs
    bool ok = true;
    double worst = kInf;
    for (std::size_t t = 0; t < 1000; ++t) {
      ProbDist p(random_pmf(5, rng)), q(random_pmf(5, rng));
      double kl = kl_divergence(p, q);
      double slack_tv = pinsker_tv_bound(kl) - total_variation(p, q);
      double bound = entropy_continuity_bound(kl, 5);
      double slack_h = bound - std::fabs(entropy(p) - entropy(q));
      worst = std::min({worst, slack_tv, std::isfinite(bound) ? slack_h : kInf});
      if (slack_tv < -1e-12 || (std::isfinite(bound) && slack_h < -1e-12))
        ok = false;
    }
    checks.push_back({"bound.continuity", ok, "min_slack=" + std::to_string(worst)});
  }

  {
    // transfer: half-epsilon criterion at n = 1e5
    bool ok = true;
    for (std::uint64_t s = 0; s < 2; ++s) {
      auto truth = generate_aligned_world(opts.seed + 11 + s, {2, 3, 4}, 3, 0.6);
      auto samples = sample_sequences(truth, 100000, opts.seed + 101 + s);
      auto model = mle_fit(samples, truth.sizes(), truth.horizon(), 0.5);
      for (std::size_t k = 1; k <= truth.horizon(); ++k) {
        auto rep = transfer_check(truth, model, k);
        if (!rep.half_epsilon_satisfied)
          ok = false;
        if (rep.bound_valid && !rep.gap_within_bound)
          ok = false;
      }
    }
    checks.push_back({"bound.transfer", ok, "n=100000 alpha=0.5"});
  }

  bool all = true;
  for (const Check& c : checks) {
    os << (c.pass ? "PASS" : "FAIL") << " " << c.name << " " << c.detail << "\n";
    all = all && c.pass;
  }
  return all;
}

std::string cmd_report(const std::vector<std::string>& report_paths, const std::string& format) {
  if (format != "csv" && format != "json")
    throw ValidationError("report: format must be csv or json");
  if (report_paths.empty())
    throw ValidationError("report: no report files given");
  std::map<GroupLabels, AlignmentTableRow> merged;
  for (const std::string& path : report_paths) {
    json j = json::parse(read_file(path));
    if (j.value("schema", "") != "report.v1")
      throw ValidationError(path + ": expected report.v1");
    if (!j.contains("rho_table"))
      continue; // ablation reports carry no per-group table
    for (const json& r : j["rho_table"]) {
      GroupLabels g{r.at("model_tag").get<std::string>(),
                    r.at("dataset_tag").get<std::string>(),
                    r.at("training_stage").get<std::string>()};
      auto& row = merged[g];
      std::size_t n_new = r.at("n_defined").get<std::size_t>();
      double mean_new = r.at("mean_rho").get<double>();
      if (row.n_defined == 0) {
        row.group = g;
        row.ci_lo = r.at("ci_lo").get<double>();
        row.ci_hi = r.at("ci_hi").get<double>();
        row.mean_rho = mean_new;
        row.n_defined = n_new;
      } else {
        double total = static_cast<double>(row.n_defined + n_new);
        row.mean_rho = (row.mean_rho * static_cast<double>(row.n_defined) +
                        mean_new * static_cast<double>(n_new)) /
                       total;
        row.n_defined += n_new;
        row.ci_lo = std::min(row.ci_lo, r.at("ci_lo").get<double>());
        row.ci_hi = std::max(row.ci_hi, r.at("ci_hi").get<double>());
      }
      row.n_undefined += r.at("n_undefined").get<std::size_t>();
    }
  }
  std::vector<AlignmentTableRow> rows;
  for (const auto& [g, row] : merged)
    rows.push_back(row);
  if (format == "csv")
    return rho_table_csv(rows);
  return rho_rows_to_json(rows).dump(2) + "\n";
}

} // namespace sia

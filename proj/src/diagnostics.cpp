#include "sia/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace sia {

std::string degenerate_reason_to_string(DegenerateReason r) {
  switch (r) {
  case DegenerateReason::none:
    return "none";
  case DegenerateReason::constant_entropy:
    return "constant_entropy";
  case DegenerateReason::constant_surprisal:
    return "constant_surprisal";
  case DegenerateReason::too_few_points:
    return "too_few_points";
  }
  return "?";
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]])
      ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t)
      ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

struct PearsonOutcome {
  std::optional<double> rho;
  DegenerateReason reason = DegenerateReason::none;
};

PearsonOutcome pearson(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0)
    return {std::nullopt, DegenerateReason::constant_entropy};
  if (syy <= 0.0)
    return {std::nullopt, DegenerateReason::constant_surprisal};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), DegenerateReason::none};
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  double idx = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::string fmt6(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << v;
  return os.str();
}

} // namespace

AlignmentResult sia_alignment(const EntropyTrajectory& traj, CorrelationKind kind) {
  AlignmentResult out;
  out.question_id = traj.question_id;
  out.trajectory_index = traj.trajectory_index;
  std::vector<double> h, s;
  for (const CheckpointEstimate& c : traj.checkpoints) {
    if (std::isfinite(c.entropy_nats) && std::isfinite(c.gold_surprisal_nats)) {
      h.push_back(c.entropy_nats);
      s.push_back(c.gold_surprisal_nats);
    }
  }
  out.n_checkpoints_used = h.size();
  out.excluded_pairs = traj.checkpoints.size() - h.size();
  if (h.size() < 3) {
    out.degenerate_reason = DegenerateReason::too_few_points;
    return out;
  }
  if (kind == CorrelationKind::spearman) {
    h = average_ranks(h);
    s = average_ranks(s);
  }
  auto [rho, reason] = pearson(h, s);
  out.rho = rho;
  out.degenerate_reason = reason;
  return out;
}

std::vector<AlignmentTableRow> aggregate_alignment(const std::vector<LabeledAlignment>& results,
                                                   std::size_t bootstrap_b, double level,
                                                   std::uint64_t seed) {
  std::map<GroupLabels, std::pair<std::vector<double>, std::size_t>> groups;
  for (const LabeledAlignment& r : results) {
    auto& slot = groups[r.group];
    if (r.result.rho)
      slot.first.push_back(*r.result.rho);
    else
      ++slot.second;
  }
  std::vector<AlignmentTableRow> rows;
  for (const auto& [group, slot] : groups) {
    const auto& [rhos, undefined] = slot;
    if (rhos.empty())
      continue; // nothing defined to report for this group
    AlignmentTableRow row;
    row.group = group;
    row.n_defined = rhos.size();
    row.n_undefined = undefined;
    row.mean_rho =
        std::accumulate(rhos.begin(), rhos.end(), 0.0) / static_cast<double>(rhos.size());
    std::uint64_t group_seed =
        checkpoint_seed(seed, group.model_tag + "/" + group.dataset_tag, 0, rows.size());
    std::tie(row.ci_lo, row.ci_hi) = bootstrap_ci(rhos, bootstrap_b, level, group_seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> mean_rho(const std::vector<EntropyTrajectory>& trajectories,
                               CorrelationKind kind) {
  double sum = 0;
  std::size_t n = 0;
  for (const EntropyTrajectory& t : trajectories) {
    auto r = sia_alignment(t, kind);
    if (r.rho) {
      sum += *r.rho;
      ++n;
    }
  }
  if (n == 0)
    return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i)
    grid.push_back(static_cast<double>(i) / 20.0);
  return grid;
}

double entropy_at(const EntropyTrajectory& traj, double s) {
  if (traj.checkpoints.empty())
    throw ValidationError("entropy_at: empty trajectory");
  s = std::clamp(s, 0.0, 1.0);
  const auto& cps = traj.checkpoints;
  double target = s * static_cast<double>(cps.back().k);
  if (cps.size() == 1)
    return cps.front().entropy_nats;
  for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
    double k0 = static_cast<double>(cps[i].k), k1 = static_cast<double>(cps[i + 1].k);
    if (target <= k1) {
      double w = k1 > k0 ? (target - k0) / (k1 - k0) : 0.0;
      return cps[i].entropy_nats * (1.0 - w) + cps[i + 1].entropy_nats * w;
    }
  }
  return cps.back().entropy_nats;
}

GainCurve gain_curve(const std::vector<EntropyTrajectory>& trajectories,
                     const std::vector<double>& grid, double min_denominator,
                     std::size_t bootstrap_b, double level, std::uint64_t seed) {
  GainCurve out;
  // per-class, per-grid-point normalized gains across trajectories
  std::vector<std::vector<double>> values[2];
  values[0].resize(grid.size());
  values[1].resize(grid.size());
  for (const EntropyTrajectory& t : trajectories) {
    if (t.checkpoints.empty())
      continue;
    double h0 = t.checkpoints.front().entropy_nats;
    double denom = h0 - t.checkpoints.back().entropy_nats;
    if (std::fabs(denom) < min_denominator) {
      ++out.excluded;
      continue;
    }
    auto& dest = values[t.is_correct ? 1 : 0];
    for (std::size_t i = 0; i < grid.size(); ++i)
      dest[i].push_back((h0 - entropy_at(t, grid[i])) / denom);
  }
  for (int cls = 0; cls < 2; ++cls) {
    auto& curve = cls ? out.correct : out.incorrect;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& vals = values[cls][i];
      if (vals.empty())
        continue;
      GainCurvePoint p;
      p.s = grid[i];
      p.n = vals.size();
      p.mean_gain =
          std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
      std::tie(p.ci_lo, p.ci_hi) =
          bootstrap_ci(vals, bootstrap_b, level, checkpoint_seed(seed, "gain", cls, i));
      curve.push_back(p);
    }
  }
  return out;
}

namespace {

std::optional<double> mann_whitney_auc(const std::vector<double>& scores,
                                       const std::vector<bool>& correct) {
  std::size_t n1 = 0, n0 = 0;
  for (bool c : correct)
    (c ? n1 : n0) += 1;
  if (n1 == 0 || n0 == 0)
    return std::nullopt;
  std::vector<double> ranks = average_ranks(scores);
  double rank_sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (correct[i])
      rank_sum += ranks[i];
  double u = rank_sum - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

} // namespace

AucPoint auc_at_prefix(const std::vector<EntropyTrajectory>& trajectories, double s,
                       std::size_t bootstrap_b, double level, std::uint64_t seed) {
  AucPoint out;
  out.s = s;
  std::vector<double> scores;
  std::vector<bool> correct;
  for (const EntropyTrajectory& t : trajectories) {
    if (t.checkpoints.empty())
      continue;
    scores.push_back(-entropy_at(t, s)); // lower entropy predicts correct
    correct.push_back(t.is_correct);
    (t.is_correct ? out.n_correct : out.n_incorrect) += 1;
  }
  out.auc = mann_whitney_auc(scores, correct);
  if (out.auc && bootstrap_b > 0) {
    std::mt19937_64 rng(seed);
    std::vector<double> resampled;
    for (std::size_t b = 0; b < bootstrap_b; ++b) {
      std::vector<double> sc(scores.size());
      std::vector<bool> co(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        std::size_t j = rng() % scores.size();
        sc[i] = scores[j];
        co[i] = correct[j];
      }
      if (auto a = mann_whitney_auc(sc, co))
        resampled.push_back(*a);
    }
    if (!resampled.empty()) {
      std::sort(resampled.begin(), resampled.end());
      out.ci_lo = quantile_sorted(resampled, (1.0 - level) / 2.0);
      out.ci_hi = quantile_sorted(resampled, 1.0 - (1.0 - level) / 2.0);
    }
  } else if (out.auc) {
    out.ci_lo = out.ci_hi = *out.auc;
  }
  return out;
}

std::vector<AucPoint> auc_curve(const std::vector<EntropyTrajectory>& trajectories,
                                const std::vector<double>& grid, std::size_t bootstrap_b,
                                double level, std::uint64_t seed) {
  std::vector<AucPoint> out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.push_back(auc_at_prefix(trajectories, grid[i], bootstrap_b, level,
                                checkpoint_seed(seed, "auc", 0, i)));
  return out;
}

SaturationReport saturation_detect(const EntropyTrajectory& traj, double tau,
                                   std::size_t window) {
  SaturationReport out;
  const auto& cps = traj.checkpoints;
  if (window < 1)
    throw ValidationError("saturation_detect: window must be >= 1");
  if (cps.size() < window + 1) {
    out.insufficient_checkpoints = true;
    return out;
  }
  for (std::size_t i = 0; i + window < cps.size(); ++i) {
    bool flat = true;
    for (std::size_t j = i; j < i + window; ++j)
      if (std::fabs(cps[j + 1].entropy_nats - cps[j].entropy_nats) >= tau)
        flat = false;
    if (!flat)
      continue;
    out.plateau_detected = true;
    out.onset_checkpoint = cps[i].k;
    out.plateau_level = cps[i].entropy_nats;
    for (std::size_t j = i + window; j < cps.size(); ++j)
      if (cps[j].entropy_nats > out.plateau_level + 2.0 * tau)
        out.rebound_detected = true;
    break;
  }
  return out;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::size_t b,
                                       double level, std::uint64_t seed) {
  if (values.empty())
    throw ValidationError("bootstrap_ci: no values");
  if (values.size() < 2)
    return {values[0], values[0]};
  std::mt19937_64 rng(seed);
  std::vector<double> means;
  means.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < values.size(); ++j)
      sum += values[rng() % values.size()];
    means.push_back(sum / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  return {quantile_sorted(means, (1.0 - level) / 2.0),
          quantile_sorted(means, 1.0 - (1.0 - level) / 2.0)};
}

EntropyTrajectory evaluate_shuffled_trace(CompletionBackend& backend,
                                          const QuestionInstance& question,
                                          const TraceRecord& trace, std::uint64_t run_seed,
                                          const EstimationOptions& opts) {
  EntropyTrajectory traj;
  traj.question_id = trace.question_id;
  traj.trajectory_index = trace.trajectory_index;
  traj.mc_samples = opts.n_rollouts;
  traj.alpha_entropy = opts.alpha_entropy;
  traj.alpha_surprisal = opts.alpha_surprisal;
  traj.is_correct = trace.is_correct;
  for (std::size_t k : trace.checkpoint_positions) {
    auto prefix = shuffle_prefix(
        trace, k,
        checkpoint_seed(run_seed, trace.question_id + "#shuffle", trace.trajectory_index, k));
    std::uint64_t est_seed = checkpoint_seed(run_seed, trace.question_id + "#shuffle-rollout",
                                             trace.trajectory_index, k);
    traj.checkpoints.push_back(estimate_conditional_entropy(backend, question, prefix, k,
                                                            trace.decoding, opts, est_seed));
  }
  return traj;
}

// --- CSV --------------------------------------------------------------------

std::string rho_table_csv(const std::vector<AlignmentTableRow>& rows) {
  std::string out = "model_tag,dataset_tag,training_stage,mean_rho,n_defined,n_undefined,"
                    "ci_lo,ci_hi\n";
  for (const auto& r : rows)
    out += r.group.model_tag + "," + r.group.dataset_tag + "," + r.group.training_stage + "," +
           fmt6(r.mean_rho) + "," + std::to_string(r.n_defined) + "," +
           std::to_string(r.n_undefined) + "," + fmt6(r.ci_lo) + "," + fmt6(r.ci_hi) + "\n";
  return out;
}

std::string gain_curve_csv(const GainCurve& curve) {
  std::string out = "class,s,mean_gain,ci_lo,ci_hi,n\n";
  auto emit = [&out](const char* cls, const std::vector<GainCurvePoint>& pts) {
    for (const auto& p : pts)
      out += std::string(cls) + "," + fmt6(p.s) + "," + fmt6(p.mean_gain) + "," +
             fmt6(p.ci_lo) + "," + fmt6(p.ci_hi) + "," + std::to_string(p.n) + "\n";
  };
  emit("correct", curve.correct);
  emit("incorrect", curve.incorrect);
  return out;
}

std::string auc_curve_csv(const std::vector<AucPoint>& points) {
  std::string out = "s,auc,n_correct,n_incorrect,ci_lo,ci_hi\n";
  for (const auto& p : points)
    out += fmt6(p.s) + "," + (p.auc ? fmt6(*p.auc) : std::string()) + "," +
           std::to_string(p.n_correct) + "," + std::to_string(p.n_incorrect) + "," +
           fmt6(p.ci_lo) + "," + fmt6(p.ci_hi) + "\n";
  return out;
}

std::string saturation_csv(const std::vector<std::pair<std::string, SaturationReport>>& rows) {
  std::string out = "trace_id,plateau_detected,onset_checkpoint,plateau_level,"
                    "rebound_detected,insufficient_checkpoints\n";
  for (const auto& [id, r] : rows)
    out += id + "," + (r.plateau_detected ? "1" : "0") + "," +
           std::to_string(r.onset_checkpoint) + "," + fmt6(r.plateau_level) + "," +
           (r.rebound_detected ? "1" : "0") + "," + (r.insufficient_checkpoints ? "1" : "0") +
           "\n";
  return out;
}

std::string shuffle_ablation_csv(const std::vector<ShuffleAblationRow>& rows) {
  std::string out =
      "model_tag,dataset_tag,training_stage,original_mean_rho,shuffled_mean_rho,n\n";
  for (const auto& r : rows)
    out += r.group.model_tag + "," + r.group.dataset_tag + "," + r.group.training_stage + "," +
           fmt6(r.original_mean_rho) + "," + fmt6(r.shuffled_mean_rho) + "," +
           std::to_string(r.n) + "\n";
  return out;
}

} // namespace sia

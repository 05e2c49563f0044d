#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sia/infotheory.hpp"
#include "sia/prob.hpp"

namespace sia {

class GenerationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct WorldSizes {
  std::size_t q_size = 2;
  std::size_t c_size = 2;
  std::size_t a_size = 4;
};

// Ground-truth joint over (Q, C_1..C_K, A) on small finite alphabets.
// Axis names are "Q", "C1".."CK", "A".
class ExactJoint {
public:
  static constexpr std::size_t kMaxHorizon = 6;

  ExactJoint(WorldSizes sizes, std::size_t horizon, std::vector<double> mass);

  const JointTable& table() const { return table_; }
  const WorldSizes& sizes() const { return sizes_; }
  std::size_t horizon() const { return horizon_; }

  // "C1".."Ck"
  std::vector<std::string> prefix_axes(std::size_t k) const;

  // p(A | q, c_1..c_k); prefix may be shorter than the horizon.
  ProbDist answer_posterior(std::size_t q, const std::vector<std::size_t>& prefix) const;

  // p(C_1..C_K | q, a): used to sample coupling-consistent traces.
  // Flattened over the c^K prefix space.
  std::vector<double> trace_conditional(std::size_t q, std::size_t a) const;

  // marginal p(Q, A) flattened q-major
  std::vector<double> qa_marginal() const;
  std::vector<double> q_marginal() const;

private:
  WorldSizes sizes_;
  std::size_t horizon_ = 0;
  JointTable table_;
};

struct PrefixQuantities {
  double h_a_given_q = 0;
  double h_a_given_qc = 0;
  double info = 0;                  // I(A; C_<=k | Q)
  std::vector<double> per_step_cmi; // I(A; C_t | Q, C_<t), t = 1..k
};

PrefixQuantities exact_prefix_quantities(const ExactJoint& j, std::size_t k);

// Bayes (MAP) misclassification probability from (Q, C_1..C_k).
double bayes_error(const ExactJoint& j, std::size_t k);

struct SampledSequence {
  std::size_t q = 0;
  std::vector<std::size_t> c;
  std::size_t a = 0;
};

std::vector<SampledSequence> sample_sequences(const ExactJoint& j, std::size_t n,
                                              std::uint64_t seed);

// Tabular autoregressive model: one conditional table per trace position plus
// an answer head, all rows explicitly normalized.
struct TabularAutoregressiveModel {
  WorldSizes sizes;
  std::size_t horizon = 0;
  double smoothing_alpha = 0;

  // step_rows[k] holds (q_size * c_size^k) rows of c_size entries:
  // p(C_{k+1} | q, c_1..c_k)
  std::vector<std::vector<double>> step_rows;
  // (q_size * c_size^K) rows of a_size entries: p(A | q, c_1..c_K)
  std::vector<double> answer_rows;

  std::size_t prefix_flat(const std::vector<std::size_t>& prefix) const;
  const double* step_row(std::size_t k, std::size_t q, std::size_t prefix_flat_idx) const;
  const double* answer_row(std::size_t q, std::size_t full_prefix_flat) const;

  // p(A | q, c_1..c_k) marginalized over trace continuations.
  ProbDist internal_posterior(std::size_t q, const std::vector<std::size_t>& prefix) const;

  // Full joint induced by the model with an externally supplied Q marginal.
  ExactJoint induced_joint(const std::vector<double>& q_marginal) const;
};

// Counting MLE with additive smoothing. alpha = 0 leaves never-observed
// contexts at uniform.
TabularAutoregressiveModel mle_fit(const std::vector<SampledSequence>& samples,
                                   WorldSizes sizes, std::size_t horizon, double alpha);

// The autoregressive factorization of an exact joint (zero-mass contexts get
// uniform rows). induced_joint(j.q_marginal()) reproduces j.
TabularAutoregressiveModel exact_conditionals(const ExactJoint& j);

// Synthetic world in which every prefix carries answer-relevant information:
// each step passes A through a per-position scrambled noisy channel, so the
// decoded evidence depends on token position (shuffling prefixes destroys it).
// SIA is verified by enumeration at construction.
ExactJoint generate_aligned_world(std::uint64_t seed, WorldSizes sizes, std::size_t horizon,
                                  double lambda);

struct MisalignedWorld {
  ExactJoint truth; // coupling: traces independent of A given Q
  TabularAutoregressiveModel hallucinator;
  std::vector<double> internal_entropy_by_k; // model posterior entropy, k = 0..K
};

// Hallucination regime: the model's internal answer posterior sharpens along
// its own traces while the coupled prefix MI about the true answer is zero.
MisalignedWorld generate_misaligned_world(std::uint64_t seed, WorldSizes sizes,
                                          std::size_t horizon);

struct TransferCheckReport {
  std::size_t k = 0;
  double i_r = 0;
  double i_model = 0;
  double kl_joint = 0;         // delta
  double continuity_bound = 0; // G_k(delta)
  double epsilon_k = 0;
  bool bound_valid = false;
  bool gap_within_bound = false;
  bool half_epsilon_satisfied = false;
};

TransferCheckReport transfer_check(const ExactJoint& r, const TabularAutoregressiveModel& model,
                                   std::size_t k);

// --- world.v1 serialization -------------------------------------------------

struct WorldBundle {
  std::string kind; // "aligned" | "misaligned"
  std::uint64_t seed = 0;
  double lambda = 0; // aligned generator parameter
  WorldSizes sizes;
  std::size_t horizon = 0;
  ExactJoint truth;
  std::optional<TabularAutoregressiveModel> model; // present for misaligned worlds

  static WorldBundle aligned(std::uint64_t seed, WorldSizes sizes, std::size_t horizon,
                             double lambda);
  static WorldBundle misaligned(std::uint64_t seed, WorldSizes sizes, std::size_t horizon);
};

std::string world_to_json(const WorldBundle& w);
WorldBundle world_from_json(const std::string& text);

} // namespace sia

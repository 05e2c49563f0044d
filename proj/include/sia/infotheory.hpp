#pragma once

#include <limits>
#include <vector>

#include "sia/prob.hpp"

namespace sia {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Shannon entropy in nats, 0*log 0 = 0.
double entropy(const ProbDist& d);
double entropy(const JointTable& j);
double entropy(const JointTable& j, const std::vector<std::string>& axes);

// H(target | given) = H(given, target) - H(given). Empty `given` gives the
// marginal entropy of `target`.
double conditional_entropy(const JointTable& j, const std::string& target_axis,
                           const std::vector<std::string>& given_axes);
double conditional_entropy(const JointTable& j, const std::vector<std::string>& target_axes,
                           const std::vector<std::string>& given_axes);

double mutual_information(const JointTable& j, const std::string& a_axis,
                          const std::string& b_axis);

// I(A ; B | G) = H(A|G) - H(A|G,B). Axis groups must be disjoint.
double conditional_mutual_information(const JointTable& j, const std::string& a_axis,
                                      const std::vector<std::string>& b_axes,
                                      const std::vector<std::string>& given_axes);

// Forward KL in nats; +inf when q(x)=0 < p(x).
double kl_divergence(const ProbDist& p, const ProbDist& q);
double kl_divergence(const JointTable& p, const JointTable& q);

double total_variation(const ProbDist& p, const ProbDist& q);
double total_variation(const JointTable& p, const JointTable& q);

// -log d(outcome); +inf at zero mass.
double pointwise_surprisal(const ProbDist& d, std::size_t outcome);

// Surprisal drop for `outcome` between two posteriors; NaN when both
// surprisals are infinite.
double stepwise_gain(const ProbDist& before, const ProbDist& after, std::size_t outcome);

// G_k series from a posterior sequence; element 0 is the empty-prefix
// posterior, so the returned series starts with G_0 = 0.
std::vector<double> cumulative_gain(const std::vector<ProbDist>& posteriors, std::size_t outcome);

double binary_entropy(double eps);

// Pinsker: TV <= sqrt(KL/2).
double pinsker_tv_bound(double kl);

// Fannes-Audenaert style entropy continuity under KL:
//   f_m(delta) = sqrt(delta/2) * log(m-1) + h2(sqrt(delta/2)),
// valid while sqrt(delta/2) <= 1 - 1/m, +inf outside the valid range.
double entropy_continuity_bound(double delta, std::size_t support_size);

// g_{X,Y}(delta) = f_{|X||Y|}(delta) + f_{|X|}(delta).
double cond_entropy_continuity_bound(double delta, std::size_t m_x, std::size_t m_y);

// G_k(delta) = g_{Q,A}(delta) + g_{Q x C<=k, A}(delta); m_c_prefix is the
// product alphabet size |C_1|...|C_k|.
double cmi_continuity_bound(double delta, std::size_t m_q, std::size_t m_c_prefix,
                            std::size_t m_a);

// Fano: P_e >= (H - log 2) / log(m - 1), clamped to [0, inf); requires m > 2.
double fano_error_lower_bound(double h_cond, std::size_t answer_space_size);

struct CrossEntropyDecomposition {
  double cross_entropy = 0;
  double entropy_r = 0;
  double kl = 0;
};

// H_x(r, p) = H(r) + KL(r || p).
CrossEntropyDecomposition cross_entropy_decomposition(const ProbDist& r, const ProbDist& p);
CrossEntropyDecomposition cross_entropy_decomposition(const JointTable& r, const JointTable& p);

struct KlChainDecomposition {
  double joint_kl = 0;                // E_q KL( r(C,A|q) || p(C,A|q) )
  double marginal_kl = 0;             // E_q KL( r(C|q)   || p(C|q) )
  double expected_conditional_kl = 0; // E_{q,c~r} KL( r(A|q,c) || p(A|q,c) )
};

// Chain decomposition of the conditional joint KL, averaged over r's Q
// marginal; zero-mass conditioning events contribute 0.
KlChainDecomposition kl_chain_decomposition(const JointTable& r, const JointTable& p,
                                            const std::string& q_axis,
                                            const std::vector<std::string>& prefix_axes,
                                            const std::string& a_axis);

} // namespace sia

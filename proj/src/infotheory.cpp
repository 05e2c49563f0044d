#include "sia/infotheory.hpp"

#include <cmath>

namespace sia {

namespace {

double entropy_of(const std::vector<double>& mass) {
  double h = 0.0;
  for (double m : mass)
    if (m > 0.0)
      h -= m * std::log(m);
  return h;
}

double kl_of(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0)
        return kInf;
      kl += p[i] * std::log(p[i] / q[i]);
    }
  }
  return std::max(kl, 0.0);
}

double tv_of(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

void check_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y)
        throw ValidationError("axis groups overlap on '" + x + "'");
}

} // namespace

double entropy(const ProbDist& d) { return entropy_of(d.mass()); }

double entropy(const JointTable& j) { return entropy_of(j.mass()); }

double entropy(const JointTable& j, const std::vector<std::string>& axes) {
  return entropy_of(j.marginal(axes).mass());
}

double conditional_entropy(const JointTable& j, const std::vector<std::string>& target_axes,
                           const std::vector<std::string>& given_axes) {
  check_disjoint(target_axes, given_axes);
  std::vector<std::string> both = given_axes;
  both.insert(both.end(), target_axes.begin(), target_axes.end());
  double h_both = entropy(j, both);
  double h_given = given_axes.empty() ? 0.0 : entropy(j, given_axes);
  return std::max(h_both - h_given, 0.0);
}

double conditional_entropy(const JointTable& j, const std::string& target_axis,
                           const std::vector<std::string>& given_axes) {
  return conditional_entropy(j, std::vector<std::string>{target_axis}, given_axes);
}

double mutual_information(const JointTable& j, const std::string& a_axis,
                          const std::string& b_axis) {
  if (a_axis == b_axis)
    throw ValidationError("mutual_information: identical axes");
  double h_a = entropy(j, {a_axis});
  double h_a_given_b = conditional_entropy(j, a_axis, {b_axis});
  return std::max(h_a - h_a_given_b, 0.0);
}

double conditional_mutual_information(const JointTable& j, const std::string& a_axis,
                                      const std::vector<std::string>& b_axes,
                                      const std::vector<std::string>& given_axes) {
  check_disjoint({a_axis}, b_axes);
  check_disjoint({a_axis}, given_axes);
  check_disjoint(b_axes, given_axes);
  double h_a_g = conditional_entropy(j, a_axis, given_axes);
  std::vector<std::string> gb = given_axes;
  gb.insert(gb.end(), b_axes.begin(), b_axes.end());
  double h_a_gb = conditional_entropy(j, a_axis, gb);
  return std::max(h_a_g - h_a_gb, 0.0);
}

double kl_divergence(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence: shape mismatch");
  return kl_of(p.mass(), q.mass());
}

double kl_divergence(const JointTable& p, const JointTable& q) {
  if (!p.same_shape(q))
    throw ValidationError("kl_divergence: shape mismatch");
  return kl_of(p.mass(), q.mass());
}

double total_variation(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size())
    throw ValidationError("total_variation: shape mismatch");
  return tv_of(p.mass(), q.mass());
}

double total_variation(const JointTable& p, const JointTable& q) {
  if (!p.same_shape(q))
    throw ValidationError("total_variation: shape mismatch");
  return tv_of(p.mass(), q.mass());
}

double pointwise_surprisal(const ProbDist& d, std::size_t outcome) {
  if (outcome >= d.size())
    throw ValidationError("pointwise_surprisal: outcome outside alphabet");
  double m = d[outcome];
  return m > 0.0 ? -std::log(m) : kInf;
}

double stepwise_gain(const ProbDist& before, const ProbDist& after, std::size_t outcome) {
  double hb = pointwise_surprisal(before, outcome);
  double ha = pointwise_surprisal(after, outcome);
  if (std::isinf(hb) && std::isinf(ha))
    return std::numeric_limits<double>::quiet_NaN();
  return hb - ha;
}

std::vector<double> cumulative_gain(const std::vector<ProbDist>& posteriors,
                                    std::size_t outcome) {
  if (posteriors.empty())
    throw ValidationError("cumulative_gain: need at least one posterior");
  std::vector<double> g;
  g.reserve(posteriors.size());
  g.push_back(0.0);
  double acc = 0.0;
  for (std::size_t k = 1; k < posteriors.size(); ++k) {
    acc += stepwise_gain(posteriors[k - 1], posteriors[k], outcome);
    g.push_back(acc);
  }
  return g;
}

double binary_entropy(double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw ValidationError("binary_entropy: argument outside [0,1]");
  double h = 0.0;
  if (eps > 0.0)
    h -= eps * std::log(eps);
  if (eps < 1.0)
    h -= (1.0 - eps) * std::log(1.0 - eps);
  return h;
}

double pinsker_tv_bound(double kl) {
  if (kl < 0.0)
    throw ValidationError("pinsker_tv_bound: negative KL");
  return std::sqrt(kl / 2.0);
}

double entropy_continuity_bound(double delta, std::size_t m) {
  if (delta < 0.0)
    throw ValidationError("entropy_continuity_bound: negative delta");
  if (m == 0)
    throw ValidationError("entropy_continuity_bound: empty alphabet");
  if (m == 1)
    return 0.0;
  double eps = std::sqrt(delta / 2.0);
  if (eps > 1.0 - 1.0 / static_cast<double>(m))
    return kInf; // outside the inequality's validity range
  return eps * std::log(static_cast<double>(m - 1)) + binary_entropy(eps);
}

double cond_entropy_continuity_bound(double delta, std::size_t m_x, std::size_t m_y) {
  return entropy_continuity_bound(delta, m_x * m_y) + entropy_continuity_bound(delta, m_x);
}

double cmi_continuity_bound(double delta, std::size_t m_q, std::size_t m_c_prefix,
                            std::size_t m_a) {
  return cond_entropy_continuity_bound(delta, m_q, m_a) +
         cond_entropy_continuity_bound(delta, m_q * m_c_prefix, m_a);
}

double fano_error_lower_bound(double h_cond, std::size_t m) {
  if (m <= 2)
    throw ValidationError("fano_error_lower_bound: requires |A| > 2");
  double bound = (h_cond - std::log(2.0)) / std::log(static_cast<double>(m - 1));
  return std::max(bound, 0.0);
}

namespace {

CrossEntropyDecomposition xent_of(const std::vector<double>& r, const std::vector<double>& p) {
  CrossEntropyDecomposition out;
  out.entropy_r = entropy_of(r);
  out.kl = kl_of(r, p);
  out.cross_entropy = out.entropy_r + out.kl;
  return out;
}

} // namespace

CrossEntropyDecomposition cross_entropy_decomposition(const ProbDist& r, const ProbDist& p) {
  if (r.size() != p.size())
    throw ValidationError("cross_entropy_decomposition: shape mismatch");
  return xent_of(r.mass(), p.mass());
}

CrossEntropyDecomposition cross_entropy_decomposition(const JointTable& r,
                                                      const JointTable& p) {
  if (!r.same_shape(p))
    throw ValidationError("cross_entropy_decomposition: shape mismatch");
  return xent_of(r.mass(), p.mass());
}

KlChainDecomposition kl_chain_decomposition(const JointTable& r, const JointTable& p,
                                            const std::string& q_axis,
                                            const std::vector<std::string>& prefix_axes,
                                            const std::string& a_axis) {
  if (!r.same_shape(p))
    throw ValidationError("kl_chain_decomposition: shape mismatch");
  std::vector<std::string> order{q_axis};
  order.insert(order.end(), prefix_axes.begin(), prefix_axes.end());
  order.push_back(a_axis);
  // canonical (Q, C..., A) layout: A fastest, Q slowest
  JointTable rf = r.marginal(order);
  JointTable pf = p.marginal(order);

  std::size_t m_a = rf.axes().back().size;
  std::size_t m_prefix = 1;
  for (std::size_t i = 1; i + 1 < rf.axes().size(); ++i)
    m_prefix *= rf.axes()[i].size;
  std::size_t m_q = rf.axes().front().size;

  std::vector<double> rq(m_q, 0.0), pq(m_q, 0.0);
  std::vector<double> rqc(m_q * m_prefix, 0.0), pqc(m_q * m_prefix, 0.0);
  const auto& rm = rf.mass();
  const auto& pm = pf.mass();
  for (std::size_t cell = 0; cell < rm.size(); ++cell) {
    std::size_t qc = cell / m_a;
    std::size_t q = qc / m_prefix;
    rq[q] += rm[cell];
    pq[q] += pm[cell];
    rqc[qc] += rm[cell];
    pqc[qc] += pm[cell];
  }

  KlChainDecomposition out;
  // marginal term over (C | Q)
  for (std::size_t qc = 0; qc < rqc.size(); ++qc) {
    double rv = rqc[qc];
    if (rv <= 0.0)
      continue;
    std::size_t q = qc / m_prefix;
    double r_cond = rv / rq[q];
    if (pq[q] <= 0.0 || pqc[qc] <= 0.0) {
      out.marginal_kl = kInf;
      break;
    }
    double p_cond = pqc[qc] / pq[q];
    out.marginal_kl += rv * std::log(r_cond / p_cond);
  }
  // conditional term over (A | Q, C) and the joint term
  for (std::size_t cell = 0; cell < rm.size(); ++cell) {
    double rv = rm[cell];
    if (rv <= 0.0)
      continue;
    std::size_t qc = cell / m_a;
    std::size_t q = qc / m_prefix;
    if (pm[cell] <= 0.0) {
      out.expected_conditional_kl = kInf;
      out.joint_kl = kInf;
      break;
    }
    out.expected_conditional_kl +=
        rv * std::log((rv / rqc[qc]) / (pm[cell] / pqc[qc]));
    out.joint_kl += rv * std::log((rv / rq[q]) / (pm[cell] / pq[q]));
  }
  if (std::isinf(out.marginal_kl))
    out.joint_kl = kInf;
  out.marginal_kl = std::isinf(out.marginal_kl) ? kInf : std::max(out.marginal_kl, 0.0);
  out.expected_conditional_kl =
      std::isinf(out.expected_conditional_kl) ? kInf : std::max(out.expected_conditional_kl, 0.0);
  if (!std::isinf(out.joint_kl))
    out.joint_kl = std::max(out.joint_kl, 0.0);
  return out;
}

} // namespace sia

#include "sia/oracle_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

namespace sia {

namespace {

using nlohmann::json;

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp--)
    r *= base;
  return r;
}

double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::vector<double> dirichlet1(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(std::max(next_uniform(rng), 1e-300));
    sum += x;
  }
  for (double& x : v)
    x /= sum;
  return v;
}

std::vector<std::string> axes_names(std::size_t horizon) {
  std::vector<std::string> names;
  names.push_back("Q");
  for (std::size_t k = 1; k <= horizon; ++k)
    names.push_back("C" + std::to_string(k));
  names.push_back("A");
  return names;
}

} // namespace

ExactJoint::ExactJoint(WorldSizes sizes, std::size_t horizon, std::vector<double> mass)
    : sizes_(sizes), horizon_(horizon) {
  if (horizon < 1 || horizon > kMaxHorizon)
    throw ValidationError("ExactJoint: horizon must be in [1, " +
                          std::to_string(kMaxHorizon) + "]");
  if (sizes.q_size < 1 || sizes.c_size < 2 || sizes.a_size < 2)
    throw ValidationError("ExactJoint: alphabet sizes too small");
  std::vector<Axis> axes;
  axes.push_back({"Q", sizes.q_size});
  for (std::size_t k = 1; k <= horizon; ++k)
    axes.push_back({"C" + std::to_string(k), sizes.c_size});
  axes.push_back({"A", sizes.a_size});
  table_ = JointTable(std::move(axes), std::move(mass));
}

std::vector<std::string> ExactJoint::prefix_axes(std::size_t k) const {
  if (k > horizon_)
    throw ValidationError("ExactJoint: prefix length beyond horizon");
  std::vector<std::string> names;
  for (std::size_t t = 1; t <= k; ++t)
    names.push_back("C" + std::to_string(t));
  return names;
}

ProbDist ExactJoint::answer_posterior(std::size_t q,
                                      const std::vector<std::size_t>& prefix) const {
  std::size_t k = prefix.size();
  if (k > horizon_)
    throw ValidationError("ExactJoint: prefix too long");
  std::size_t c_tail = ipow(sizes_.c_size, horizon_ - k);
  std::size_t prefix_flat = 0;
  for (std::size_t v : prefix) {
    if (v >= sizes_.c_size)
      throw ValidationError("ExactJoint: prefix symbol out of range");
    prefix_flat = prefix_flat * sizes_.c_size + v;
  }
  const auto& m = table_.mass();
  std::vector<double> post(sizes_.a_size, 0.0);
  double total = 0.0;
  std::size_t base = (q * ipow(sizes_.c_size, horizon_) + prefix_flat * c_tail) * sizes_.a_size;
  for (std::size_t tail = 0; tail < c_tail; ++tail) {
    std::size_t cell = base + tail * sizes_.a_size;
    for (std::size_t a = 0; a < sizes_.a_size; ++a) {
      post[a] += m[cell + a];
      total += m[cell + a];
    }
  }
  if (total <= 0.0) {
    // never-sampled context; uniform by convention
    std::fill(post.begin(), post.end(), 1.0 / static_cast<double>(sizes_.a_size));
  } else {
    for (double& x : post)
      x /= total;
  }
  return ProbDist(std::move(post), 1e-6);
}

std::vector<double> ExactJoint::trace_conditional(std::size_t q, std::size_t a) const {
  std::size_t n_traces = ipow(sizes_.c_size, horizon_);
  const auto& m = table_.mass();
  std::vector<double> cond(n_traces, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < n_traces; ++c) {
    double v = m[(q * n_traces + c) * sizes_.a_size + a];
    cond[c] = v;
    total += v;
  }
  if (total <= 0.0) {
    std::fill(cond.begin(), cond.end(), 1.0 / static_cast<double>(n_traces));
  } else {
    for (double& x : cond)
      x /= total;
  }
  return cond;
}

std::vector<double> ExactJoint::qa_marginal() const {
  std::size_t n_traces = ipow(sizes_.c_size, horizon_);
  const auto& m = table_.mass();
  std::vector<double> qa(sizes_.q_size * sizes_.a_size, 0.0);
  for (std::size_t cell = 0; cell < m.size(); ++cell) {
    std::size_t a = cell % sizes_.a_size;
    std::size_t q = cell / (n_traces * sizes_.a_size);
    qa[q * sizes_.a_size + a] += m[cell];
  }
  return qa;
}

std::vector<double> ExactJoint::q_marginal() const {
  auto qa = qa_marginal();
  std::vector<double> q(sizes_.q_size, 0.0);
  for (std::size_t i = 0; i < qa.size(); ++i)
    q[i / sizes_.a_size] += qa[i];
  return q;
}

PrefixQuantities exact_prefix_quantities(const ExactJoint& j, std::size_t k) {
  if (k > j.horizon())
    throw ValidationError("exact_prefix_quantities: k beyond horizon");
  PrefixQuantities out;
  out.h_a_given_q = conditional_entropy(j.table(), "A", {"Q"});
  std::vector<std::string> given{"Q"};
  for (std::size_t t = 1; t <= k; ++t) {
    std::string axis = "C" + std::to_string(t);
    out.per_step_cmi.push_back(conditional_mutual_information(j.table(), "A", {axis}, given));
    given.push_back(axis);
  }
  out.h_a_given_qc = conditional_entropy(j.table(), "A", given);
  out.info = k == 0 ? 0.0
                    : conditional_mutual_information(j.table(), "A", j.prefix_axes(k), {"Q"});
  return out;
}

double bayes_error(const ExactJoint& j, std::size_t k) {
  if (k > j.horizon())
    throw ValidationError("bayes_error: k beyond horizon");
  std::size_t n_prefix = ipow(j.sizes().c_size, k);
  std::size_t n_tail = ipow(j.sizes().c_size, j.horizon() - k);
  const auto& m = j.table().mass();
  std::size_t m_a = j.sizes().a_size;
  double p_correct = 0.0;
  for (std::size_t q = 0; q < j.sizes().q_size; ++q) {
    for (std::size_t pre = 0; pre < n_prefix; ++pre) {
      std::vector<double> pa(m_a, 0.0);
      std::size_t base = (q * n_prefix + pre) * n_tail * m_a;
      for (std::size_t tail = 0; tail < n_tail; ++tail)
        for (std::size_t a = 0; a < m_a; ++a)
          pa[a] += m[base + tail * m_a + a];
      p_correct += *std::max_element(pa.begin(), pa.end());
    }
  }
  return std::clamp(1.0 - p_correct, 0.0, 1.0);
}

std::vector<SampledSequence> sample_sequences(const ExactJoint& j, std::size_t n,
                                              std::uint64_t seed) {
  const auto& m = j.table().mass();
  std::vector<double> cum(m.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    acc += m[i];
    cum[i] = acc;
  }
  std::mt19937_64 rng(seed);
  std::size_t n_traces = ipow(j.sizes().c_size, j.horizon());
  std::vector<SampledSequence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = next_uniform(rng) * acc;
    std::size_t cell = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (cell >= m.size())
      cell = m.size() - 1;
    SampledSequence s;
    s.a = cell % j.sizes().a_size;
    std::size_t qc = cell / j.sizes().a_size;
    std::size_t cflat = qc % n_traces;
    s.q = qc / n_traces;
    s.c.resize(j.horizon());
    for (std::size_t t = j.horizon(); t-- > 0;) {
      s.c[t] = cflat % j.sizes().c_size;
      cflat /= j.sizes().c_size;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t TabularAutoregressiveModel::prefix_flat(
    const std::vector<std::size_t>& prefix) const {
  std::size_t flat = 0;
  for (std::size_t v : prefix)
    flat = flat * sizes.c_size + v;
  return flat;
}

const double* TabularAutoregressiveModel::step_row(std::size_t k, std::size_t q,
                                                   std::size_t prefix_flat_idx) const {
  std::size_t row = q * ipow(sizes.c_size, k) + prefix_flat_idx;
  return step_rows[k].data() + row * sizes.c_size;
}

const double* TabularAutoregressiveModel::answer_row(std::size_t q,
                                                     std::size_t full_prefix_flat) const {
  std::size_t row = q * ipow(sizes.c_size, horizon) + full_prefix_flat;
  return answer_rows.data() + row * sizes.a_size;
}

ProbDist TabularAutoregressiveModel::internal_posterior(
    std::size_t q, const std::vector<std::size_t>& prefix) const {
  if (prefix.size() > horizon)
    throw ValidationError("internal_posterior: prefix too long");
  std::vector<double> post(sizes.a_size, 0.0);
  // depth-first over continuations, accumulating trace probability
  struct Frame {
    std::size_t flat;
    double prob;
  };
  std::vector<Frame> stack{{prefix_flat(prefix), 1.0}};
  std::vector<std::size_t> depth_of{prefix.size()};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    std::size_t d = depth_of.back();
    depth_of.pop_back();
    if (d == horizon) {
      const double* row = answer_row(q, f.flat);
      for (std::size_t a = 0; a < sizes.a_size; ++a)
        post[a] += f.prob * row[a];
      continue;
    }
    const double* row = step_row(d, q, f.flat);
    for (std::size_t c = 0; c < sizes.c_size; ++c) {
      if (row[c] <= 0.0)
        continue;
      stack.push_back({f.flat * sizes.c_size + c, f.prob * row[c]});
      depth_of.push_back(d + 1);
    }
  }
  double total = 0.0;
  for (double x : post)
    total += x;
  if (total <= 0.0)
    std::fill(post.begin(), post.end(), 1.0 / static_cast<double>(sizes.a_size));
  else
    for (double& x : post)
      x /= total;
  return ProbDist(std::move(post), 1e-6);
}

ExactJoint TabularAutoregressiveModel::induced_joint(
    const std::vector<double>& q_marginal) const {
  if (q_marginal.size() != sizes.q_size)
    throw ValidationError("induced_joint: q marginal size mismatch");
  std::size_t n_traces = ipow(sizes.c_size, horizon);
  std::vector<double> mass(sizes.q_size * n_traces * sizes.a_size, 0.0);
  for (std::size_t q = 0; q < sizes.q_size; ++q) {
    for (std::size_t cflat = 0; cflat < n_traces; ++cflat) {
      double p_trace = q_marginal[q];
      std::size_t pf = 0;
      std::size_t rem = cflat;
      std::size_t shift = n_traces;
      for (std::size_t t = 0; t < horizon; ++t) {
        shift /= sizes.c_size;
        std::size_t sym = rem / shift;
        rem %= shift;
        p_trace *= step_row(t, q, pf)[sym];
        pf = pf * sizes.c_size + sym;
      }
      const double* arow = answer_row(q, cflat);
      std::size_t base = (q * n_traces + cflat) * sizes.a_size;
      for (std::size_t a = 0; a < sizes.a_size; ++a)
        mass[base + a] = p_trace * arow[a];
    }
  }
  return ExactJoint(sizes, horizon, std::move(mass));
}

TabularAutoregressiveModel mle_fit(const std::vector<SampledSequence>& samples,
                                   WorldSizes sizes, std::size_t horizon, double alpha) {
  if (alpha < 0.0)
    throw ValidationError("mle_fit: negative smoothing");
  if (samples.empty() && alpha == 0.0)
    throw ValidationError("mle_fit: empty sample set with alpha = 0");
  TabularAutoregressiveModel m;
  m.sizes = sizes;
  m.horizon = horizon;
  m.smoothing_alpha = alpha;

  auto normalize_rows = [alpha](std::vector<double>& counts, std::size_t width) {
    for (std::size_t row = 0; row * width < counts.size(); ++row) {
      double* r = counts.data() + row * width;
      double total = 0.0;
      for (std::size_t i = 0; i < width; ++i)
        total += r[i];
      double denom = total + alpha * static_cast<double>(width);
      if (denom <= 0.0) {
        for (std::size_t i = 0; i < width; ++i)
          r[i] = 1.0 / static_cast<double>(width);
      } else {
        for (std::size_t i = 0; i < width; ++i)
          r[i] = (r[i] + alpha) / denom;
      }
    }
  };

  m.step_rows.resize(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    std::vector<double> counts(sizes.q_size * ipow(sizes.c_size, k) * sizes.c_size, 0.0);
    for (const auto& s : samples) {
      std::size_t pf = 0;
      for (std::size_t t = 0; t < k; ++t)
        pf = pf * sizes.c_size + s.c[t];
      counts[(s.q * ipow(sizes.c_size, k) + pf) * sizes.c_size + s.c[k]] += 1.0;
    }
    normalize_rows(counts, sizes.c_size);
    m.step_rows[k] = std::move(counts);
  }
  {
    std::size_t n_traces = ipow(sizes.c_size, horizon);
    std::vector<double> counts(sizes.q_size * n_traces * sizes.a_size, 0.0);
    for (const auto& s : samples) {
      std::size_t pf = 0;
      for (std::size_t v : s.c)
        pf = pf * sizes.c_size + v;
      counts[(s.q * n_traces + pf) * sizes.a_size + s.a] += 1.0;
    }
    normalize_rows(counts, sizes.a_size);
    m.answer_rows = std::move(counts);
  }
  return m;
}

TabularAutoregressiveModel exact_conditionals(const ExactJoint& j) {
  const WorldSizes& sizes = j.sizes();
  std::size_t horizon = j.horizon();
  std::size_t n_traces = ipow(sizes.c_size, horizon);
  const auto& mass = j.table().mass();

  TabularAutoregressiveModel m;
  m.sizes = sizes;
  m.horizon = horizon;
  m.smoothing_alpha = 0.0;
  m.step_rows.resize(horizon);

  // p(q, c_1..c_k) accumulated per prefix depth
  for (std::size_t k = 0; k < horizon; ++k) {
    std::size_t n_pre = ipow(sizes.c_size, k);
    std::vector<double> joint_k1(sizes.q_size * n_pre * sizes.c_size, 0.0);
    std::size_t n_tail = ipow(sizes.c_size, horizon - k - 1);
    for (std::size_t cell = 0; cell < mass.size(); ++cell) {
      std::size_t qc = cell / sizes.a_size;
      std::size_t cflat = qc % n_traces;
      std::size_t q = qc / n_traces;
      std::size_t pre1 = cflat / n_tail; // q-prefix through position k
      joint_k1[q * n_pre * sizes.c_size + pre1] += mass[cell];
    }
    auto& rows = m.step_rows[k];
    rows.assign(joint_k1.size(), 0.0);
    for (std::size_t row = 0; row < joint_k1.size() / sizes.c_size; ++row) {
      double total = 0.0;
      for (std::size_t c = 0; c < sizes.c_size; ++c)
        total += joint_k1[row * sizes.c_size + c];
      for (std::size_t c = 0; c < sizes.c_size; ++c)
        rows[row * sizes.c_size + c] =
            total > 0.0 ? joint_k1[row * sizes.c_size + c] / total
                        : 1.0 / static_cast<double>(sizes.c_size);
    }
  }
  m.answer_rows.assign(sizes.q_size * n_traces * sizes.a_size, 0.0);
  for (std::size_t row = 0; row < sizes.q_size * n_traces; ++row) {
    double total = 0.0;
    for (std::size_t a = 0; a < sizes.a_size; ++a)
      total += mass[row * sizes.a_size + a];
    for (std::size_t a = 0; a < sizes.a_size; ++a)
      m.answer_rows[row * sizes.a_size + a] =
          total > 0.0 ? mass[row * sizes.a_size + a] / total
                      : 1.0 / static_cast<double>(sizes.a_size);
  }
  return m;
}

ExactJoint generate_aligned_world(std::uint64_t seed, WorldSizes sizes, std::size_t horizon,
                                  double lambda) {
  if (lambda <= 0.0 || lambda > 1.0)
    throw ValidationError("generate_aligned_world: lambda must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<double> pq = dirichlet1(rng, sizes.q_size);
  // answer posteriors mixed toward uniform so H(A|Q) stays well away from 0
  std::vector<std::vector<double>> pa(sizes.q_size);
  for (auto& row : pa) {
    row = dirichlet1(rng, sizes.a_size);
    for (double& x : row)
      x = 0.5 * x + 0.5 / static_cast<double>(sizes.a_size);
  }
  // one scrambling permutation per step: the channel output is tied to the
  // token's position, so shuffled prefixes decode incorrectly
  std::vector<std::vector<std::size_t>> perm(horizon);
  for (auto& p : perm) {
    p.resize(sizes.c_size);
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = i;
    for (std::size_t i = p.size(); i-- > 1;) {
      std::size_t j = static_cast<std::size_t>(next_uniform(rng) * static_cast<double>(i + 1));
      if (j > i)
        j = i;
      std::swap(p[i], p[j]);
    }
  }

  std::size_t n_traces = ipow(sizes.c_size, horizon);
  std::vector<double> mass(sizes.q_size * n_traces * sizes.a_size, 0.0);
  double noise = (1.0 - lambda) / static_cast<double>(sizes.c_size);
  for (std::size_t q = 0; q < sizes.q_size; ++q) {
    for (std::size_t cflat = 0; cflat < n_traces; ++cflat) {
      std::vector<std::size_t> syms(horizon);
      std::size_t rem = cflat;
      for (std::size_t t = horizon; t-- > 0;) {
        syms[t] = rem % sizes.c_size;
        rem /= sizes.c_size;
      }
      for (std::size_t a = 0; a < sizes.a_size; ++a) {
        double p = pq[q] * pa[q][a];
        for (std::size_t t = 0; t < horizon; ++t) {
          std::size_t reveal = perm[t][a % sizes.c_size];
          p *= noise + (syms[t] == reveal ? lambda : 0.0);
        }
        mass[(q * n_traces + cflat) * sizes.a_size + a] = p;
      }
    }
  }
  ExactJoint j(sizes, horizon, std::move(mass));

  // SIA verified by enumeration, not assumed from the construction
  std::vector<double> eps;
  for (std::size_t k = 1; k <= horizon; ++k)
    eps.push_back(exact_prefix_quantities(j, k).info);
  double eps_max = eps.back();
  bool ok = true;
  double prev = 0.0;
  for (double e : eps) {
    // strictly increasing until the channel's information is exhausted
    bool exhausted = prev >= eps_max - 1e-9;
    if (e <= 1e-6 || e < prev - 1e-12 || (!exhausted && e <= prev + 1e-9))
      ok = false;
    prev = e;
  }
  if (!ok) {
    std::ostringstream eps_list;
    for (std::size_t i = 0; i < eps.size(); ++i)
      eps_list << (i ? ", " : "") << eps[i];
    throw GenerationError("generate_aligned_world: SIA check failed, eps_k = [" +
                          eps_list.str() + "]");
  }
  return j;
}

MisalignedWorld generate_misaligned_world(std::uint64_t seed, WorldSizes sizes,
                                          std::size_t horizon) {
  if (sizes.a_size < 3)
    throw ValidationError("generate_misaligned_world: a_size >= 3 required");
  std::mt19937_64 rng(seed);
  std::vector<double> pq = dirichlet1(rng, sizes.q_size);
  std::vector<std::vector<double>> pa(sizes.q_size);
  for (auto& row : pa) {
    row = dirichlet1(rng, sizes.a_size);
    for (double& x : row)
      x = 0.5 * x + 0.5 / static_cast<double>(sizes.a_size);
  }
  // per-question skewed step distributions; skew strength varies with the seed
  std::vector<std::vector<double>> step(sizes.q_size);
  std::vector<std::size_t> offset(sizes.q_size);
  std::vector<std::size_t> hedge(sizes.q_size);
  for (std::size_t q = 0; q < sizes.q_size; ++q) {
    double rate = 1.2 + 0.5 * next_uniform(rng);
    step[q].resize(sizes.c_size);
    double total = 0.0;
    for (std::size_t c = 0; c < sizes.c_size; ++c) {
      step[q][c] = std::exp(-rate * static_cast<double>(c));
      total += step[q][c];
    }
    for (double& x : step[q])
      x /= total;
    offset[q] = rng() % (sizes.a_size - 1);
    hedge[q] = rng() % sizes.a_size;
  }

  TabularAutoregressiveModel model;
  model.sizes = sizes;
  model.horizon = horizon;
  model.smoothing_alpha = 0.0;
  model.step_rows.resize(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    std::size_t rows_per_q = ipow(sizes.c_size, k);
    model.step_rows[k].resize(sizes.q_size * rows_per_q * sizes.c_size);
    for (std::size_t q = 0; q < sizes.q_size; ++q)
      for (std::size_t r = 0; r < rows_per_q; ++r)
        std::copy(step[q].begin(), step[q].end(),
                  model.step_rows[k].begin() + (q * rows_per_q + r) * sizes.c_size);
  }
  // The hallucinator hedges a fixed mass on one answer and commits the rest to
  // an answer derived from its own trace, so confidence rises along the trace
  // while the hedged answer's posterior never moves.
  const double beta = 0.85;
  const double gamma = 0.3;
  std::size_t n_traces = ipow(sizes.c_size, horizon);
  std::size_t alts = sizes.a_size - 1;
  model.answer_rows.assign(sizes.q_size * n_traces * sizes.a_size, 0.0);
  for (std::size_t q = 0; q < sizes.q_size; ++q) {
    // the committed answers live in {0..a_size-1} minus the hedged one
    std::vector<std::size_t> committed;
    for (std::size_t a = 0; a < sizes.a_size; ++a)
      if (a != hedge[q])
        committed.push_back(a);
    for (std::size_t cflat = 0; cflat < n_traces; ++cflat) {
      std::size_t sum = offset[q];
      std::size_t rem = cflat;
      for (std::size_t t = 0; t < horizon; ++t) {
        sum += rem % sizes.c_size;
        rem /= sizes.c_size;
      }
      double* row = &model.answer_rows[(q * n_traces + cflat) * sizes.a_size];
      row[hedge[q]] = gamma;
      for (std::size_t a : committed)
        row[a] = (1.0 - gamma) * (1.0 - beta) / static_cast<double>(alts);
      row[committed[sum % alts]] += (1.0 - gamma) * beta;
    }
  }

  // truth coupling: traces carry no information about A given Q
  std::vector<double> mass(sizes.q_size * n_traces * sizes.a_size, 0.0);
  for (std::size_t q = 0; q < sizes.q_size; ++q) {
    for (std::size_t cflat = 0; cflat < n_traces; ++cflat) {
      double p_trace = 1.0;
      std::size_t rem = cflat;
      for (std::size_t t = 0; t < horizon; ++t) {
        p_trace *= step[q][rem % sizes.c_size];
        rem /= sizes.c_size;
      }
      for (std::size_t a = 0; a < sizes.a_size; ++a)
        mass[(q * n_traces + cflat) * sizes.a_size + a] = pq[q] * p_trace * pa[q][a];
    }
  }
  MisalignedWorld out{ExactJoint(sizes, horizon, std::move(mass)), std::move(model), {}};

  for (std::size_t k = 0; k <= horizon; ++k) {
    std::vector<std::size_t> prefix(k, 0);
    out.internal_entropy_by_k.push_back(entropy(out.hallucinator.internal_posterior(0, prefix)));
  }
  for (std::size_t k = 1; k <= horizon; ++k) {
    if (out.internal_entropy_by_k[k] >= out.internal_entropy_by_k[k - 1] - 1e-9)
      throw GenerationError("generate_misaligned_world: internal entropy not strictly "
                            "decreasing at step " + std::to_string(k));
    double coupled = exact_prefix_quantities(out.truth, k).info;
    if (coupled >= 1e-3)
      throw GenerationError("generate_misaligned_world: coupled MI " +
                            std::to_string(coupled) + " at step " + std::to_string(k));
  }
  return out;
}

TransferCheckReport transfer_check(const ExactJoint& r, const TabularAutoregressiveModel& model,
                                   std::size_t k) {
  if (model.sizes.q_size != r.sizes().q_size || model.sizes.c_size != r.sizes().c_size ||
      model.sizes.a_size != r.sizes().a_size || model.horizon != r.horizon())
    throw ValidationError("transfer_check: model/world shape mismatch");
  if (k < 1 || k > r.horizon())
    throw ValidationError("transfer_check: k out of range");
  TransferCheckReport rep;
  rep.k = k;
  ExactJoint pj = model.induced_joint(r.q_marginal());
  rep.kl_joint = kl_divergence(r.table(), pj.table());
  rep.i_r = exact_prefix_quantities(r, k).info;
  rep.i_model = exact_prefix_quantities(pj, k).info;
  rep.epsilon_k = rep.i_r;
  rep.continuity_bound = cmi_continuity_bound(rep.kl_joint, r.sizes().q_size,
                                              ipow(r.sizes().c_size, k), r.sizes().a_size);
  rep.bound_valid = std::isfinite(rep.continuity_bound);
  rep.gap_within_bound =
      !rep.bound_valid || std::abs(rep.i_r - rep.i_model) <= rep.continuity_bound + 1e-12;
  rep.half_epsilon_satisfied = rep.i_model >= rep.epsilon_k / 2.0;
  return rep;
}

// --- serialization ----------------------------------------------------------

WorldBundle WorldBundle::aligned(std::uint64_t seed, WorldSizes sizes, std::size_t horizon,
                                 double lambda) {
  WorldBundle w{"aligned", seed, lambda, sizes, horizon,
                generate_aligned_world(seed, sizes, horizon, lambda), std::nullopt};
  return w;
}

WorldBundle WorldBundle::misaligned(std::uint64_t seed, WorldSizes sizes, std::size_t horizon) {
  MisalignedWorld mw = generate_misaligned_world(seed, sizes, horizon);
  WorldBundle w{"misaligned", seed, 0.0, sizes, horizon, std::move(mw.truth),
                std::move(mw.hallucinator)};
  return w;
}

std::string world_to_json(const WorldBundle& w) {
  json j;
  j["version"] = "world.v1";
  j["kind"] = w.kind;
  j["seed"] = w.seed;
  j["lambda"] = w.lambda;
  j["q_size"] = w.sizes.q_size;
  j["c_size"] = w.sizes.c_size;
  j["a_size"] = w.sizes.a_size;
  j["horizon"] = w.horizon;
  j["mass"] = w.truth.table().mass();
  if (w.model) {
    json m;
    m["smoothing_alpha"] = w.model->smoothing_alpha;
    m["step_rows"] = w.model->step_rows;
    m["answer_rows"] = w.model->answer_rows;
    j["model"] = std::move(m);
  }
  return j.dump();
}

WorldBundle world_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("version", "") != std::string("world.v1"))
    throw ValidationError("world_from_json: expected version world.v1, found '" +
                          j.value("version", "<missing>") + "'");
  WorldSizes sizes{j.at("q_size").get<std::size_t>(), j.at("c_size").get<std::size_t>(),
                   j.at("a_size").get<std::size_t>()};
  std::size_t horizon = j.at("horizon").get<std::size_t>();
  WorldBundle w{j.at("kind").get<std::string>(),
                j.value("seed", std::uint64_t{0}),
                j.value("lambda", 0.0),
                sizes,
                horizon,
                ExactJoint(sizes, horizon, j.at("mass").get<std::vector<double>>()),
                std::nullopt};
  if (j.contains("model")) {
    TabularAutoregressiveModel m;
    m.sizes = sizes;
    m.horizon = horizon;
    m.smoothing_alpha = j["model"].value("smoothing_alpha", 0.0);
    m.step_rows = j["model"].at("step_rows").get<std::vector<std::vector<double>>>();
    m.answer_rows = j["model"].at("answer_rows").get<std::vector<double>>();
    w.model = std::move(m);
  }
  return w;
}

} // namespace sia

#include <doctest.h>

#include <cmath>
#include <random>

#include "sia/oracle_lab.hpp"
#include "test_util.hpp"

using namespace sia;

namespace {

ExactJoint random_world(std::mt19937_64& rng, WorldSizes sizes, std::size_t horizon) {
  std::size_t cells = sizes.q_size * sizes.a_size;
  for (std::size_t k = 0; k < horizon; ++k)
    cells *= sizes.c_size;
  return ExactJoint(sizes, horizon, sia::testutil::random_pmf(rng, cells));
}

} // namespace

TEST_CASE("aligned world generator") {
  SUBCASE("full revelation at lambda = 1") {
    WorldSizes sizes{2, 4, 4};
    auto j = generate_aligned_world(7, sizes, 2, 1.0);
    auto pq = exact_prefix_quantities(j, 1);
    CHECK(pq.info == doctest::Approx(pq.h_a_given_q).epsilon(1e-9));
    CHECK(exact_prefix_quantities(j, 1).h_a_given_qc == doctest::Approx(0.0));
    CHECK(bayes_error(j, 1) == doctest::Approx(0.0));
  }
  SUBCASE("lambda 0.5, sizes (2,2,4), K=3, seed 7") {
    auto j = generate_aligned_world(7, WorldSizes{2, 2, 4}, 3, 0.5);
    double prev = 0.0;
    for (std::size_t k = 1; k <= 3; ++k) {
      double eps = exact_prefix_quantities(j, k).info;
      CHECK(eps > 0.0);
      CHECK(eps >= prev - 1e-12); // monotone prefix information
      prev = eps;
    }
  }
  SUBCASE("bad lambda rejected") {
    CHECK_THROWS_AS(generate_aligned_world(1, WorldSizes{2, 2, 4}, 2, 0.0), ValidationError);
  }
}

TEST_CASE("exact prefix quantities") {
  std::mt19937_64 rng(41);
  SUBCASE("k = 0") {
    auto j = random_world(rng, {2, 2, 3}, 3);
    auto pq = exact_prefix_quantities(j, 0);
    CHECK(pq.info == doctest::Approx(0.0));
    CHECK(pq.h_a_given_qc == doctest::Approx(pq.h_a_given_q));
  }
  SUBCASE("telescoping identity on random worlds") {
    for (int i = 0; i < 25; ++i) {
      auto j = random_world(rng, {2, 2, 3}, 3);
      for (std::size_t k = 0; k <= 3; ++k) {
        auto pq = exact_prefix_quantities(j, k);
        double step_sum = 0.0;
        for (double s : pq.per_step_cmi)
          step_sum += s;
        CHECK(std::abs(pq.h_a_given_q - step_sum - pq.h_a_given_qc) < 1e-12);
        CHECK(std::abs(pq.info - step_sum) < 1e-12);
      }
    }
  }
}

TEST_CASE("bayes error") {
  SUBCASE("uninformative uniform world") {
    WorldSizes sizes{2, 2, 4};
    std::size_t cells = 2 * 4 * 4;
    std::vector<double> mass(cells, 1.0 / static_cast<double>(cells));
    ExactJoint j(sizes, 2, mass);
    CHECK(bayes_error(j, 0) == doctest::Approx(0.75));
    CHECK(bayes_error(j, 2) == doctest::Approx(0.75));
  }
  SUBCASE("fano dominance on random worlds") {
    std::mt19937_64 rng(43);
    for (int i = 0; i < 20; ++i) {
      for (std::size_t m_a : {3, 4, 5}) {
        auto j = random_world(rng, {2, 2, m_a}, 2);
        for (std::size_t k = 0; k <= 2; ++k) {
          double h = exact_prefix_quantities(j, k).h_a_given_qc;
          CHECK(bayes_error(j, k) >= fano_error_lower_bound(h, m_a) - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("sample sequences") {
  std::mt19937_64 rng(47);
  auto j = random_world(rng, {2, 2, 3}, 2);
  SUBCASE("n = 0") { CHECK(sample_sequences(j, 0, 1).empty()); }
  SUBCASE("seed stability") {
    auto a = sample_sequences(j, 100, 99);
    auto b = sample_sequences(j, 100, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].q == b[i].q);
      CHECK(a[i].a == b[i].a);
      CHECK(a[i].c == b[i].c);
    }
  }
  SUBCASE("frequencies within 4-sigma multinomial bands at n = 1e5") {
    const std::size_t n = 100000;
    auto samples = sample_sequences(j, n, 7);
    std::vector<double> freq(j.table().cells(), 0.0);
    std::size_t n_traces = 4;
    for (const auto& s : samples) {
      std::size_t cflat = s.c[0] * 2 + s.c[1];
      freq[(s.q * n_traces + cflat) * 3 + s.a] += 1.0;
    }
    const auto& m = j.table().mass();
    for (std::size_t cell = 0; cell < m.size(); ++cell) {
      double p = m[cell];
      double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      CHECK(std::abs(freq[cell] / static_cast<double>(n) - p) <= band + 1e-12);
    }
  }
}

TEST_CASE("stepwise gain mean matches CMI (1e5 samples, 3 sigma)") {
  std::mt19937_64 rng(53);
  auto j = random_world(rng, {2, 2, 3}, 2);
  auto samples = sample_sequences(j, 100000, 11);
  for (std::size_t k = 1; k <= 2; ++k) {
    double sum = 0.0, sumsq = 0.0;
    for (const auto& s : samples) {
      std::vector<std::size_t> before(s.c.begin(), s.c.begin() + (k - 1));
      std::vector<std::size_t> after(s.c.begin(), s.c.begin() + k);
      double d = stepwise_gain(j.answer_posterior(s.q, before),
                               j.answer_posterior(s.q, after), s.a);
      sum += d;
      sumsq += d * d;
    }
    double n = static_cast<double>(samples.size());
    double mean = sum / n;
    double stderr_ = std::sqrt((sumsq / n - mean * mean) / n);
    double cmi = exact_prefix_quantities(j, k).per_step_cmi[k - 1];
    CHECK(std::abs(mean - cmi) < 3.0 * stderr_);
  }
}

TEST_CASE("mle fit") {
  WorldSizes sizes{2, 2, 3};
  SUBCASE("single repeated sequence, alpha 0") {
    SampledSequence s{1, {0, 1}, 2};
    auto m = mle_fit(std::vector<SampledSequence>(5, s), sizes, 2, 0.0);
    CHECK(m.step_row(0, 1, 0)[0] == doctest::Approx(1.0));
    CHECK(m.step_row(1, 1, 0)[1] == doctest::Approx(1.0));
    CHECK(m.answer_row(1, 1)[2] == doctest::Approx(1.0));
    // never-observed context falls back to uniform
    CHECK(m.step_row(0, 0, 0)[0] == doctest::Approx(0.5));
  }
  SUBCASE("alpha > 0 rows strictly positive") {
    SampledSequence s{0, {0, 0}, 0};
    auto m = mle_fit({s}, sizes, 2, 0.5);
    for (const auto& tbl : m.step_rows)
      for (double v : tbl)
        CHECK(v > 0.0);
    for (double v : m.answer_rows)
      CHECK(v > 0.0);
  }
  SUBCASE("more data, lower KL") {
    std::mt19937_64 rng(59);
    auto j = random_world(rng, sizes, 2);
    auto qm = j.q_marginal();
    auto m_small = mle_fit(sample_sequences(j, 1000, 3), sizes, 2, 0.5);
    auto m_big = mle_fit(sample_sequences(j, 100000, 3), sizes, 2, 0.5);
    double kl_small = kl_divergence(j.table(), m_small.induced_joint(qm).table());
    double kl_big = kl_divergence(j.table(), m_big.induced_joint(qm).table());
    CHECK(kl_big < kl_small);
  }
  SUBCASE("empty samples with alpha 0 rejected") {
    CHECK_THROWS_AS(mle_fit({}, sizes, 2, 0.0), ValidationError);
  }
}

TEST_CASE("exact conditionals reproduce the joint") {
  std::mt19937_64 rng(61);
  auto j = random_world(rng, {2, 2, 3}, 3);
  auto m = exact_conditionals(j);
  auto back = m.induced_joint(j.q_marginal());
  const auto& a = j.table().mass();
  const auto& b = back.table().mass();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("transfer check") {
  std::mt19937_64 rng(67);
  auto r = generate_aligned_world(5, WorldSizes{2, 2, 4}, 3, 0.6);
  SUBCASE("exact model: delta 0, flag true") {
    auto m = exact_conditionals(r);
    for (std::size_t k = 1; k <= 3; ++k) {
      auto rep = transfer_check(r, m, k);
      CHECK(rep.kl_joint == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(rep.i_model == doctest::Approx(rep.i_r).epsilon(1e-9));
      CHECK(rep.half_epsilon_satisfied);
      CHECK(rep.gap_within_bound);
    }
  }
  SUBCASE("large-sample fit: flag true") {
    auto m = mle_fit(sample_sequences(r, 100000, 21), r.sizes(), 3, 0.5);
    for (std::size_t k = 1; k <= 3; ++k) {
      auto rep = transfer_check(r, m, k);
      CHECK(rep.half_epsilon_satisfied);
      CHECK(rep.gap_within_bound);
    }
  }
  SUBCASE("tiny fit still respects the continuity bound") {
    auto m = mle_fit(sample_sequences(r, 10, 22), r.sizes(), 3, 0.5);
    for (std::size_t k = 1; k <= 3; ++k)
      CHECK(transfer_check(r, m, k).gap_within_bound);
  }
  SUBCASE("delta non-increasing with sample size") {
    double prev = kInf;
    for (std::size_t n : {100, 1000, 10000, 100000}) {
      auto m = mle_fit(sample_sequences(r, n, 23), r.sizes(), 3, 0.5);
      double d = transfer_check(r, m, 1).kl_joint;
      CHECK(d <= prev * 1.5 + 1e-9); // up to sampling noise
      prev = d;
    }
  }
}

TEST_CASE("misaligned world") {
  auto w = generate_misaligned_world(7, WorldSizes{2, 3, 4}, 4);
  SUBCASE("coupled MI is zero") {
    for (std::size_t k = 1; k <= 4; ++k)
      CHECK(exact_prefix_quantities(w.truth, k).info < 1e-10);
  }
  SUBCASE("internal posterior entropy strictly decreasing") {
    REQUIRE(w.internal_entropy_by_k.size() == 5);
    for (std::size_t k = 1; k < w.internal_entropy_by_k.size(); ++k)
      CHECK(w.internal_entropy_by_k[k] < w.internal_entropy_by_k[k - 1]);
    // nonzero floor: the hallucinator saturates above zero
    CHECK(w.internal_entropy_by_k.back() > 0.1);
  }
}

TEST_CASE("world serialization round trip") {
  auto aligned = WorldBundle::aligned(7, WorldSizes{2, 2, 4}, 3, 0.5);
  auto back = world_from_json(world_to_json(aligned));
  CHECK(back.kind == "aligned");
  CHECK(back.seed == 7);
  CHECK(back.truth.table().mass() == aligned.truth.table().mass());

  auto mis = WorldBundle::misaligned(9, WorldSizes{2, 3, 4}, 3);
  auto back2 = world_from_json(world_to_json(mis));
  REQUIRE(back2.model.has_value());
  CHECK(back2.model->answer_rows == mis.model->answer_rows);

  CHECK_THROWS_AS(world_from_json("{\"version\":\"world.v2\"}"), ValidationError);
}

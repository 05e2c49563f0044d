#include <doctest.h>

#include <cmath>
#include <random>

#include "sia/infotheory.hpp"
#include "test_util.hpp"

using namespace sia;
using sia::testutil::random_dist;
using sia::testutil::random_joint;
using sia::testutil::random_pmf;

namespace {

const double LN2 = std::log(2.0);

JointTable joint_2x2(double a, double b, double c, double d) {
  return JointTable({{"X", 2}, {"Y", 2}}, {a, b, c, d});
}

} // namespace

TEST_CASE("entropy basics") {
  CHECK(entropy(ProbDist({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(ProbDist({1.0, 0.0, 0.0})) == doctest::Approx(0.0));
  // -0.5 ln 0.5 - 2 * 0.25 ln 0.25
  CHECK(entropy(ProbDist({0.5, 0.25, 0.25})) == doctest::Approx(1.039721).epsilon(1e-5));
  CHECK_THROWS_AS(ProbDist({0.5, 0.4}), ValidationError);
  CHECK_THROWS_AS(ProbDist({0.5, 0.6, -0.1}), ValidationError);
}

TEST_CASE("entropy bounded by log support") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto d = random_dist(rng, 5);
    double h = entropy(d);
    CHECK(h >= -1e-12);
    CHECK(h <= std::log(5.0) + 1e-12);
  }
}

TEST_CASE("conditional entropy") {
  SUBCASE("independent") {
    // p(x) = (0.3, 0.7), p(y) = (0.6, 0.4)
    auto j = joint_2x2(0.18, 0.12, 0.42, 0.28);
    CHECK(conditional_entropy(j, "Y", {"X"}) ==
          doctest::Approx(entropy(ProbDist({0.6, 0.4}))));
  }
  SUBCASE("deterministic Y = f(X)") {
    auto j = joint_2x2(0.3, 0.0, 0.0, 0.7);
    CHECK(conditional_entropy(j, "Y", {"X"}) == doctest::Approx(0.0));
  }
  SUBCASE("worked 2x2") {
    auto j = joint_2x2(0.4, 0.1, 0.1, 0.4);
    CHECK(conditional_entropy(j, "Y", {"X"}) == doctest::Approx(0.500402).epsilon(1e-5));
  }
  SUBCASE("axis errors") {
    auto j = joint_2x2(0.4, 0.1, 0.1, 0.4);
    CHECK_THROWS_AS(conditional_entropy(j, "Y", {"Y"}), ValidationError);
    CHECK_THROWS_AS(conditional_entropy(j, "Z", {"X"}), ValidationError);
  }
}

TEST_CASE("mutual information") {
  auto indep = joint_2x2(0.18, 0.12, 0.42, 0.28);
  CHECK(mutual_information(indep, "X", "Y") == doctest::Approx(0.0).epsilon(1e-12));
  auto copy = joint_2x2(0.5, 0.0, 0.0, 0.5);
  CHECK(mutual_information(copy, "X", "Y") == doctest::Approx(LN2));
  auto j = joint_2x2(0.4, 0.1, 0.1, 0.4);
  CHECK(mutual_information(j, "X", "Y") == doctest::Approx(0.192745).epsilon(1e-5));
  CHECK(mutual_information(j, "X", "Y") == doctest::Approx(mutual_information(j, "Y", "X")));
}

TEST_CASE("conditional mutual information") {
  SUBCASE("B independent of A given G") {
    // p(g) uniform; A depends on G, B depends on G, A and B conditionally independent
    std::vector<double> mass;
    std::vector<std::vector<double>> pa = {{0.8, 0.2}, {0.3, 0.7}};
    std::vector<std::vector<double>> pb = {{0.6, 0.4}, {0.1, 0.9}};
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          mass.push_back(0.5 * pa[g][a] * pb[g][b]);
    JointTable j({{"G", 2}, {"A", 2}, {"B", 2}}, mass);
    CHECK(conditional_mutual_information(j, "A", {"B"}, {"G"}) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("markov chain A -> G -> B") {
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> g_given_a = {random_pmf(rng, 3), random_pmf(rng, 3)};
    std::vector<std::vector<double>> b_given_g = {random_pmf(rng, 2), random_pmf(rng, 2),
                                                  random_pmf(rng, 2)};
    std::vector<double> pa = random_pmf(rng, 2);
    std::vector<double> mass;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t g = 0; g < 3; ++g)
        for (std::size_t b = 0; b < 2; ++b)
          mass.push_back(pa[a] * g_given_a[a][g] * b_given_g[g][b]);
    JointTable j({{"A", 2}, {"G", 3}, {"B", 2}}, mass);
    CHECK(conditional_mutual_information(j, "A", {"B"}, {"G"}) ==
          doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("chain rule on a random 3-step joint") {
    std::mt19937_64 rng(7);
    auto j = random_joint(rng, {{"Q", 2}, {"C1", 2}, {"C2", 2}, {"C3", 2}, {"A", 3}});
    double sum = conditional_mutual_information(j, "A", {"C1"}, {"Q"}) +
                 conditional_mutual_information(j, "A", {"C2"}, {"Q", "C1"}) +
                 conditional_mutual_information(j, "A", {"C3"}, {"Q", "C1", "C2"});
    double whole = conditional_mutual_information(j, "A", {"C1", "C2", "C3"}, {"Q"});
    CHECK(std::abs(sum - whole) < 1e-12);
  }
  SUBCASE("overlapping groups rejected") {
    auto j = joint_2x2(0.4, 0.1, 0.1, 0.4);
    CHECK_THROWS_AS(conditional_mutual_information(j, "X", {"Y"}, {"Y"}), ValidationError);
  }
}

TEST_CASE("kl divergence") {
  CHECK(kl_divergence(ProbDist({0.3, 0.7}), ProbDist({0.3, 0.7})) == doctest::Approx(0.0));
  CHECK(kl_divergence(ProbDist({1.0, 0.0}), ProbDist({0.5, 0.5})) == doctest::Approx(LN2));
  CHECK(std::isinf(kl_divergence(ProbDist({0.5, 0.5}), ProbDist({1.0, 0.0}))));
  CHECK_THROWS_AS(kl_divergence(ProbDist({0.5, 0.5}), ProbDist({0.5, 0.25, 0.25})),
                  ValidationError);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto p = random_dist(rng, 4);
    auto q = random_dist(rng, 4);
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("total variation") {
  CHECK(total_variation(ProbDist({0.3, 0.7}), ProbDist({0.3, 0.7})) == doctest::Approx(0.0));
  CHECK(total_variation(ProbDist({1.0, 0.0}), ProbDist({0.0, 1.0})) == doctest::Approx(1.0));
  CHECK(total_variation(ProbDist({0.7, 0.3}), ProbDist({0.5, 0.5})) == doctest::Approx(0.2));
}

TEST_CASE("pointwise surprisal and gains") {
  CHECK(pointwise_surprisal(ProbDist({1.0, 0.0}), 0) == doctest::Approx(0.0));
  CHECK(pointwise_surprisal(ProbDist({1.0 / std::exp(1.0), 1.0 - 1.0 / std::exp(1.0)}), 0) ==
        doctest::Approx(1.0));
  CHECK(std::isinf(pointwise_surprisal(ProbDist({1.0, 0.0}), 1)));
  CHECK_THROWS_AS(pointwise_surprisal(ProbDist({1.0, 0.0}), 2), ValidationError);

  ProbDist q25({0.25, 0.75}), q50({0.5, 0.5});
  CHECK(stepwise_gain(q25, q50, 0) == doctest::Approx(LN2));
  CHECK(stepwise_gain(q50, q50, 0) == doctest::Approx(0.0));
  CHECK(stepwise_gain(q50, q25, 0) == doctest::Approx(-LN2));
  CHECK(std::isnan(stepwise_gain(ProbDist({0.0, 1.0}), ProbDist({0.0, 1.0}), 0)));
}

TEST_CASE("cumulative gain") {
  ProbDist a({0.25, 0.75}), b({0.5, 0.5}), c({1.0, 0.0});
  auto g = cumulative_gain({a, b, c}, 0);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(LN2));
  CHECK(g[2] == doctest::Approx(2 * LN2));

  auto flat = cumulative_gain({b, b, b}, 0);
  for (double x : flat)
    CHECK(x == doctest::Approx(0.0));

  // telescoping: final G equals h(first) - h(last)
  std::mt19937_64 rng(9);
  std::vector<ProbDist> seq;
  for (int i = 0; i < 6; ++i)
    seq.push_back(random_dist(rng, 4));
  auto gs = cumulative_gain(seq, 2);
  double expect = pointwise_surprisal(seq.front(), 2) - pointwise_surprisal(seq.back(), 2);
  CHECK(std::abs(gs.back() - expect) < 1e-12);
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.0) == doctest::Approx(0.0));
  CHECK(binary_entropy(0.5) == doctest::Approx(LN2));
  CHECK(binary_entropy(0.2) == doctest::Approx(binary_entropy(0.8)));
}

TEST_CASE("pinsker bound") {
  CHECK(pinsker_tv_bound(0.0) == doctest::Approx(0.0));
  CHECK(pinsker_tv_bound(0.5) == doctest::Approx(0.5));
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_dist(rng, 4);
    auto q = random_dist(rng, 4);
    CHECK(total_variation(p, q) <= pinsker_tv_bound(kl_divergence(p, q)) + 1e-12);
  }
}

TEST_CASE("entropy continuity bound") {
  CHECK(entropy_continuity_bound(0.0, 4) == doctest::Approx(0.0));
  // eps = sqrt(0.02/2) = 0.1; 0.1*ln3 + h2(0.1)
  double expect = 0.1 * std::log(3.0) + binary_entropy(0.1);
  CHECK(entropy_continuity_bound(0.02, 4) == doctest::Approx(expect));
  CHECK(entropy_continuity_bound(0.02, 4) == doctest::Approx(0.434944).epsilon(1e-5));
  CHECK(std::isinf(entropy_continuity_bound(4.0, 2)));

  // monotone in delta
  double prev = 0.0;
  for (double d = 0.0; d <= 0.4; d += 0.05) {
    double f = entropy_continuity_bound(d, 4);
    CHECK(f >= prev - 1e-12);
    prev = f;
  }

  // dominates |H(P)-H(Q)| at measured KL
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_dist(rng, 4);
    auto q = random_dist(rng, 4);
    double f = entropy_continuity_bound(kl_divergence(p, q), 4);
    if (std::isfinite(f))
      CHECK(std::abs(entropy(p) - entropy(q)) <= f + 1e-12);
  }
}

TEST_CASE("conditional entropy continuity bound") {
  CHECK(cond_entropy_continuity_bound(0.0, 2, 2) == doctest::Approx(0.0));
  CHECK(cond_entropy_continuity_bound(0.02, 2, 2) ==
        doctest::Approx(entropy_continuity_bound(0.02, 4) + entropy_continuity_bound(0.02, 2)));

  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_joint(rng, {{"X", 2}, {"Y", 3}});
    auto q = random_joint(rng, {{"X", 2}, {"Y", 3}});
    double g = cond_entropy_continuity_bound(kl_divergence(p, q), 2, 3);
    if (std::isfinite(g))
      CHECK(std::abs(conditional_entropy(p, "Y", {"X"}) - conditional_entropy(q, "Y", {"X"})) <=
            g + 1e-12);
  }
}

TEST_CASE("cmi continuity bound") {
  CHECK(cmi_continuity_bound(0.0, 2, 4, 3) == doctest::Approx(0.0));
  CHECK(cmi_continuity_bound(0.02, 2, 4, 3) ==
        doctest::Approx(cond_entropy_continuity_bound(0.02, 2, 3) +
                        cond_entropy_continuity_bound(0.02, 8, 3)));

  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    auto p = random_joint(rng, {{"Q", 2}, {"C1", 2}, {"C2", 2}, {"A", 3}});
    auto q = random_joint(rng, {{"Q", 2}, {"C1", 2}, {"C2", 2}, {"A", 3}});
    double gap = std::abs(conditional_mutual_information(p, "A", {"C1", "C2"}, {"Q"}) -
                          conditional_mutual_information(q, "A", {"C1", "C2"}, {"Q"}));
    double bound = cmi_continuity_bound(kl_divergence(p, q), 2, 4, 3);
    if (std::isfinite(bound))
      CHECK(gap <= bound + 1e-12);
  }
}

TEST_CASE("data processing: marginal KL <= joint KL") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    auto p = random_joint(rng, {{"X", 3}, {"Y", 2}});
    auto q = random_joint(rng, {{"X", 3}, {"Y", 2}});
    double joint = kl_divergence(p, q);
    double marg = kl_divergence(p.marginal({"X"}).flatten(), q.marginal({"X"}).flatten());
    CHECK(marg <= joint + 1e-12);
  }
}

TEST_CASE("fano bound") {
  CHECK(fano_error_lower_bound(LN2, 4) == doctest::Approx(0.0));
  CHECK(fano_error_lower_bound(std::log(4.0), 4) ==
        doctest::Approx((std::log(4.0) - LN2) / std::log(3.0)));
  CHECK(fano_error_lower_bound(std::log(4.0), 4) == doctest::Approx(0.63093).epsilon(1e-4));
  CHECK_THROWS_AS(fano_error_lower_bound(LN2, 2), ValidationError);
  // never exceeds 1 for h <= log m
  for (std::size_t m : {3, 4, 5, 9}) {
    double b = fano_error_lower_bound(std::log(double(m)), m);
    CHECK(b <= 1.0 + 1e-12);
  }
}

TEST_CASE("cross entropy decomposition") {
  std::mt19937_64 rng(31);
  auto eq = cross_entropy_decomposition(ProbDist({0.5, 0.5}), ProbDist({0.5, 0.5}));
  CHECK(eq.cross_entropy == doctest::Approx(LN2));
  CHECK(eq.kl == doctest::Approx(0.0));

  auto point = cross_entropy_decomposition(ProbDist({1.0, 0.0}), ProbDist({0.5, 0.5}));
  CHECK(point.cross_entropy == doctest::Approx(LN2));
  CHECK(point.entropy_r == doctest::Approx(0.0));
  CHECK(point.kl == doctest::Approx(LN2));

  for (int i = 0; i < 200; ++i) {
    auto r = random_dist(rng, 5);
    auto p = random_dist(rng, 5);
    auto d = cross_entropy_decomposition(r, p);
    CHECK(std::abs(d.cross_entropy - d.entropy_r - d.kl) < 1e-12);
  }
}

TEST_CASE("kl chain decomposition") {
  std::mt19937_64 rng(37);
  SUBCASE("r equals p") {
    auto r = random_joint(rng, {{"Q", 2}, {"C", 2}, {"A", 2}});
    auto d = kl_chain_decomposition(r, r, "Q", {"C"}, "A");
    CHECK(d.joint_kl == doctest::Approx(0.0));
    CHECK(d.marginal_kl == doctest::Approx(0.0));
    CHECK(d.expected_conditional_kl == doctest::Approx(0.0));
  }
  SUBCASE("identity and part bounds on random pairs") {
    for (int i = 0; i < 1000; ++i) {
      auto r = random_joint(rng, {{"Q", 2}, {"C", 2}, {"A", 2}});
      auto p = random_joint(rng, {{"Q", 2}, {"C", 2}, {"A", 2}});
      auto d = kl_chain_decomposition(r, p, "Q", {"C"}, "A");
      CHECK(std::abs(d.joint_kl - d.marginal_kl - d.expected_conditional_kl) < 1e-12);
      CHECK(d.marginal_kl <= d.joint_kl + 1e-12);
      CHECK(d.expected_conditional_kl <= d.joint_kl + 1e-12);
    }
  }
}

#include <doctest.h>

#include <cmath>

#include "sia/diagnostics.hpp"
#include "test_util.hpp"

using namespace sia;

namespace {

EntropyTrajectory make_traj(const std::vector<std::size_t>& ks, const std::vector<double>& h,
                            const std::vector<double>& s, bool correct = true) {
  EntropyTrajectory t;
  t.question_id = "q";
  t.is_correct = correct;
  for (std::size_t i = 0; i < ks.size(); ++i)
    t.checkpoints.push_back({ks[i], h[i], s[i], {}, false});
  return t;
}

} // namespace

TEST_CASE("sia_alignment") {
  SUBCASE("perfect coupling") {
    auto r = sia_alignment(make_traj({0, 1, 2}, {3, 2, 1}, {3, 2, 1}));
    REQUIRE(r.rho.has_value());
    CHECK(*r.rho == doctest::Approx(1.0));
    CHECK(r.n_checkpoints_used == 3);
  }
  SUBCASE("anti-coupling") {
    auto r = sia_alignment(make_traj({0, 1, 2}, {1, 2, 3}, {3, 2, 1}));
    CHECK(*r.rho == doctest::Approx(-1.0));
  }
  SUBCASE("constant entropy undefined") {
    auto r = sia_alignment(make_traj({0, 1, 2}, {1, 1, 1}, {3, 2, 1}));
    CHECK_FALSE(r.rho.has_value());
    CHECK(r.degenerate_reason == DegenerateReason::constant_entropy);
  }
  SUBCASE("constant surprisal undefined") {
    auto r = sia_alignment(make_traj({0, 1, 2}, {3, 2, 1}, {1, 1, 1}));
    CHECK(r.degenerate_reason == DegenerateReason::constant_surprisal);
  }
  SUBCASE("infinite surprisal excluded pairwise") {
    auto r = sia_alignment(make_traj({0, 1, 2, 3}, {4, 3, 2, 1}, {4, kInf, 2, 1}));
    CHECK(r.n_checkpoints_used == 3);
    CHECK(r.excluded_pairs == 1);
    CHECK(*r.rho == doctest::Approx(1.0));
  }
  SUBCASE("too few points") {
    auto r = sia_alignment(make_traj({0, 2}, {2, 1}, {2, 1}));
    CHECK(r.degenerate_reason == DegenerateReason::too_few_points);
  }
  SUBCASE("spearman is rank based") {
    auto r = sia_alignment(make_traj({0, 1, 2, 3}, {8, 4, 2, 1}, {40, 3, 2, 1}),
                           CorrelationKind::spearman);
    CHECK(*r.rho == doctest::Approx(1.0));
  }
  SUBCASE("affine rescaling invariance") {
    auto a = sia_alignment(make_traj({0, 1, 2, 3}, {3, 1, 2, 0}, {5, 2, 4, 1}));
    auto b = sia_alignment(
        make_traj({0, 1, 2, 3}, {7, 3, 5, 1}, {0.5, 0.2, 0.4, 0.1})); // 2h+1, s/10
    CHECK(*a.rho == doctest::Approx(*b.rho));
  }
}

TEST_CASE("aggregate_alignment") {
  GroupLabels g{"m1", "d1", "base"};
  auto perfect = sia_alignment(make_traj({0, 1, 2}, {3, 2, 1}, {3, 2, 1}));
  auto anti = sia_alignment(make_traj({0, 1, 2}, {1, 2, 3}, {3, 2, 1}));
  auto undef = sia_alignment(make_traj({0, 1, 2}, {1, 1, 1}, {3, 2, 1}));

  SUBCASE("all ones") {
    auto rows = aggregate_alignment({{g, perfect}, {g, perfect}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_rho == doctest::Approx(1.0));
    CHECK(rows[0].n_defined == 2);
  }
  SUBCASE("mixed cancels, undefined counted") {
    auto rows = aggregate_alignment({{g, perfect}, {g, anti}, {g, undef}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_rho == doctest::Approx(0.0));
    CHECK(rows[0].n_undefined == 1);
    CHECK(rows[0].ci_lo <= rows[0].mean_rho);
    CHECK(rows[0].ci_hi >= rows[0].mean_rho);
  }
  SUBCASE("group with nothing defined is omitted") {
    GroupLabels g2{"m2", "d1", "sft"};
    auto rows = aggregate_alignment({{g, perfect}, {g2, undef}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].group == g);
  }
}

TEST_CASE("entropy interpolation") {
  auto t = make_traj({0, 4}, {2.0, 0.0}, {0, 0});
  CHECK(entropy_at(t, 0.0) == doctest::Approx(2.0));
  CHECK(entropy_at(t, 0.5) == doctest::Approx(1.0));
  CHECK(entropy_at(t, 1.0) == doctest::Approx(0.0));
  auto single = make_traj({0}, {1.3}, {0});
  CHECK(entropy_at(single, 0.7) == doctest::Approx(1.3));
}

TEST_CASE("gain_curve") {
  double ln4 = std::log(4.0);
  auto down = make_traj({0, 2, 4}, {ln4, ln4 / 2, 0.0}, {0, 0, 0}, true);
  auto flat = make_traj({0, 2, 4}, {1.0, 1.0, 1.0}, {0, 0, 0}, false);
  auto curve = gain_curve({down, flat}, default_grid(), 0.05, 100, 0.95, 1);
  CHECK(curve.excluded == 1);
  CHECK(curve.incorrect.empty());
  REQUIRE(curve.correct.size() == 21);
  CHECK(curve.correct.front().mean_gain == doctest::Approx(0.0));
  CHECK(curve.correct.back().mean_gain == doctest::Approx(1.0));
  for (std::size_t i = 1; i < curve.correct.size(); ++i)
    CHECK(curve.correct[i].mean_gain >= curve.correct[i - 1].mean_gain - 1e-12);
}

TEST_CASE("auc_at_prefix") {
  auto t = [](double h, bool correct) { return make_traj({0}, {h}, {0}, correct); };
  SUBCASE("perfect separation") {
    auto p = auc_at_prefix({t(0.1, true), t(0.2, true), t(0.3, false), t(0.4, false)}, 0.5);
    CHECK(*p.auc == doctest::Approx(1.0));
    CHECK(p.n_correct == 2);
    CHECK(p.n_incorrect == 2);
  }
  SUBCASE("all ties") {
    auto p = auc_at_prefix({t(0.3, true), t(0.3, false), t(0.3, true), t(0.3, false)}, 0.5);
    CHECK(*p.auc == doctest::Approx(0.5));
  }
  SUBCASE("one class empty") {
    auto p = auc_at_prefix({t(0.1, true), t(0.2, true)}, 0.5);
    CHECK_FALSE(p.auc.has_value());
  }
  SUBCASE("monotone transform invariance") {
    std::vector<EntropyTrajectory> base{t(0.1, true), t(0.4, false), t(0.2, true),
                                        t(0.9, false), t(0.3, false)};
    std::vector<EntropyTrajectory> cubed;
    for (const auto& tr : base) {
      auto c = tr;
      c.checkpoints[0].entropy_nats = std::pow(tr.checkpoints[0].entropy_nats, 3);
      cubed.push_back(c);
    }
    CHECK(*auc_at_prefix(base, 0.5).auc == doctest::Approx(*auc_at_prefix(cubed, 0.5).auc));
  }
}

TEST_CASE("saturation_detect") {
  SUBCASE("constant tail detected at first flat step") {
    auto t = make_traj({0, 1, 2, 3, 4}, {2.0, 1.0, 0.4, 0.4, 0.4}, {0, 0, 0, 0, 0});
    auto r = saturation_detect(t, 0.05, 2);
    CHECK(r.plateau_detected);
    CHECK(r.onset_checkpoint == 2);
    CHECK(r.plateau_level == doctest::Approx(0.4));
    CHECK_FALSE(r.rebound_detected);
  }
  SUBCASE("steady descent not detected") {
    auto t = make_traj({0, 1, 2, 3}, {1.0, 0.8, 0.6, 0.4}, {0, 0, 0, 0});
    CHECK_FALSE(saturation_detect(t, 0.05, 2).plateau_detected);
  }
  SUBCASE("rebound after plateau") {
    auto t = make_traj({0, 1, 2, 3, 4}, {1.0, 0.3, 0.31, 0.32, 0.6}, {0, 0, 0, 0, 0});
    auto r = saturation_detect(t, 0.05, 2);
    CHECK(r.plateau_detected);
    CHECK(r.rebound_detected);
  }
  SUBCASE("insufficient checkpoints") {
    auto t = make_traj({0, 1}, {1.0, 0.9}, {0, 0});
    CHECK(saturation_detect(t, 0.05, 2).insufficient_checkpoints);
  }
}

TEST_CASE("bootstrap_ci") {
  SUBCASE("constant values collapse") {
    auto [lo, hi] = bootstrap_ci({2.5, 2.5, 2.5, 2.5});
    CHECK(lo == doctest::Approx(2.5));
    CHECK(hi == doctest::Approx(2.5));
  }
  SUBCASE("single value degenerate") {
    auto [lo, hi] = bootstrap_ci({1.0});
    CHECK(lo == 1.0);
    CHECK(hi == 1.0);
  }
  SUBCASE("brackets the mean and straddles zero for a symmetric sample") {
    std::vector<double> vals;
    for (int i = 0; i < 100; ++i)
      vals.push_back(i % 2 ? 1.0 : -1.0);
    auto [lo, hi] = bootstrap_ci(vals, 1000, 0.95, 7);
    CHECK(lo < 0.0);
    CHECK(hi > 0.0);
    auto again = bootstrap_ci(vals, 1000, 0.95, 7);
    CHECK(lo == again.first);
    CHECK(hi == again.second);
  }
  SUBCASE("empty rejected") { CHECK_THROWS_AS(bootstrap_ci({}), ValidationError); }
}

TEST_CASE("shuffle ablation degrades alignment on an aligned world") {
  auto world = WorldBundle::aligned(23, {2, 4, 5}, 4, 0.8);
  SyntheticBackend backend(world);
  EstimationOptions opts;
  opts.n_rollouts = 48;
  std::vector<EntropyTrajectory> originals, shuffled;
  for (const auto& q : synthetic_questions(world, 5, 31)) {
    for (const auto& trace : generate_trajectories(backend, q, 2, {}, 17, opts)) {
      originals.push_back(evaluate_trace(backend, q, trace, 17, opts));
      shuffled.push_back(evaluate_shuffled_trace(backend, q, trace, 17, opts));
    }
  }
  auto orig = mean_rho(originals);
  auto shuf = mean_rho(shuffled);
  REQUIRE(orig.has_value());
  REQUIRE(shuf.has_value());
  CHECK(*orig > 0.5);
  CHECK(std::fabs(*shuf) < *orig);
}

TEST_CASE("csv emission") {
  auto rows = aggregate_alignment(
      {{GroupLabels{"m", "d", "base"},
        sia_alignment(make_traj({0, 1, 2}, {3, 2, 1}, {3, 2, 1}))}});
  auto csv = rho_table_csv(rows);
  CHECK(csv.find("model_tag,dataset_tag,training_stage,mean_rho") == 0);
  CHECK(csv.find("m,d,base,1.000000,1,0,") != std::string::npos);

  auto auc = auc_curve({make_traj({0}, {0.1}, {0}, true), make_traj({0}, {0.9}, {0}, false)},
                       {0.0, 1.0}, 10);
  auto auc_csv = auc_curve_csv(auc);
  CHECK(auc_csv.find("s,auc,n_correct,n_incorrect") == 0);
  CHECK(auc_csv.find("1.000000,1,1") != std::string::npos);

  auto sat_csv = saturation_csv(
      {{"q0/0", saturation_detect(make_traj({0, 1, 2, 3}, {1, 0.4, 0.4, 0.4}, {0, 0, 0, 0}),
                                  0.05, 2)}});
  CHECK(sat_csv.find("q0/0,1,1,0.400000,0,0") != std::string::npos);
}

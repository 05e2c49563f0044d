#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sia/prob.hpp"

namespace sia::testutil {

// Dirichlet(1) draw: strictly positive pmf.
inline std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = exp1(rng) + 1e-12;
    sum += x;
  }
  for (double& x : v)
    x /= sum;
  return v;
}

inline ProbDist random_dist(std::mt19937_64& rng, std::size_t n) {
  return ProbDist(random_pmf(rng, n));
}

inline JointTable random_joint(std::mt19937_64& rng, std::vector<Axis> axes) {
  std::size_t cells = 1;
  for (const auto& a : axes)
    cells *= a.size;
  return JointTable(std::move(axes), random_pmf(rng, cells));
}

} // namespace sia::testutil

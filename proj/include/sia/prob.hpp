#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sia {

// All entropic quantities in this library are in nats. +infinity is used as
// an explicit sentinel (zero-mass events), NaN marks indeterminate results
// such as inf - inf.

class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double mass_sum = 1e-9;  // how far a pmf may be from summing to 1
  double identity = 1e-12; // residual allowed in exact identities
};

inline const Tolerances& default_tol() {
  static Tolerances t;
  return t;
}

// A pmf over {0, ..., size-1}.
class ProbDist {
public:
  ProbDist() = default;
  explicit ProbDist(std::vector<double> mass, double mass_tol = default_tol().mass_sum);

  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_.at(i); }
  const std::vector<double>& mass() const { return mass_; }

private:
  std::vector<double> mass_;
};

struct Axis {
  std::string name;
  std::size_t size = 0;
};

// Dense joint pmf over a product of named finite alphabets. Storage is
// row-major with the last axis fastest. Cell count is capped so the exact
// enumeration machinery stays at desk scale.
class JointTable {
public:
  static constexpr std::size_t kDefaultCellCap = 10'000'000;

  JointTable() = default;
  JointTable(std::vector<Axis> axes, std::vector<double> mass,
             double mass_tol = default_tol().mass_sum,
             std::size_t cell_cap = kDefaultCellCap);

  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<double>& mass() const { return mass_; }
  std::size_t cells() const { return mass_.size(); }

  std::size_t axis_index(const std::string& name) const;
  bool has_axis(const std::string& name) const;

  // Linear index from one symbol per axis.
  std::size_t flat_index(const std::vector<std::size_t>& symbols) const;

  // Marginal over the named axes, in the order given.
  JointTable marginal(const std::vector<std::string>& keep) const;

  // Flattened view of the whole table as a single pmf.
  ProbDist flatten() const;

  bool same_shape(const JointTable& other) const;

private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::vector<double> mass_;
};

} // namespace sia

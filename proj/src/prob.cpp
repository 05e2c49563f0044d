#include "sia/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sia {

namespace {

void check_mass(const std::vector<double>& mass, double tol, const char* what) {
  if (mass.empty())
    throw ValidationError(std::string(what) + ": empty mass vector");
  double sum = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0))
      throw ValidationError(std::string(what) + ": negative or NaN mass " + std::to_string(m));
    sum += m;
  }
  if (std::abs(sum - 1.0) > tol)
    throw ValidationError(std::string(what) + ": mass sums to " + std::to_string(sum));
}

} // namespace

ProbDist::ProbDist(std::vector<double> mass, double mass_tol) : mass_(std::move(mass)) {
  check_mass(mass_, mass_tol, "ProbDist");
}

JointTable::JointTable(std::vector<Axis> axes, std::vector<double> mass, double mass_tol,
                       std::size_t cell_cap)
    : axes_(std::move(axes)), mass_(std::move(mass)) {
  if (axes_.empty())
    throw ValidationError("JointTable: no axes");
  std::size_t cells = 1;
  for (const Axis& a : axes_) {
    if (a.size == 0)
      throw ValidationError("JointTable: axis '" + a.name + "' has size 0");
    for (const Axis& b : axes_)
      if (&a != &b && a.name == b.name)
        throw ValidationError("JointTable: duplicate axis name '" + a.name + "'");
    if (cells > cell_cap / a.size)
      throw ValidationError("JointTable: cell count exceeds cap");
    cells *= a.size;
  }
  if (cells != mass_.size())
    throw ValidationError("JointTable: mass has " + std::to_string(mass_.size()) +
                          " cells, axes imply " + std::to_string(cells));
  check_mass(mass_, mass_tol, "JointTable");
  strides_.resize(axes_.size());
  std::size_t s = 1;
  for (std::size_t i = axes_.size(); i-- > 0;) {
    strides_[i] = s;
    s *= axes_[i].size;
  }
}

std::size_t JointTable::axis_index(const std::string& name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name)
      return i;
  throw ValidationError("JointTable: no axis named '" + name + "'");
}

bool JointTable::has_axis(const std::string& name) const {
  for (const Axis& a : axes_)
    if (a.name == name)
      return true;
  return false;
}

std::size_t JointTable::flat_index(const std::vector<std::size_t>& symbols) const {
  if (symbols.size() != axes_.size())
    throw ValidationError("JointTable: symbol count mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (symbols[i] >= axes_[i].size)
      throw ValidationError("JointTable: symbol out of range on axis '" + axes_[i].name + "'");
    idx += symbols[i] * strides_[i];
  }
  return idx;
}

JointTable JointTable::marginal(const std::vector<std::string>& keep) const {
  std::vector<std::size_t> keep_idx;
  keep_idx.reserve(keep.size());
  for (const std::string& name : keep)
    keep_idx.push_back(axis_index(name));

  std::vector<Axis> out_axes;
  std::size_t out_cells = 1;
  for (std::size_t i : keep_idx) {
    out_axes.push_back(axes_[i]);
    out_cells *= axes_[i].size;
  }
  std::vector<std::size_t> out_strides(keep_idx.size());
  {
    std::size_t s = 1;
    for (std::size_t i = keep_idx.size(); i-- > 0;) {
      out_strides[i] = s;
      s *= axes_[keep_idx[i]].size;
    }
  }

  std::vector<double> out(out_cells, 0.0);
  std::vector<std::size_t> sym(axes_.size(), 0);
  for (std::size_t cell = 0; cell < mass_.size(); ++cell) {
    std::size_t o = 0;
    for (std::size_t j = 0; j < keep_idx.size(); ++j)
      o += sym[keep_idx[j]] * out_strides[j];
    out[o] += mass_[cell];
    // odometer increment
    for (std::size_t i = axes_.size(); i-- > 0;) {
      if (++sym[i] < axes_[i].size)
        break;
      sym[i] = 0;
    }
  }
  // bypass the sum check: sums can only be as accurate as the source table
  JointTable m;
  m.axes_ = std::move(out_axes);
  m.mass_ = std::move(out);
  m.strides_ = std::move(out_strides);
  return m;
}

ProbDist JointTable::flatten() const {
  // tolerate accumulated round-off from the source table
  return ProbDist(mass_, 1e-6);
}

bool JointTable::same_shape(const JointTable& other) const {
  if (axes_.size() != other.axes_.size())
    return false;
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].size != other.axes_[i].size)
      return false;
  return true;
}

} // namespace sia

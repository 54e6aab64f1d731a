#pragma once

#include <functional>

#include <Eigen/Dense>

namespace kftune {

using Eigen::VectorXd;
using Eigen::VectorXi;

/// Axis-aligned search domain, lower < upper in every coordinate.
struct SearchBox {
  VectorXd lower;
  VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const VectorXd& q) const;
  VectorXd to_unit(const VectorXd& q) const;
  VectorXd from_unit(const VectorXd& u) const;
  static SearchBox unit(int dim);
};

/// One DIRECT hyperrectangle in unit coordinates. Side i has length
/// 3^-level(i), so every side is a power of 1/3 of the box edge.
struct Rectangle {
  VectorXd center;
  VectorXi level;
  double value = 0.0;

  VectorXd side_lengths() const;
  /// Half the diagonal, the size measure used for hull selection.
  double size() const;
};

struct DirectOptions {
  long budget = 1000;            // maximum objective evaluations
  double epsilon = 1e-4;         // balance parameter for potential optimality
  double stall_tolerance = 1e-12;
  int stall_iterations = 20;
};

struct DirectResult {
  VectorXd x;
  double value = 0.0;
  long evaluations = 0;
  long iterations = 0;
};

/// DIRECT (DIviding RECTangles) minimization of `objective` over `box`.
///
/// Starts from the box center, then repeatedly picks the potentially optimal
/// rectangles (lower-right convex hull of size vs. value, with the epsilon
/// sufficient-decrease test) and trisects them along their longest sides,
/// splitting first along the side whose two new samples are best. Stops at
/// the evaluation budget or after `stall_iterations` iterations without an
/// improvement larger than `stall_tolerance`. Non-finite objective values
/// are replaced by 1e12. Deterministic for a deterministic objective.
DirectResult direct_optimize(const std::function<double(const VectorXd&)>& objective,
                             const SearchBox& box, const DirectOptions& options = {});

}  // namespace kftune

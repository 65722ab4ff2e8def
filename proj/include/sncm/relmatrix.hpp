#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sncm {

/**
 * One group in a predictor hierarchy.
 *
 * The root passed to build_relationship_matrix is an unnamed container at
 * depth 0; its children are the top-level categories (depth 1). Predictors
 * may be attached to any node below the root. Two predictors whose deepest
 * shared group is the root are unrelated.
 */
struct HierarchyNode {
  std::string name;
  std::vector<HierarchyNode> children;
  std::vector<std::size_t> members;
};

/// Symmetric, zero-diagonal, non-negative predictor similarity matrix.
class RelationshipMatrix {
 public:
  RelationshipMatrix() = default;
  /// Validates the invariants; throws std::invalid_argument on violation.
  explicit RelationshipMatrix(Eigen::MatrixXd entries, std::vector<std::string> names = {});

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<std::string>& names() const { return names_; }
  double max_entry() const;

  /// Relabel predictors: result(i, j) = this(perm[i], perm[j]).
  RelationshipMatrix permuted(std::span<const std::size_t> perm) const;

  static RelationshipMatrix zeros(std::size_t p);

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> names_;
};

/// r = exp(a / c) / b with a the depth and b the predictor count of the deepest shared group.
RelationshipMatrix build_relationship_matrix(const HierarchyNode& root);

/// Number of distinct predictors in a hierarchy; throws on duplicates or gaps.
std::size_t hierarchy_predictor_count(const HierarchyNode& root);

/**
 * Hierarchy used by the simulation design: `blocks` categories of
 * `block_size` predictors. Within a category (block_size = 4q), predictors
 * [q, 2q) and [2q, 4q) form subcategories and [3q, 4q) a sub-subcategory
 * inside the second; the first q predictors sit at category level.
 */
HierarchyNode simulation_hierarchy(std::size_t blocks = 15, std::size_t block_size = 20);
RelationshipMatrix simulation_R(std::size_t blocks = 15, std::size_t block_size = 20);

}  // namespace sncm

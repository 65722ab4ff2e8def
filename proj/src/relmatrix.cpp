#include "sncm/relmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sncm {

RelationshipMatrix::RelationshipMatrix(Eigen::MatrixXd entries, std::vector<std::string> names)
    : entries_(std::move(entries)), names_(std::move(names)) {
  if (entries_.rows() != entries_.cols())
    throw std::invalid_argument("relationship matrix must be square");
  const auto p = entries_.rows();
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != p)
    throw std::invalid_argument("relationship matrix: name count does not match dimension");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (entries_(i, i) != 0.0)
      throw std::invalid_argument("relationship matrix: nonzero diagonal at " + std::to_string(i));
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("relationship matrix: negative or non-finite entry at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      if (v != entries_(j, i))
        throw std::invalid_argument("relationship matrix: asymmetric at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
    }
  }
}

double RelationshipMatrix::max_entry() const { return entries_.size() == 0 ? 0.0 : entries_.maxCoeff(); }

RelationshipMatrix RelationshipMatrix::permuted(std::span<const std::size_t> perm) const {
  const std::size_t p = size();
  if (perm.size() != p) throw std::invalid_argument("permutation length mismatch");
  Eigen::MatrixXd out(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) out(i, j) = entries_(perm[i], perm[j]);
  std::vector<std::string> names;
  if (!names_.empty()) {
    names.reserve(p);
    for (std::size_t i = 0; i < p; ++i) names.push_back(names_[perm[i]]);
  }
  return RelationshipMatrix(std::move(out), std::move(names));
}

RelationshipMatrix RelationshipMatrix::zeros(std::size_t p) {
  return RelationshipMatrix(Eigen::MatrixXd::Zero(p, p));
}

namespace {

struct FlatNode {
  std::size_t parent;
  std::size_t depth;
  std::size_t count = 0;  // predictors in the subtree
};

struct Flattened {
  std::vector<FlatNode> nodes;
  std::vector<std::size_t> owner;  // predictor -> node id
  std::size_t max_depth = 0;
};

void flatten(const HierarchyNode& node, std::size_t parent, std::size_t depth, Flattened& out,
             std::vector<std::pair<std::size_t, std::size_t>>& placements) {
  const std::size_t id = out.nodes.size();
  out.nodes.push_back({parent, depth, 0});
  if (node.children.empty() && node.members.empty() && depth > 0)
    throw std::invalid_argument("hierarchy: empty group '" + node.name + "'");
  for (std::size_t m : node.members) {
    if (depth == 0)
      throw std::invalid_argument("hierarchy: predictors must sit below the root container");
    placements.emplace_back(m, id);
    out.max_depth = std::max(out.max_depth, depth);
  }
  for (const auto& child : node.children) flatten(child, id, depth + 1, out, placements);
}

Flattened flatten_checked(const HierarchyNode& root) {
  Flattened flat;
  std::vector<std::pair<std::size_t, std::size_t>> placements;
  flatten(root, 0, 0, flat, placements);
  const std::size_t p = placements.size();
  flat.owner.assign(p, static_cast<std::size_t>(-1));
  for (auto [member, node] : placements) {
    if (member >= p)
      throw std::invalid_argument("hierarchy: predictor index " + std::to_string(member) +
                                  " outside 0.." + std::to_string(p - 1));
    if (flat.owner[member] != static_cast<std::size_t>(-1))
      throw std::invalid_argument("hierarchy: predictor " + std::to_string(member) +
                                  " appears in more than one group");
    flat.owner[member] = node;
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t id = flat.owner[j];; id = flat.nodes[id].parent) {
      ++flat.nodes[id].count;
      if (id == 0) break;
    }
  }
  return flat;
}

}  // namespace

std::size_t hierarchy_predictor_count(const HierarchyNode& root) {
  return flatten_checked(root).owner.size();
}

RelationshipMatrix build_relationship_matrix(const HierarchyNode& root) {
  const Flattened flat = flatten_checked(root);
  const std::size_t p = flat.owner.size();
  const double c = static_cast<double>(flat.max_depth);

  std::vector<std::vector<std::size_t>> paths(p);  // root-to-owner node ids
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t id = flat.owner[j];; id = flat.nodes[id].parent) {
      paths[j].push_back(id);
      if (id == 0) break;
    }
    std::reverse(paths[j].begin(), paths[j].end());
  }

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const auto& a = paths[i];
      const auto& b = paths[j];
      std::size_t k = 0;
      while (k + 1 < a.size() && k + 1 < b.size() && a[k + 1] == b[k + 1]) ++k;
      const FlatNode& shared = flat.nodes[a[k]];
      if (shared.depth == 0) continue;
      const double v = std::exp(static_cast<double>(shared.depth) / c) / static_cast<double>(shared.count);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return RelationshipMatrix(std::move(r));
}

HierarchyNode simulation_hierarchy(std::size_t blocks, std::size_t block_size) {
  if (blocks == 0 || block_size == 0 || block_size % 4 != 0)
    throw std::invalid_argument("simulation_hierarchy: block_size must be a positive multiple of 4");
  const std::size_t q = block_size / 4;
  HierarchyNode root{"all", {}, {}};
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t off = b * block_size;
    HierarchyNode block{"category" + std::to_string(b + 1), {}, {}};
    for (std::size_t j = 0; j < q; ++j) block.members.push_back(off + j);
    HierarchyNode sub_a{block.name + ".a", {}, {}};
    for (std::size_t j = q; j < 2 * q; ++j) sub_a.members.push_back(off + j);
    HierarchyNode sub_b{block.name + ".b", {}, {}};
    for (std::size_t j = 2 * q; j < 3 * q; ++j) sub_b.members.push_back(off + j);
    HierarchyNode sub_b1{block.name + ".b.1", {}, {}};
    for (std::size_t j = 3 * q; j < 4 * q; ++j) sub_b1.members.push_back(off + j);
    sub_b.children.push_back(std::move(sub_b1));
    block.children.push_back(std::move(sub_a));
    block.children.push_back(std::move(sub_b));
    root.children.push_back(std::move(block));
  }
  return root;
}

RelationshipMatrix simulation_R(std::size_t blocks, std::size_t block_size) {
  return build_relationship_matrix(simulation_hierarchy(blocks, block_size));
}

}  // namespace sncm

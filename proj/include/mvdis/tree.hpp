#pragma once

#include <span>
#include <vector>

#include "mvdis/common.hpp"

namespace mvdis {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

/// One node of a CART tree. A node is a leaf iff `feature < 0`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    NodeId parent = kNoNode;
    int depth = 0;
    std::vector<int> class_counts;  // in-bag counts (bootstrap multiplicity), leaves only
    ClassIndex label = 0;           // leaves only

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Array-encoded binary decision tree. Node 0 is the root; ids are assigned in
/// depth-first preorder (left subtree first) by fit_tree.
class DecisionTree {
public:
    DecisionTree() = default;

    /// Builds a tree from explicit nodes (root = node 0). Parent links and
    /// depths are recomputed from child links. Throws DataError on a malformed
    /// structure (cycles, unreachable nodes, dangling ids).
    static DecisionTree from_nodes(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t n_classes);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    std::size_t n_features() const { return n_features_; }
    std::size_t n_classes() const { return n_classes_; }
    bool is_leaf(NodeId id) const { return node(id).is_leaf(); }
    std::vector<NodeId> leaves() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    friend class TreeBuilder;
    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
};

/// Grows a CART tree to maximum depth on the bootstrap `sample` (row indices
/// of X, repeats allowed and counted as weights).
///
/// At each node features are visited in a random order. Constant features are
/// skipped without counting. Once `mtry` non-constant features have been
/// evaluated the best Gini split so far is taken if it strictly reduces
/// impurity; otherwise further features are visited until one does or all are
/// exhausted. Candidate thresholds are midpoints between consecutive distinct
/// values. Ties go to the smallest column index, then the smallest threshold.
/// A node becomes a leaf when pure or when no feature reduces impurity; its
/// label is the majority in-bag class (ties to the smallest class index).
DecisionTree fit_tree(const Matrix& X, const Labels& y, std::size_t n_classes, std::span<const std::size_t> sample,
                      std::size_t mtry, Rng& rng);

/// Leaf reached by x ("x[feature] <= threshold" goes left). Throws DataError on
/// a non-finite component or a dimension mismatch.
NodeId leaf_of(const DecisionTree& tree, std::span<const double> x);

/// Leaf reached by x, without validating it.
NodeId leaf_of_unchecked(const DecisionTree& tree, std::span<const double> x);

/// Sorted set of features tested on the root-to-leaf path.
std::vector<int> path_features(const DecisionTree& tree, NodeId leaf);

/// Number of edges on the tree path between two leaves.
int leaf_path_length(const DecisionTree& tree, NodeId a, NodeId b);

ClassIndex predict_tree(const DecisionTree& tree, std::span<const double> x);

}  // namespace mvdis

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvdis/tree.hpp"

namespace mvdis {

/// Bagged ensemble of CART trees with its bootstrap bookkeeping.
struct Forest {
    std::vector<DecisionTree> trees;
    /// in_bag[p][i]: number of times training row i was drawn for tree p.
    std::vector<std::vector<int>> in_bag;
    /// leaf_table[p][i]: leaf of tree p reached by training row i.
    std::vector<std::vector<NodeId>> leaf_table;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::uint64_t seed = 0;

    std::size_t n_trees() const { return trees.size(); }
    std::size_t n_train() const { return leaf_table.empty() ? 0 : leaf_table.front().size(); }
    bool is_oob(std::size_t p, std::size_t i) const { return in_bag[p][i] == 0; }
    /// Number of trees whose bootstrap left no instance out of bag.
    std::size_t trees_without_oob() const;

    friend bool operator==(const Forest&, const Forest&) = default;
};

/// Resolves an mtry policy ("sqrt", "log2", "all" or a positive integer) for m
/// features. Integers larger than m are clamped to m.
std::size_t resolve_mtry(const std::string& policy, std::size_t n_features);

/// Grows `p_trees` trees, tree p on its own bootstrap drawn from the stream
/// derived from (seed, p). Output is independent of `jobs`.
Forest fit_forest(const Matrix& X, const Labels& y, std::size_t n_classes, std::size_t p_trees, std::size_t mtry,
                  std::uint64_t seed, unsigned jobs = 1);

/// Builds a forest from already grown trees and their bootstrap counts,
/// filling the leaf table from the training rows X.
Forest assemble_forest(std::vector<DecisionTree> trees, std::vector<std::vector<int>> in_bag, const Matrix& X,
                       std::uint64_t seed = 0);

/// Per-class tree-vote counts for x.
std::vector<int> forest_votes(const Forest& forest, std::span<const double> x);

/// Hard majority vote; ties go to the smallest class index.
ClassIndex predict_forest(const Forest& forest, std::span<const double> x);

/// Entry (p, i) is present iff row i is out of bag for tree p, and holds
/// whether tree p predicts y[i] correctly.
std::vector<std::vector<std::optional<bool>>> oob_correct(const Forest& forest, const Matrix& X, const Labels& y);

}  // namespace mvdis

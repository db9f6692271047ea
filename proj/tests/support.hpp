#pragma once

// Reference implementations used by the tests. They deliberately avoid the
// library's helpers (no leaf table, no nth_element, no cached paths).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "mvdis/common.hpp"
#include "mvdis/forest.hpp"

namespace oracle {

using mvdis::DecisionTree;
using mvdis::Forest;
using mvdis::Labels;
using mvdis::Matrix;
using mvdis::NodeId;

inline NodeId descend(const DecisionTree& t, const double* x) {
    NodeId id = 0;
    while (!t.node(id).is_leaf()) {
        const auto& nd = t.node(id);
        id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return id;
}

inline std::vector<int> features_on_path(const DecisionTree& t, const double* x) {
    std::vector<bool> used(t.n_features(), false);
    NodeId id = 0;
    while (!t.node(id).is_leaf()) {
        const auto& nd = t.node(id);
        used[static_cast<std::size_t>(nd.feature)] = true;
        id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    std::vector<int> out;
    for (std::size_t f = 0; f < used.size(); ++f)
        if (used[f]) out.push_back(static_cast<int>(f));
    return out;
}

// 1 - (#trees with a shared leaf) / P
inline Matrix plain(const Forest& f, const Matrix& X, const Matrix& Q) {
    Matrix out(Q.rows(), X.rows());
    const double P = static_cast<double>(f.n_trees());
    for (std::size_t r = 0; r < Q.rows(); ++r) {
        for (std::size_t i = 0; i < X.rows(); ++i) {
            int shared = 0;
            for (const auto& t : f.trees)
                if (descend(t, Q.row(r).data()) == descend(t, X.row(i).data())) ++shared;
            out(r, i) = 1.0 - static_cast<double>(shared) / P;
        }
    }
    return out;
}

// Fraction of the k nearest other rows (full sort, index tiebreak) that carry
// a different label, in the given feature subspace.
inline double kdn(const Matrix& X, const Labels& y, std::size_t i, const std::vector<int>& feats, int k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < X.rows(); ++j) {
        if (j == i) continue;
        double s = 0.0;
        for (int f : feats) {
            const double diff = X(i, static_cast<std::size_t>(f)) - X(j, static_cast<std::size_t>(f));
            s += diff * diff;
        }
        d.emplace_back(s, j);
    }
    std::sort(d.begin(), d.end());
    int disagree = 0;
    for (int a = 0; a < k; ++a)
        if (y[d[static_cast<std::size_t>(a)].second] != y[i]) ++disagree;
    return static_cast<double>(disagree) / static_cast<double>(k);
}

inline Matrix instance_hardness(const Forest& f, const Matrix& X, const Labels& y, const Matrix& Q, int k) {
    const std::size_t n = X.rows();
    std::vector<std::vector<double>> hard(f.n_trees(), std::vector<double>(n));
    for (std::size_t p = 0; p < f.n_trees(); ++p)
        for (std::size_t i = 0; i < n; ++i)
            hard[p][i] = kdn(X, y, i, features_on_path(f.trees[p], X.row(i).data()), k);
    Matrix out(Q.rows(), n);
    const double P = static_cast<double>(f.n_trees());
    for (std::size_t r = 0; r < Q.rows(); ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t p = 0; p < f.n_trees(); ++p)
                if (descend(f.trees[p], Q.row(r).data()) == descend(f.trees[p], X.row(i).data())) s += 1.0 - hard[p][i];
            out(r, i) = 1.0 - s / P;
        }
    }
    return out;
}

// P(X >= c) for X ~ Binomial(n, 1/2), by Pascal's triangle in long double.
inline long double upper_tail(int n, int c) {
    std::vector<long double> row{1.0L};
    for (int i = 0; i < n; ++i) {
        std::vector<long double> next(row.size() + 1, 0.0L);
        for (std::size_t j = 0; j < row.size(); ++j) {
            next[j] += row[j] / 2;
            next[j + 1] += row[j] / 2;
        }
        row = std::move(next);
    }
    long double s = 0.0L;
    for (int j = std::max(c, 0); j <= n; ++j) s += row[static_cast<std::size_t>(j)];
    return s;
}

inline int critical_wins(int n, double alpha) {
    for (int c = 0; c <= n; ++c)
        if (upper_tail(n, c) <= static_cast<long double>(alpha) / 2) return c;
    return n + 1;
}

}  // namespace oracle

namespace fixture {

// Eleven-node tree, one feature. Root #0 splits into #1 and leaf #10; #1, #3,
// #5 and #7 each have a leaf on the left (#2, #4, #6, #8) and continue on the
// right, ending in leaves #8 and #9. Rows x = 0,1,2,3,4,6 reach #2,#4,#6,#8,#9,#10.
inline mvdis::DecisionTree chain_tree() {
    using mvdis::TreeNode;
    std::vector<TreeNode> nodes(11);
    auto split = [&](int id, double thr, int l, int r) {
        nodes[static_cast<std::size_t>(id)].feature = 0;
        nodes[static_cast<std::size_t>(id)].threshold = thr;
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
    };
    split(0, 5.0, 1, 10);
    split(1, 0.5, 2, 3);
    split(3, 1.5, 4, 5);
    split(5, 2.5, 6, 7);
    split(7, 3.5, 8, 9);
    for (int leaf : {2, 4, 6, 8, 9, 10}) {
        nodes[static_cast<std::size_t>(leaf)].class_counts = {1, 0};
        nodes[static_cast<std::size_t>(leaf)].label = 0;
    }
    return mvdis::DecisionTree::from_nodes(std::move(nodes), 1, 2);
}

// Random dataset with a few discrete-valued features (to provoke ties) and
// some continuous ones.
inline std::pair<mvdis::Matrix, mvdis::Labels> random_table(std::uint64_t seed, std::size_t n, std::size_t m,
                                                             std::size_t classes) {
    mvdis::Rng rng(seed);
    mvdis::Matrix X(n, m);
    mvdis::Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < m; ++f)
            X(i, f) = f % 2 == 0 ? static_cast<double>(rng.uniform_index(4)) : rng.normal();
        y[i] = static_cast<mvdis::ClassIndex>(rng.uniform_index(classes));
    }
    return {X, y};
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("mvdis_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace fixture

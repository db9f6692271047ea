#include "mvdis/tree.hpp"

#include <cassert>
#include <cmath>
#include <numeric>

namespace mvdis {

std::vector<NodeId> DecisionTree::leaves() const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf()) out.push_back(static_cast<NodeId>(i));
    }
    return out;
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t n_classes) {
    if (nodes.empty()) throw DataError("tree has no nodes");
    const auto count = static_cast<NodeId>(nodes.size());
    std::vector<bool> seen(nodes.size(), false);
    std::vector<NodeId> stack{0};
    nodes[0].parent = kNoNode;
    nodes[0].depth = 0;
    seen[0] = true;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        TreeNode& nd = nodes[static_cast<std::size_t>(id)];
        if (nd.is_leaf()) {
            if (nd.class_counts.empty()) nd.class_counts.assign(n_classes, 0);
            if (nd.class_counts.size() != n_classes || nd.label < 0 ||
                static_cast<std::size_t>(nd.label) >= n_classes) {
                throw DataError("tree leaf " + std::to_string(id) + " has inconsistent class data");
            }
            nd.left = nd.right = kNoNode;
            continue;
        }
        if (static_cast<std::size_t>(nd.feature) >= n_features) {
            throw DataError("tree node " + std::to_string(id) + " splits on feature out of range");
        }
        for (NodeId child : {nd.left, nd.right}) {
            if (child <= 0 || child >= count || seen[static_cast<std::size_t>(child)]) {
                throw DataError("tree node " + std::to_string(id) + " has an invalid child link");
            }
            seen[static_cast<std::size_t>(child)] = true;
            nodes[static_cast<std::size_t>(child)].parent = id;
            nodes[static_cast<std::size_t>(child)].depth = nd.depth + 1;
            stack.push_back(child);
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw DataError("tree has nodes unreachable from the root");
    }
    DecisionTree tree;
    tree.nodes_ = std::move(nodes);
    tree.n_features_ = n_features;
    tree.n_classes_ = n_classes;
    return tree;
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const Labels& y, std::size_t n_classes, std::size_t mtry, Rng& rng)
        : X_(X), y_(y), n_classes_(n_classes), mtry_(mtry), rng_(rng), features_(X.cols()) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::span<const std::size_t> sample) {
        struct Work {
            std::vector<std::size_t> rows;
            NodeId parent;
            bool is_left;
            int depth;
        };
        DecisionTree tree;
        tree.n_features_ = X_.cols();
        tree.n_classes_ = n_classes_;
        auto& nodes = tree.nodes_;

        std::vector<Work> stack;
        stack.push_back({std::vector<std::size_t>(sample.begin(), sample.end()), kNoNode, false, 0});
        while (!stack.empty()) {
            Work w = std::move(stack.back());
            stack.pop_back();
            const auto id = static_cast<NodeId>(nodes.size());
            nodes.emplace_back();
            nodes[id].parent = w.parent;
            nodes[id].depth = w.depth;
            if (w.parent != kNoNode) {
                (w.is_left ? nodes[w.parent].left : nodes[w.parent].right) = id;
            }

            std::vector<int> counts(n_classes_, 0);
            for (std::size_t r : w.rows) ++counts[y_[r]];
            const auto nonzero = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; });

            Split split;
            if (nonzero > 1) split = best_split(w.rows, counts);
            if (split.feature < 0) {
                nodes[id].class_counts = counts;
                nodes[id].label = static_cast<ClassIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
                continue;
            }
            nodes[id].feature = split.feature;
            nodes[id].threshold = split.threshold;

            std::vector<std::size_t> left, right;
            for (std::size_t r : w.rows) {
                (X_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
            }
            stack.push_back({std::move(right), id, false, w.depth + 1});
            stack.push_back({std::move(left), id, true, w.depth + 1});
        }
        return tree;
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -1.0;
    };

    static double sum_squares(const std::vector<double>& c) {
        double s = 0.0;
        for (double v : c) s += v * v;
        return s;
    }

    // Score = sum over children of (sum_k count_k^2) / size, which is the
    // parent's weighted Gini impurity minus the children's, up to a constant.
    Split best_split(const std::vector<std::size_t>& rows, const std::vector<int>& parent_counts) {
        const double n = static_cast<double>(rows.size());
        double parent_sq = 0.0;
        for (int c : parent_counts) parent_sq += static_cast<double>(c) * c;
        const double parent_score = parent_sq / n;
        const double min_gain = 1e-10 * n;

        Split best;
        std::size_t evaluated = 0;
        std::vector<std::pair<double, ClassIndex>> column(rows.size());
        std::vector<double> left(n_classes_), right(n_classes_);
        for (std::size_t visited = 0; visited < features_.size(); ++visited) {
            if (evaluated >= mtry_ && best.feature >= 0 && best.score - parent_score > min_gain) break;
            std::swap(features_[visited], features_[visited + rng_.uniform_index(features_.size() - visited)]);
            const std::size_t f = features_[visited];

            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {X_(rows[i], f), y_[rows[i]]};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            ++evaluated;

            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t k = 0; k < n_classes_; ++k) right[k] = parent_counts[k];
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left[column[i].second] += 1.0;
                right[column[i].second] -= 1.0;
                const double a = column[i].first;
                const double b = column[i + 1].first;
                if (a == b) continue;
                const double nl = static_cast<double>(i + 1);
                const double score = sum_squares(left) / nl + sum_squares(right) / (n - nl);
                double threshold = a / 2.0 + b / 2.0;
                if (!(threshold < b) || threshold < a) threshold = a;
                const bool better = score > best.score ||
                                    (score == best.score && (static_cast<int>(f) < best.feature ||
                                                             (static_cast<int>(f) == best.feature && threshold < best.threshold)));
                if (better) best = {static_cast<int>(f), threshold, score};
            }
        }
        if (best.feature < 0 || !(best.score - parent_score > min_gain)) return {};
        return best;
    }

    const Matrix& X_;
    const Labels& y_;
    std::size_t n_classes_;
    std::size_t mtry_;
    Rng& rng_;
    std::vector<std::size_t> features_;
};

DecisionTree fit_tree(const Matrix& X, const Labels& y, std::size_t n_classes, std::span<const std::size_t> sample,
                      std::size_t mtry, Rng& rng) {
    if (sample.empty()) throw DataError("cannot fit a tree on an empty sample");
    if (X.cols() == 0) throw DataError("cannot fit a tree on zero features");
    if (mtry < 1 || mtry > X.cols()) {
        throw ConfigError("mtry must be in [1, " + std::to_string(X.cols()) + "], got " + std::to_string(mtry));
    }
    if (y.size() != X.rows()) throw DataError("label count does not match row count");
    for (std::size_t r : sample) {
        if (r >= X.rows()) throw DataError("sample index out of range");
        if (y[r] < 0 || static_cast<std::size_t>(y[r]) >= n_classes) throw DataError("label out of range");
    }
    return TreeBuilder(X, y, n_classes, mtry, rng).build(sample);
}

NodeId leaf_of_unchecked(const DecisionTree& tree, std::span<const double> x) {
    const auto& nodes = tree.nodes();
    NodeId id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return id;
}

NodeId leaf_of(const DecisionTree& tree, std::span<const double> x) {
    if (x.size() != tree.n_features()) {
        throw DataError("feature vector has " + std::to_string(x.size()) + " components, tree expects " +
                        std::to_string(tree.n_features()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw DataError("feature vector has a non-finite component");
    }
    return leaf_of_unchecked(tree, x);
}

namespace {

void require_leaf(const DecisionTree& tree, NodeId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= tree.size() || !tree.is_leaf(id)) {
        throw DataError("node " + std::to_string(id) + " is not a leaf of this tree");
    }
}

}  // namespace

std::vector<int> path_features(const DecisionTree& tree, NodeId leaf) {
    require_leaf(tree, leaf);
    std::vector<int> out;
    for (NodeId p = tree.node(leaf).parent; p != kNoNode; p = tree.node(p).parent) {
        out.push_back(tree.node(p).feature);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

int leaf_path_length(const DecisionTree& tree, NodeId a, NodeId b) {
    assert(a >= 0 && static_cast<std::size_t>(a) < tree.size());
    assert(b >= 0 && static_cast<std::size_t>(b) < tree.size());
    require_leaf(tree, a);
    require_leaf(tree, b);
    int edges = 0;
    while (a != b) {
        if (tree.node(a).depth >= tree.node(b).depth) {
            a = tree.node(a).parent;
        } else {
            b = tree.node(b).parent;
        }
        ++edges;
    }
    return edges;
}

ClassIndex predict_tree(const DecisionTree& tree, std::span<const double> x) {
    return tree.node(leaf_of(tree, x)).label;
}

}  // namespace mvdis

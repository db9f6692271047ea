#include "mvdis/forest.hpp"

#include <charconv>
#include <cmath>

namespace mvdis {

namespace {
constexpr std::uint64_t kTreeStream = 0x7ee5;
}

std::size_t Forest::trees_without_oob() const {
    std::size_t count = 0;
    for (const auto& counts : in_bag) {
        if (std::none_of(counts.begin(), counts.end(), [](int c) { return c == 0; })) ++count;
    }
    return count;
}

std::size_t resolve_mtry(const std::string& policy, std::size_t n_features) {
    if (n_features == 0) throw DataError("cannot choose mtry for zero features");
    const double m = static_cast<double>(n_features);
    std::size_t value = 0;
    if (policy == "sqrt") {
        value = static_cast<std::size_t>(std::floor(std::sqrt(m)));
    } else if (policy == "log2") {
        value = static_cast<std::size_t>(std::floor(std::log2(m)));
    } else if (policy == "all") {
        value = n_features;
    } else {
        const auto [ptr, ec] = std::from_chars(policy.data(), policy.data() + policy.size(), value);
        if (ec != std::errc() || ptr != policy.data() + policy.size() || value == 0) {
            throw ConfigError("invalid mtry policy '" + policy + "' (expected sqrt, log2, all or a positive integer)");
        }
    }
    return std::clamp<std::size_t>(value, 1, n_features);
}

Forest assemble_forest(std::vector<DecisionTree> trees, std::vector<std::vector<int>> in_bag, const Matrix& X,
                       std::uint64_t seed) {
    if (trees.empty()) throw ConfigError("a forest needs at least one tree");
    if (in_bag.size() != trees.size()) throw DataError("in-bag table does not match tree count");
    Forest f;
    f.n_classes = trees.front().n_classes();
    f.n_features = trees.front().n_features();
    f.seed = seed;
    if (X.cols() != f.n_features) throw DataError("training matrix width does not match the trees");
    f.leaf_table.resize(trees.size());
    for (std::size_t p = 0; p < trees.size(); ++p) {
        if (in_bag[p].size() != X.rows()) throw DataError("in-bag row does not match training size");
        f.leaf_table[p].resize(X.rows());
        for (std::size_t i = 0; i < X.rows(); ++i) f.leaf_table[p][i] = leaf_of(trees[p], X.row(i));
    }
    f.trees = std::move(trees);
    f.in_bag = std::move(in_bag);
    return f;
}

Forest fit_forest(const Matrix& X, const Labels& y, std::size_t n_classes, std::size_t p_trees, std::size_t mtry,
                  std::uint64_t seed, unsigned jobs) {
    if (p_trees < 1) throw ConfigError("number of trees must be at least 1");
    if (X.rows() == 0) throw DataError("cannot fit a forest on zero rows");
    if (y.size() != X.rows()) throw DataError("label count does not match row count");
    const std::size_t n = X.rows();

    Forest f;
    f.n_classes = n_classes;
    f.n_features = X.cols();
    f.seed = seed;
    f.trees.resize(p_trees);
    f.in_bag.assign(p_trees, std::vector<int>(n, 0));
    f.leaf_table.assign(p_trees, std::vector<NodeId>(n, 0));

    parallel_for(p_trees, jobs, [&](std::size_t p) {
        Rng rng(derive_seed(seed, kTreeStream, p));
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) {
            s = rng.uniform_index(n);
            ++f.in_bag[p][s];
        }
        f.trees[p] = fit_tree(X, y, n_classes, sample, mtry, rng);
        for (std::size_t i = 0; i < n; ++i) f.leaf_table[p][i] = leaf_of_unchecked(f.trees[p], X.row(i));
    });
    return f;
}

std::vector<int> forest_votes(const Forest& forest, std::span<const double> x) {
    std::vector<int> votes(forest.n_classes, 0);
    for (const auto& tree : forest.trees) ++votes[static_cast<std::size_t>(predict_tree(tree, x))];
    return votes;
}

ClassIndex predict_forest(const Forest& forest, std::span<const double> x) {
    if (forest.trees.empty()) throw ConfigError("forest has no trees");
    const auto votes = forest_votes(forest, x);
    return static_cast<ClassIndex>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<std::vector<std::optional<bool>>> oob_correct(const Forest& forest, const Matrix& X, const Labels& y) {
    std::vector<std::vector<std::optional<bool>>> out(forest.n_trees());
    for (std::size_t p = 0; p < forest.n_trees(); ++p) {
        out[p].resize(X.rows());
        for (std::size_t i = 0; i < X.rows(); ++i) {
            if (!forest.is_oob(p, i)) continue;
            out[p][i] = predict_tree(forest.trees[p], X.row(i)) == y[i];
        }
    }
    return out;
}

}  // namespace mvdis

#include "mvdis/dissim.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace mvdis {

namespace {

constexpr std::array<std::pair<std::string_view, Measure>, 10> kMeasureNames{{
    {"plain", Measure::plain},
    {"path_based", Measure::path_based},
    {"node_confidence", Measure::node_confidence},
    {"instance_hardness", Measure::instance_hardness},
    {"euclidean", Measure::euclidean},
    {"rf", Measure::plain},
    {"pb", Measure::path_based},
    {"nc", Measure::node_confidence},
    {"ih", Measure::instance_hardness},
    {"eu", Measure::euclidean},
}};

void check_query(const Forest& forest, const Matrix& X_query) {
    if (forest.trees.empty()) throw ConfigError("forest has no trees");
    if (X_query.cols() != forest.n_features) {
        throw DataError("query matrix has " + std::to_string(X_query.cols()) + " columns, forest expects " +
                        std::to_string(forest.n_features));
    }
    for (double v : X_query.data()) {
        if (!std::isfinite(v)) throw DataError("query matrix has a non-finite value");
    }
}

// Accumulates, for every query row t and training row i, the per-tree
// similarity s_p over trees p = 0..P-1 in order, then stores 1 - s / P.
// `tree_similarity(p, query_leaf, out)` adds tree p's contribution for every
// training row into `out`.
template <typename TreeSimilarity>
Matrix accumulate(const Forest& forest, const Matrix& X_query, unsigned jobs, TreeSimilarity&& tree_similarity) {
    check_query(forest, X_query);
    const std::size_t n = forest.n_train();
    const double P = static_cast<double>(forest.n_trees());
    Matrix out(X_query.rows(), n);
    parallel_for(X_query.rows(), jobs, [&](std::size_t t) {
        std::vector<double> s(n, 0.0);
        const auto x = X_query.row(t);
        for (std::size_t p = 0; p < forest.n_trees(); ++p) {
            tree_similarity(p, leaf_of_unchecked(forest.trees[p], x), s);
        }
        auto row = out.row(t);
        for (std::size_t i = 0; i < n; ++i) row[i] = 1.0 - s[i] / P;
    });
    return out;
}

// Edge counts from `from` to every node of the tree.
std::vector<int> distances_from(const DecisionTree& tree, NodeId from) {
    std::vector<int> dist(tree.size(), -1);
    std::vector<NodeId> frontier{from};
    dist[static_cast<std::size_t>(from)] = 0;
    while (!frontier.empty()) {
        const NodeId v = frontier.back();
        frontier.pop_back();
        const TreeNode& nd = tree.node(v);
        for (NodeId u : {nd.parent, nd.left, nd.right}) {
            if (u == kNoNode || dist[static_cast<std::size_t>(u)] >= 0) continue;
            dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
            frontier.push_back(u);
        }
    }
    return dist;
}

void require_cache(const Forest& forest, const std::vector<std::vector<double>>& table, const char* what) {
    if (table.size() != forest.n_trees()) {
        throw ConfigError(std::string("measure cache has no ") + what + " entries for this forest");
    }
}

}  // namespace

std::string_view measure_name(Measure m) {
    for (const auto& [name, value] : kMeasureNames) {
        if (value == m) return name;
    }
    return "unknown";
}

Measure parse_measure(std::string_view name) {
    for (const auto& [n, value] : kMeasureNames) {
        if (n == name) return value;
    }
    std::string valid;
    for (const auto& n : measure_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown measure '" + std::string(name) + "' (valid: " + valid + ")");
}

std::vector<std::string> measure_names() {
    std::vector<std::string> out;
    for (const auto& [name, value] : kMeasureNames) out.emplace_back(name);
    return out;
}

DissimilarityMatrix rfd_plain(const Forest& forest, const Matrix& X_query, unsigned jobs) {
    Matrix values = accumulate(forest, X_query, jobs, [&](std::size_t p, NodeId leaf, std::vector<double>& s) {
        const auto& leaves = forest.leaf_table[p];
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (leaves[i] == leaf) s[i] += 1.0;
        }
    });
    return {std::move(values), Measure::plain, std::nullopt};
}

DissimilarityMatrix rfd_path_based(const Forest& forest, const Matrix& X_query, double w, unsigned jobs) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("path-based weight w must be positive and finite");
    Matrix values = accumulate(forest, X_query, jobs, [&](std::size_t p, NodeId leaf, std::vector<double>& s) {
        const auto dist = distances_from(forest.trees[p], leaf);
        std::vector<double> sim(dist.size());
        for (std::size_t v = 0; v < dist.size(); ++v) sim[v] = std::exp(-w * static_cast<double>(dist[v]));
        const auto& leaves = forest.leaf_table[p];
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += sim[static_cast<std::size_t>(leaves[i])];
    });
    return {std::move(values), Measure::path_based, std::nullopt};
}

double leaf_confidence(const Forest& forest, const Labels& y, std::size_t p, NodeId leaf) {
    const ClassIndex predicted = forest.trees.at(p).node(leaf).label;
    std::size_t members = 0;
    std::size_t correct = 0;
    const auto& leaves = forest.leaf_table[p];
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i] != leaf) continue;
        ++members;
        if (y[i] == predicted) ++correct;
    }
    return members == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(members);
}

double leaf_confidence(const Forest& forest, const Matrix& X, const Labels& y, std::size_t p, NodeId leaf) {
    const DecisionTree& tree = forest.trees.at(p);
    if (!tree.is_leaf(leaf)) throw DataError("node " + std::to_string(leaf) + " is not a leaf");
    std::size_t members = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        if (leaf_of(tree, X.row(i)) != leaf) continue;
        ++members;
        if (predict_tree(tree, X.row(i)) == y[i]) ++correct;
    }
    return members == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(members);
}

MeasureCache build_confidence_cache(const Forest& forest, const Labels& y) {
    if (y.size() != forest.n_train()) throw DataError("label count does not match the forest's training set");
    MeasureCache cache;
    cache.confidence.resize(forest.n_trees());
    for (std::size_t p = 0; p < forest.n_trees(); ++p) {
        const DecisionTree& tree = forest.trees[p];
        std::vector<std::size_t> members(tree.size(), 0), correct(tree.size(), 0);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const auto leaf = static_cast<std::size_t>(forest.leaf_table[p][i]);
            ++members[leaf];
            if (tree.nodes()[leaf].label == y[i]) ++correct[leaf];
        }
        auto& conf = cache.confidence[p];
        conf.assign(tree.size(), 0.0);
        for (std::size_t v = 0; v < tree.size(); ++v) {
            if (members[v] > 0) conf[v] = static_cast<double>(correct[v]) / static_cast<double>(members[v]);
        }
    }
    return cache;
}

DissimilarityMatrix rfd_node_confidence(const Forest& forest, const MeasureCache& cache, const Matrix& X_query,
                                        unsigned jobs) {
    require_cache(forest, cache.confidence, "leaf confidence");
    Matrix values = accumulate(forest, X_query, jobs, [&](std::size_t p, NodeId leaf, std::vector<double>& s) {
        const double weight = cache.confidence[p][static_cast<std::size_t>(leaf)];
        const auto& leaves = forest.leaf_table[p];
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (leaves[i] == leaf) s[i] += weight;
        }
    });
    return {std::move(values), Measure::node_confidence, std::nullopt};
}

DissimilarityMatrix rfd_node_confidence(const Forest& forest, const Matrix& X, const Labels& y,
                                        const Matrix& X_query, unsigned jobs) {
    if (X.rows() != forest.n_train()) throw DataError("training matrix does not match the forest");
    return rfd_node_confidence(forest, build_confidence_cache(forest, y), X_query, jobs);
}

namespace {

void check_kdn_args(const Forest& forest, const Matrix& X, const Labels& y, int k) {
    const std::size_t n = X.rows();
    if (n != forest.n_train() || y.size() != n) throw DataError("training data does not match the forest");
    if (X.cols() != forest.n_features) throw DataError("training matrix width does not match the forest");
    if (k < 1 || static_cast<std::size_t>(k) >= n) {
        throw ConfigError("k must be in [1, " + std::to_string(n - 1) + "], got " + std::to_string(k));
    }
}

// Projects all rows of X onto `features` (row-major, |features| columns).
std::vector<double> project(const Matrix& X, const std::vector<int>& features) {
    std::vector<double> z(X.rows() * features.size());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t c = 0; c < features.size(); ++c) {
            z[r * features.size() + c] = X(r, static_cast<std::size_t>(features[c]));
        }
    }
    return z;
}

double kdn_projected(const std::vector<double>& z, std::size_t dims, std::size_t n, std::size_t i, int k,
                     const Labels& y, std::vector<std::pair<double, std::size_t>>& scratch) {
    scratch.clear();
    const double* xi = z.data() + i * dims;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* xj = z.data() + j * dims;
        double d = 0.0;
        for (std::size_t c = 0; c < dims; ++c) {
            const double diff = xi[c] - xj[c];
            d += diff * diff;
        }
        scratch.emplace_back(d, j);
    }
    const auto kth = scratch.begin() + (k - 1);
    std::nth_element(scratch.begin(), kth, scratch.end());
    int disagree = 0;
    for (auto it = scratch.begin(); it <= kth; ++it) {
        if (y[it->second] != y[i]) ++disagree;
    }
    return static_cast<double>(disagree) / static_cast<double>(k);
}

}  // namespace

double kdn_in_path_subspace(const Forest& forest, std::size_t p, std::size_t i, int k, const Matrix& X,
                            const Labels& y) {
    check_kdn_args(forest, X, y, k);
    const auto features = path_features(forest.trees.at(p), forest.leaf_table[p].at(i));
    const auto z = project(X, features);
    std::vector<std::pair<double, std::size_t>> scratch;
    return kdn_projected(z, features.size(), X.rows(), i, k, y, scratch);
}

MeasureCache build_kdn_cache(const Forest& forest, const Matrix& X, const Labels& y, int k, unsigned jobs) {
    check_kdn_args(forest, X, y, k);
    const std::size_t n = X.rows();
    MeasureCache cache;
    cache.k = k;
    cache.kdn.assign(forest.n_trees(), std::vector<double>(n, 0.0));
    std::vector<std::size_t> degenerate(forest.n_trees(), 0);
    parallel_for(forest.n_trees(), jobs, [&](std::size_t p) {
        const DecisionTree& tree = forest.trees[p];
        std::vector<std::vector<std::size_t>> members(tree.size());
        for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(forest.leaf_table[p][i])].push_back(i);
        std::vector<std::pair<double, std::size_t>> scratch;
        scratch.reserve(n);
        for (std::size_t leaf = 0; leaf < tree.size(); ++leaf) {
            if (members[leaf].empty()) continue;
            const auto features = path_features(tree, static_cast<NodeId>(leaf));
            if (features.empty()) degenerate[p] += members[leaf].size();
            const auto z = project(X, features);
            for (std::size_t i : members[leaf]) cache.kdn[p][i] = kdn_projected(z, features.size(), n, i, k, y, scratch);
        }
    });
    for (std::size_t d : degenerate) cache.degenerate_paths += d;
    return cache;
}

DissimilarityMatrix rfd_instance_hardness(const Forest& forest, const MeasureCache& cache, const Matrix& X_query,
                                          unsigned jobs) {
    require_cache(forest, cache.kdn, "kDN");
    Matrix values = accumulate(forest, X_query, jobs, [&](std::size_t p, NodeId leaf, std::vector<double>& s) {
        const auto& leaves = forest.leaf_table[p];
        const auto& kdn = cache.kdn[p];
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (leaves[i] == leaf) s[i] += 1.0 - kdn[i];
        }
    });
    return {std::move(values), Measure::instance_hardness, std::nullopt};
}

DissimilarityMatrix rfd_instance_hardness(const Forest& forest, const Matrix& X, const Labels& y,
                                          const Matrix& X_query, int k, unsigned jobs) {
    return rfd_instance_hardness(forest, build_kdn_cache(forest, X, y, k, jobs), X_query, jobs);
}

DissimilarityMatrix euclidean_rescaled(const Matrix& X_train, const Matrix& X_query, unsigned jobs) {
    if (X_train.cols() != X_query.cols()) {
        throw DataError("query matrix has " + std::to_string(X_query.cols()) + " columns, training matrix has " +
                        std::to_string(X_train.cols()));
    }
    Matrix out(X_query.rows(), X_train.rows());
    parallel_for(X_query.rows(), jobs, [&](std::size_t t) {
        const auto x = X_query.row(t);
        auto row = out.row(t);
        double max = 0.0;
        for (std::size_t i = 0; i < X_train.rows(); ++i) {
            const auto xi = X_train.row(i);
            double d = 0.0;
            for (std::size_t c = 0; c < x.size(); ++c) {
                const double diff = x[c] - xi[c];
                d += diff * diff;
            }
            row[i] = std::sqrt(d);
            max = std::max(max, row[i]);
        }
        if (max > 0.0) {
            for (double& v : row) v /= max;
        }
    });
    return {std::move(out), Measure::euclidean, std::nullopt};
}

DissimilarityMatrix average_views(const std::vector<DissimilarityMatrix>& mats) {
    if (mats.empty()) throw ConfigError("cannot average an empty list of matrices");
    DissimilarityMatrix out{mats.front().values, mats.front().measure, std::nullopt};
    for (std::size_t q = 1; q < mats.size(); ++q) {
        if (mats[q].rows() != out.rows() || mats[q].cols() != out.cols()) {
            throw DataError("view " + std::to_string(q) + " matrix is " + std::to_string(mats[q].rows()) + "x" +
                            std::to_string(mats[q].cols()) + ", expected " + std::to_string(out.rows()) + "x" +
                            std::to_string(out.cols()));
        }
        auto& acc = out.values.data();
        const auto& add = mats[q].values.data();
        for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += add[e];
    }
    const double Q = static_cast<double>(mats.size());
    for (double& v : out.values.data()) v /= Q;
    return out;
}

void export_matrix_csv(const DissimilarityMatrix& m, const MatrixMetadata& meta, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "query";
    for (std::size_t i = 0; i < m.cols(); ++i) out << ',' << i;
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < m.rows(); ++t) {
        out << t;
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const auto res = std::to_chars(buf, buf + sizeof buf, m(t, i));
            out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path.string() + "'");

    nlohmann::ordered_json j;
    j["measure"] = measure_name(meta.measure);
    j["view"] = meta.view_id ? nlohmann::ordered_json(*meta.view_id) : nlohmann::ordered_json(nullptr);
    j["k"] = meta.k;
    j["w"] = meta.w;
    j["seed"] = meta.seed;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::ofstream side(path.string() + ".meta.json");
    if (!side) throw DataError("cannot write '" + path.string() + ".meta.json'");
    side << j.dump(2) << '\n';
}

}  // namespace mvdis

#include <gtest/gtest.h>

#include <cmath>

#include "mvdis/dissim.hpp"
#include "mvdis/synth.hpp"
#include "support.hpp"

using namespace mvdis;

namespace {

// Chain tree over rows at leaves #2, #2, #8, #8, #8. The first three rows are
// in bag with class 0; the last two are out-of-bag class-1 visitors of #8.
struct ChainFixture {
    Matrix X{5, 1, std::vector<double>{0.0, 0.0, 3.0, 3.0, 3.0}};
    Labels y{0, 0, 0, 1, 1};
    Forest forest = assemble_forest({fixture::chain_tree()}, {{1, 1, 1, 0, 0}}, X);
};

// Two classes far apart on both features.
std::pair<Matrix, Labels> separated(std::size_t n) {
    Matrix X(n, 2);
    Labels y(n);
    Rng rng(17);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<ClassIndex>(i % 2);
        X(i, 0) = 100.0 * y[i] + rng.uniform();
        X(i, 1) = -50.0 * y[i] + rng.uniform();
    }
    return {X, y};
}

Matrix random_queries(std::uint64_t seed, std::size_t r, std::size_t m) {
    Rng rng(seed);
    Matrix Q(r, m);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t f = 0; f < m; ++f)
            Q(i, f) = f % 2 == 0 ? static_cast<double>(rng.uniform_index(4)) : rng.normal();
    return Q;
}

DissimilarityMatrix wrap(Matrix m) {
    DissimilarityMatrix d;
    d.values = std::move(m);
    return d;
}

}  // namespace

TEST(MeasureNames, ParseCanonicalAndAliases) {
    EXPECT_EQ(parse_measure("plain"), Measure::plain);
    EXPECT_EQ(parse_measure("ih"), Measure::instance_hardness);
    EXPECT_EQ(parse_measure("pb"), Measure::path_based);
    for (const auto& name : measure_names()) EXPECT_EQ(parse_measure(measure_name(parse_measure(name))), parse_measure(name));
    try {
        parse_measure("cosine");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("instance_hardness"), std::string::npos);
    }
}

TEST(Plain, TrainingQueriesSymmetricZeroDiagonal) {
    auto [X, y] = fixture::random_table(1, 25, 4, 2);
    const auto f = fit_forest(X, y, 2, 12, 2, 1);
    const auto D = rfd_plain(f, X);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(D(i, i), 0.0);
        for (std::size_t j = 0; j < 25; ++j) EXPECT_EQ(D(i, j), D(j, i));
    }
}

TEST(Plain, MatchesSharedLeafOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto [X, y] = fixture::random_table(seed, 20, 5, 3);
        const auto f = fit_forest(X, y, 3, 9, 2, seed);
        const auto Q = random_queries(seed + 50, 7, 5);
        EXPECT_EQ(rfd_plain(f, Q).values, oracle::plain(f, X, Q));
        EXPECT_EQ(rfd_plain(f, Q, 4).values, rfd_plain(f, Q, 1).values);
    }
}

TEST(Plain, NeverSharedIsOne) {
    ChainFixture c;
    Matrix Q(1, 1, std::vector<double>{6.0});
    const auto D = rfd_plain(c.forest, Q);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(D(0, i), 1.0);
}

TEST(PathBased, ChainTreeValue) {
    ChainFixture c;
    Matrix Q(1, 1, std::vector<double>{0.0});
    const auto D = rfd_path_based(c.forest, Q, 1.0);
    EXPECT_EQ(D(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(D(0, 2), 1.0 - std::exp(-5.0));
    EXPECT_NEAR(D(0, 2), 0.99326, 5e-6);
    const auto far = rfd_path_based(c.forest, Q, 50.0);
    EXPECT_GT(far(0, 2), 1.0 - 1e-12);
}

TEST(PathBased, BoundedByPlain) {
    auto [X, y] = fixture::random_table(3, 25, 4, 2);
    const auto f = fit_forest(X, y, 2, 10, 2, 3);
    const auto Q = random_queries(8, 6, 4);
    const auto P = rfd_plain(f, Q);
    const auto B = rfd_path_based(f, Q, 1.0);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t i = 0; i < 25; ++i) {
            EXPECT_LE(B(r, i), P(r, i));
            EXPECT_GE(B(r, i), 0.0);
        }
}

TEST(NodeConfidence, ChainTreeLeaves) {
    ChainFixture c;
    EXPECT_DOUBLE_EQ(leaf_confidence(c.forest, c.y, 0, 2), 1.0);
    EXPECT_DOUBLE_EQ(leaf_confidence(c.forest, c.y, 0, 8), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(leaf_confidence(c.forest, c.X, c.y, 0, 8), 1.0 / 3.0);
    EXPECT_LT(leaf_confidence(c.forest, c.y, 0, 8), leaf_confidence(c.forest, c.y, 0, 2));
    EXPECT_EQ(leaf_confidence(c.forest, c.y, 0, 10), 0.0);
    Matrix Q(2, 1, std::vector<double>{0.0, 3.0});
    const auto D = rfd_node_confidence(c.forest, c.X, c.y, Q);
    EXPECT_EQ(D(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(D(1, 2), 2.0 / 3.0);
    EXPECT_EQ(D(0, 2), 1.0);
}

TEST(NodeConfidence, ThreeInBagCorrectOneOobWrong) {
    Matrix X(4, 1, std::vector<double>{0.0, 0.1, 0.2, 0.3});
    Labels y{0, 0, 0, 1};
    std::vector<TreeNode> root(1);
    root[0].label = 0;
    root[0].class_counts = {3, 0};
    const auto f = assemble_forest({DecisionTree::from_nodes(root, 1, 2)}, {{1, 1, 1, 0}}, X);
    EXPECT_DOUBLE_EQ(leaf_confidence(f, y, 0, 0), 0.75);
}

TEST(NodeConfidence, EqualsPlainWhenEveryPredictionIsCorrect) {
    auto [X, y] = separated(30);
    const auto f = fit_forest(X, y, 2, 16, 1, 2);
    const auto oob = oob_correct(f, X, y);
    for (const auto& row : oob)
        for (const auto& e : row) ASSERT_TRUE(!e || *e);
    const auto Q = random_queries(3, 5, 2);
    EXPECT_EQ(rfd_node_confidence(f, X, y, X).values, rfd_plain(f, X).values);
    EXPECT_EQ(rfd_node_confidence(f, X, y, Q).values, rfd_plain(f, Q).values);
}

TEST(Kdn, DirectRatios) {
    // Nine rows on a line; row 0 at the origin, its five nearest are rows 1..5.
    Matrix X(9, 1, std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 11.0, 12.0});
    Labels y{0, 1, 0, 1, 0, 0, 1, 1, 1};
    std::vector<TreeNode> nodes(3);
    nodes[0].feature = 0;
    nodes[0].threshold = 7.5;
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].class_counts = {4, 2};
    nodes[2].class_counts = {0, 3};
    nodes[2].label = 1;
    const auto f = assemble_forest({DecisionTree::from_nodes(nodes, 1, 2)}, {std::vector<int>(9, 1)}, X);
    EXPECT_DOUBLE_EQ(kdn_in_path_subspace(f, 0, 0, 5, X, y), 0.4);
    EXPECT_DOUBLE_EQ(kdn_in_path_subspace(f, 0, 7, 2, X, y), 0.0);
    EXPECT_THROW(kdn_in_path_subspace(f, 0, 0, 0, X, y), ConfigError);
    EXPECT_THROW(kdn_in_path_subspace(f, 0, 0, 9, X, y), ConfigError);
}

TEST(Kdn, TiesGoToSmallerIndex) {
    // Rows 1 and 2 are equidistant from row 0; only the smaller index is used.
    Matrix X(3, 1, std::vector<double>{0.0, 1.0, -1.0});
    Labels y{0, 1, 0};
    std::vector<TreeNode> nodes(3);
    nodes[0].feature = 0;
    nodes[0].threshold = 0.5;
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].class_counts = {2, 0};
    nodes[2].class_counts = {0, 1};
    nodes[2].label = 1;
    const auto f = assemble_forest({DecisionTree::from_nodes(nodes, 1, 2)}, {{1, 1, 1}}, X);
    EXPECT_DOUBLE_EQ(kdn_in_path_subspace(f, 0, 0, 1, X, y), 1.0);
}

TEST(Kdn, SubspaceContrastOnIrisLike) {
    const auto ds = synth::iris_like({.per_class = 50, .seed = 3});
    const Matrix& X = ds.views[0];
    auto two_level = [](int fa, int fb) {
        std::vector<TreeNode> n(5);
        n[0].feature = fa;
        n[0].threshold = 1.5;
        n[0].left = 1;
        n[0].right = 4;
        n[1].feature = fb;
        n[1].threshold = 1.5;
        n[1].left = 2;
        n[1].right = 3;
        n[2].class_counts = {1, 0, 0};
        n[3].class_counts = {0, 0, 1};
        n[3].label = 2;
        n[4].class_counts = {0, 1, 0};
        n[4].label = 1;
        return DecisionTree::from_nodes(std::move(n), 4, 3);
    };
    const auto f = assemble_forest({two_level(0, 1), two_level(2, 3)},
                                   {std::vector<int>(150, 1), std::vector<int>(150, 1)}, X);
    ASSERT_EQ(path_features(f.trees[0], f.leaf_table[0][0]), (std::vector<int>{0, 1}));
    ASSERT_EQ(path_features(f.trees[1], f.leaf_table[1][0]), (std::vector<int>{2, 3}));
    const double hard = kdn_in_path_subspace(f, 0, 0, 5, X, ds.labels);
    const double easy = kdn_in_path_subspace(f, 1, 0, 5, X, ds.labels);
    EXPECT_EQ(hard, oracle::kdn(X, ds.labels, 0, {0, 1}, 5));
    EXPECT_EQ(easy, oracle::kdn(X, ds.labels, 0, {2, 3}, 5));
    EXPECT_GE(hard, 0.8);
    EXPECT_LE(easy, 0.2);
    EXPECT_GE(hard - easy, 0.6);
}

TEST(InstanceHardness, MatchesRecomputation) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto [X, y] = fixture::random_table(seed + 10, 22, 4, 2);
        const auto f = fit_forest(X, y, 2, 8, 2, seed);
        const auto Q = random_queries(seed + 70, 6, 4);
        for (int k : {1, 3, 5}) {
            EXPECT_EQ(rfd_instance_hardness(f, X, y, Q, k).values, oracle::instance_hardness(f, X, y, Q, k))
                << "seed " << seed << " k " << k;
        }
    }
}

TEST(InstanceHardness, DiagonalIsMeanKdnAndAsymmetric) {
    const auto ds = synth::noisy_leaf({.n = 60, .views = 1, .seed = 5});
    const Matrix& X = ds.views[0];
    const auto f = fit_forest(X, ds.labels, 2, 20, 2, 5);
    const auto cache = build_kdn_cache(f, X, ds.labels, 5);
    const auto D = rfd_instance_hardness(f, cache, X);
    bool asymmetric = false;
    for (std::size_t i = 0; i < 60; ++i) {
        double mean = 0.0;
        for (std::size_t p = 0; p < f.n_trees(); ++p) mean += cache.kdn[p][i];
        EXPECT_NEAR(D(i, i), mean / 20.0, 1e-12);
        for (std::size_t j = 0; j < 60; ++j) asymmetric = asymmetric || D(i, j) != D(j, i);
    }
    EXPECT_TRUE(asymmetric);
}

TEST(InstanceHardness, EqualsPlainWhenNoInstanceIsHard) {
    auto [X, y] = separated(30);
    const auto f = fit_forest(X, y, 2, 16, 1, 4);
    const auto cache = build_kdn_cache(f, X, y, 3);
    for (const auto& row : cache.kdn)
        for (double v : row) ASSERT_EQ(v, 0.0);
    EXPECT_EQ(cache.degenerate_paths, 0u);
    const auto Q = random_queries(5, 5, 2);
    EXPECT_EQ(rfd_instance_hardness(f, cache, Q).values, rfd_plain(f, Q).values);
    EXPECT_EQ(rfd_instance_hardness(f, cache, X).values, rfd_plain(f, X).values);
}

TEST(Weighted, DominatePlainAndStayInRange) {
    const auto ds = synth::noisy_leaf({.n = 50, .views = 1, .seed = 6});
    const Matrix& X = ds.views[0];
    const auto f = fit_forest(X, ds.labels, 2, 16, 2, 6);
    const auto Q = random_queries(9, 8, X.cols());
    const auto P = rfd_plain(f, Q);
    const auto N = rfd_node_confidence(f, X, ds.labels, Q);
    const auto H = rfd_instance_hardness(f, X, ds.labels, Q, 5);
    for (std::size_t r = 0; r < Q.rows(); ++r)
        for (std::size_t i = 0; i < X.rows(); ++i) {
            EXPECT_GE(N(r, i), P(r, i));
            EXPECT_GE(H(r, i), P(r, i));
            EXPECT_LE(N(r, i), 1.0);
            EXPECT_LE(H(r, i), 1.0);
        }
}

TEST(Caches, JobsDoNotChangeResults) {
    const auto ds = synth::noisy_leaf({.n = 40, .views = 1, .seed = 7});
    const Matrix& X = ds.views[0];
    const auto f = fit_forest(X, ds.labels, 2, 12, 2, 7);
    EXPECT_EQ(build_kdn_cache(f, X, ds.labels, 3, 1), build_kdn_cache(f, X, ds.labels, 3, 4));
    const auto cache = build_kdn_cache(f, X, ds.labels, 3);
    EXPECT_EQ(rfd_instance_hardness(f, cache, X, 1).values, rfd_instance_hardness(f, cache, X, 3).values);
}

TEST(Queries, RejectWrongWidthAndNonFinite) {
    auto [X, y] = fixture::random_table(2, 10, 3, 2);
    const auto f = fit_forest(X, y, 2, 4, 1, 2);
    EXPECT_THROW(rfd_plain(f, Matrix(2, 2)), DataError);
    Matrix bad(1, 3);
    bad(0, 1) = INFINITY;
    EXPECT_THROW(rfd_plain(f, bad), DataError);
}

TEST(Euclidean, RowRescaledToUnitMax) {
    Matrix X(3, 1, std::vector<double>{0.0, 1.0, 2.0});
    Matrix Q(2, 1, std::vector<double>{0.0, 1.0});
    const auto D = euclidean_rescaled(X, Q);
    EXPECT_EQ(D.values.data(), (std::vector<double>{0.0, 0.5, 1.0, 1.0, 0.0, 1.0}));
    Matrix same(2, 1, std::vector<double>{4.0, 4.0});
    const auto Z = euclidean_rescaled(same, Matrix(1, 1, std::vector<double>{4.0}));
    EXPECT_EQ(Z(0, 0), 0.0);
    EXPECT_EQ(Z(0, 1), 0.0);
}

TEST(AverageViews, Cases) {
    const auto zero = wrap(Matrix(2, 3, 0.0));
    const auto one = wrap(Matrix(2, 3, 1.0));
    EXPECT_EQ(average_views({zero}).values, zero.values);
    EXPECT_EQ(average_views({zero, one}).values, Matrix(2, 3, 0.5));
    std::vector<DissimilarityMatrix> six;
    Rng rng(12);
    for (int q = 0; q < 6; ++q) {
        Matrix M(3, 4);
        for (double& v : M.data()) v = rng.uniform();
        six.push_back(wrap(M));
    }
    const auto avg = average_views(six);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            double s = 0.0;
            for (const auto& m : six) s += m(r, c);
            EXPECT_EQ(avg(r, c), s / 6.0);
        }
    EXPECT_THROW(average_views({}), ConfigError);
    EXPECT_THROW(average_views({zero, wrap(Matrix(3, 2))}), DataError);
}

TEST(Export, CsvAndMetadata) {
    const auto dir = fixture::temp_dir("dissim_export");
    DissimilarityMatrix m{Matrix(2, 2, std::vector<double>{0.0, 0.25, 1.0, 0.5}), Measure::instance_hardness, 1};
    export_matrix_csv(m, {.measure = Measure::instance_hardness, .view_id = 1, .k = 5, .w = 1.0, .seed = 9},
                      dir / "v.csv");
    const auto csv = fixture::slurp(dir / "v.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "query,0,1");
    const auto meta = fixture::slurp(dir / "v.csv.meta.json");
    EXPECT_NE(meta.find("instance_hardness"), std::string::npos);
    std::filesystem::remove_all(dir);
}

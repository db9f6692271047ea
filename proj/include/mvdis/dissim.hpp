#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvdis/forest.hpp"

namespace mvdis {

enum class Measure { plain, path_based, node_confidence, instance_hardness, euclidean };

std::string_view measure_name(Measure m);
/// Accepts canonical names and short aliases (rf, pb, nc, ih, eu).
Measure parse_measure(std::string_view name);
std::vector<std::string> measure_names();

/// Rows are query instances, columns are training instances; values in [0, 1].
struct DissimilarityMatrix {
    Matrix values;
    Measure measure = Measure::plain;
    std::optional<int> view_id;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
    double operator()(std::size_t r, std::size_t c) const { return values(r, c); }
};

/// Query-independent per-tree quantities precomputed from the training set.
struct MeasureCache {
    /// kdn[p][i]: kDN of training row i in the path subspace of its leaf in
    /// tree p. Filled for instance_hardness.
    std::vector<std::vector<double>> kdn;
    /// confidence[p][node]: leaf confidence of tree p (0 for split nodes).
    /// Filled for node_confidence.
    std::vector<std::vector<double>> confidence;
    int k = 0;
    /// Number of (tree, row) kDN evaluations whose path subspace was empty.
    std::size_t degenerate_paths = 0;

    friend bool operator==(const MeasureCache&, const MeasureCache&) = default;
};

/// Plain RF dissimilarity: fraction of trees where the query and the training
/// instance land in different leaves, computed as 1 - shared / P.
DissimilarityMatrix rfd_plain(const Forest& forest, const Matrix& X_query, unsigned jobs = 1);

/// Path-length variant: per tree s = exp(-w * g), g = edges between the two
/// landing leaves; dissimilarity = 1 - mean s.
DissimilarityMatrix rfd_path_based(const Forest& forest, const Matrix& X_query, double w, unsigned jobs = 1);

/// Fraction of the distinct training instances landing in `leaf` of tree p
/// (in-bag and out-of-bag) that the tree predicts correctly.
double leaf_confidence(const Forest& forest, const Labels& y, std::size_t p, NodeId leaf);
double leaf_confidence(const Forest& forest, const Matrix& X, const Labels& y, std::size_t p, NodeId leaf);

MeasureCache build_confidence_cache(const Forest& forest, const Labels& y);

/// Node-confidence variant: the shared-leaf similarity of tree p is replaced by
/// that leaf's confidence.
DissimilarityMatrix rfd_node_confidence(const Forest& forest, const MeasureCache& cache, const Matrix& X_query,
                                        unsigned jobs = 1);
DissimilarityMatrix rfd_node_confidence(const Forest& forest, const Matrix& X, const Labels& y,
                                        const Matrix& X_query, unsigned jobs = 1);

/// kDN of training row i, measured among all training rows projected onto the
/// features tested on the path to i's leaf in tree p. Row i is excluded from
/// its own neighbourhood; distance ties go to the smaller row index.
double kdn_in_path_subspace(const Forest& forest, std::size_t p, std::size_t i, int k, const Matrix& X,
                            const Labels& y);

MeasureCache build_kdn_cache(const Forest& forest, const Matrix& X, const Labels& y, int k, unsigned jobs = 1);

/// Instance-hardness variant: the shared-leaf similarity of tree p to training
/// row i is 1 - kDN_p(x_i).
DissimilarityMatrix rfd_instance_hardness(const Forest& forest, const MeasureCache& cache, const Matrix& X_query,
                                          unsigned jobs = 1);
DissimilarityMatrix rfd_instance_hardness(const Forest& forest, const Matrix& X, const Labels& y,
                                          const Matrix& X_query, int k, unsigned jobs = 1);

/// Euclidean distances, each row divided by its maximum (all-zero rows stay 0).
DissimilarityMatrix euclidean_rescaled(const Matrix& X_train, const Matrix& X_query, unsigned jobs = 1);

/// Elementwise mean of same-shaped matrices.
DissimilarityMatrix average_views(const std::vector<DissimilarityMatrix>& mats);

/// Metadata written next to an exported matrix.
struct MatrixMetadata {
    Measure measure = Measure::plain;
    std::optional<int> view_id;
    int k = 0;
    double w = 0.0;
    std::uint64_t seed = 0;
};

/// Writes `path` as CSV (header "query,<training ids>", then one row per
/// query) and `path` + ".meta.json" with the metadata.
void export_matrix_csv(const DissimilarityMatrix& m, const MatrixMetadata& meta, const std::filesystem::path& path);

}  // namespace mvdis

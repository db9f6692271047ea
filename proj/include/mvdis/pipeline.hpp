#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvdis/data.hpp"
#include "mvdis/dissim.hpp"

namespace mvdis {

struct MvlConfig {
    Measure measure = Measure::plain;
    std::size_t p_trees = 512;
    std::string mtry = "sqrt";
    int k = 5;
    double w = 1.0;
    std::uint64_t seed = 0;
    /// Worker threads (0 = all cores). Never affects results.
    unsigned jobs = 1;

    /// Throws ConfigError on an out-of-range field.
    void validate() const;

    friend bool operator==(const MvlConfig& a, const MvlConfig& b) {
        return a.measure == b.measure && a.p_trees == b.p_trees && a.mtry == b.mtry && a.k == b.k && a.w == b.w &&
               a.seed == b.seed;
    }
};

/// Per-view forests and caches, the joint training representation and the
/// final forest trained on it.
struct MvlModel {
    MvlConfig config;
    std::vector<std::string> class_table;
    Labels labels;                      // training labels
    std::vector<std::size_t> view_dims; // m_q per view
    std::vector<Forest> view_forests;   // empty for the euclidean measure
    std::vector<MeasureCache> caches;   // one per view (possibly empty)
    std::vector<Matrix> train_views;    // kept only for the euclidean measure
    DissimilarityMatrix d_joint;        // n x n
    Forest final_forest;                // trained on rows of d_joint

    std::size_t n_train() const { return labels.size(); }
    std::size_t n_views() const { return view_dims.size(); }
};

/// Fits one forest per view, builds each view's train x train dissimilarity
/// matrix, averages them and trains the final forest on the average.
MvlModel fit_mvl(const MultiViewDataset& train, const MvlConfig& config);

/// Per-view dissimilarity matrix of the query rows against the training set.
DissimilarityMatrix view_dissimilarity(const MvlModel& model, std::size_t view, const Matrix& X_query);

/// Joint dissimilarity representation of the query rows (one matrix per view,
/// all with the same row count). Result is r x n.
Matrix represent_batch(const MvlModel& model, std::span<const Matrix> views);

/// Joint dissimilarity representation of one instance given one vector per view.
std::vector<double> represent(const MvlModel& model, std::span<const std::vector<double>> x_views);

ClassIndex predict_mvl(const MvlModel& model, std::span<const std::vector<double>> x_views);

std::vector<ClassIndex> predict_batch(const MvlModel& model, std::span<const Matrix> views);

/// Writes the model as a versioned binary container (header "MVDIS1").
void save_model(const MvlModel& model, const std::filesystem::path& path);
MvlModel load_model(const std::filesystem::path& path);

}  // namespace mvdis

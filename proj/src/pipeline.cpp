#include "mvdis/pipeline.hpp"

#include <cmath>

namespace mvdis {

namespace {
constexpr std::uint64_t kViewStream = 0x71e3;
constexpr std::uint64_t kFinalStream = 0xf1a1;
}  // namespace

void MvlConfig::validate() const {
    if (p_trees < 1) throw ConfigError("number of trees must be at least 1");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("w must be positive and finite");
    if (mtry != "sqrt" && mtry != "log2" && mtry != "all") resolve_mtry(mtry, 1);
}

MvlModel fit_mvl(const MultiViewDataset& train, const MvlConfig& config) {
    config.validate();
    train.validate();
    const std::size_t n = train.n_instances();
    if (config.measure == Measure::instance_hardness && static_cast<std::size_t>(config.k) >= n) {
        throw ConfigError("k = " + std::to_string(config.k) + " needs more than " + std::to_string(config.k) +
                          " training instances, got " + std::to_string(n));
    }

    MvlModel model;
    model.config = config;
    model.class_table = train.class_table;
    model.labels = train.labels;
    std::vector<DissimilarityMatrix> per_view;
    for (std::size_t q = 0; q < train.n_views(); ++q) {
        const Matrix& X = train.views[q];
        model.view_dims.push_back(X.cols());
        if (config.measure == Measure::euclidean) {
            model.train_views.push_back(X);
            model.caches.emplace_back();
        } else {
            const std::uint64_t seed = derive_seed(config.seed, kViewStream, q);
            model.view_forests.push_back(fit_forest(X, train.labels, train.n_classes(), config.p_trees,
                                                    resolve_mtry(config.mtry, X.cols()), seed, config.jobs));
            const Forest& forest = model.view_forests.back();
            switch (config.measure) {
                case Measure::node_confidence:
                    model.caches.push_back(build_confidence_cache(forest, train.labels));
                    break;
                case Measure::instance_hardness:
                    model.caches.push_back(build_kdn_cache(forest, X, train.labels, config.k, config.jobs));
                    break;
                default:
                    model.caches.emplace_back();
            }
        }
        per_view.push_back(view_dissimilarity(model, q, X));
    }
    model.d_joint = average_views(per_view);
    model.final_forest = fit_forest(model.d_joint.values, train.labels, train.n_classes(), config.p_trees,
                                    resolve_mtry(config.mtry, n), derive_seed(config.seed, kFinalStream),
                                    config.jobs);
    return model;
}

DissimilarityMatrix view_dissimilarity(const MvlModel& model, std::size_t view, const Matrix& X_query) {
    if (view >= model.n_views()) throw DataError("view " + std::to_string(view) + " does not exist");
    if (X_query.cols() != model.view_dims[view]) {
        throw DataError("view " + std::to_string(view) + " has " + std::to_string(X_query.cols()) +
                        " features, model expects " + std::to_string(model.view_dims[view]));
    }
    const MvlConfig& c = model.config;
    DissimilarityMatrix out;
    switch (c.measure) {
        case Measure::euclidean:
            out = euclidean_rescaled(model.train_views.at(view), X_query, c.jobs);
            break;
        case Measure::plain:
            out = rfd_plain(model.view_forests.at(view), X_query, c.jobs);
            break;
        case Measure::path_based:
            out = rfd_path_based(model.view_forests.at(view), X_query, c.w, c.jobs);
            break;
        case Measure::node_confidence:
            out = rfd_node_confidence(model.view_forests.at(view), model.caches.at(view), X_query, c.jobs);
            break;
        case Measure::instance_hardness:
            out = rfd_instance_hardness(model.view_forests.at(view), model.caches.at(view), X_query, c.jobs);
            break;
    }
    out.view_id = static_cast<int>(view);
    return out;
}

Matrix represent_batch(const MvlModel& model, std::span<const Matrix> views) {
    if (views.size() != model.n_views()) {
        throw DataError("got " + std::to_string(views.size()) + " views, model has " + std::to_string(model.n_views()));
    }
    std::vector<DissimilarityMatrix> per_view;
    for (std::size_t q = 0; q < views.size(); ++q) {
        if (views[q].rows() != views.front().rows()) {
            throw DataError("view " + std::to_string(q) + " has a different number of rows than view 0");
        }
        per_view.push_back(view_dissimilarity(model, q, views[q]));
    }
    return average_views(per_view).values;
}

std::vector<double> represent(const MvlModel& model, std::span<const std::vector<double>> x_views) {
    std::vector<Matrix> views;
    for (const auto& x : x_views) views.emplace_back(1, x.size(), x);
    const Matrix rep = represent_batch(model, views);
    return {rep.data().begin(), rep.data().end()};
}

ClassIndex predict_mvl(const MvlModel& model, std::span<const std::vector<double>> x_views) {
    return predict_forest(model.final_forest, represent(model, x_views));
}

std::vector<ClassIndex> predict_batch(const MvlModel& model, std::span<const Matrix> views) {
    const Matrix rep = represent_batch(model, views);
    std::vector<ClassIndex> out(rep.rows());
    parallel_for(rep.rows(), model.config.jobs,
                 [&](std::size_t t) { out[t] = predict_forest(model.final_forest, rep.row(t)); });
    return out;
}

}  // namespace mvdis

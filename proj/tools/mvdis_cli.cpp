// mvdis: random-forest dissimilarity representations for multi-view data.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mvdis/bench.hpp"
#include "mvdis/data.hpp"
#include "mvdis/pipeline.hpp"
#include "mvdis/synth.hpp"

namespace fs = std::filesystem;
using namespace mvdis;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kInternalError = 3;

struct ModelFlags {
    std::string measure = "plain";
    std::size_t trees = 512;
    std::string mtry = "sqrt";
    int k = 5;
    double w = 1.0;
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    MvlConfig config() const {
        MvlConfig c;
        c.measure = parse_measure(measure);
        c.p_trees = trees;
        c.mtry = mtry;
        c.k = k;
        c.w = w;
        c.seed = seed;
        c.jobs = jobs;
        c.validate();
        return c;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool with_measure = true) {
    if (with_measure) {
        cmd->add_option("--measure", f.measure,
                        "Dissimilarity measure: plain, path_based, node_confidence, instance_hardness, euclidean "
                        "(aliases rf, pb, nc, ih, eu)");
    }
    cmd->add_option("--trees", f.trees, "Trees per forest")->check(CLI::PositiveNumber);
    cmd->add_option("--mtry", f.mtry, "Features drawn per split: sqrt, log2, all or an integer");
    cmd->add_option("--k", f.k, "Neighbours for the kDN instance hardness")->check(CLI::PositiveNumber);
    cmd->add_option("--w", f.w, "Path-length weight of the path_based measure")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--jobs", f.jobs, "Worker threads (0 = all cores); results do not depend on it");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void log_line(const std::string& msg) { std::cerr << "mvdis: " << msg << '\n'; }

void log_degenerate(const MvlModel& model) {
    std::size_t degenerate = 0;
    for (const auto& c : model.caches) degenerate += c.degenerate_paths;
    if (degenerate > 0) log_line(std::to_string(degenerate) + " kDN evaluations used an empty path subspace");
    for (std::size_t q = 0; q < model.view_forests.size(); ++q) {
        const std::size_t no_oob = model.view_forests[q].trees_without_oob();
        if (no_oob > 0) log_line("view " + std::to_string(q) + ": " + std::to_string(no_oob) + " trees have no out-of-bag instance");
    }
}

int cmd_fit(const std::string& manifest, const ModelFlags& flags, const std::string& model_out) {
    const MvlConfig config = flags.config();
    const MultiViewDataset ds = load_multiview(manifest);
    const MvlModel model = fit_mvl(ds, config);
    log_degenerate(model);
    save_model(model, model_out);
    log_line("wrote model " + model_out);
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& manifest, const std::string& out_path,
                unsigned jobs) {
    MvlModel model = load_model(model_path);
    model.config.jobs = jobs;
    const MultiViewDataset ds = load_views_only(manifest);
    const auto predicted = predict_batch(model, ds.views);
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw DataError("cannot write '" + out_path + "'");
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    for (ClassIndex c : predicted) out << model.class_table[static_cast<std::size_t>(c)] << '\n';
    if (!ds.labels.empty()) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            correct += model.class_table[static_cast<std::size_t>(predicted[i])] ==
                       ds.class_table[static_cast<std::size_t>(ds.labels[i])];
        }
        std::ostringstream msg;
        msg << "accuracy " << static_cast<double>(correct) / static_cast<double>(predicted.size()) << " (" << correct
            << "/" << predicted.size() << ")";
        log_line(msg.str());
    }
    return 0;
}

int cmd_dissim(const std::string& manifest, const std::string& model_path, const ModelFlags& flags,
               const std::string& out_dir) {
    MvlModel model;
    MultiViewDataset ds;
    if (model_path.empty()) {
        ds = load_multiview(manifest);
        model = fit_mvl(ds, flags.config());
        log_degenerate(model);
    } else {
        model = load_model(model_path);
        ds = load_views_only(manifest);
    }
    model.config.jobs = flags.jobs;
    fs::create_directories(out_dir);
    MatrixMetadata meta{model.config.measure, std::nullopt, model.config.k, model.config.w, model.config.seed};
    std::vector<DissimilarityMatrix> per_view;
    for (std::size_t q = 0; q < model.n_views(); ++q) {
        per_view.push_back(view_dissimilarity(model, q, ds.views.at(q)));
        meta.view_id = static_cast<int>(q);
        export_matrix_csv(per_view.back(), meta, fs::path(out_dir) / ("view_" + std::to_string(q) + ".csv"));
    }
    meta.view_id.reset();
    export_matrix_csv(average_views(per_view), meta, fs::path(out_dir) / "joint.csv");
    log_line("wrote " + std::to_string(per_view.size() + 1) + " matrices to " + out_dir);
    return 0;
}

int cmd_bench(const std::vector<std::string>& manifests, const std::string& methods, const ModelFlags& flags,
              double train_frac, std::size_t repeats, const std::string& formats, const std::string& report_out) {
    std::vector<Method> parsed;
    for (const auto& m : split_list(methods)) parsed.push_back(parse_method(m));
    std::vector<ReportFormat> fmts;
    for (const auto& f : split_list(formats)) fmts.push_back(parse_report_format(f));
    if (fmts.empty()) throw ConfigError("at least one report format is required");

    BenchConfig config;
    config.model = flags.config();
    config.train_frac = train_frac;
    config.repeats = repeats;
    config.seed = flags.seed;
    config.validate();

    std::vector<fs::path> paths(manifests.begin(), manifests.end());
    const ExperimentReport report = run_experiment(paths, parsed, config, log_line);
    for (ReportFormat f : fmts) {
        fs::path out = report_out;
        if (fmts.size() > 1) {
            out.replace_extension(f == ReportFormat::json ? ".json" : f == ReportFormat::markdown ? ".md" : ".csv");
        }
        emit_report(report, out, f);
        log_line("wrote report " + out.string());
    }
    return report.datasets.empty() ? kDataError : 0;
}

int cmd_synth(const std::string& kind, std::size_t n, std::size_t views, std::size_t classes, std::size_t dims,
              std::size_t irrelevant, std::size_t cells, double noise, std::uint64_t seed, const std::string& out_dir) {
    MultiViewDataset ds;
    if (kind == "blobs") {
        ds = synth::blobs({n, views, classes, dims == 0 ? 5 : dims, 6.0, seed});
    } else if (kind == "noisyleaf") {
        ds = synth::noisy_leaf({.n = n, .views = views, .informative = dims == 0 ? 2 : dims, .irrelevant = irrelevant,
                                .cells = cells, .noise_rate = noise, .seed = seed});
    } else if (kind == "irislike") {
        ds = synth::iris_like({n / 3, seed});
    } else {
        throw ConfigError("unknown synthetic kind '" + kind + "' (valid: blobs, noisyleaf, irislike)");
    }
    const fs::path manifest = save_multiview(ds, out_dir);
    log_line("wrote " + manifest.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-forest dissimilarity representations for multi-view classification"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    ModelFlags fit_flags;
    std::string fit_manifest, fit_model_out;
    auto* fit = app.add_subcommand("fit", "Fit a multi-view model and write it to a file");
    fit->add_option("--manifest", fit_manifest, "Dataset manifest (JSON)")->required();
    fit->add_option("--model-out", fit_model_out, "Output model file")->required();
    add_model_flags(fit, fit_flags);

    std::string pred_model, pred_manifest, pred_out;
    unsigned pred_jobs = 1;
    auto* predict = app.add_subcommand("predict", "Predict labels for the instances of a manifest");
    predict->add_option("--model", pred_model, "Model file written by fit")->required();
    predict->add_option("--manifest", pred_manifest, "Manifest of the instances to predict (labels optional)")->required();
    predict->add_option("--out", pred_out, "Output file, one label per line (default: standard output)");
    predict->add_option("--jobs", pred_jobs, "Worker threads (0 = all cores)");

    ModelFlags dis_flags;
    std::string dis_manifest, dis_model, dis_out;
    auto* dissim = app.add_subcommand("dissim", "Export per-view and joint dissimilarity matrices as CSV");
    dissim->add_option("--manifest", dis_manifest,
                       "Training manifest, or query manifest when --model is given")->required();
    dissim->add_option("--model", dis_model, "Existing model; rows are then the manifest's instances");
    dissim->add_option("--out-dir", dis_out, "Output directory")->required();
    add_model_flags(dissim, dis_flags);

    ModelFlags bench_flags;
    std::vector<std::string> bench_manifests;
    std::string bench_methods = "euclidean,plain,path_based,node_confidence,instance_hardness";
    std::string bench_formats = "json";
    std::string bench_out;
    double train_frac = 0.5;
    std::size_t repeats = 10;
    auto* bench = app.add_subcommand("bench", "Run the repeated stratified-split comparison protocol");
    bench->add_option("--manifest", bench_manifests, "Dataset manifest (repeatable)")->required();
    bench->add_option("--methods", bench_methods, "Comma-separated methods (measures, aliases, or majority)");
    bench->add_option("--train-frac", train_frac, "Training fraction of each stratified split")
        ->check(CLI::Range(0.0, 1.0));
    bench->add_option("--repeats", repeats, "Repetitions per dataset")->check(CLI::PositiveNumber);
    bench->add_option("--format", bench_formats, "Comma-separated report formats: json, markdown, csv");
    bench->add_option("--report-out", bench_out, "Report path (extension replaced per format if several)")
        ->required();
    add_model_flags(bench, bench_flags, false);

    std::string synth_kind, synth_out;
    std::size_t synth_n = 40, synth_views = 2, synth_classes = 2, synth_dims = 0, synth_irrelevant = 5, synth_cells = 2;
    double synth_noise = 0.15;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
    synth->add_option("--kind", synth_kind, "blobs, noisyleaf or irislike")->required();
    synth->add_option("--n", synth_n, "Number of instances");
    synth->add_option("--views", synth_views, "Number of views (blobs, noisyleaf)");
    synth->add_option("--classes", synth_classes, "Number of classes (blobs)");
    synth->add_option("--dims", synth_dims, "Features per view (blobs) or informative features (noisyleaf); 0 = 5 for blobs, 2 for noisyleaf");
    synth->add_option("--irrelevant", synth_irrelevant, "Pure-noise features per view (noisyleaf)");
    synth->add_option("--cells", synth_cells, "Checkerboard cells per informative feature (noisyleaf)");
    synth->add_option("--noise", synth_noise, "Label-noise rate (noisyleaf)");
    synth->add_option("--seed", synth_seed, "Random seed");
    synth->add_option("--out-dir", synth_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*fit) return cmd_fit(fit_manifest, fit_flags, fit_model_out);
        if (*predict) return cmd_predict(pred_model, pred_manifest, pred_out, pred_jobs);
        if (*dissim) return cmd_dissim(dis_manifest, dis_model, dis_flags, dis_out);
        if (*bench) {
            return cmd_bench(bench_manifests, bench_methods, bench_flags, train_frac, repeats, bench_formats,
                             bench_out);
        }
        if (*synth) {
            return cmd_synth(synth_kind, synth_n, synth_views, synth_classes, synth_dims, synth_irrelevant,
                             synth_cells, synth_noise, synth_seed, synth_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "mvdis: error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        std::cerr << "mvdis: error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "mvdis: error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "mvdis: internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvdis/data.hpp"
#include "mvdis/pipeline.hpp"

namespace mvdis {

/// A compared method: a dissimilarity measure fed through the multi-view
/// pipeline, or (no measure) the constant majority-class predictor.
struct Method {
    std::string name;
    std::optional<Measure> measure;
};

/// Canonical measure names, their aliases, and "majority".
Method parse_method(std::string_view name);

struct BenchConfig {
    MvlConfig model;  // measure field is ignored; each method sets its own
    double train_frac = 0.5;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetResult {
    std::string name;
    std::vector<std::uint64_t> split_hashes;   // one per repetition, shared by all methods
    std::vector<std::vector<double>> accuracy; // [method][repetition]
    std::vector<double> mean;                  // [method]
    std::vector<double> stddev;                // [method], sample standard deviation

    friend bool operator==(const DatasetResult&, const DatasetResult&) = default;
};

struct SignTestResult {
    bool significant = false;
    int critical_wins = 0;
    int adjusted_wins = 0;   // wins + floor(ties / 2)
    int adjusted_losses = 0; // losses + ceil(ties / 2)
};

struct PairTally {
    std::string baseline;
    std::string challenger;
    int wins = 0;   // datasets where the challenger's mean accuracy is higher
    int ties = 0;
    int losses = 0;
    std::vector<SignTestResult> tests;  // one per report alpha

    friend bool operator==(const PairTally& a, const PairTally& b) {
        return a.baseline == b.baseline && a.challenger == b.challenger && a.wins == b.wins && a.ties == b.ties &&
               a.losses == b.losses && a.tests.size() == b.tests.size() &&
               std::equal(a.tests.begin(), a.tests.end(), b.tests.begin(), [](const auto& x, const auto& y) {
                   return x.significant == y.significant && x.critical_wins == y.critical_wins &&
                          x.adjusted_wins == y.adjusted_wins && x.adjusted_losses == y.adjusted_losses;
               });
    }
};

struct ExperimentReport {
    std::vector<std::string> methods;
    std::vector<DatasetResult> datasets;
    std::vector<std::string> failures;  // "<dataset>: <message>"
    std::vector<double> mean_ranks;     // [method]
    std::vector<double> alphas;         // significance levels of PairTally::tests
    std::vector<PairTally> pairs;
    // Configuration snapshot.
    std::size_t p_trees = 0;
    std::string mtry;
    int k = 0;
    double w = 0.0;
    double train_frac = 0.0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
    std::string prediction = "hard majority vote";

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

using LogFn = std::function<void(const std::string&)>;

/// Runs every method on the same stratified splits of every dataset.
ExperimentReport run_experiment(const std::vector<std::filesystem::path>& manifests, const std::vector<Method>& methods,
                                const BenchConfig& config, const LogFn& log = {});

/// Same, on datasets already in memory.
ExperimentReport run_experiment(const std::vector<MultiViewDataset>& datasets, const std::vector<Method>& methods,
                                const BenchConfig& config, const LogFn& log = {});

/// Mean over datasets of per-dataset ranks (1 = highest accuracy, ties get the
/// average of the ranks they span). acc[d][m] is method m's accuracy on d.
std::vector<double> mean_ranks(const std::vector<std::vector<double>>& acc);

/// Two-sided sign test. Ties are split evenly with the odd one counted as a
/// loss. critical_wins is the least c with P(X >= c) <= alpha / 2 for
/// X ~ Binomial(wins + ties + losses, 1/2) (N + 1 if none).
SignTestResult sign_test(int wins, int ties, int losses, double alpha);

enum class ReportFormat { json, markdown, csv };
ReportFormat parse_report_format(std::string_view name);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
std::string report_to_markdown(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

/// Writes the report; throws ConfigError before touching the file when the
/// report has no methods, DataError when the path is not writable.
void emit_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace mvdis

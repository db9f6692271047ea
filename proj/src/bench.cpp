#include "mvdis/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace mvdis {

namespace {

constexpr std::uint64_t kSplitStream = 0x5b17;
constexpr std::uint64_t kModelStream = 0x30de1;
constexpr double kReportAlphas[] = {0.10, 0.05, 0.01};

double accuracy(const std::vector<ClassIndex>& predicted, const Labels& truth) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
    return truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
}

std::vector<ClassIndex> majority_predictions(const MultiViewDataset& train, std::size_t n_test) {
    std::vector<int> counts(train.n_classes(), 0);
    for (ClassIndex c : train.labels) ++counts[static_cast<std::size_t>(c)];
    const auto winner = static_cast<ClassIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    return std::vector<ClassIndex>(n_test, winner);
}

DatasetResult evaluate_dataset(const MultiViewDataset& ds, const std::vector<Method>& methods,
                               const BenchConfig& config) {
    ds.validate();
    DatasetResult result;
    result.name = ds.name;
    result.accuracy.assign(methods.size(), {});
    for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        const SplitIndices split = stratified_split(ds, config.train_frac, derive_seed(config.seed, kSplitStream, rep));
        result.split_hashes.push_back(split_hash(split));
        const MultiViewDataset train = ds.subset(split.train);
        const MultiViewDataset test = ds.subset(split.test);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            std::vector<ClassIndex> predicted;
            if (methods[m].measure) {
                MvlConfig mc = config.model;
                mc.measure = *methods[m].measure;
                mc.seed = derive_seed(config.seed, kModelStream, rep);
                const MvlModel model = fit_mvl(train, mc);
                predicted = predict_batch(model, test.views);
            } else {
                predicted = majority_predictions(train, test.n_instances());
            }
            result.accuracy[m].push_back(accuracy(predicted, test.labels));
        }
    }
    for (const auto& accs : result.accuracy) {
        const double n = static_cast<double>(accs.size());
        const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
        double ss = 0.0;
        for (double a : accs) ss += (a - mean) * (a - mean);
        result.mean.push_back(mean);
        result.stddev.push_back(accs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
    }
    return result;
}

void finalize(ExperimentReport& report) {
    std::vector<std::vector<double>> table;
    for (const auto& d : report.datasets) table.push_back(d.mean);
    report.mean_ranks = table.empty() ? std::vector<double>(report.methods.size(), 0.0) : mean_ranks(table);
    report.alphas.assign(std::begin(kReportAlphas), std::end(kReportAlphas));
    report.pairs.clear();
    for (std::size_t a = 0; a < report.methods.size(); ++a) {
        for (std::size_t b = a + 1; b < report.methods.size(); ++b) {
            PairTally t;
            t.baseline = report.methods[a];
            t.challenger = report.methods[b];
            for (const auto& row : table) {
                if (row[b] > row[a]) {
                    ++t.wins;
                } else if (row[b] < row[a]) {
                    ++t.losses;
                } else {
                    ++t.ties;
                }
            }
            if (!table.empty()) {
                for (double alpha : report.alphas) t.tests.push_back(sign_test(t.wins, t.ties, t.losses, alpha));
            }
            report.pairs.push_back(std::move(t));
        }
    }
}

ExperimentReport make_report(const std::vector<Method>& methods, const BenchConfig& config) {
    if (methods.empty()) throw ConfigError("at least one method is required");
    config.validate();
    ExperimentReport report;
    for (const auto& m : methods) report.methods.push_back(m.name);
    report.p_trees = config.model.p_trees;
    report.mtry = config.model.mtry;
    report.k = config.model.k;
    report.w = config.model.w;
    report.train_frac = config.train_frac;
    report.repeats = config.repeats;
    report.seed = config.seed;
    return report;
}

// Exact binomial tail count sum_{j >= c} C(N, j) for N <= 62.
std::vector<std::uint64_t> binomial_tail_counts(int N) {
    std::vector<std::uint64_t> row(static_cast<std::size_t>(N) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= N; ++i) {
        for (int j = i; j > 0; --j) row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j) - 1];
    }
    std::vector<std::uint64_t> tail(static_cast<std::size_t>(N) + 2, 0);
    for (int c = N; c >= 0; --c) tail[static_cast<std::size_t>(c)] = tail[static_cast<std::size_t>(c) + 1] + row[static_cast<std::size_t>(c)];
    return tail;
}

}  // namespace

Method parse_method(std::string_view name) {
    if (name == "majority") return {"majority", std::nullopt};
    try {
        const Measure m = parse_measure(name);
        return {std::string(measure_name(m)), m};
    } catch (const ConfigError&) {
        std::string valid;
        for (const auto& n : measure_names()) valid += n + ", ";
        throw ConfigError("unknown method '" + std::string(name) + "' (valid: " + valid + "majority)");
    }
}

void BenchConfig::validate() const {
    model.validate();
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
}

ExperimentReport run_experiment(const std::vector<std::filesystem::path>& manifests, const std::vector<Method>& methods,
                                const BenchConfig& config, const LogFn& log) {
    ExperimentReport report = make_report(methods, config);
    if (manifests.empty()) throw ConfigError("at least one dataset is required");
    for (const auto& path : manifests) {
        try {
            const MultiViewDataset ds = load_multiview(path);
            report.datasets.push_back(evaluate_dataset(ds, methods, config));
            if (log) log("dataset " + ds.name + ": done");
        } catch (const Error& e) {
            report.failures.push_back(path.string() + ": " + e.what());
            if (log) log("dataset " + path.string() + ": FAILED: " + e.what());
        }
    }
    finalize(report);
    return report;
}

ExperimentReport run_experiment(const std::vector<MultiViewDataset>& datasets, const std::vector<Method>& methods,
                                const BenchConfig& config, const LogFn& log) {
    ExperimentReport report = make_report(methods, config);
    if (datasets.empty()) throw ConfigError("at least one dataset is required");
    for (const auto& ds : datasets) {
        try {
            report.datasets.push_back(evaluate_dataset(ds, methods, config));
            if (log) log("dataset " + ds.name + ": done");
        } catch (const Error& e) {
            report.failures.push_back(ds.name + ": " + e.what());
            if (log) log("dataset " + ds.name + ": FAILED: " + e.what());
        }
    }
    finalize(report);
    return report;
}

std::vector<double> mean_ranks(const std::vector<std::vector<double>>& acc) {
    if (acc.empty()) throw ConfigError("mean ranks need at least one dataset");
    const std::size_t k = acc.front().size();
    if (k == 0) throw ConfigError("mean ranks need at least one method");
    std::vector<double> total(k, 0.0);
    std::vector<std::size_t> order(k);
    for (const auto& row : acc) {
        if (row.size() != k) throw DataError("accuracy table rows have different lengths");
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
        for (std::size_t start = 0; start < k;) {
            std::size_t end = start + 1;
            while (end < k && row[order[end]] == row[order[start]]) ++end;
            // Positions start..end-1 hold ranks start+1..end.
            const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
            for (std::size_t i = start; i < end; ++i) total[order[i]] += rank;
            start = end;
        }
    }
    for (double& t : total) t /= static_cast<double>(acc.size());
    return total;
}

SignTestResult sign_test(int wins, int ties, int losses, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    if (wins < 0 || ties < 0 || losses < 0 || wins + ties + losses < 1) {
        throw ConfigError("sign test needs non-negative counts with at least one comparison");
    }
    const int N = wins + ties + losses;
    SignTestResult r;
    r.adjusted_wins = wins + ties / 2;
    r.adjusted_losses = losses + (ties + 1) / 2;
    r.critical_wins = N + 1;
    const double half_alpha = alpha / 2.0;
    if (N <= 62) {
        const auto tail = binomial_tail_counts(N);
        const double total = std::ldexp(1.0, N);
        for (int c = 0; c <= N; ++c) {
            if (static_cast<double>(tail[static_cast<std::size_t>(c)]) <= half_alpha * total) {
                r.critical_wins = c;
                break;
            }
        }
    } else {
        // Log-space tail for large N.
        auto log_pmf = [&](int j) {
            return std::lgamma(N + 1.0) - std::lgamma(j + 1.0) - std::lgamma(N - j + 1.0) - N * std::log(2.0);
        };
        double tail = 0.0;
        for (int c = N; c >= 0; --c) {
            tail += std::exp(log_pmf(c));
            if (tail > half_alpha) {
                r.critical_wins = c + 1;
                break;
            }
        }
    }
    r.significant = r.adjusted_wins >= r.critical_wins;
    return r;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "json") return ReportFormat::json;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    if (name == "csv") return ReportFormat::csv;
    throw ConfigError("unknown report format '" + std::string(name) + "' (valid: json, markdown, csv)");
}

std::string report_to_json(const ExperimentReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["config"] = {{"trees", r.p_trees}, {"mtry", r.mtry},         {"k", r.k},
                   {"w", r.w},           {"train_frac", r.train_frac}, {"repeats", r.repeats},
                   {"seed", r.seed},     {"prediction", r.prediction}};
    j["methods"] = r.methods;
    j["datasets"] = ordered_json::array();
    for (const auto& d : r.datasets) {
        j["datasets"].push_back({{"name", d.name},
                                 {"split_hashes", d.split_hashes},
                                 {"accuracy", d.accuracy},
                                 {"mean", d.mean},
                                 {"std", d.stddev}});
    }
    j["failures"] = r.failures;
    j["mean_ranks"] = r.mean_ranks;
    j["alphas"] = r.alphas;
    j["sign_tests"] = ordered_json::array();
    for (const auto& p : r.pairs) {
        ordered_json tests = ordered_json::array();
        for (const auto& t : p.tests) {
            tests.push_back({{"significant", t.significant},
                             {"critical_wins", t.critical_wins},
                             {"adjusted_wins", t.adjusted_wins},
                             {"adjusted_losses", t.adjusted_losses}});
        }
        j["sign_tests"].push_back({{"baseline", p.baseline},
                                   {"challenger", p.challenger},
                                   {"wins", p.wins},
                                   {"ties", p.ties},
                                   {"losses", p.losses},
                                   {"tests", tests}});
    }
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    ExperimentReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto& c = j.at("config");
        r.p_trees = c.at("trees").get<std::size_t>();
        r.mtry = c.at("mtry").get<std::string>();
        r.k = c.at("k").get<int>();
        r.w = c.at("w").get<double>();
        r.train_frac = c.at("train_frac").get<double>();
        r.repeats = c.at("repeats").get<std::size_t>();
        r.seed = c.at("seed").get<std::uint64_t>();
        r.prediction = c.at("prediction").get<std::string>();
        r.methods = j.at("methods").get<std::vector<std::string>>();
        for (const auto& d : j.at("datasets")) {
            DatasetResult dr;
            dr.name = d.at("name").get<std::string>();
            dr.split_hashes = d.at("split_hashes").get<std::vector<std::uint64_t>>();
            dr.accuracy = d.at("accuracy").get<std::vector<std::vector<double>>>();
            dr.mean = d.at("mean").get<std::vector<double>>();
            dr.stddev = d.at("std").get<std::vector<double>>();
            r.datasets.push_back(std::move(dr));
        }
        r.failures = j.at("failures").get<std::vector<std::string>>();
        r.mean_ranks = j.at("mean_ranks").get<std::vector<double>>();
        r.alphas = j.at("alphas").get<std::vector<double>>();
        for (const auto& p : j.at("sign_tests")) {
            PairTally t;
            t.baseline = p.at("baseline").get<std::string>();
            t.challenger = p.at("challenger").get<std::string>();
            t.wins = p.at("wins").get<int>();
            t.ties = p.at("ties").get<int>();
            t.losses = p.at("losses").get<int>();
            for (const auto& s : p.at("tests")) {
                t.tests.push_back({s.at("significant").get<bool>(), s.at("critical_wins").get<int>(),
                                   s.at("adjusted_wins").get<int>(), s.at("adjusted_losses").get<int>()});
            }
            r.pairs.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report JSON: ") + e.what());
    }
    return r;
}

std::string report_to_markdown(const ExperimentReport& r) {
    char buf[64];
    std::string out = "|";
    for (const auto& m : r.methods) out += " | " + m;
    out += " |\n|---";
    for (std::size_t m = 0; m < r.methods.size(); ++m) out += "|---";
    out += "|\n";
    for (const auto& d : r.datasets) {
        const double best = *std::max_element(d.mean.begin(), d.mean.end());
        out += "| " + d.name;
        for (std::size_t m = 0; m < d.mean.size(); ++m) {
            std::snprintf(buf, sizeof buf, "%.2f%% ± %.2f", 100.0 * d.mean[m], 100.0 * d.stddev[m]);
            out += d.mean[m] == best ? std::string(" | **") + buf + "**" : std::string(" | ") + buf;
        }
        out += " |\n";
    }
    out += "| Avg rank";
    for (double rank : r.mean_ranks) {
        std::snprintf(buf, sizeof buf, "%.2f", rank);
        out += std::string(" | ") + buf;
    }
    out += " |\n";
    for (const auto& f : r.failures) out += "\nFailed: " + f + "\n";
    return out;
}

std::string report_to_csv(const ExperimentReport& r) {
    std::string out = "dataset,method,repetition,accuracy\n";
    char buf[32];
    for (const auto& d : r.datasets) {
        for (std::size_t m = 0; m < r.methods.size(); ++m) {
            for (std::size_t rep = 0; rep < d.accuracy[m].size(); ++rep) {
                std::snprintf(buf, sizeof buf, "%.17g", d.accuracy[m][rep]);
                out += d.name + "," + r.methods[m] + "," + std::to_string(rep) + "," + buf + "\n";
            }
        }
    }
    return out;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format) {
    if (report.methods.empty()) throw ConfigError("report has no methods");
    std::string text;
    switch (format) {
        case ReportFormat::json: text = report_to_json(report); break;
        case ReportFormat::markdown: text = report_to_markdown(report); break;
        case ReportFormat::csv: text = report_to_csv(report); break;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing report '" + path.string() + "'");
}

}  // namespace mvdis

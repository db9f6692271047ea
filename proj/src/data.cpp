#include "mvdis/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace mvdis {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::vector<std::string> read_label_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file '" + path.string() + "'");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) labels.emplace_back(trim(line));
    while (!labels.empty() && labels.back().empty()) labels.pop_back();
    return labels;
}

struct Manifest {
    std::string name;
    std::vector<fs::path> views;
    std::optional<fs::path> labels;
};

Manifest read_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (!doc.is_object() || !doc.contains("views") || !doc["views"].is_array()) {
        throw DataError("manifest '" + manifest_path.string() + "' must have a \"views\" array");
    }
    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const nlohmann::json& v) {
        if (!v.is_string()) throw DataError("manifest '" + manifest_path.string() + "': paths must be strings");
        fs::path p = v.get<std::string>();
        return p.is_absolute() ? p : base / p;
    };
    Manifest m;
    m.name = doc.value("name", manifest_path.stem().string());
    for (const auto& v : doc["views"]) m.views.push_back(resolve(v));
    if (m.views.empty()) throw DataError("manifest '" + manifest_path.string() + "' lists no views");
    if (doc.contains("labels")) m.labels = resolve(doc["labels"]);
    return m;
}

MultiViewDataset load_impl(const fs::path& manifest_path, bool require_labels) {
    const Manifest m = read_manifest(manifest_path);
    MultiViewDataset ds;
    ds.name = m.name;
    for (const auto& vp : m.views) {
        ds.views.push_back(read_view_csv(vp));
        const Matrix& v = ds.views.back();
        if (v.rows() != ds.views.front().rows()) {
            throw DataError("view file '" + vp.string() + "' has " + std::to_string(v.rows()) +
                            " rows but '" + m.views.front().string() + "' has " +
                            std::to_string(ds.views.front().rows()));
        }
    }
    if (m.labels) {
        const auto raw = read_label_file(*m.labels);
        if (raw.size() != ds.views.front().rows()) {
            throw DataError("label file '" + m.labels->string() + "' has " + std::to_string(raw.size()) +
                            " labels but views have " + std::to_string(ds.views.front().rows()) + " rows");
        }
        std::tie(ds.labels, ds.class_table) = encode_labels(raw);
        ds.validate();
    } else if (require_labels) {
        throw DataError("manifest '" + manifest_path.string() + "' has no \"labels\" entry");
    }
    return ds;
}

}  // namespace

void MultiViewDataset::validate() const {
    if (views.empty()) throw DataError("dataset '" + name + "' has no views");
    const std::size_t n = labels.size();
    if (n < 2) throw DataError("dataset '" + name + "' needs at least 2 instances");
    for (std::size_t q = 0; q < views.size(); ++q) {
        if (views[q].rows() != n) {
            throw DataError("dataset '" + name + "': view " + std::to_string(q) + " has " +
                            std::to_string(views[q].rows()) + " rows, expected " + std::to_string(n));
        }
        if (views[q].cols() == 0) throw DataError("dataset '" + name + "': view " + std::to_string(q) + " has no columns");
        for (double v : views[q].data()) {
            if (!std::isfinite(v)) throw DataError("dataset '" + name + "': view " + std::to_string(q) + " has a non-finite value");
        }
    }
    for (ClassIndex c : labels) {
        if (c < 0 || static_cast<std::size_t>(c) >= class_table.size()) {
            throw DataError("dataset '" + name + "': label index out of range");
        }
    }
}

MultiViewDataset MultiViewDataset::subset(std::span<const std::size_t> rows) const {
    MultiViewDataset out;
    out.name = name;
    out.class_table = class_table;
    for (const auto& v : views) out.views.push_back(v.select_rows(rows));
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels.at(r));
    return out;
}

std::pair<Labels, std::vector<std::string>> encode_labels(const std::vector<std::string>& raw) {
    std::vector<std::string> table(raw.begin(), raw.end());
    std::sort(table.begin(), table.end());
    table.erase(std::unique(table.begin(), table.end()), table.end());
    Labels encoded;
    encoded.reserve(raw.size());
    for (const auto& s : raw) {
        encoded.push_back(static_cast<ClassIndex>(std::lower_bound(table.begin(), table.end(), s) - table.begin()));
    }
    return {std::move(encoded), std::move(table)};
}

Matrix read_view_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open view file '" + path.string() + "'");
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_cells(line);
        if (first) {
            first = false;
            double tmp;
            const bool header = std::any_of(cells.begin(), cells.end(), [&](auto c) { return !parse_number(c, tmp); });
            cols = cells.size();
            if (header) continue;
        }
        if (cells.size() != cols) {
            throw DataError("view file '" + path.string() + "' row " + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v;
            if (!parse_number(cells[c], v)) {
                throw DataError("view file '" + path.string() + "' row " + std::to_string(line_no) + " column " +
                                std::to_string(c + 1) + ": non-numeric cell '" + std::string(cells[c]) + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError("view file '" + path.string() + "' row " + std::to_string(line_no) + " column " +
                                std::to_string(c + 1) + ": non-finite value");
            }
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0 || cols == 0) throw DataError("view file '" + path.string() + "' is empty");
    return Matrix(rows, cols, std::move(values));
}

MultiViewDataset load_multiview(const fs::path& manifest_path) { return load_impl(manifest_path, true); }

MultiViewDataset load_views_only(const fs::path& manifest_path) { return load_impl(manifest_path, false); }

fs::path save_multiview(const MultiViewDataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["name"] = ds.name;
    manifest["views"] = nlohmann::json::array();
    for (std::size_t q = 0; q < ds.views.size(); ++q) {
        const std::string file = "view_" + std::to_string(q) + ".csv";
        std::ofstream out(dir / file);
        if (!out) throw DataError("cannot write '" + (dir / file).string() + "'");
        const Matrix& v = ds.views[q];
        char buf[32];
        for (std::size_t r = 0; r < v.rows(); ++r) {
            for (std::size_t c = 0; c < v.cols(); ++c) {
                const auto res = std::to_chars(buf, buf + sizeof buf, v(r, c));
                if (c) out << ',';
                out.write(buf, res.ptr - buf);
            }
            out << '\n';
        }
        manifest["views"].push_back(file);
    }
    if (!ds.labels.empty()) {
        std::ofstream out(dir / "labels.txt");
        if (!out) throw DataError("cannot write '" + (dir / "labels.txt").string() + "'");
        for (ClassIndex c : ds.labels) out << ds.class_table.at(c) << '\n';
        manifest["labels"] = "labels.txt";
    }
    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write '" + manifest_path.string() + "'");
    out << manifest.dump(2) << '\n';
    return manifest_path;
}

SplitIndices stratified_split(const MultiViewDataset& ds, double train_frac, std::uint64_t rng_seed) {
    return stratified_split(ds.labels, ds.n_classes(), train_frac, rng_seed);
}

SplitIndices stratified_split(const Labels& labels, std::size_t n_classes, double train_frac,
                              std::uint64_t rng_seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
    std::vector<std::vector<std::size_t>> members(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) members.at(labels[i]).push_back(i);
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (!members[c].empty() && members[c].size() < 2) {
            throw DataError("class " + std::to_string(c) + " has fewer than 2 instances; cannot stratify");
        }
    }

    std::vector<std::size_t> take(n_classes, 0);
    std::vector<double> share(n_classes, 0.0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double exact = train_frac * static_cast<double>(members[c].size());
        take[c] = static_cast<std::size_t>(std::floor(exact));
        share[c] = exact - static_cast<double>(take[c]);
        assigned += take[c];
    }
    const auto target = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(labels.size())));
    std::vector<std::size_t> order(n_classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return members[a].size() > members[b].size(); });
    for (std::size_t c : order) {
        if (assigned >= target) break;
        if (share[c] > 0.0) {
            ++take[c];
            ++assigned;
        }
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (members[c].empty()) continue;
        take[c] = std::clamp<std::size_t>(take[c], 1, members[c].size() - 1);
    }

    Rng rng(derive_seed(rng_seed, 0x5eed5));
    SplitIndices split;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto idx = members[c];
        rng.shuffle(idx);
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
        split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::uint64_t split_hash(const SplitIndices& split) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    feed(split.train.size());
    for (auto i : split.train) feed(i);
    feed(split.test.size());
    for (auto i : split.test) feed(i);
    return h;
}

}  // namespace mvdis

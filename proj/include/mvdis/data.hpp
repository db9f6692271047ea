#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvdis/common.hpp"

namespace mvdis {

/// Q concurrent feature matrices over the same n instances plus encoded labels.
struct MultiViewDataset {
    std::string name;
    std::vector<Matrix> views;            // view q is n x m_q
    Labels labels;                        // length n, values index class_table
    std::vector<std::string> class_table; // sorted raw label strings

    std::size_t n_instances() const { return labels.size(); }
    std::size_t n_views() const { return views.size(); }
    std::size_t n_classes() const { return class_table.size(); }

    /// Throws DataError if any invariant is violated.
    void validate() const;

    /// Dataset restricted to the given rows (same class table).
    MultiViewDataset subset(std::span<const std::size_t> rows) const;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Encodes raw label strings by their lexicographic rank.
std::pair<Labels, std::vector<std::string>> encode_labels(const std::vector<std::string>& raw);

/// Loads a dataset described by a JSON manifest:
///   {"name": str, "views": [path, ...], "labels": path}
/// Relative paths resolve against the manifest's directory.
MultiViewDataset load_multiview(const std::filesystem::path& manifest_path);

/// Same as load_multiview but the "labels" entry may be absent, in which case
/// labels and class_table are left empty. Used for prediction inputs.
MultiViewDataset load_views_only(const std::filesystem::path& manifest_path);

/// Reads one CSV view file. A single header row is skipped when its first
/// row has any non-numeric cell.
Matrix read_view_csv(const std::filesystem::path& path);

/// Writes `ds` as manifest.json + view_<q>.csv + labels.txt under `dir`.
/// Returns the manifest path.
std::filesystem::path save_multiview(const MultiViewDataset& ds, const std::filesystem::path& dir);

/// Stratified train/test split. Per class: floor(train_frac * count), then the
/// remaining train slots (to reach round(train_frac * n)) go one each to the
/// largest classes with a fractional share; each class keeps at least one
/// instance on both sides.
SplitIndices stratified_split(const MultiViewDataset& ds, double train_frac, std::uint64_t rng_seed);

/// Same as above, from labels alone.
SplitIndices stratified_split(const Labels& labels, std::size_t n_classes, double train_frac,
                              std::uint64_t rng_seed);

/// Stable 64-bit FNV-1a hash of a split, for pairing checks in reports.
std::uint64_t split_hash(const SplitIndices& split);

}  // namespace mvdis

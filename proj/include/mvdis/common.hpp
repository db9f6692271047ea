#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvdis {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data (files, shapes, values).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter or configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Copy of the selected rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Class index of an instance; labels are encoded as 0..n_classes-1.
using ClassIndex = int;
using Labels = std::vector<ClassIndex>;

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// Every stochastic step draws from a generator seeded by mixing a user seed
// with a stream id and an index. Changing the number of trees or views never
// perturbs the streams of the others.
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for sub-stream (stream, index) of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// 64-bit Mersenne twister (its output sequence is fixed by the standard) with
/// portable bounded draws. The standard distributions are implementation
/// defined, so they are not used anywhere results must be reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform integer in [0, bound). bound must be positive.
    std::size_t uniform_index(std::size_t bound);
    /// Uniform real in [0, 1).
    double uniform();
    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Number of worker threads to use for `jobs`; 0 means all hardware threads.
unsigned resolve_jobs(unsigned jobs);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index must
/// write only its own output slot; results are then independent of `jobs`.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace mvdis

#include "mvdis/synth.hpp"

#include <cmath>
#include <numeric>

namespace mvdis::synth {

namespace {

std::vector<std::string> class_names(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    return names;
}

void check(bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

MultiViewDataset blobs(const BlobParams& p) {
    check(p.classes >= 2, "blobs need at least 2 classes");
    check(p.n >= 2 * p.classes, "blobs need at least 2 instances per class");
    check(p.views >= 1 && p.dims >= 1, "blobs need at least one view and one feature");
    Rng rng(derive_seed(p.seed, 0xb10b));
    MultiViewDataset ds;
    ds.name = "blobs";
    ds.class_table = class_names(p.classes);
    for (std::size_t i = 0; i < p.n; ++i) ds.labels.push_back(static_cast<ClassIndex>(i % p.classes));
    for (std::size_t q = 0; q < p.views; ++q) {
        // Centres: class c points along a random unit direction (per view),
        // each pair of centres at least ~separation apart.
        Matrix centres(p.classes, p.dims);
        for (std::size_t c = 0; c < p.classes; ++c) {
            double norm = 0.0;
            for (std::size_t d = 0; d < p.dims; ++d) {
                centres(c, d) = (d == c % p.dims ? 1.0 : 0.0) + 0.1 * rng.normal();
                norm += centres(c, d) * centres(c, d);
            }
            for (std::size_t d = 0; d < p.dims; ++d) centres(c, d) *= p.separation / std::sqrt(norm);
            if (c >= p.dims) {
                for (std::size_t d = 0; d < p.dims; ++d) centres(c, d) *= -1.0 - static_cast<double>(c / p.dims);
            }
        }
        Matrix X(p.n, p.dims);
        for (std::size_t i = 0; i < p.n; ++i) {
            const auto c = static_cast<std::size_t>(ds.labels[i]);
            for (std::size_t d = 0; d < p.dims; ++d) X(i, d) = centres(c, d) + rng.normal();
        }
        ds.views.push_back(std::move(X));
    }
    return ds;
}

MultiViewDataset noisy_leaf(const NoisyLeafParams& p) {
    check(p.n >= 8, "noisy-leaf needs at least 8 instances");
    check(p.views >= 1 && p.informative >= 1, "noisy-leaf needs at least one view and one informative feature");
    check(p.cells >= 2, "noisy-leaf needs at least 2 cells per axis");
    check(p.noise_rate >= 0.0 && p.noise_rate < 0.5, "noise rate must be in [0, 0.5)");
    Rng rng(derive_seed(p.seed, 0x4015e));
    MultiViewDataset ds;
    ds.name = "noisyleaf";
    ds.class_table = class_names(2);

    // Latent position on a checkerboard of unit cells, shared by all views;
    // each view observes it through its own noise.
    const double kCells = static_cast<double>(p.cells);
    Matrix latent(p.n, p.informative);
    Labels clean(p.n);
    std::vector<double> margin(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        int parity = 0;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < p.informative; ++d) {
            const double v = kCells * rng.uniform();
            latent(i, d) = v;
            parity += static_cast<int>(std::floor(v));
            const double frac = v - std::floor(v);
            // Distance to the nearest interior cell wall.
            double wall = std::numeric_limits<double>::infinity();
            if (v > 1.0) wall = std::min(wall, frac);
            if (v < kCells - 1.0) wall = std::min(wall, 1.0 - frac);
            m = std::min(m, wall);
        }
        clean[i] = parity % 2;
        margin[i] = m;
    }

    std::vector<std::size_t> order(p.n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return margin[a] < margin[b]; });
    ds.labels = clean;
    const auto flips = static_cast<std::size_t>(std::llround(p.noise_rate * static_cast<double>(p.n)));
    // Flip a random subset of the instances in the boundary band (twice as
    // wide as the number of flips).
    std::vector<std::size_t> band(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(p.n, 2 * flips)));
    rng.shuffle(band);
    for (std::size_t f = 0; f < flips && f < band.size(); ++f) ds.labels[band[f]] = 1 - ds.labels[band[f]];

    for (std::size_t q = 0; q < p.views; ++q) {
        Matrix X(p.n, p.informative + p.irrelevant);
        for (std::size_t i = 0; i < p.n; ++i) {
            for (std::size_t d = 0; d < p.informative; ++d) X(i, d) = latent(i, d) + 0.15 * rng.normal();
            for (std::size_t d = 0; d < p.irrelevant; ++d) X(i, p.informative + d) = kCells * rng.uniform();
        }
        ds.views.push_back(std::move(X));
    }
    return ds;
}

MultiViewDataset iris_like(const IrisLikeParams& p) {
    check(p.per_class >= 6, "iris-like needs at least 6 instances per class");
    Rng rng(derive_seed(p.seed, 0x1415));
    const double centres[3][4] = {{0.0, 0.0, 0.0, 0.0}, {3.0, 0.0, 3.0, 0.0}, {0.0, 3.0, 0.0, 3.0}};
    MultiViewDataset ds;
    ds.name = "irislike";
    ds.class_table = {"a", "b", "c"};
    const std::size_t n = 3 * p.per_class;
    Matrix X(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / p.per_class;
        ds.labels.push_back(static_cast<ClassIndex>(c));
        for (std::size_t d = 0; d < 4; ++d) X(i, d) = centres[c][d] + 0.4 * rng.normal();
    }
    X(0, 0) = centres[2][0];
    X(0, 1) = centres[2][1];
    X(0, 2) = centres[0][2];
    X(0, 3) = centres[0][3];
    ds.views.push_back(std::move(X));
    return ds;
}

}  // namespace mvdis::synth

#pragma once

#include <cstdint>
#include <string_view>

#include "mvdis/data.hpp"

namespace mvdis::synth {

struct BlobParams {
    std::size_t n = 40;
    std::size_t views = 2;
    std::size_t classes = 2;
    std::size_t dims = 5;        // features per view
    double separation = 6.0;     // distance of class centres from the origin
    std::uint64_t seed = 0;
};

/// Gaussian blobs, one well separated centre per class in every view.
/// Instance i has class i mod classes.
MultiViewDataset blobs(const BlobParams& p);

struct NoisyLeafParams {
    std::size_t n = 200;
    std::size_t views = 2;
    std::size_t informative = 2;  // informative features per view
    std::size_t irrelevant = 5;   // pure-noise features per view
    std::size_t cells = 2;        // checkerboard cells per informative axis
    double noise_rate = 0.15;     // fraction of labels flipped, taken nearest the class boundary
    std::uint64_t seed = 0;
};

/// Two classes made of alternating clusters on a grid in the informative
/// features (a checkerboard), padded with irrelevant features. The instances
/// closest to a cluster boundary have their labels flipped.
MultiViewDataset noisy_leaf(const NoisyLeafParams& p);

struct IrisLikeParams {
    std::size_t per_class = 50;
    std::uint64_t seed = 0;
};

/// Single view, four features, three classes. Features {0,1} and {2,3} each
/// separate the classes; instance 0 (class 0) sits at the class-2 centre in
/// features {0,1} but at its own class centre in features {2,3}.
MultiViewDataset iris_like(const IrisLikeParams& p);

}  // namespace mvdis::synth

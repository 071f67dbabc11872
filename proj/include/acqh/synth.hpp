/// @file synth.hpp
/// @brief Seeded clustered bimodal dataset generator.

#pragma once

#include <cstdint>

#include "acqh/io.hpp"

namespace acqh {

struct SynthConfig {
  Index classes = 5;
  Index per_class = 100;
  Index queries_per_class = 20;
  Index dx = 20;
  Index dy = 15;
  /// Noise std relative to the centroid spread (centroid coordinates are
  /// standard normal, so spread is 1).
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
};

/// Each class draws one centroid per modality; items are centroid plus
/// isotropic Gaussian noise, labels one-hot by class. Database columns are
/// ordered class-major; the query split (queries_per_class per class) is
/// drawn from the same centroids.
DatasetBundle synth_dataset(const SynthConfig& config);

}  // namespace acqh

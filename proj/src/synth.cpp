#include "acqh/synth.hpp"

#include <random>

namespace acqh {

DatasetBundle synth_dataset(const SynthConfig& config) {
  if (config.classes < 2) throw ArgumentError("synth_dataset: classes must be >= 2");
  if (config.per_class < 2) throw ArgumentError("synth_dataset: per_class must be >= 2");
  if (config.queries_per_class < 0) throw ArgumentError("synth_dataset: queries_per_class must be >= 0");
  if (config.dx < 1 || config.dy < 1) throw ArgumentError("synth_dataset: dims must be >= 1");
  if (!(config.noise_sigma >= 0.0)) throw ArgumentError("synth_dataset: noise_sigma must be >= 0");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centroid_x(config.dx, config.classes);
  Matrix centroid_y(config.dy, config.classes);
  for (Index c = 0; c < config.classes; ++c) {
    for (Index r = 0; r < config.dx; ++r) centroid_x(r, c) = normal(rng);
    for (Index r = 0; r < config.dy; ++r) centroid_y(r, c) = normal(rng);
  }

  auto emit = [&](Index per_class, Matrix& x, Matrix& y, Matrix& labels) {
    const Index items = per_class * config.classes;
    x.resize(config.dx, items);
    y.resize(config.dy, items);
    labels = Matrix::Zero(config.classes, items);
    for (Index c = 0; c < config.classes; ++c) {
      for (Index k = 0; k < per_class; ++k) {
        const Index i = c * per_class + k;
        for (Index r = 0; r < config.dx; ++r) x(r, i) = centroid_x(r, c) + config.noise_sigma * normal(rng);
        for (Index r = 0; r < config.dy; ++r) y(r, i) = centroid_y(r, c) + config.noise_sigma * normal(rng);
        labels(c, i) = 1.0;
      }
    }
  };

  Matrix x, y, l;
  emit(config.per_class, x, y, l);
  DatasetBundle bundle{FeatureMatrix(std::move(x), Modality::kImage),
                       FeatureMatrix(std::move(y), Modality::kText), LabelMatrix(std::move(l)),
                       std::nullopt};
  if (config.queries_per_class > 0) {
    Matrix qx, qy, ql;
    emit(config.queries_per_class, qx, qy, ql);
    bundle.queries.emplace(QuerySplit{FeatureMatrix(std::move(qx), Modality::kImage),
                                      FeatureMatrix(std::move(qy), Modality::kText),
                                      LabelMatrix(std::move(ql))});
  }
  return bundle;
}

}  // namespace acqh

#include <doctest.h>

#include "instances.hpp"
#include "oracles.hpp"

using namespace acqh;

TEST_CASE("oracles refuse large instances") {
  oracle::InstanceSpec spec{.items = 65};
  const auto inst = oracle::random_instance(spec, 1);
  const auto dense = oracle::DenseInstance::from(inst.x, inst.y, inst.labels, inst.model);
  CHECK_THROWS_AS(oracle::dense_objective(dense, oracle::one_hot(inst.model.codes)), oracle::OracleSizeError);
  CHECK_THROWS_AS(oracle::dense_encode(dense), oracle::OracleSizeError);

  oracle::InstanceSpec deep{.stages = 3};
  const auto d3 = oracle::random_instance(deep, 2);
  CHECK_THROWS_AS(oracle::exhaustive_encode(oracle::DenseInstance::from(d3.x, d3.y, d3.labels, d3.model), 0),
                  oracle::OracleSizeError);
}

TEST_CASE("dense objective of an all-zero model is the squared similarity mass") {
  // Two items with one shared class: S = ones(2, 2), two copies of ||S||^2.
  auto model = oracle::assemble_model(Matrix::Zero(2, 1), Matrix::Zero(2, 1), Matrix::Zero(1, 2), 1, {0, 1},
                                      Matrix::Zero(1, 1), Vector::Zero(2), 1.0, 1.0);
  const FeatureMatrix x(Matrix::Ones(2, 2), Modality::kImage);
  const FeatureMatrix y(Matrix::Ones(2, 2), Modality::kText);
  const LabelMatrix l(Matrix::Ones(1, 2));
  const auto dense = oracle::DenseInstance::from(x, y, l, model);
  CHECK(oracle::dense_objective(dense, oracle::one_hot(model.codes)) == 8.0);
}

TEST_CASE("ridge least squares solves exact systems") {
  const Matrix d{{2, 0}, {0, 4}, {0, 0}};
  const Vector b{{2, 8, 0}};
  CHECK(oracle::ridge_least_squares(d, b, 0.0).isApprox(Vector{{1, 2}}));
  // With rho = 1: (4 + 1) v1 = 4, (16 + 1) v2 = 32.
  CHECK(oracle::ridge_least_squares(d, b, 1.0).isApprox(Vector{{0.8, 32.0 / 17.0}}));
}

TEST_CASE("one_hot layout") {
  const IndicatorCodes codes(2, 2, 3, {2, 0, 1, 1});
  const Matrix a = oracle::one_hot(codes);
  CHECK(a.rows() == 6);
  CHECK(a(2, 0) == 1.0);
  CHECK(a(3, 0) == 1.0);
  CHECK(a(1, 1) == 1.0);
  CHECK(a(4, 1) == 1.0);
  CHECK(a.sum() == 4.0);
}

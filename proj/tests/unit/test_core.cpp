#include <doctest.h>

#include <numeric>
#include <random>

#include "acqh/model.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace acqh;
using oracle::assemble_model;

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("similarity_entry counts shared labels") {
  CHECK(similarity_entry(Vector{{1, 0}}, Vector{{1, 1}}) == 1);
  CHECK(similarity_entry(Vector{{0, 1}}, Vector{{1, 0}}) == 0);
  CHECK(similarity_entry(Vector{{1, 1, 1}}, Vector{{1, 1, 0}}) == 2);
  CHECK_THROWS_AS(similarity_entry(Vector{{1, 0}}, Vector{{1, 0, 1}}), DimensionError);
}

TEST_CASE("label and feature containers validate their domain") {
  CHECK_THROWS_AS(LabelMatrix(Matrix{{1, 2}, {0, 0}}), LabelDomainError);
  CHECK_THROWS_AS(LabelMatrix(Matrix{{1, 0}, {0, 0}}), LabelDomainError);  // item 1 unlabeled
  CHECK_NOTHROW(LabelMatrix(Matrix{{1, 0}, {1, 1}}));

  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(FeatureMatrix(bad, Modality::kImage), NumericError);
  CHECK_THROWS_AS(FeatureMatrix(Matrix(0, 3), Modality::kText), DimensionError);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK(h.bits == 32);
  CHECK(h.codebooks == 4);
  CHECK(h.atoms == 256);
  CHECK(h.lambda == 1e-4);
  CHECK(h.mu == 1e-2);
  CHECK_NOTHROW(h.validate(32, 32));
  CHECK_THROWS_AS(h.validate(32, 31), ArgumentError);
  h.bits = 2;
  h.atoms = 1;
  CHECK_THROWS_AS(h.validate(4, 4), ArgumentError);
  h.atoms = 2;
  h.ridge_eps = 0.0;
  CHECK_THROWS_AS(h.validate(4, 4), ArgumentError);
  h.ridge_eps = 1e-8;
  h.lambda = -1.0;
  CHECK_THROWS_AS(h.validate(4, 4), ArgumentError);
}

TEST_CASE("objective of the zero model is twice the similarity norm") {
  const Matrix eye = Matrix::Identity(2, 2);
  const FeatureMatrix x(Matrix::Zero(2, 2), Modality::kImage);
  const FeatureMatrix y(Matrix::Zero(2, 2), Modality::kText);
  const LabelMatrix l(eye);
  const AcqhModel model = assemble_model(eye, eye, Matrix::Zero(2, 2), 1, {0, 1},
                                         Matrix::Zero(2, 2), Vector::Zero(2), 0.3, 0.2);
  CHECK(objective(x, y, l, model) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("objective is zero at an exact fit") {
  const Matrix eye = Matrix::Identity(2, 2);
  const FeatureMatrix x(eye, Modality::kImage);
  const FeatureMatrix y(eye, Modality::kText);
  const LabelMatrix l(eye);
  const AcqhModel model =
      assemble_model(eye, eye, eye, 1, {0, 1}, Matrix::Zero(2, 2), Vector::Zero(2), 0.0, 0.0);
  CHECK(objective(x, y, l, model) == 0.0);
}

TEST_CASE("factorized objective matches the dense evaluator") {
  SUBCASE("seed 7, K=2 m=1 n=2 C=2, four items") {
    oracle::InstanceSpec spec{.dx = 3, .dy = 3, .classes = 2, .items = 4, .bits = 2, .stages = 1, .atoms = 2};
    const auto inst = oracle::random_instance(spec, 7);
    const double dense = oracle::dense_objective(
        oracle::DenseInstance::from(inst.x, inst.y, inst.labels, inst.model), oracle::one_hot(inst.model.codes));
    CHECK(rel_diff(objective(inst.x, inst.y, inst.labels, inst.model), dense) <= 1e-10);
  }
  SUBCASE("random shapes up to N=64") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      std::mt19937_64 rng(seed);
      oracle::InstanceSpec spec;
      spec.items = std::uniform_int_distribution<Index>(1, 64)(rng);
      spec.classes = std::uniform_int_distribution<Index>(1, 6)(rng);
      spec.stages = std::uniform_int_distribution<Index>(1, 3)(rng);
      spec.atoms = std::uniform_int_distribution<Index>(2, 6)(rng);
      const auto inst = oracle::random_instance(spec, seed);
      const double dense = oracle::dense_objective(
          oracle::DenseInstance::from(inst.x, inst.y, inst.labels, inst.model), oracle::one_hot(inst.model.codes));
      const ObjectiveTerms terms = objective_terms(inst.x, inst.y, inst.labels, inst.model);
      CHECK(rel_diff(terms.total(), dense) <= 1e-10);
      CHECK(terms.total() >= terms.regularizer);
      CHECK(terms.regularizer >= 0.0);
    }
  }
}

TEST_CASE("objective is invariant under a simultaneous item permutation") {
  oracle::InstanceSpec spec{.items = 12, .stages = 2, .atoms = 3};
  const auto inst = oracle::random_instance(spec, 41);
  std::vector<Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));

  Matrix x(inst.x.dim(), 12), y(inst.y.dim(), 12), l(inst.labels.classes(), 12);
  Vector t(12);
  std::vector<AtomIndex> atoms;
  for (Index i = 0; i < 12; ++i) {
    const Index src = perm[static_cast<std::size_t>(i)];
    x.col(i) = inst.x.data().col(src);
    y.col(i) = inst.y.data().col(src);
    l.col(i) = inst.labels.data().col(src);
    t[i] = inst.model.regressor.drift[src];
    for (const AtomIndex a : inst.model.codes.item(src)) atoms.push_back(a);
  }
  AcqhModel permuted = inst.model;
  permuted.regressor.drift = t;
  permuted.codes = IndicatorCodes(2, 12, 3, atoms);

  const double a = objective(inst.x, inst.y, inst.labels, inst.model);
  const double b = objective(FeatureMatrix(x, Modality::kImage), FeatureMatrix(y, Modality::kText),
                             LabelMatrix(l), permuted);
  CHECK(rel_diff(a, b) <= 1e-12);
}

TEST_CASE("objective rejects inconsistent shapes") {
  const auto inst = oracle::random_instance({}, 3);
  const FeatureMatrix short_x(inst.x.data().leftCols(9), Modality::kImage);
  CHECK_THROWS_AS(objective(short_x, inst.y, inst.labels, inst.model), DimensionError);
  AcqhModel broken = inst.model;
  broken.regressor.drift = Vector::Zero(3);
  CHECK_THROWS_AS(objective(inst.x, inst.y, inst.labels, broken), DimensionError);
}

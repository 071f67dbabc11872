#include <doctest.h>

#include <random>

#include "acqh/query.hpp"
#include "instances.hpp"

using namespace acqh;

namespace {

AcqhModel two_item_model() {
  // K = 2, one stage with atoms e1, e2, 2*e1; items use atoms 2 and 1.
  Matrix codebook{{1, 0, 2}, {0, 1, 0}};
  return oracle::assemble_model(Matrix::Identity(2, 2), Matrix::Identity(3, 2), codebook, 1, {2, 1},
                                Matrix::Zero(1, 2), Vector::Zero(2), 0.0, 0.0);
}

}  // namespace

TEST_CASE("hand-computed scores") {
  const AcqhModel model = two_item_model();
  const QueryEngine engine(model);
  const Vector q{{1.0, 3.0}};
  CHECK(engine.scores(q, Modality::kImage) == Vector{{2.0, 3.0}});
  const auto hits = engine.search(q, Modality::kImage, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0] == Hit{1, 3.0});
  CHECK(hits[1] == Hit{0, 2.0});

  // The text projection is 3 x 2 with a zero last row.
  CHECK(engine.scores(Vector{{0.5, 0.0, 9.0}}, Modality::kText) == Vector{{1.0, 0.0}});
  CHECK_THROWS_AS(engine.scores(Vector{{1.0}}, Modality::kImage), DimensionError);
}

TEST_CASE("lookup table scan equals the direct inner product") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    oracle::InstanceSpec spec{.dx = 7, .dy = 6, .items = 40, .bits = 4, .stages = 3, .atoms = 5};
    const auto inst = oracle::random_instance(spec, seed);
    const QueryEngine engine(inst.model);
    const Matrix recon = reconstruct(inst.model.codebook, inst.model.codes);
    std::mt19937_64 rng(seed + 100);
    for (int trial = 0; trial < 5; ++trial) {
      for (const Modality modality : {Modality::kImage, Modality::kText}) {
        const Vector q = oracle::random_matrix(rng, modality == Modality::kImage ? 7 : 6, 1).col(0);
        ScanStats stats;
        const Vector fast = engine.scores(q, modality, &stats);
        const Vector direct = recon.transpose() * (inst.model.projections.for_modality(modality).transpose() * q);
        CHECK((fast - direct).lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, direct.lpNorm<Eigen::Infinity>()));
        CHECK(stats.table_reads == 3u * 40u);
        CHECK(stats.additions == 2u * 40u);
      }
    }
  }
}

TEST_CASE("build_lookup_table entries are atom inner products") {
  const AcqhModel model = two_item_model();
  const LookupTable table = build_lookup_table(QueryEmbedding{Vector{{2.0, -1.0}}, Modality::kImage},
                                               model.codebook);
  CHECK(table.stages() == 1);
  CHECK(table(0, 0) == 2.0);
  CHECK(table(0, 1) == -1.0);
  CHECK(table(0, 2) == 4.0);
}

TEST_CASE("centered models subtract the stored mean") {
  AcqhModel model = two_item_model();
  model.centering.mean_x = Vector{{1.0, 1.0}};
  model.centering.mean_y = Vector::Zero(3);
  const QueryEngine engine(model);
  CHECK(engine.embed(Vector{{2.0, 4.0}}, Modality::kImage).q_hat == Vector{{1.0, 3.0}});
}

TEST_CASE("top_k and rank_all ordering") {
  const Vector scores{{0.5, 2.0, 0.5, -1.0, 2.0}};
  const auto hits = top_k(scores, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0] == Hit{1, 2.0});
  CHECK(hits[1] == Hit{4, 2.0});
  CHECK(hits[2] == Hit{0, 0.5});
  CHECK(rank_all(scores) == std::vector<Index>{1, 4, 0, 2, 3});
  CHECK(top_k(scores, 5).size() == 5);
  CHECK_THROWS_AS(top_k(scores, 0), ArgumentError);
  CHECK_THROWS_AS(top_k(scores, 6), ArgumentError);
}

TEST_CASE("top_k is a prefix of the full ranking") {
  std::mt19937_64 rng(8);
  const Vector scores = oracle::random_matrix(rng, 200, 1).col(0);
  const auto ranking = rank_all(scores);
  const auto hits = top_k(scores, 17);
  for (std::size_t r = 0; r < hits.size(); ++r) {
    CHECK(hits[r].item == ranking[r]);
    CHECK(hits[r].score == scores[ranking[r]]);
  }
}

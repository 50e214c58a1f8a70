#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "reyes/errors.hpp"
#include "reyes/weights.hpp"

using namespace reyes;

namespace {

using Edge = std::pair<std::string, std::string>;

template <class Fn>
ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

std::vector<Edge> pairs(std::initializer_list<std::pair<const char*, const char*>> list) {
  std::vector<Edge> out;
  for (const auto& [a, b] : list) out.emplace_back(a, b);
  return out;
}

}  // namespace

TEST(Lattice, QueenAndRookNeighborCounts) {
  const auto queen = lattice_weights(3, 3, Contiguity::queen);
  const auto rook = lattice_weights(3, 3, Contiguity::rook);
  EXPECT_EQ(queen.nnz(), 40u);
  EXPECT_EQ(rook.nnz(), 24u);
  EXPECT_EQ(queen.neighbor_count(4), 8u);
  EXPECT_EQ(queen.neighbor_count(0), 3u);
  EXPECT_EQ(rook.neighbor_count(4), 4u);
  EXPECT_EQ(rook.neighbor_count(0), 2u);
  EXPECT_EQ(queen.weight(0, 4), 1.0);
  EXPECT_EQ(rook.weight(0, 4), 0.0);
  EXPECT_TRUE(queen.structurally_symmetric());
  EXPECT_EQ(queen.unit_ids().back(), "9");
}

TEST(Lattice, GeneralSizes) {
  // Interior edges of an r x c grid: rook r(c-1) + c(r-1), queen adds 2(r-1)(c-1) diagonals.
  for (std::size_t r = 2; r <= 6; ++r) {
    for (std::size_t c = 2; c <= 6; ++c) {
      const std::size_t rook_edges = r * (c - 1) + c * (r - 1);
      EXPECT_EQ(lattice_weights(r, c, Contiguity::rook).nnz(), 2 * rook_edges);
      EXPECT_EQ(lattice_weights(r, c, Contiguity::queen).nnz(), 2 * (rook_edges + 2 * (r - 1) * (c - 1)));
    }
  }
  EXPECT_EQ(kind_of([] { lattice_weights(1, 5, Contiguity::queen); }), ErrorKind::InvalidArgument);
}

TEST(EdgeList, SymmetricAndDeduplicated) {
  const auto w = from_edge_list(pairs({{"a", "b"}, {"b", "a"}, {"b", "c"}}), {"a", "b", "c"});
  EXPECT_EQ(w.nnz(), 4u);
  EXPECT_EQ(w.weight(1, 0), 1.0);
  EXPECT_EQ(w.weight(0, 2), 0.0);
  EXPECT_TRUE(w.structurally_symmetric());
}

TEST(EdgeList, Errors) {
  EXPECT_EQ(kind_of([] { from_edge_list(pairs({{"a", "z"}}), {"a", "b"}); }), ErrorKind::UnknownLabel);
  EXPECT_EQ(kind_of([] { from_edge_list(pairs({{"a", "a"}}), {"a", "b"}); }), ErrorKind::SelfEdge);
  EXPECT_EQ(kind_of([] { from_edge_list(pairs({{"a", "b"}}), {"a", "a"}); }), ErrorKind::DuplicateId);
}

TEST(SpatialWeights, ConstructorValidation) {
  EXPECT_EQ(kind_of([] { SpatialWeights({{{0, 1.0}}, {}}, {}, false); }), ErrorKind::SelfEdge);
  EXPECT_EQ(kind_of([] { SpatialWeights({{{1, 0.5}}, {{0, 1.0}}}, {}, true); }), ErrorKind::NotStandardized);
  EXPECT_EQ(kind_of([] { SpatialWeights({{{1, -1.0}}, {{0, 1.0}}}, {}, false); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { SpatialWeights({{{1, 1.0}}, {{0, 1.0}}}, {"x"}, false); }),
            ErrorKind::DimensionMismatch);
}

TEST(RowStandardize, RowsSumToOne) {
  const auto w = row_standardize(lattice_weights(4, 5, Contiguity::queen));
  EXPECT_TRUE(w.standardized());
  for (std::size_t i = 0; i < w.n(); ++i) EXPECT_NEAR(w.row_sum(i), 1.0, 1e-15);
  EXPECT_NEAR(w.total(), 20.0, 1e-13);
  EXPECT_NEAR(w.weight(0, 1), 1.0 / 3.0, 1e-16);
}

TEST(RowStandardize, IslandErrorNamesUnit) {
  const auto w = from_edge_list(pairs({{"a", "b"}}), {"a", "b", "lonely"});
  try {
    row_standardize(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IslandUnit);
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(RowStandardize, DropPolicyRemovesIslands) {
  const auto w = row_standardize(from_edge_list(pairs({{"a", "b"}, {"b", "c"}}), {"a", "x", "b", "c"}),
                                 IslandPolicy::drop_unit);
  EXPECT_EQ(w.n(), 3u);
  EXPECT_EQ(w.unit_ids(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_NEAR(w.weight(1, 0), 0.5, 1e-16);
}

TEST(RowStandardize, DropIsIterative) {
  // Unit 0 only points at unit 1, which has no neighbours; dropping 1 strands 0.
  const SpatialWeights w({{{1, 1.0}}, {}, {{3, 1.0}}, {{2, 1.0}}}, {"p", "q", "r", "s"}, false);
  const auto out = row_standardize(w, IslandPolicy::drop_unit);
  EXPECT_EQ(out.unit_ids(), (std::vector<std::string>{"r", "s"}));
  const SpatialWeights all({{{1, 1.0}}, {}}, {}, false);
  EXPECT_EQ(kind_of([&] { row_standardize(all, IslandPolicy::drop_unit); }), ErrorKind::IslandUnit);
}

TEST(Relabel, KeepsStructure) {
  const auto w = lattice_weights(2, 2, Contiguity::rook).relabeled({"a", "b", "c", "d"});
  EXPECT_EQ(w.unit_ids()[3], "d");
  EXPECT_EQ(w.nnz(), 8u);
  EXPECT_EQ(w.weight(0, 3), 0.0);
}

TEST(WeightSummaries, MatchDenseProducts) {
  std::mt19937_64 rng(21);
  for (std::size_t n : {4u, 7u, 12u, 30u}) {
    const auto w = oracle::random_weights(n, rng);
    const Eigen::MatrixXd d = w.dense();
    const Eigen::MatrixXd wwt = d * d.transpose();
    const auto s = weight_summaries(w);
    EXPECT_NEAR(s.s0, static_cast<double>(n), 1e-12);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(s.c[i], wwt(i, i), 1e-15);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    std::size_t last_i = 0, last_j = 0;
    for (std::size_t k = 0; k < s.cross.size(); ++k) {
      const auto& cw = s.cross[k];
      if (k > 0) EXPECT_TRUE(cw.i > last_i || (cw.i == last_i && cw.j > last_j));
      last_i = cw.i;
      last_j = cw.j;
      cross(static_cast<Eigen::Index>(cw.i), static_cast<Eigen::Index>(cw.j)) = cw.value;
    }
    Eigen::MatrixXd off = wwt;
    off.diagonal().setZero();
    EXPECT_LT((cross - off).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(WeightSummaries, NeedStandardizedWeights) {
  EXPECT_EQ(kind_of([] { weight_summaries(lattice_weights(2, 2, Contiguity::rook)); }),
            ErrorKind::NotStandardized);
}

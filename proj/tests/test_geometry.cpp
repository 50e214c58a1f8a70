#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "reyes/errors.hpp"
#include "reyes/geometry.hpp"

using namespace reyes;

namespace {

Composition comp(std::vector<double> v) { return closure(v); }

Composition random_comp(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) x = std::exp(normal(rng));
  return closure(v);
}

Eigen::VectorXd as_vector(const Composition& c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c[i];
  return v;
}

void expect_near(const Composition& a, const Composition& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "part " << i;
}

}  // namespace

TEST(Closure, SumsToConstant) {
  const auto c = closure(std::vector<double>{2.0, 3.0, 5.0}, 100.0);
  EXPECT_DOUBLE_EQ(c[0], 20.0);
  EXPECT_DOUBLE_EQ(c[1], 30.0);
  EXPECT_DOUBLE_EQ(c[2], 50.0);
  EXPECT_DOUBLE_EQ(c.closure_constant(), 100.0);
}

TEST(Closure, RejectsZeroAndNegativeParts) {
  EXPECT_THROW(closure(std::vector<double>{1.0, 0.0, 2.0}), Error);
  EXPECT_THROW(closure(std::vector<double>{1.0, -1.0}), Error);
  EXPECT_THROW(closure(std::vector<double>{1.0}), Error);
  try {
    closure(std::vector<double>{1.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositivePart);
  }
}

TEST(Perturbation, NeutralElementAndInverse) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_comp(4, rng);
    const auto y = random_comp(4, rng);
    expect_near(perturb(x, Composition::neutral(4)), x, 1e-15);
    expect_near(perturb_inverse(perturb(x, y), y), x, 1e-14);
    expect_near(perturb(x, y), perturb(y, x), 1e-15);
  }
}

TEST(Powering, ZeroAndOneAndDistributivity) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_comp(5, rng);
    const auto y = random_comp(5, rng);
    expect_near(power(0.0, x), Composition::neutral(5), 1e-15);
    expect_near(power(1.0, x), x, 1e-14);
    expect_near(power(2.5, perturb(x, y)), perturb(power(2.5, x), power(2.5, y)), 1e-12);
  }
}

TEST(AitchisonInner, FrozenValues) {
  // Double-sum form evaluated independently: -ln(2)^2 / 3.
  EXPECT_NEAR(aitchison_inner(comp({0.5, 0.25, 0.25}), comp({0.25, 0.5, 0.25})), -0.16015100463940046, 1e-15);
  // ln(3) / sqrt(2).
  EXPECT_NEAR(aitchison_norm(comp({0.75, 0.25})), 0.7768361992120932, 1e-15);
  EXPECT_EQ(aitchison_norm(Composition::neutral(4)), 0.0);
}

TEST(AitchisonInner, ScaleAndPermutationInvariant) {
  std::mt19937_64 rng(3);
  const auto x = random_comp(4, rng);
  const auto y = random_comp(4, rng);
  std::vector<double> xs(x.parts().begin(), x.parts().end());
  for (auto& v : xs) v *= 37.0;
  EXPECT_NEAR(aitchison_inner(closure(xs, 5.0), y), aitchison_inner(x, y), 1e-13);
  const auto xp = comp({x[2], x[0], x[3], x[1]});
  const auto yp = comp({y[2], y[0], y[3], y[1]});
  EXPECT_NEAR(aitchison_inner(xp, yp), aitchison_inner(x, y), 1e-13);
}

TEST(AitchisonInner, MatchesOracleAndIsometries) {
  std::mt19937_64 rng(4);
  for (std::size_t d : {2u, 3u, 5u, 8u}) {
    const auto helmert = contrast_matrix(d, ContrastScheme::helmert_like);
    const auto pivot = contrast_matrix(d, ContrastScheme::pivot);
    for (int t = 0; t < 100; ++t) {
      const auto x = random_comp(d, rng);
      const auto y = random_comp(d, rng);
      const double a = aitchison_inner(x, y);
      EXPECT_NEAR(a, oracle::inner(as_vector(x), as_vector(y)), 1e-12);
      EXPECT_NEAR(a, clr(x).dot(clr(y)), 1e-10);
      EXPECT_NEAR(a, ilr(x, helmert).dot(ilr(y, helmert)), 1e-10);
      EXPECT_NEAR(a, ilr(x, pivot).dot(ilr(y, pivot)), 1e-10);
    }
  }
}

TEST(Clr, SumsToZeroAndInverts) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_comp(6, rng);
    const auto u = clr(x);
    EXPECT_NEAR(u.sum(), 0.0, 1e-13);
    expect_near(clr_inverse(u), x, 1e-14);
  }
}

TEST(Clr, InverseHandlesLargeCoordinates) {
  Eigen::VectorXd u(3);
  u << 1000.0, 999.0, 998.0;
  const auto c = clr_inverse(u);
  const auto ref = clr_inverse((Eigen::VectorXd(3) << 1.0, 0.0, -1.0).finished());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c[i], ref[i], 1e-15);
  u << 300.0, 0.0, -300.0;
  EXPECT_GT(clr_inverse(u)[2], 0.0);
}

TEST(ContrastMatrix, OrthonormalRowsOnClrPlane) {
  for (std::size_t d = 2; d <= 9; ++d) {
    for (auto scheme : {ContrastScheme::helmert_like, ContrastScheme::pivot}) {
      const Eigen::MatrixXd m = contrast_matrix(d, scheme).matrix();
      ASSERT_EQ(m.rows(), static_cast<Eigen::Index>(d - 1));
      ASSERT_EQ(m.cols(), static_cast<Eigen::Index>(d));
      const Eigen::MatrixXd gram = m * m.transpose();
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(m.rows(), m.rows())).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT(m.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ContrastMatrix, PivotFirstRow) {
  const Eigen::MatrixXd m = contrast_matrix(3, ContrastScheme::pivot).matrix();
  EXPECT_NEAR(m(0, 0), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(m(0, 1), -1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(m(0, 2), -1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(m(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(m(1, 1), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m(1, 2), -std::sqrt(0.5), 1e-15);
}

TEST(ContrastMatrix, RejectsNonOrthonormal) {
  Eigen::MatrixXd bad(2, 3);
  bad << 1, -1, 0, 1, 0, -1;
  EXPECT_THROW(ContrastMatrix{bad}, Error);
  Eigen::MatrixXd wrong_shape(3, 3);
  wrong_shape.setZero();
  EXPECT_THROW(ContrastMatrix{wrong_shape}, Error);
}

TEST(Ilr, RoundTripAndKnownValue) {
  const auto psi = contrast_matrix(2, ContrastScheme::pivot);
  const auto x = comp({0.75, 0.25});
  // Single balance: ln(x1/x2)/sqrt(2).
  EXPECT_NEAR(std::abs(ilr(x, psi)(0)), std::log(3.0) / std::sqrt(2.0), 1e-15);
  std::mt19937_64 rng(6);
  const auto psi5 = contrast_matrix(5);
  for (int t = 0; t < 50; ++t) {
    const auto y = random_comp(5, rng);
    expect_near(ilr_inverse(ilr(y, psi5), psi5), y, 1e-14);
  }
}

TEST(CompositionSample, ClosesRowsAndKeepsIds) {
  Eigen::MatrixXd raw(2, 3);
  raw << 1, 2, 7, 30, 30, 40;
  const CompositionSample s(raw, {"a", "b"});
  EXPECT_EQ(s.n(), 2u);
  EXPECT_EQ(s.parts(), 3u);
  EXPECT_NEAR(s.raw().row(0).sum(), 1.0, 1e-15);
  EXPECT_NEAR(s.raw()(1, 2), 0.4, 1e-15);
  EXPECT_EQ(s.unit_ids()[1], "b");
  EXPECT_EQ(CompositionSample(raw).unit_ids()[0], "1");
}

TEST(CompositionSample, ZeroPartNamesUnit) {
  Eigen::MatrixXd raw(2, 3);
  raw << 1, 2, 7, 3, 0, 4;
  try {
    CompositionSample s(raw, {"north", "south"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositivePart);
    EXPECT_NE(std::string(e.what()).find("south"), std::string::npos);
  }
}

TEST(CompositionSample, DuplicateIdsRejected) {
  Eigen::MatrixXd raw = Eigen::MatrixXd::Ones(2, 3);
  try {
    CompositionSample s(raw, {"x", "x"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DuplicateId);
  }
}

TEST(CompositionSample, IlrRowsMatchPerCompositionIlr) {
  std::mt19937_64 rng(7);
  const CompositionSample s(oracle::random_raw(6, 4, rng));
  for (std::size_t i = 0; i < s.n(); ++i) {
    const Eigen::VectorXd direct = ilr(s.composition(i), s.contrast());
    EXPECT_LT((s.ilr_coords().row(static_cast<Eigen::Index>(i)).transpose() - direct).cwiseAbs().maxCoeff(),
              1e-13);
  }
}

TEST(Centering, CenteredSampleMatchesOracleAndHasZeroMean) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd raw = oracle::random_raw(7, 4, rng);
  const CompositionSample s(raw);
  const Eigen::MatrixXd u = centered_ilr(s);
  EXPECT_LT(u.colwise().sum().cwiseAbs().maxCoeff(), 1e-13);
  const CompositionSample c = center(s);
  const Eigen::MatrixXd z = oracle::centered_parts(raw);
  EXPECT_LT((c.raw() - z).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((c.ilr_coords() - u).cwiseAbs().maxCoeff(), 1e-12);
  // Centering the geometric center gives the neutral element.
  const auto g = geometric_center(c);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(g[j], 0.25, 1e-14);
}

TEST(Sample, WithContrastPermutedSubset) {
  std::mt19937_64 rng(9);
  const CompositionSample s(oracle::random_raw(5, 3, rng), {"a", "b", "c", "d", "e"});
  const auto p = s.with_contrast(contrast_matrix(3, ContrastScheme::pivot));
  EXPECT_LT((p.raw() - s.raw()).cwiseAbs().maxCoeff(), 1e-15);
  const std::vector<std::size_t> order{4, 3, 2, 1, 0};
  const auto r = s.permuted(order);
  EXPECT_EQ(r.unit_ids()[0], "e");
  EXPECT_LT((r.raw().row(0) - s.raw().row(4)).cwiseAbs().maxCoeff(), 1e-15);
  const std::vector<std::size_t> rows{1, 3};
  const auto sub = s.subset(rows);
  EXPECT_EQ(sub.n(), 2u);
  EXPECT_EQ(sub.unit_ids()[1], "d");
}

TEST(ReplaceZeros, FractionOfColumnMinimum) {
  Eigen::MatrixXd raw(3, 3);
  raw << 10, 0, 90,  //
      20, 40, 40,    //
      5, 10, 85;
  const Eigen::MatrixXd out = replace_zeros(raw, DeltaPolicy::fraction_of_min, 0.5);
  // delta = 0.5 * 10 = 5; other parts scaled by (100 - 5) / 100.
  EXPECT_DOUBLE_EQ(out(0, 1), 5.0);
  EXPECT_NEAR(out(0, 0), 9.5, 1e-12);
  EXPECT_NEAR(out(0, 2), 85.5, 1e-12);
  EXPECT_NEAR(out.row(0).sum(), 100.0, 1e-12);
  EXPECT_EQ(out.row(1), raw.row(1));
}

TEST(ReplaceZeros, FixedDeltaKeepsRatiosOfNonzeroParts) {
  Eigen::MatrixXd raw(1, 4);
  raw << 0.2, 0.0, 0.3, 0.5;
  const Eigen::MatrixXd out = replace_zeros(raw, DeltaPolicy::fixed, 0.01);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.01);
  EXPECT_NEAR(out(0, 2) / out(0, 0), 1.5, 1e-14);
  EXPECT_NEAR(out.sum(), 1.0, 1e-15);
}

TEST(ReplaceZeros, Errors) {
  Eigen::MatrixXd neg(1, 2);
  neg << -1, 2;
  Eigen::MatrixXd allzero(2, 2);
  allzero << 0, 0, 1, 1;
  Eigen::MatrixXd zero_column(2, 2);
  zero_column << 0, 1, 0, 1;
  auto kind_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of([&] { replace_zeros(neg, DeltaPolicy::fixed, 0.1); }), ErrorKind::NegativeValue);
  EXPECT_EQ(kind_of([&] { replace_zeros(allzero, DeltaPolicy::fixed, 0.1); }), ErrorKind::AllZeroRow);
  EXPECT_EQ(kind_of([&] { replace_zeros(zero_column, DeltaPolicy::fraction_of_min, 0.5); }),
            ErrorKind::InvalidArgument);
}

#include <gtest/gtest.h>

#include <cmath>

#include "reyes/errors.hpp"
#include "reyes/simulation.hpp"
#include "reyes/statistic.hpp"

using namespace reyes;

namespace {

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

ScenarioConfig small(ScenarioCase c) {
  ScenarioConfig cfg;
  cfg.scenario = c;
  cfg.replications = 30;
  cfg.permutations = 199;
  cfg.master_seed = 17;
  return cfg;
}

void expect_same_records(const ScenarioResult& a, const ScenarioResult& b) {
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    EXPECT_EQ(a.records[r].reyes, b.records[r].reyes);
    EXPECT_EQ(a.records[r].bound, b.records[r].bound);
    EXPECT_EQ(a.records[r].moran_mean, b.records[r].moran_mean);
    EXPECT_EQ(a.records[r].p_reyes, b.records[r].p_reyes);
    EXPECT_EQ(a.records[r].p_moran, b.records[r].p_moran);
  }
}

}  // namespace

TEST(Covariance, IdentityAndExchangeable) {
  const auto id = make_covariance({CovarianceKind::identity, 2});
  EXPECT_EQ(id, Eigen::MatrixXd::Identity(2, 2));
  CovarianceSpec ex{CovarianceKind::exchangeable, 2};
  ex.rho1 = 0.5;
  const auto m = make_covariance(ex);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  EXPECT_NEAR(eig.eigenvalues()(0), 0.5, 1e-15);
  EXPECT_NEAR(eig.eigenvalues()(1), 1.5, 1e-15);
}

TEST(Covariance, ExchangeableBoundIsOpen) {
  CovarianceSpec ex{CovarianceKind::exchangeable, 4};
  ex.rho1 = -1.0 / 3.0;
  EXPECT_EQ(kind_of([&] { make_covariance(ex); }), ErrorKind::NotPositiveDefinite);
  ex.rho1 = 1.0;
  EXPECT_EQ(kind_of([&] { make_covariance(ex); }), ErrorKind::NotPositiveDefinite);
  ex.rho1 = -0.33;
  EXPECT_NO_THROW(make_covariance(ex));
}

TEST(Covariance, WishartMeanIsToeplitzScale) {
  CovarianceSpec spec{CovarianceKind::wishart_toeplitz, 4};
  spec.dof = 6;
  spec.toeplitz_rho = 0.5;
  constexpr int draws = 10000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(4, 4);
  for (int k = 0; k < draws; ++k) {
    spec.seed = static_cast<std::uint64_t>(k) + 1;
    const auto m = make_covariance(spec);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    sum += m;
    sum_sq += m.cwiseProduct(m);
  }
  const Eigen::MatrixXd mean = sum / draws;
  const Eigen::MatrixXd var = sum_sq / draws - mean.cwiseProduct(mean);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double target = std::pow(0.5, std::abs(i - j));
      EXPECT_LT(std::abs(mean(i, j) - target), 3.0 * std::sqrt(var(i, j) / draws)) << i << "," << j;
    }
  }
}

TEST(Covariance, CholeskyRejectsIndefinite) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 2, 1;
  EXPECT_EQ(kind_of([&] { cholesky_factor(m); }), ErrorKind::NotPositiveDefinite);
  m << 1, 0.2, 0.3, 1;
  EXPECT_EQ(kind_of([&] { cholesky_factor(m); }), ErrorKind::NotPositiveDefinite);
}

TEST(LogisticNormal, TinyCovarianceCollapsesToBarycenter) {
  const auto s = logistic_normal_sample(20, 4, 1e-12 * Eigen::MatrixXd::Identity(3, 3), contrast_matrix(4), 3);
  EXPECT_LT((s.raw().array() - 0.25).abs().maxCoeff(), 1e-5);
}

TEST(LogisticNormal, MomentsMatchSigma) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 0.5;
  constexpr int n = 10000;
  const auto s = logistic_normal_sample(n, 3, sigma, contrast_matrix(3), 4);
  const Eigen::MatrixXd& u = s.ilr_coords();
  const Eigen::RowVectorXd mean = u.colwise().mean();
  for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(mean(j)), 4.0 * std::sqrt(sigma(j, j) / n));
  const Eigen::MatrixXd centered = u.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
      EXPECT_LT(std::abs(cov(i, j) - sigma(i, j)), 3.0 * se);
    }
  }
}

TEST(Sar, RhoZeroReproducesIndependentDraw) {
  const auto w = row_standardize(lattice_weights(4, 4, Contiguity::queen));
  const auto psi = contrast_matrix(3);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  const auto a = sar_sample(w, 0.0, sigma, psi, 12);
  const auto b = logistic_normal_sample(16, 3, sigma, psi, 12);
  EXPECT_LT((a.raw() - b.raw()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sar, SolvesTheSystem) {
  const auto w = row_standardize(lattice_weights(10, 10, Contiguity::queen));
  const auto psi = contrast_matrix(3);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  const auto s = sar_sample(w, 0.9, sigma, psi, 13);
  const Eigen::MatrixXd e = standard_normal_matrix(100, 2, 13);
  const Eigen::MatrixXd residual = s.ilr_coords() - 0.9 * w.dense() * s.ilr_coords() - e;
  EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(kind_of([&] { sar_sample(w, 1.0, sigma, psi, 1); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { sar_sample(lattice_weights(2, 2, Contiguity::rook), 0.5, sigma, psi, 1); }),
            ErrorKind::NotStandardized);
}

TEST(Sar, StrongerDependenceRaisesMeanStatistic) {
  const auto w = row_standardize(lattice_weights(10, 10, Contiguity::queen));
  const auto psi = contrast_matrix(3);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  auto mean_for = [&](double rho) {
    double sum = 0.0;
    for (std::uint64_t r = 0; r < 200; ++r) sum += reyes_i(sar_sample(w, rho, sigma, psi, 1000 + r), w);
    return sum / 200.0;
  };
  const double m5 = mean_for(0.5);
  const double m9 = mean_for(0.9);
  EXPECT_GT(m9, 0.0);
  EXPECT_GT(m9, m5);
}

TEST(Scenario, ValidateRejectsBadConfigs) {
  auto cfg = small(ScenarioCase::sar);
  cfg.rho_sar = 1.0;
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidArgument);
  cfg = small(ScenarioCase::independent);
  cfg.replications = 0;
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidArgument);
  cfg = small(ScenarioCase::independent);
  cfg.alpha = 1.5;
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { run_case1(small(ScenarioCase::independent)); }), ErrorKind::InvalidArgument);
}

TEST(Scenario, CaseOneSaturatesInEveryCell) {
  for (auto contiguity : {Contiguity::queen, Contiguity::rook}) {
    for (auto kind : {CovarianceKind::identity, CovarianceKind::exchangeable, CovarianceKind::wishart_toeplitz}) {
      for (std::size_t parts : {3u, 5u, 7u}) {
        auto cfg = small(ScenarioCase::identical);
        cfg.contiguity = contiguity;
        cfg.covariance.kind = kind;
        cfg.parts = parts;
        const auto res = run_case1(cfg);
        EXPECT_EQ(res.saturated, cfg.replications);
        EXPECT_TRUE(res.bound_respected);
        EXPECT_FALSE(res.moran_mean.has_value());
        for (const auto& rec : res.records) {
          EXPECT_TRUE(rec.degenerate);
          EXPECT_GE(rec.time_reyes_ns, 0);
        }
      }
    }
  }
}

TEST(Scenario, CaseTwoIsReproducibleAcrossWorkers) {
  auto cfg = small(ScenarioCase::independent);
  cfg.covariance.kind = CovarianceKind::wishart_toeplitz;
  const auto a = run_case2(cfg, 1);
  const auto b = run_case2(cfg, 3);
  expect_same_records(a, b);
  EXPECT_EQ(a.reyes.mean, b.reyes.mean);
  ASSERT_TRUE(a.reyes.rejection_rate && a.moran_mean);
  EXPECT_GE(*a.reyes.rejection_rate, 0.0);
  EXPECT_LE(*a.reyes.rejection_rate, 1.0);
  EXPECT_TRUE(a.bound_respected);
  EXPECT_EQ(a.records.size(), cfg.replications);
  for (const auto& rec : a.records) {
    EXPECT_GE(rec.time_reyes_ns, 0);
    EXPECT_GE(rec.time_moran_ns, 0);
  }
}

TEST(Scenario, AggregatesMatchRecords) {
  auto cfg = small(ScenarioCase::independent);
  const auto res = run_scenario(cfg);
  double sum = 0.0;
  std::size_t rejected = 0;
  for (const auto& rec : res.records) {
    sum += rec.reyes;
    rejected += *rec.p_reyes < cfg.alpha ? 1 : 0;
  }
  EXPECT_NEAR(res.reyes.mean, sum / cfg.replications, 1e-14);
  EXPECT_DOUBLE_EQ(*res.reyes.rejection_rate, static_cast<double>(rejected) / cfg.replications);
}

TEST(Scenario, CaseThreeDetectsStrongDependence) {
  auto cfg = small(ScenarioCase::sar);
  cfg.rows = cfg.cols = 7;
  cfg.rho_sar = 0.9;
  const auto strong = run_case3(cfg);
  cfg.rho_sar = 0.5;
  const auto weak = run_case3(cfg);
  EXPECT_GT(*strong.reyes.rejection_rate, 0.7);
  EXPECT_GE(strong.reyes.mean, weak.reyes.mean);
}

TEST(Scenario, SeedsDifferPerTagAndReplication) {
  const auto cfg = small(ScenarioCase::independent);
  EXPECT_NE(replication_seed(cfg, SeedTag::data, 0), replication_seed(cfg, SeedTag::permutation, 0));
  EXPECT_NE(replication_seed(cfg, SeedTag::data, 0), replication_seed(cfg, SeedTag::data, 1));
}

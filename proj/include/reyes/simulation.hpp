#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reyes/geometry.hpp"
#include "reyes/weights.hpp"

namespace reyes {

enum class CovarianceKind { identity, exchangeable, wishart_toeplitz };

struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::identity;
  std::size_t dim = 2;  ///< D - 1
  double rho1 = 0.5;    ///< exchangeable off-diagonal, in (-1/(dim-1), 1)
  double toeplitz_rho = 0.5;
  /// Wishart degrees of freedom; 0 means dim + 2 (that is, D + 1).
  std::size_t dof = 0;
  std::uint64_t seed = 0;  ///< Wishart draw only
};

/// identity, exchangeable, or W / dof with W ~ Wishart(dof, T), T_ij = rho^|i-j|.
/// Throws NotPositiveDefinite when the result has no Cholesky factor.
Eigen::MatrixXd make_covariance(const CovarianceSpec& spec);

/// Lower Cholesky factor, or NotPositiveDefinite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma);

/// n rows of N(0, sigma) in ilr space mapped back with ilr_inverse.
CompositionSample logistic_normal_sample(std::size_t n, std::size_t parts, const Eigen::MatrixXd& sigma,
                                         const ContrastMatrix& psi, std::uint64_t seed);

/// Y solving (I - rho W) Y = E, E rows iid N(0, sigma), mapped back rowwise.
/// With rho = 0 this reproduces logistic_normal_sample for the same seed.
CompositionSample sar_sample(const SpatialWeights& w, double rho, const Eigen::MatrixXd& sigma,
                             const ContrastMatrix& psi, std::uint64_t seed);

/// Max-norm residual of the last SAR solve is below this.
inline constexpr double kSarResidualTol = 1e-10;

/// n x cols matrix of iid N(0,1) draws from CounterStream(seed, 0).
Eigen::MatrixXd standard_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

enum class ScenarioCase { identical, independent, sar };

struct ScenarioConfig {
  ScenarioCase scenario = ScenarioCase::independent;
  std::size_t rows = 3;
  std::size_t cols = 3;
  std::size_t parts = 3;
  Contiguity contiguity = Contiguity::queen;
  CovarianceSpec covariance;  ///< dim is overwritten with parts - 1
  double rho_sar = 0.0;
  std::size_t replications = 100;
  std::size_t permutations = 10000;
  double alpha = 0.05;
  std::uint64_t master_seed = 1;
};

/// Throws InvalidArgument when a field is out of range.
void validate(const ScenarioConfig& config);

struct ReplicationRecord {
  double reyes = 0.0;
  double bound = 0.0;
  /// Empty in the identical case, where every part is constant.
  std::optional<double> moran_mean;
  std::optional<double> p_reyes;
  std::optional<double> p_moran;
  std::int64_t time_reyes_ns = 0;
  std::int64_t time_moran_ns = 0;
  bool degenerate = false;
};

struct StatisticAggregate {
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> rejection_rate;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ReplicationRecord> records;
  StatisticAggregate reyes;
  std::optional<StatisticAggregate> moran_mean;
  /// Identical case: replications with |I_a - bound| <= 1e-10.
  std::size_t saturated = 0;
  /// Every replication satisfied |I_a| <= bound + 1e-10.
  bool bound_respected = true;
};

inline constexpr double kBoundTol = 1e-10;

ScenarioResult run_case1(const ScenarioConfig& config, unsigned workers = 1);
ScenarioResult run_case2(const ScenarioConfig& config, unsigned workers = 1);
ScenarioResult run_case3(const ScenarioConfig& config, unsigned workers = 1);
ScenarioResult run_scenario(const ScenarioConfig& config, unsigned workers = 1);

/// Seed domains for per-replication substreams.
enum class SeedTag : std::uint64_t { data = 1, covariance = 2, permutation = 3 };
std::uint64_t replication_seed(const ScenarioConfig& config, SeedTag tag, std::size_t replication);

std::string to_string(ScenarioCase c);
std::string to_string(CovarianceKind k);

}  // namespace reyes

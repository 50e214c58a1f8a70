#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reyes/geometry.hpp"
#include "reyes/statistic.hpp"
#include "reyes/weights.hpp"

namespace reyes {

/// Evaluates I_a after relabeling: unit i receives composition perm[i].
///
/// Centered coordinates and the denominator are permutation invariant, so
/// only sum_i sum_j w_ij <u_perm[i], u_perm[j]> is recomputed. For moderate n
/// the inner products come from a cached Gram matrix.
class ReyesKernel {
 public:
  ReyesKernel(const CompositionSample& sample, const SpatialWeights& w);

  std::size_t n() const { return w_.n(); }
  double evaluate(std::span<const std::uint32_t> perm) const;

 private:
  SpatialWeights w_;
  Eigen::MatrixXd coords_;
  Eigen::MatrixXd gram_;
  double scale_ = 0.0;
};

/// Evaluates I_m (mean of per-part Moran's I) after relabeling.
class MoranMeanKernel {
 public:
  MoranMeanKernel(const CompositionSample& sample, const SpatialWeights& w);

  std::size_t n() const { return w_.n(); }
  double evaluate(std::span<const std::uint32_t> perm) const;

 private:
  SpatialWeights w_;
  Eigen::MatrixXd deviations_;  // D x n: column u holds unit u's centered parts
  Eigen::VectorXd scale_;       // n / (S0 * sum of squared deviations), per part
};

enum class TestStatistic { reyes, moran_mean };
enum class DistributionMode { exact, monte_carlo };

struct PermutationDistribution {
  std::vector<double> values;
  DistributionMode mode = DistributionMode::monte_carlo;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  /// Statistic at the identity relabeling, through the same code path.
  double observed = 0.0;
};

struct PermutationOptions {
  TestStatistic statistic = TestStatistic::reyes;
  unsigned workers = 1;
};

inline constexpr std::size_t kDefaultExactCap = 9;

/// All n! relabelings in lexicographic order; values[r] is the statistic at
/// the permutation of rank r.
PermutationDistribution exact_distribution(const CompositionSample& sample, const SpatialWeights& w,
                                           std::size_t cap = kDefaultExactCap,
                                           PermutationOptions options = {});

/// B Fisher-Yates relabelings; draw b uses CounterStream(seed, b), so the
/// values are identical for any worker count.
PermutationDistribution monte_carlo_distribution(const CompositionSample& sample,
                                                 const SpatialWeights& w, std::uint64_t permutations,
                                                 std::uint64_t seed, PermutationOptions options = {});

/// Permutation of rank r (lexicographic) of 0..n-1.
std::vector<std::uint32_t> permutation_of_rank(std::size_t n, std::uint64_t rank);

/// Fills perm with the Fisher-Yates shuffle of 0..n-1 for draw `index`.
void random_permutation(std::uint64_t seed, std::uint64_t index, std::span<std::uint32_t> perm);

enum class Correction { raw, plus_one };

/// Values within kTieTolerance * max(1, |observed|) of the observed value count as ties.
inline constexpr double kTieTolerance = 1e-12;

struct PValueReport {
  double p_pos = 1.0;
  double p_neg = 1.0;
  double p_two = 1.0;
  /// Binomial standard error of p_pos (Monte Carlo only).
  std::optional<double> se;
  Correction correction = Correction::raw;
};

/// Upper and lower tail shares of values >= / <= the observed value, ties included.
PValueReport p_values(const PermutationDistribution& dist, Correction correction = Correction::raw);

struct CriticalValues {
  double lower;
  double upper;
};

/// Nearest-rank alpha and 1 - alpha quantiles.
CriticalValues critical_values(const PermutationDistribution& dist, double alpha);

/// Nearest-rank quantile of sorted values, rank = ceil(p * N) clamped to [1, N].
double nearest_rank_quantile(std::span<const double> sorted, double p);

struct DistributionSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::pair<double, double>> quantiles;  // (probability, value)
};

DistributionSummary summarize(const PermutationDistribution& dist);

}  // namespace reyes

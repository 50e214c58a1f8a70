#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reyes/geometry.hpp"
#include "reyes/weights.hpp"

namespace reyes {

/// Centered ilr coordinates U (rows sum to zero column-wise) and the
/// permutation-invariant denominator sum_k ||z_k||_a^2 = ||U||_F^2.
struct CenteredSample {
  Eigen::MatrixXd coords;
  double sum_sq = 0.0;
  /// All centered rows vanish up to rounding: I_a is 0/0.
  bool degenerate = false;
};

CenteredSample prepare_centered(const CompositionSample& sample);

/// Compositional Moran's I computed on centered ilr coordinates.
double reyes_i(const CompositionSample& sample, const SpatialWeights& w);

/// Cauchy-Schwarz bound sum_i ||z_i|| ||lag_i|| / sum_k ||z_k||^2.
double upper_bound(const CompositionSample& sample, const SpatialWeights& w);

struct BoundedValue {
  double value;
  double upper_bound;
  bool degenerate;
};

/// Like reyes_i/upper_bound, but a degenerate sample (every unit carries the
/// same composition) reports the saturating limit value = bound = S0/n = 1
/// instead of throwing.
BoundedValue reyes_i_or_bound(const CompositionSample& sample, const SpatialWeights& w);

/// -1/(n-1).
double expected_value_randomization(std::size_t n);

/// How E_R(A_i A_j), i != j, is assembled.
///  printed  : P4 (1 - c_ij - w_ji) + P3 c_ij
///  complete : also carries the terms where i and j are neighbors,
///             P2 w_ij w_ji + P3 (w_ij + w_ji - 2 w_ij w_ji + c_ij)
///             + P4 (1 - w_ij - w_ji + w_ij w_ji - c_ij)
/// with P2, P3, P4 the randomization moments of (z_a'z_b)^2,
/// (z_a'z_b)(z_a'z_c) and (z_a'z_b)(z_c'z_d) over distinct indices.
/// Only `complete` agrees with exact enumeration on graphs with edges.
enum class CrossMomentForm { printed, complete };

struct MomentDiagnostics {
  double m = 0.0;         ///< tr(M2) = mean squared norm
  double m4 = 0.0;        ///< mean of ||z_l||^4
  double tr_m2_sq = 0.0;  ///< tr(M2^2)
};

struct SecondMoment {
  double e_r2;
  MomentDiagnostics diagnostics;
};

/// Noncentral second randomization moment E_R(I_a^2). Needs n >= 4.
SecondMoment second_moment_randomization(const CompositionSample& sample, const SpatialWeights& w,
                                         CrossMomentForm form = CrossMomentForm::printed);
SecondMoment second_moment_from_centered(const CenteredSample& centered, const SpatialWeights& w,
                                         CrossMomentForm form = CrossMomentForm::printed);

struct ReyesStatistic {
  double value = 0.0;
  double upper_bound = 0.0;
  double e_r = 0.0;
  /// Second moment and variance from the complete cross-term form; empty for n < 4.
  std::optional<double> e_r2;
  std::optional<double> var_r;
  /// The same moment with the cross term as printed, kept for audit.
  std::optional<double> e_r2_printed;
  std::size_t n = 0;
  std::size_t parts = 0;
};

ReyesStatistic reyes_statistic(const CompositionSample& sample, const SpatialWeights& w);

/// Moran's I for a real-valued variable.
double moran_i(std::span<const double> values, const SpatialWeights& w);

struct MoranStatistic {
  double value = 0.0;
  std::vector<double> component_values;
};

/// I_m: mean of per-part Moran's I on the closed proportions.
MoranStatistic moran_mean(const CompositionSample& sample, const SpatialWeights& w);

/// Throws unless w is standardized and has n units.
void require_compatible(const SpatialWeights& w, std::size_t n);

}  // namespace reyes

#include "reyes/statistic.hpp"

#include <algorithm>
#include <cmath>

#include "reyes/errors.hpp"
#include "reyes/summation.hpp"

namespace reyes {
namespace {

// Centered rows smaller than this (relative to the coordinate scale) are
// rounding residue of identical compositions.
constexpr double kDegenerateRelTol = 1e-12;

Eigen::MatrixXd spatial_lag(const SpatialWeights& w, const Eigen::MatrixXd& coords) {
  Eigen::MatrixXd lag = Eigen::MatrixXd::Zero(coords.rows(), coords.cols());
  for (std::size_t i = 0; i < w.n(); ++i) {
    for (const auto& nb : w.neighbors(i)) {
      lag.row(static_cast<Eigen::Index>(i)) += nb.weight * coords.row(static_cast<Eigen::Index>(nb.index));
    }
  }
  return lag;
}

void require_nondegenerate(const CenteredSample& c) {
  if (c.degenerate) {
    throw Error(ErrorKind::DegenerateSample,
                "all compositions coincide after centering; I_a is 0/0");
  }
}

}  // namespace

void require_compatible(const SpatialWeights& w, std::size_t n) {
  if (!w.standardized()) throw Error(ErrorKind::NotStandardized, "weights must be row-standardized");
  if (w.n() != n) {
    throw Error(ErrorKind::DimensionMismatch, "weights cover " + std::to_string(w.n()) +
                                                  " units but the sample has " + std::to_string(n));
  }
}

CenteredSample prepare_centered(const CompositionSample& sample) {
  CenteredSample out;
  out.coords = centered_ilr(sample);
  CompensatedSum s;
  for (Eigen::Index i = 0; i < out.coords.rows(); ++i) s += out.coords.row(i).squaredNorm();
  out.sum_sq = s.value();
  const double scale = 1.0 + sample.ilr_coords().cwiseAbs().maxCoeff();
  const double largest = out.coords.size() > 0 ? out.coords.cwiseAbs().maxCoeff() : 0.0;
  out.degenerate = largest <= kDegenerateRelTol * scale;
  return out;
}

double reyes_i(const CompositionSample& sample, const SpatialWeights& w) {
  require_compatible(w, sample.n());
  const CenteredSample c = prepare_centered(sample);
  require_nondegenerate(c);
  const Eigen::MatrixXd lag = spatial_lag(w, c.coords);
  CompensatedSum num;
  for (Eigen::Index i = 0; i < lag.rows(); ++i) num += c.coords.row(i).dot(lag.row(i));
  // n / S0 is exactly 1 for standardized weights up to rounding in S0.
  return static_cast<double>(sample.n()) * num.value() / (w.total() * c.sum_sq);
}

double upper_bound(const CompositionSample& sample, const SpatialWeights& w) {
  require_compatible(w, sample.n());
  const CenteredSample c = prepare_centered(sample);
  require_nondegenerate(c);
  const Eigen::MatrixXd lag = spatial_lag(w, c.coords);
  CompensatedSum num;
  for (Eigen::Index i = 0; i < lag.rows(); ++i) num += c.coords.row(i).norm() * lag.row(i).norm();
  return static_cast<double>(sample.n()) * num.value() / (w.total() * c.sum_sq);
}

BoundedValue reyes_i_or_bound(const CompositionSample& sample, const SpatialWeights& w) {
  require_compatible(w, sample.n());
  if (prepare_centered(sample).degenerate) {
    const double limit = w.total() / static_cast<double>(w.n());
    return {limit, limit, true};
  }
  return {reyes_i(sample, w), upper_bound(sample, w), false};
}

double expected_value_randomization(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::TooFewUnits, "need n >= 2");
  return -1.0 / static_cast<double>(n - 1);
}

SecondMoment second_moment_from_centered(const CenteredSample& centered, const SpatialWeights& w,
                                         CrossMomentForm form) {
  const std::size_t n = static_cast<std::size_t>(centered.coords.rows());
  if (n < 4) throw Error(ErrorKind::TooFewUnits, "second moment needs n >= 4, got " + std::to_string(n));
  require_compatible(w, n);
  require_nondegenerate(centered);
  const double nd = static_cast<double>(n);
  const Eigen::MatrixXd& u = centered.coords;

  MomentDiagnostics diag;
  const Eigen::MatrixXd m2 = (u.transpose() * u) / nd;
  diag.m = m2.trace();
  diag.tr_m2_sq = m2.squaredNorm();
  CompensatedSum m4;
  for (Eigen::Index l = 0; l < u.rows(); ++l) {
    const double q = u.row(l).squaredNorm();
    m4 += q * q;
  }
  diag.m4 = m4.value() / nd;

  const double p2 = (nd * diag.tr_m2_sq - diag.m4) / (nd - 1.0);
  const double p3 = (2.0 * diag.m4 - nd * diag.tr_m2_sq) / ((nd - 1.0) * (nd - 2.0));
  const double p4 = (2.0 * nd * diag.tr_m2_sq + nd * diag.m * diag.m - 6.0 * diag.m4) /
                    ((nd - 1.0) * (nd - 2.0) * (nd - 3.0));

  const WeightSummaries summary = weight_summaries(w);

  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) total += p2 * summary.c[i] + p3 * (1.0 - summary.c[i]);

  auto pair_term = [&](double wij, double wji, double cij) {
    if (form == CrossMomentForm::printed) return p4 * (1.0 - cij - wji) + p3 * cij;
    return p2 * wij * wji + p3 * (wij + wji - 2.0 * wij * wji + cij) +
           p4 * (1.0 - wij - wji + wij * wji - cij);
  };

  // Pairs with w_ij = w_ji = c_ij = 0 all contribute pair_term(0, 0, 0); only
  // the sparse support is visited explicitly.
  const double empty_term = pair_term(0.0, 0.0, 0.0);
  std::vector<std::vector<std::size_t>> support(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : w.neighbors(i)) {
      support[i].push_back(nb.index);
      support[nb.index].push_back(i);
    }
  }
  std::vector<double> cross_row(n, 0.0);
  std::size_t cursor = 0;
  std::size_t visited = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& cols = support[i];
    const std::size_t cross_begin = cursor;
    while (cursor < summary.cross.size() && summary.cross[cursor].i == i) {
      cols.push_back(summary.cross[cursor].j);
      cross_row[summary.cross[cursor].j] = summary.cross[cursor].value;
      ++cursor;
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (std::size_t j : cols) {
      total += pair_term(w.weight(i, j), w.weight(j, i), cross_row[j]);
    }
    visited += cols.size();
    for (std::size_t k = cross_begin; k < cursor; ++k) cross_row[summary.cross[k].j] = 0.0;
  }
  total += static_cast<double>(n * (n - 1) - visited) * empty_term;

  const double denom = nd * diag.m;
  return {total.value() / (denom * denom), diag};
}

SecondMoment second_moment_randomization(const CompositionSample& sample, const SpatialWeights& w,
                                         CrossMomentForm form) {
  require_compatible(w, sample.n());
  return second_moment_from_centered(prepare_centered(sample), w, form);
}

ReyesStatistic reyes_statistic(const CompositionSample& sample, const SpatialWeights& w) {
  ReyesStatistic out;
  out.n = sample.n();
  out.parts = sample.parts();
  out.value = reyes_i(sample, w);
  out.upper_bound = upper_bound(sample, w);
  out.e_r = expected_value_randomization(out.n);
  if (out.n >= 4) {
    const CenteredSample c = prepare_centered(sample);
    out.e_r2 = second_moment_from_centered(c, w, CrossMomentForm::complete).e_r2;
    out.e_r2_printed = second_moment_from_centered(c, w, CrossMomentForm::printed).e_r2;
    out.var_r = *out.e_r2 - out.e_r * out.e_r;
  }
  return out;
}

double moran_i(std::span<const double> values, const SpatialWeights& w) {
  require_compatible(w, values.size());
  const std::size_t n = values.size();
  double mean = 0.0;
  double scale = 0.0;
  for (double v : values) {
    mean += v;
    scale = std::max(scale, std::abs(v));
  }
  mean /= static_cast<double>(n);
  std::vector<double> z(n);
  double largest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = values[i] - mean;
    largest = std::max(largest, std::abs(z[i]));
  }
  if (largest <= kDegenerateRelTol * (1.0 + scale)) {
    throw Error(ErrorKind::ConstantVector, "Moran's I is undefined for a constant variable");
  }
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t i = 0; i < n; ++i) {
    double lag = 0.0;
    for (const auto& nb : w.neighbors(i)) lag += nb.weight * z[nb.index];
    num += z[i] * lag;
    den += z[i] * z[i];
  }
  return static_cast<double>(n) * num.value() / (w.total() * den.value());
}

MoranStatistic moran_mean(const CompositionSample& sample, const SpatialWeights& w) {
  require_compatible(w, sample.n());
  MoranStatistic out;
  std::vector<double> column(sample.n());
  for (std::size_t j = 0; j < sample.parts(); ++j) {
    for (std::size_t i = 0; i < sample.n(); ++i) {
      column[i] = sample.raw()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    try {
      out.component_values.push_back(moran_i(column, w));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ConstantVector) throw;
      throw Error(ErrorKind::ConstantVector, "part " + std::to_string(j + 1) + " is constant");
    }
  }
  double sum = 0.0;
  for (double v : out.component_values) sum += v;
  out.value = sum / static_cast<double>(out.component_values.size());
  return out;
}

}  // namespace reyes

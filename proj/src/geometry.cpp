#include "reyes/geometry.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "reyes/errors.hpp"

namespace reyes {
namespace {

void require_same_parts(const Composition& x, const Composition& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "compositions have " + std::to_string(x.size()) + " and " +
                    std::to_string(y.size()) + " parts");
  }
}

void check_part(double v, std::size_t index, const std::string& where) {
  if (!(v >= kMinPart) || !std::isfinite(v)) {
    throw Error(ErrorKind::NonPositivePart,
                where + "part " + std::to_string(index + 1) + " = " + std::to_string(v) +
                    " is not a finite value >= 1e-300");
  }
}

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
  return ids;
}

}  // namespace

Composition Composition::closure(std::span<const double> values, double k) {
  if (values.size() < 2) {
    throw Error(ErrorKind::DimensionMismatch, "a composition needs at least 2 parts");
  }
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorKind::InvalidArgument, "closure constant must be positive");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    check_part(values[i], i, "");
    total += values[i];
  }
  std::vector<double> parts(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) parts[i] = k * values[i] / total;
  return Composition(std::move(parts), k);
}

Composition Composition::neutral(std::size_t parts, double k) {
  std::vector<double> ones(parts, 1.0);
  return closure(ones, k);
}

Composition perturb(const Composition& x, const Composition& y) {
  require_same_parts(x, y);
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * y[i];
  return closure(v, x.closure_constant());
}

Composition perturb_inverse(const Composition& x, const Composition& y) {
  require_same_parts(x, y);
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] / y[i];
  return closure(v, x.closure_constant());
}

Composition power(double alpha, const Composition& x) {
  // Powering in log space keeps extreme alpha from underflowing before closure.
  Eigen::VectorXd u = alpha * clr(x);
  return clr_inverse(u, x.closure_constant());
}

double aitchison_inner(const Composition& x, const Composition& y) {
  require_same_parts(x, y);
  const std::size_t d = x.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      sum += std::log(x[i] / x[j]) * std::log(y[i] / y[j]);
    }
  }
  return sum / (2.0 * static_cast<double>(d));
}

double aitchison_norm(const Composition& x) {
  return std::sqrt(std::max(0.0, aitchison_inner(x, x)));
}

Eigen::VectorXd clr(const Composition& x) {
  const auto d = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd logs(d);
  for (Eigen::Index i = 0; i < d; ++i) logs[i] = std::log(x[static_cast<std::size_t>(i)]);
  return logs.array() - logs.mean();
}

Composition clr_inverse(const Eigen::VectorXd& u, double k) {
  // Shifting by the max is absorbed by closure and avoids overflow in exp.
  const double shift = u.size() > 0 ? u.maxCoeff() : 0.0;
  std::vector<double> v(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) v[static_cast<std::size_t>(i)] = std::exp(u[i] - shift);
  return closure(v, k);
}

ContrastMatrix::ContrastMatrix(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  const auto d = rows_.cols();
  if (d < 2 || rows_.rows() != d - 1) {
    throw Error(ErrorKind::DimensionMismatch, "contrast matrix must be (D-1) x D with D >= 2");
  }
  if ((rows_.rowwise().sum().array().abs() > 1e-12).any()) {
    throw Error(ErrorKind::InvalidArgument, "contrast matrix rows must sum to zero");
  }
  const Eigen::MatrixXd gram = rows_ * rows_.transpose();
  if ((gram - Eigen::MatrixXd::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorKind::InvalidArgument, "contrast matrix rows are not orthonormal");
  }
  const Eigen::MatrixXd proj = rows_.transpose() * rows_;
  const Eigen::MatrixXd centering = Eigen::MatrixXd::Identity(d, d) -
                                    Eigen::MatrixXd::Constant(d, d, 1.0 / static_cast<double>(d));
  if ((proj - centering).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorKind::InvalidArgument, "contrast matrix does not span the clr hyperplane");
  }
}

ContrastMatrix contrast_matrix(std::size_t parts, ContrastScheme scheme) {
  if (parts < 2) throw Error(ErrorKind::DimensionMismatch, "contrast matrix needs D >= 2");
  const auto d = static_cast<Eigen::Index>(parts);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(d - 1, d);

  if (scheme == ContrastScheme::helmert_like) {
    // Modified Gram-Schmidt over e_i - (1/D) 1, i = 1..D-1.
    for (Eigen::Index i = 0; i < d - 1; ++i) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(d, -1.0 / static_cast<double>(d));
      v[i] += 1.0;
      for (Eigen::Index k = 0; k < i; ++k) v -= v.dot(rows.row(k)) * rows.row(k);
      rows.row(i) = v / v.norm();
    }
  } else {
    for (Eigen::Index i = 0; i < d - 1; ++i) {
      const double rest = static_cast<double>(d - i - 1);
      rows(i, i) = std::sqrt(rest / (rest + 1.0));
      for (Eigen::Index j = i + 1; j < d; ++j) rows(i, j) = -1.0 / std::sqrt(rest * (rest + 1.0));
    }
  }
  return ContrastMatrix(std::move(rows));
}

Eigen::VectorXd ilr(const Composition& x, const ContrastMatrix& psi) {
  if (x.size() != psi.parts()) {
    throw Error(ErrorKind::DimensionMismatch, "composition and contrast matrix disagree on D");
  }
  return psi.matrix() * clr(x);
}

Composition ilr_inverse(const Eigen::VectorXd& u, const ContrastMatrix& psi, double k) {
  if (static_cast<std::size_t>(u.size()) + 1 != psi.parts()) {
    throw Error(ErrorKind::DimensionMismatch, "ilr coordinates must have D-1 entries");
  }
  return clr_inverse(psi.matrix().transpose() * u, k);
}

CompositionSample::CompositionSample(const Eigen::MatrixXd& raw, std::vector<std::string> unit_ids,
                                     ContrastMatrix psi)
    : raw_(raw), ids_(std::move(unit_ids)), psi_(std::move(psi)) {
  if (raw_.rows() < 1) throw Error(ErrorKind::InvalidArgument, "sample has no units");
  if (static_cast<std::size_t>(raw_.cols()) != psi_.parts()) {
    throw Error(ErrorKind::DimensionMismatch, "sample and contrast matrix disagree on D");
  }
  if (ids_.empty()) ids_ = default_ids(n());
  if (ids_.size() != n()) {
    throw Error(ErrorKind::DimensionMismatch, "unit id count differs from row count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "unit id '" + id + "'");
  }

  Eigen::MatrixXd logs(raw_.rows(), raw_.cols());
  for (Eigen::Index i = 0; i < raw_.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < raw_.cols(); ++j) {
      check_part(raw_(i, j), static_cast<std::size_t>(j),
                 "unit '" + ids_[static_cast<std::size_t>(i)] + "': ");
      total += raw_(i, j);
    }
    raw_.row(i) /= total;
    logs.row(i) = raw_.row(i).array().log();
  }
  // Rows of psi sum to zero, so ln(x) psi' equals clr(x) psi'.
  ilr_ = logs * psi_.matrix().transpose();
}

CompositionSample::CompositionSample(const Eigen::MatrixXd& raw, std::vector<std::string> unit_ids)
    : CompositionSample(raw, std::move(unit_ids),
                        contrast_matrix(static_cast<std::size_t>(std::max<Eigen::Index>(raw.cols(), 2)))) {}

CompositionSample CompositionSample::from_ilr(const Eigen::MatrixXd& coords,
                                              const ContrastMatrix& psi,
                                              std::vector<std::string> unit_ids) {
  if (static_cast<std::size_t>(coords.cols()) + 1 != psi.parts()) {
    throw Error(ErrorKind::DimensionMismatch, "ilr coordinates must have D-1 columns");
  }
  Eigen::MatrixXd clrs = coords * psi.matrix();
  Eigen::MatrixXd raw(coords.rows(), clrs.cols());
  for (Eigen::Index i = 0; i < clrs.rows(); ++i) {
    const double shift = clrs.row(i).maxCoeff();
    raw.row(i) = (clrs.row(i).array() - shift).exp();
    raw.row(i) /= raw.row(i).sum();
  }
  return CompositionSample(raw, std::move(unit_ids), psi);
}

Composition CompositionSample::composition(std::size_t i) const {
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<double> v(parts());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = raw_(row, static_cast<Eigen::Index>(j));
  return closure(v);
}

CompositionSample CompositionSample::with_contrast(const ContrastMatrix& psi) const {
  return CompositionSample(raw_, ids_, psi);
}

CompositionSample CompositionSample::permuted(std::span<const std::size_t> order) const {
  if (order.size() != n()) {
    throw Error(ErrorKind::DimensionMismatch, "permutation length differs from unit count");
  }
  return subset(order);
}

CompositionSample CompositionSample::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows.size()), raw_.cols());
  std::vector<std::string> ids(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n()) throw Error(ErrorKind::InvalidArgument, "row index out of range");
    raw.row(static_cast<Eigen::Index>(r)) = raw_.row(static_cast<Eigen::Index>(rows[r]));
    ids[r] = ids_[rows[r]];
  }
  return CompositionSample(raw, std::move(ids), psi_);
}

Composition geometric_center(const CompositionSample& sample) {
  const Eigen::RowVectorXd mean_logs = sample.raw().array().log().colwise().mean();
  return clr_inverse(mean_logs.transpose());
}

CompositionSample center(const CompositionSample& sample) {
  const Composition g = geometric_center(sample);
  Eigen::MatrixXd z(sample.raw().rows(), sample.raw().cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      z(i, j) = sample.raw()(i, j) / g[static_cast<std::size_t>(j)];
    }
  }
  return CompositionSample(z, sample.unit_ids(), sample.contrast());
}

Eigen::MatrixXd centered_ilr(const CompositionSample& sample) {
  const Eigen::MatrixXd& coords = sample.ilr_coords();
  const Eigen::RowVectorXd mean = coords.colwise().mean();
  return coords.rowwise() - mean;
}

Eigen::MatrixXd replace_zeros(const Eigen::MatrixXd& raw, DeltaPolicy policy, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::InvalidArgument, "zero replacement delta must be positive");
  }
  const Eigen::Index n = raw.rows();
  const Eigen::Index d = raw.cols();
  if ((raw.array() < 0.0).any() || !raw.allFinite()) {
    throw Error(ErrorKind::NegativeValue, "zero replacement needs finite nonnegative input");
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(raw.row(i).sum() > 0.0)) {
      throw Error(ErrorKind::AllZeroRow, "row " + std::to_string(i + 1) + " has no positive part");
    }
  }

  Eigen::VectorXd deltas = Eigen::VectorXd::Constant(d, delta);
  if (policy == DeltaPolicy::fraction_of_min) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double smallest = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (raw(i, j) > 0.0) smallest = std::min(smallest, raw(i, j));
      }
      if (!std::isfinite(smallest)) {
        throw Error(ErrorKind::InvalidArgument,
                    "part " + std::to_string(j + 1) + " is zero in every row");
      }
      deltas[j] = delta * smallest;
    }
  }

  Eigen::MatrixXd out = raw;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double total = raw.row(i).sum();
    double replaced = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (raw(i, j) == 0.0) replaced += deltas[j];
    }
    if (replaced == 0.0) continue;
    if (replaced >= total) {
      throw Error(ErrorKind::InvalidArgument,
                  "row " + std::to_string(i + 1) + ": replacement mass exceeds the row total");
    }
    const double scale = (total - replaced) / total;
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = raw(i, j) == 0.0 ? deltas[j] : raw(i, j) * scale;
    }
  }
  return out;
}

}  // namespace reyes

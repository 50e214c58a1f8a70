#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reyes {

/// Parts below this are rejected so that logarithms stay finite.
inline constexpr double kMinPart = 1e-300;

/// A strictly positive D-part vector closed to sum k (D >= 2).
class Composition {
 public:
  static Composition closure(std::span<const double> values, double k = 1.0);
  static Composition neutral(std::size_t parts, double k = 1.0);

  std::span<const double> parts() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  double operator[](std::size_t i) const { return parts_[i]; }
  double closure_constant() const { return k_; }

 private:
  Composition(std::vector<double> parts, double k)
      : parts_(std::move(parts)), k_(k) {}

  std::vector<double> parts_;
  double k_;
};

inline Composition closure(std::span<const double> values, double k = 1.0) {
  return Composition::closure(values, k);
}

Composition perturb(const Composition& x, const Composition& y);
Composition perturb_inverse(const Composition& x, const Composition& y);
Composition power(double alpha, const Composition& x);

/// Aitchison inner product in its double-sum log-ratio form.
double aitchison_inner(const Composition& x, const Composition& y);
double aitchison_norm(const Composition& x);

Eigen::VectorXd clr(const Composition& x);
/// Accepts any real vector; the exponentiated result is closed to sum k.
Composition clr_inverse(const Eigen::VectorXd& u, double k = 1.0);

enum class ContrastScheme { helmert_like, pivot };

/// Orthonormal ilr basis stored as (D-1) x D; row i is clr(e_i).
///
/// Construction checks that rows sum to zero, that the rows are orthonormal
/// and that the columns project onto the clr hyperplane
/// (basis' * basis == I - J/D).
class ContrastMatrix {
 public:
  explicit ContrastMatrix(Eigen::MatrixXd rows);

  std::size_t parts() const { return static_cast<std::size_t>(rows_.cols()); }
  const Eigen::MatrixXd& matrix() const { return rows_; }

 private:
  Eigen::MatrixXd rows_;
};

/// Deterministic per (parts, scheme). helmert_like is Gram-Schmidt on the
/// centered canonical vectors; pivot uses pivot balances.
ContrastMatrix contrast_matrix(std::size_t parts,
                               ContrastScheme scheme = ContrastScheme::helmert_like);

Eigen::VectorXd ilr(const Composition& x, const ContrastMatrix& psi);
Composition ilr_inverse(const Eigen::VectorXd& u, const ContrastMatrix& psi,
                        double k = 1.0);

/// n compositions indexed by spatial unit. Rows of raw() are closed to 1;
/// ilr_coords() holds their coordinates under contrast().
class CompositionSample {
 public:
  /// Rows are closed on construction. Empty ids become "1".."n".
  CompositionSample(const Eigen::MatrixXd& raw, std::vector<std::string> unit_ids,
                    ContrastMatrix psi);
  CompositionSample(const Eigen::MatrixXd& raw, std::vector<std::string> unit_ids = {});

  /// Builds a sample whose i-th composition is ilr_inverse(coords.row(i)).
  static CompositionSample from_ilr(const Eigen::MatrixXd& coords, const ContrastMatrix& psi,
                                    std::vector<std::string> unit_ids = {});

  std::size_t n() const { return static_cast<std::size_t>(raw_.rows()); }
  std::size_t parts() const { return static_cast<std::size_t>(raw_.cols()); }
  const Eigen::MatrixXd& raw() const { return raw_; }
  const Eigen::MatrixXd& ilr_coords() const { return ilr_; }
  const ContrastMatrix& contrast() const { return psi_; }
  const std::vector<std::string>& unit_ids() const { return ids_; }

  Composition composition(std::size_t i) const;

  CompositionSample with_contrast(const ContrastMatrix& psi) const;
  /// Row i of the result is row order[i] of this sample (ids travel with rows).
  CompositionSample permuted(std::span<const std::size_t> order) const;
  CompositionSample subset(std::span<const std::size_t> rows) const;

 private:
  Eigen::MatrixXd raw_;
  Eigen::MatrixXd ilr_;
  std::vector<std::string> ids_;
  ContrastMatrix psi_;
};

/// Closed vector of per-part geometric means across units.
Composition geometric_center(const CompositionSample& sample);

/// z_i = x_i (-) g; the result's ilr coordinates have zero column sums.
CompositionSample center(const CompositionSample& sample);

/// ilr coordinates of center(sample), computed directly as ilr(x_i) - mean.
Eigen::MatrixXd centered_ilr(const CompositionSample& sample);

enum class DeltaPolicy { fraction_of_min, fixed };

/// Multiplicative replacement: zeros become delta_j, nonzero parts of the
/// row are scaled by (s - sum of deltas) / s so the row total s is kept.
/// fraction_of_min uses delta_j = delta * (smallest positive entry of column j).
Eigen::MatrixXd replace_zeros(const Eigen::MatrixXd& raw, DeltaPolicy policy,
                              double delta = 0.5);

}  // namespace reyes

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace reyes {

enum class Contiguity { queen, rook };
enum class IslandPolicy { error, drop_unit };

struct Neighbor {
  std::size_t index;
  double weight;
};

/// Sparse n x n spatial weights kept as per-row neighbor lists sorted by
/// column. The diagonal is always empty and only positive weights are stored.
class SpatialWeights {
 public:
  /// Rows are sorted on construction; duplicates, self weights and
  /// non-positive weights are rejected. When `standardized` is set, every row
  /// must sum to 1 within 1e-12.
  SpatialWeights(std::vector<std::vector<Neighbor>> rows, std::vector<std::string> unit_ids,
                 bool standardized);

  std::size_t n() const { return offsets_.size() - 1; }
  std::size_t nnz() const { return entries_.size(); }
  bool standardized() const { return standardized_; }
  const std::vector<std::string>& unit_ids() const { return ids_; }

  std::span<const Neighbor> neighbors(std::size_t i) const {
    return {entries_.data() + offsets_[i], entries_.data() + offsets_[i + 1]};
  }
  std::size_t neighbor_count(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  /// w_ij, zero when absent.
  double weight(std::size_t i, std::size_t j) const;
  double row_sum(std::size_t i) const;
  double total() const;
  /// Units with no neighbors.
  std::vector<std::size_t> islands() const;
  /// True when w_ij > 0 exactly when w_ji > 0.
  bool structurally_symmetric() const;

  Eigen::MatrixXd dense() const;

  /// Same weights under new unit labels (one per unit).
  SpatialWeights relabeled(std::vector<std::string> ids) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> entries_;
  std::vector<std::string> ids_;
  bool standardized_;
};

/// Binary contiguity on a rows x cols grid, units numbered row-major with
/// ids "1".."rows*cols".
SpatialWeights lattice_weights(std::size_t rows, std::size_t cols, Contiguity criterion);

/// Symmetric binary weights from undirected edges over `ids`.
SpatialWeights from_edge_list(std::span<const std::pair<std::string, std::string>> edges,
                              std::vector<std::string> ids);

/// Scales each row to sum 1. drop_unit removes islands (and every weight
/// pointing at them), renumbers, and repeats until no island remains.
SpatialWeights row_standardize(const SpatialWeights& w,
                               IslandPolicy island_policy = IslandPolicy::error);

struct CrossWeight {
  std::size_t i;
  std::size_t j;
  double value;
};

/// S0, c_i = sum_j w_ij^2 and the nonzero c_ij = sum_k w_ik w_jk (i != j),
/// the latter sorted by (i, j).
struct WeightSummaries {
  double s0 = 0.0;
  std::vector<double> c;
  std::vector<CrossWeight> cross;
};

WeightSummaries weight_summaries(const SpatialWeights& w);

}  // namespace reyes

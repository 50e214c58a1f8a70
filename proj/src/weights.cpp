#include "reyes/weights.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "reyes/errors.hpp"
#include "reyes/summation.hpp"

namespace reyes {

SpatialWeights::SpatialWeights(std::vector<std::vector<Neighbor>> rows,
                               std::vector<std::string> unit_ids, bool standardized)
    : ids_(std::move(unit_ids)), standardized_(standardized) {
  const std::size_t n = rows.size();
  if (ids_.empty()) {
    ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) ids_[i] = std::to_string(i + 1);
  }
  if (ids_.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "weights have " + std::to_string(n) +
                                                  " rows but " + std::to_string(ids_.size()) +
                                                  " unit ids");
  }
  offsets_.reserve(n + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = rows[i];
    std::sort(row.begin(), row.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      const Neighbor& nb = row[k];
      if (nb.index >= n) {
        throw Error(ErrorKind::InvalidArgument, "unit '" + ids_[i] + "' has an out-of-range neighbor");
      }
      if (nb.index == i) throw Error(ErrorKind::SelfEdge, "unit '" + ids_[i] + "'");
      if (!(nb.weight > 0.0) || !std::isfinite(nb.weight)) {
        throw Error(ErrorKind::InvalidArgument,
                    "weight (" + ids_[i] + ", " + ids_[nb.index] + ") must be positive");
      }
      if (k > 0 && row[k - 1].index == nb.index) {
        throw Error(ErrorKind::InvalidArgument,
                    "duplicate weight (" + ids_[i] + ", " + ids_[nb.index] + ")");
      }
      entries_.push_back(nb);
    }
    offsets_.push_back(entries_.size());
  }
  if (standardized_) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(row_sum(i) - 1.0) > 1e-12) {
        throw Error(ErrorKind::NotStandardized, "row of unit '" + ids_[i] + "' does not sum to 1");
      }
    }
  }
}

double SpatialWeights::weight(std::size_t i, std::size_t j) const {
  const auto row = neighbors(i);
  const auto it = std::lower_bound(row.begin(), row.end(), j,
                                   [](const Neighbor& nb, std::size_t idx) { return nb.index < idx; });
  return (it != row.end() && it->index == j) ? it->weight : 0.0;
}

double SpatialWeights::row_sum(std::size_t i) const {
  double s = 0.0;
  for (const auto& nb : neighbors(i)) s += nb.weight;
  return s;
}

double SpatialWeights::total() const {
  CompensatedSum s;
  for (const auto& nb : entries_) s += nb.weight;
  return s.value();
}

std::vector<std::size_t> SpatialWeights::islands() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n(); ++i) {
    if (neighbor_count(i) == 0) out.push_back(i);
  }
  return out;
}

bool SpatialWeights::structurally_symmetric() const {
  for (std::size_t i = 0; i < n(); ++i) {
    for (const auto& nb : neighbors(i)) {
      if (weight(nb.index, i) == 0.0) return false;
    }
  }
  return true;
}

Eigen::MatrixXd SpatialWeights::dense() const {
  const auto size = static_cast<Eigen::Index>(n());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  for (std::size_t i = 0; i < n(); ++i) {
    for (const auto& nb : neighbors(i)) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nb.index)) = nb.weight;
    }
  }
  return m;
}

SpatialWeights SpatialWeights::relabeled(std::vector<std::string> ids) const {
  std::vector<std::vector<Neighbor>> rows(n());
  for (std::size_t i = 0; i < n(); ++i) rows[i].assign(neighbors(i).begin(), neighbors(i).end());
  return SpatialWeights(std::move(rows), std::move(ids), standardized_);
}

SpatialWeights lattice_weights(std::size_t rows, std::size_t cols, Contiguity criterion) {
  if (rows < 2 || cols < 2) {
    throw Error(ErrorKind::InvalidArgument, "lattice needs at least 2 rows and 2 columns");
  }
  std::vector<std::vector<Neighbor>> adj(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      auto& row = adj[r * cols + c];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (criterion == Contiguity::rook && dr != 0 && dc != 0) continue;
          const auto rr = static_cast<long long>(r) + dr;
          const auto cc = static_cast<long long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long long>(rows) ||
              cc >= static_cast<long long>(cols)) {
            continue;
          }
          row.push_back({static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc), 1.0});
        }
      }
    }
  }
  return SpatialWeights(std::move(adj), {}, false);
}

SpatialWeights from_edge_list(std::span<const std::pair<std::string, std::string>> edges,
                              std::vector<std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], i).second) throw Error(ErrorKind::DuplicateId, "unit id '" + ids[i] + "'");
  }
  auto lookup = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it == index.end()) throw Error(ErrorKind::UnknownLabel, "edge endpoint '" + label + "'");
    return it->second;
  };

  std::vector<std::vector<Neighbor>> adj(ids.size());
  for (const auto& [a, b] : edges) {
    const std::size_t i = lookup(a);
    const std::size_t j = lookup(b);
    if (i == j) throw Error(ErrorKind::SelfEdge, "edge (" + a + ", " + b + ")");
    adj[i].push_back({j, 1.0});
    adj[j].push_back({i, 1.0});
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end(),
              [](const Neighbor& x, const Neighbor& y) { return x.index < y.index; });
    row.erase(std::unique(row.begin(), row.end(),
                          [](const Neighbor& x, const Neighbor& y) { return x.index == y.index; }),
              row.end());
  }
  return SpatialWeights(std::move(adj), std::move(ids), false);
}

namespace {

SpatialWeights drop_units(const SpatialWeights& w, const std::vector<std::size_t>& drop) {
  std::vector<bool> removed(w.n(), false);
  for (std::size_t i : drop) removed[i] = true;
  std::vector<std::size_t> remap(w.n(), 0);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < w.n(); ++i) {
    if (removed[i]) continue;
    remap[i] = ids.size();
    ids.push_back(w.unit_ids()[i]);
  }
  std::vector<std::vector<Neighbor>> rows;
  rows.reserve(ids.size());
  for (std::size_t i = 0; i < w.n(); ++i) {
    if (removed[i]) continue;
    auto& row = rows.emplace_back();
    for (const auto& nb : w.neighbors(i)) {
      if (!removed[nb.index]) row.push_back({remap[nb.index], nb.weight});
    }
  }
  return SpatialWeights(std::move(rows), std::move(ids), false);
}

}  // namespace

SpatialWeights row_standardize(const SpatialWeights& w, IslandPolicy island_policy) {
  SpatialWeights current = w;
  for (auto islands = current.islands(); !islands.empty(); islands = current.islands()) {
    if (island_policy == IslandPolicy::error) {
      std::string names;
      for (std::size_t i : islands) names += (names.empty() ? "'" : ", '") + current.unit_ids()[i] + "'";
      throw Error(ErrorKind::IslandUnit, "units without neighbors: " + names);
    }
    current = drop_units(current, islands);
    if (current.n() == 0) throw Error(ErrorKind::IslandUnit, "every unit is an island");
  }

  std::vector<std::vector<Neighbor>> rows(current.n());
  for (std::size_t i = 0; i < current.n(); ++i) {
    const double sum = current.row_sum(i);
    for (const auto& nb : current.neighbors(i)) rows[i].push_back({nb.index, nb.weight / sum});
  }
  return SpatialWeights(std::move(rows), current.unit_ids(), true);
}

WeightSummaries weight_summaries(const SpatialWeights& w) {
  if (!w.standardized()) {
    throw Error(ErrorKind::NotStandardized, "weight summaries need row-standardized weights");
  }
  const std::size_t n = w.n();
  WeightSummaries out;
  out.s0 = w.total();
  out.c.assign(n, 0.0);

  // Column view: for each k, the rows i with w_ik > 0.
  std::vector<std::vector<Neighbor>> columns(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum ci;
    for (const auto& nb : w.neighbors(i)) {
      ci += nb.weight * nb.weight;
      columns[nb.index].push_back({i, nb.weight});
    }
    out.c[i] = ci.value();
  }

  std::vector<double> acc(n, 0.0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    touched.clear();
    for (const auto& ik : w.neighbors(i)) {
      for (const auto& jk : columns[ik.index]) {
        if (jk.index == i) continue;
        if (acc[jk.index] == 0.0) touched.push_back(jk.index);
        acc[jk.index] += ik.weight * jk.weight;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t j : touched) {
      out.cross.push_back({i, j, acc[j]});
      acc[j] = 0.0;
    }
  }
  return out;
}

}  // namespace reyes

// Writes the bundled test fixtures. Every file is a pure function of the
// seeds below, so rerunning reproduces tests/fixtures byte for byte.
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reyes/io.hpp"
#include "reyes/random.hpp"
#include "reyes/simulation.hpp"

namespace fs = std::filesystem;
using namespace reyes;

namespace {

CompositionTable table_of(const CompositionSample& s, std::vector<std::string> names) {
  return {s.unit_ids(), std::move(names), s.raw()};
}

void save_table(const fs::path& path, const CompositionTable& t) {
  std::ostringstream out;
  write_compositions(out, t);
  write_file(path, out.str());
}

void save_edges(const fs::path& path, const std::vector<Edge>& edges) {
  std::string text = "src,dst\n";
  for (const auto& [a, b] : edges) text += a + "," + b + "\n";
  write_file(path, text);
}

std::vector<Edge> edges_of(const SpatialWeights& w) {
  std::vector<Edge> out;
  const auto& ids = w.unit_ids();
  for (std::size_t i = 0; i < w.n(); ++i) {
    for (const auto& nb : w.neighbors(i)) {
      if (nb.index > i) out.emplace_back(ids[i], ids[nb.index]);
    }
  }
  return out;
}

std::vector<std::string> labels(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 1; i <= n; ++i) ids.push_back(prefix + (i < 10 ? "0" : "") + std::to_string(i));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("tests/fixtures");
  fs::create_directories(dir);
  const ContrastMatrix psi3 = contrast_matrix(3);
  const Eigen::MatrixXd eye2 = Eigen::MatrixXd::Identity(2, 2);

  // 33 departments: the first 33 cells of a 6x6 grid, queen adjacency.
  {
    std::vector<std::vector<Neighbor>> adj(33);
    for (std::size_t a = 0; a < 33; ++a) {
      for (std::size_t b = a + 1; b < 33; ++b) {
        const long dr = static_cast<long>(a / 6) - static_cast<long>(b / 6);
        const long dc = static_cast<long>(a % 6) - static_cast<long>(b % 6);
        if (std::labs(dr) <= 1 && std::labs(dc) <= 1) {
          adj[a].push_back({b, 1.0});
          adj[b].push_back({a, 1.0});
        }
      }
    }
    const SpatialWeights binary(adj, labels("D", 33), false);
    const CompositionSample props = sar_sample(row_standardize(binary), 0.6, 0.5 * eye2, psi3, 20200613);
    // Counts of active cases by place of care, one department with no ICU patients.
    CounterStream totals(20200614, 0);
    std::normal_distribution<double> log_total(6.0, 1.2);
    Eigen::MatrixXd counts(33, 3);
    for (Eigen::Index i = 0; i < 33; ++i) {
      const double total = std::round(std::exp(log_total(totals))) + 20.0;
      for (Eigen::Index j = 0; j < 3; ++j) counts(i, j) = std::round(total * props.raw()(i, j));
    }
    counts(32, 2) = 0.0;
    save_table(dir / "colombia_like.csv", {labels("D", 33), {"home", "hospital", "icu"}, counts});
    save_edges(dir / "colombia_like_edges.csv", edges_of(binary));
  }

  // 3x3 queen lattice, independent logistic-normal draws.
  {
    const CompositionSample s = logistic_normal_sample(9, 3, eye2, psi3, 9001);
    save_table(dir / "grid3x3_independent.csv", table_of(s, {"part_1", "part_2", "part_3"}));
  }

  // 10x10 queen lattice, SAR with rho = 0.9.
  {
    const SpatialWeights w = row_standardize(lattice_weights(10, 10, Contiguity::queen));
    const CompositionSample s = sar_sample(w, 0.9, eye2, psi3, 9090);
    save_table(dir / "sar_rho09_10x10.csv", table_of(s, {"part_1", "part_2", "part_3"}));
  }

  // Six units for exact enumeration on a 2x3 rook lattice.
  {
    const CompositionSample s = logistic_normal_sample(6, 3, eye2, psi3, 6006);
    save_table(dir / "n6.csv", table_of(s, {"part_1", "part_2", "part_3"}));
  }

  // 3x3 rook edges with unit 9 cut off.
  {
    std::vector<Edge> edges;
    for (const auto& e : edges_of(lattice_weights(3, 3, Contiguity::rook))) {
      if (e.first != "9" && e.second != "9") edges.push_back(e);
    }
    save_edges(dir / "island_edges.csv", edges);
  }

  save_table(dir / "two_rows.csv",
             {{"a", "b"}, {"x", "y", "z"}, (Eigen::MatrixXd(2, 3) << 0.2, 0.3, 0.5, 0.6, 0.3, 0.1).finished()});
  std::cout << "fixtures written to " << dir.string() << '\n';
  return 0;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "reyes/geometry.hpp"
#include "reyes/inference.hpp"
#include "reyes/io.hpp"
#include "reyes/statistic.hpp"
#include "reyes/weights.hpp"

namespace reyes {

struct LatticeSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

using WeightsSource = std::variant<std::filesystem::path, LatticeSpec>;

struct AnalysisRequest {
  std::filesystem::path compositions_path;
  WeightsSource weights_source = LatticeSpec{};
  Contiguity contiguity = Contiguity::queen;
  std::uint64_t permutations = 10000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  ZeroReplacement zeros;
  IslandPolicy island_policy = IslandPolicy::error;
  unsigned workers = 1;
  std::string label;
};

/// Sample and standardized weights aligned unit by unit, plus what it took to get there.
struct PreparedInput {
  CompositionSample sample;
  SpatialWeights weights;
  std::vector<std::string> part_names;
  std::vector<std::string> dropped_units;
  std::map<std::string, std::string> digests;  ///< sha256 of each input file
};

PreparedInput prepare_input(const AnalysisRequest& request);

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t permutations = 0;
  std::map<std::string, std::string> digests;
};

struct ReyesReport {
  std::string label;
  ReyesStatistic statistic;
  PValueReport p_values;
  DistributionSummary distribution;
  CriticalValues critical{};
  double alpha = 0.05;
  Provenance provenance;
  std::vector<std::string> part_names;
  std::vector<std::string> dropped_units;
  std::vector<std::string> warnings;
};

ReyesReport analyze(const AnalysisRequest& request);
ReyesReport analyze(const PreparedInput& input, const AnalysisRequest& request);

/// Warning text when the permutation mean is more than 4 sd / sqrt(B) from -1/(n-1).
std::optional<std::string> mean_sanity_warning(const DistributionSummary& summary, std::size_t n,
                                               std::uint64_t permutations);

nlohmann::json to_json(const ReyesReport& report, const AnalysisRequest& request);

struct ExactReport {
  ReyesStatistic statistic;
  PermutationDistribution distribution;
  PValueReport p_values;
  DistributionSummary summary;
  CriticalValues critical{};
  double alpha = 0.05;
  std::map<std::string, std::string> digests;
};

ExactReport exact_analysis(const PreparedInput& input, double alpha, std::size_t cap, unsigned workers);
nlohmann::json to_json(const ExactReport& report);

}  // namespace reyes

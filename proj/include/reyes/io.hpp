#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "reyes/geometry.hpp"
#include "reyes/simulation.hpp"
#include "reyes/weights.hpp"

namespace reyes {

/// Raw nonnegative compositions as read from disk; zeros are kept.
struct CompositionTable {
  std::vector<std::string> ids;
  std::vector<std::string> part_names;
  Eigen::MatrixXd values;
};

/// CSV with header `id,<part>,<part>,...`. Errors name the offending row id.
CompositionTable parse_compositions(std::istream& in, const std::string& source = "<input>");
CompositionTable read_compositions(const std::filesystem::path& path);
/// Values are written in shortest round-trip form, so reading back is bit-exact.
void write_compositions(std::ostream& out, const CompositionTable& table);

struct ZeroReplacement {
  bool enabled = false;
  DeltaPolicy policy = DeltaPolicy::fraction_of_min;
  double delta = 0.5;
};

/// Applies zero replacement (when enabled) and closes every row.
CompositionSample to_sample(const CompositionTable& table, const ZeroReplacement& zeros = {});

using Edge = std::pair<std::string, std::string>;

/// CSV with header `src,dst`, one undirected edge per line.
std::vector<Edge> parse_edge_list(std::istream& in, const std::string& source = "<input>");
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

/// One line per stored weight: src,dst,weight.
void write_weights_csv(std::ostream& out, const SpatialWeights& w);
nlohmann::json weights_json(const SpatialWeights& w);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& context);

/// Splits one CSV record; double quotes group commas and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

ScenarioConfig scenario_config_from_json(const nlohmann::json& doc);
nlohmann::json scenario_config_json(const ScenarioConfig& config);

/// replication,I_a,upper_bound,I_m,p_a,p_m (NA where a value does not apply).
void write_scenario_records(std::ostream& out, const ScenarioResult& result);
/// replication,time_a_ns,time_m_ns.
void write_scenario_timings(std::ostream& out, const ScenarioResult& result);
nlohmann::json scenario_summary_json(const ScenarioResult& result);

Contiguity parse_contiguity(std::string_view text);
std::string to_string(Contiguity c);

}  // namespace reyes

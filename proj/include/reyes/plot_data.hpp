#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "reyes/simulation.hpp"

namespace reyes {

/// Tidy table of already-formatted cells, one observation per row.
struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// day, i_a, p_hat from analyze reports. day is the report label, or the
/// 1-based position when the label is empty.
SeriesTable daily_series(const std::vector<nlohmann::json>& reports);

/// replication, I_a, I_m, p_a, p_m, time_a_ns, time_m_ns.
SeriesTable scenario_series(const ScenarioResult& result);
/// Same columns from a results CSV and an optional timings CSV.
SeriesTable scenario_series(std::istream& results, std::istream* timings);

/// One row per (summary, statistic): case, contiguity, covariance, D,
/// grid_rows, grid_cols, n, rho_sar, statistic, rejection_rate, mean, sd.
SeriesTable rejection_series(const std::vector<nlohmann::json>& summaries);

void write_csv(std::ostream& out, const SeriesTable& table);
/// Column names with a description and unit for each.
nlohmann::json schema_json(const SeriesTable& table, const std::string& kind);

}  // namespace reyes

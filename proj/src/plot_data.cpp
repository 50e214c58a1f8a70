#include "reyes/plot_data.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "reyes/errors.hpp"
#include "reyes/io.hpp"

namespace reyes {

namespace {

const std::vector<std::string> kScenarioColumns = {"replication", "I_a", "I_m", "p_a",
                                                   "p_m", "time_a_ns", "time_m_ns"};

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(ErrorKind::InvalidArgument, source + ": missing column '" + name + "'");
  }
};

CsvFile read_csv(std::istream& in, const std::string& source) {
  CsvFile file;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (file.header.empty()) {
      file.header = std::move(fields);
      continue;
    }
    if (fields.size() != file.header.size()) {
      throw Error(ErrorKind::RaggedRow, source + ": row '" + fields.front() + "' has " +
                                            std::to_string(fields.size()) + " fields, expected " +
                                            std::to_string(file.header.size()));
    }
    file.rows.push_back(std::move(fields));
  }
  if (file.header.empty()) throw Error(ErrorKind::InvalidArgument, source + ": empty file");
  return file;
}

}  // namespace

SeriesTable daily_series(const std::vector<nlohmann::json>& reports) {
  SeriesTable table{{"day", "i_a", "p_hat"}, {}};
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    try {
      const std::string label = r.value("label", std::string());
      table.rows.push_back({label.empty() ? std::to_string(k + 1) : label,
                            cell(r.at("statistic").at("I_a")), cell(r.at("p_values").at("p_pos"))});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, "report " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return table;
}

SeriesTable scenario_series(const ScenarioResult& result) {
  SeriesTable table{kScenarioColumns, {}};
  for (std::size_t r = 0; r < result.records.size(); ++r) {
    const auto& rec = result.records[r];
    table.rows.push_back({std::to_string(r + 1), format_double(rec.reyes), opt_cell(rec.moran_mean),
                          opt_cell(rec.p_reyes), opt_cell(rec.p_moran), std::to_string(rec.time_reyes_ns),
                          std::to_string(rec.time_moran_ns)});
  }
  return table;
}

SeriesTable scenario_series(std::istream& results, std::istream* timings) {
  const CsvFile res = read_csv(results, "results");
  const std::size_t rep = res.column("replication", "results");
  const std::size_t ia = res.column("I_a", "results");
  const std::size_t im = res.column("I_m", "results");
  const std::size_t pa = res.column("p_a", "results");
  const std::size_t pm = res.column("p_m", "results");

  std::unordered_map<std::string, std::pair<std::string, std::string>> times;
  if (timings) {
    const CsvFile t = read_csv(*timings, "timings");
    const std::size_t trep = t.column("replication", "timings");
    const std::size_t ta = t.column("time_a_ns", "timings");
    const std::size_t tm = t.column("time_m_ns", "timings");
    for (const auto& row : t.rows) times[row[trep]] = {row[ta], row[tm]};
  }

  SeriesTable table{kScenarioColumns, {}};
  for (const auto& row : res.rows) {
    const auto it = times.find(row[rep]);
    const bool timed = it != times.end();
    table.rows.push_back({row[rep], row[ia], row[im], row[pa], row[pm], timed ? it->second.first : "NA",
                          timed ? it->second.second : "NA"});
  }
  return table;
}

SeriesTable rejection_series(const std::vector<nlohmann::json>& summaries) {
  SeriesTable table{{"case", "contiguity", "covariance", "D", "grid_rows", "grid_cols", "n", "rho_sar",
                     "statistic", "rejection_rate", "mean", "sd"},
                    {}};
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    try {
      const auto& c = s.at("config");
      const auto rows = c.at("grid").at("rows").get<std::size_t>();
      const auto cols = c.at("grid").at("cols").get<std::size_t>();
      for (const char* stat : {"I_a", "I_m"}) {
        const auto& agg = s.at(stat);
        if (agg.is_null()) continue;
        table.rows.push_back({cell(c.at("case")), cell(c.at("contiguity")), cell(c.at("covariance").at("kind")),
                              cell(c.at("D")), std::to_string(rows), std::to_string(cols),
                              std::to_string(rows * cols), cell(c.at("rho_sar")), stat,
                              cell(agg.at("rejection_rate")), cell(agg.at("mean")), cell(agg.at("sd"))});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, "summary " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return table;
}

void write_csv(std::ostream& out, const SeriesTable& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

nlohmann::json schema_json(const SeriesTable& table, const std::string& kind) {
  static const std::map<std::string, std::pair<std::string, std::string>> docs = {
      {"day", {"report label (day index when unlabeled)", "label"}},
      {"i_a", {"observed compositional Moran statistic", "dimensionless"}},
      {"p_hat", {"Monte Carlo upper-tail p-value", "probability"}},
      {"replication", {"1-based replication index", "count"}},
      {"I_a", {"compositional Moran statistic", "dimensionless"}},
      {"I_m", {"mean of per-part Moran's I", "dimensionless"}},
      {"p_a", {"upper-tail p-value of I_a", "probability"}},
      {"p_m", {"upper-tail p-value of I_m", "probability"}},
      {"time_a_ns", {"wall time for I_a and its permutation test", "nanoseconds"}},
      {"time_m_ns", {"wall time for I_m and its permutation test", "nanoseconds"}},
      {"case", {"simulation scenario", "identical|independent|sar"}},
      {"contiguity", {"neighbour criterion", "queen|rook"}},
      {"covariance", {"ilr covariance structure", "identity|exchangeable|wishart_toeplitz"}},
      {"D", {"number of parts", "count"}},
      {"grid_rows", {"lattice rows", "count"}},
      {"grid_cols", {"lattice columns", "count"}},
      {"n", {"number of spatial units", "count"}},
      {"rho_sar", {"SAR dependence parameter", "dimensionless"}},
      {"statistic", {"which statistic the row describes", "I_a|I_m"}},
      {"rejection_rate", {"share of replications with p < alpha", "probability"}},
      {"mean", {"mean statistic over replications", "dimensionless"}},
      {"sd", {"standard deviation over replications", "dimensionless"}},
  };
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& name : table.columns) {
    const auto it = docs.find(name);
    cols.push_back({{"name", name},
                    {"description", it == docs.end() ? "" : it->second.first},
                    {"unit", it == docs.end() ? "" : it->second.second}});
  }
  return {{"kind", kind}, {"missing_value", "NA"}, {"columns", cols}};
}

}  // namespace reyes

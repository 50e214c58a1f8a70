#include "reyes/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "reyes/errors.hpp"

namespace reyes {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Non-blank lines with their 1-based line numbers. A UTF-8 BOM is skipped.
std::vector<std::pair<std::size_t, std::string>> records(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    out.emplace_back(number, line);
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

const char* case_name(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::identical: return "identical";
    case ScenarioCase::independent: return "independent";
    case ScenarioCase::sar: return "sar";
  }
  return "unknown";
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), res.ptr};
}

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidArgument, context + ": '" + std::string(text) + "' is not a finite number");
  }
  return value;
}

CompositionTable parse_compositions(std::istream& in, const std::string& source) {
  const auto lines = records(in);
  if (lines.empty()) throw Error(ErrorKind::InvalidArgument, source + ": empty file");

  CompositionTable table;
  const auto header = split_csv_line(lines.front().second);
  if (header.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, source + ": header needs an id column and at least 2 parts");
  }
  table.part_names.assign(header.begin() + 1, header.end());
  const std::size_t parts = table.part_names.size();
  if (lines.size() < 2) throw Error(ErrorKind::InvalidArgument, source + ": no data rows");

  table.values.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(parts));
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto fields = split_csv_line(text);
    const std::string& id = fields.front();
    const std::string where = source + " line " + std::to_string(number) + " (id '" + id + "')";
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::RaggedRow, where + " has " + std::to_string(fields.size()) +
                                            " fields, expected " + std::to_string(header.size()));
    }
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, where);
    bool any_positive = false;
    for (std::size_t j = 0; j < parts; ++j) {
      const double v = parse_double(fields[j + 1], where + " part '" + table.part_names[j] + "'");
      if (v < 0.0) {
        throw Error(ErrorKind::NegativeValue,
                    where + " part '" + table.part_names[j] + "' is " + fields[j + 1]);
      }
      any_positive = any_positive || v > 0.0;
      table.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = v;
    }
    if (!any_positive) throw Error(ErrorKind::AllZeroRow, where);
    table.ids.push_back(id);
  }
  return table;
}

CompositionTable read_compositions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_compositions(in, path.string());
}

void write_compositions(std::ostream& out, const CompositionTable& table) {
  out << "id";
  for (const auto& name : table.part_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    out << table.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ',' << format_double(table.values(i, j));
    out << '\n';
  }
}

CompositionSample to_sample(const CompositionTable& table, const ZeroReplacement& zeros) {
  const Eigen::MatrixXd raw =
      zeros.enabled ? replace_zeros(table.values, zeros.policy, zeros.delta) : table.values;
  return CompositionSample(raw, table.ids);
}

std::vector<Edge> parse_edge_list(std::istream& in, const std::string& source) {
  const auto lines = records(in);
  if (lines.empty()) throw Error(ErrorKind::InvalidArgument, source + ": empty file");
  const auto header = split_csv_line(lines.front().second);
  if (header.size() != 2 || header[0] != "src" || header[1] != "dst") {
    throw Error(ErrorKind::InvalidArgument, source + ": header must be 'src,dst'");
  }
  std::vector<Edge> edges;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv_line(lines[r].second);
    if (fields.size() != 2) {
      throw Error(ErrorKind::RaggedRow, source + " line " + std::to_string(lines[r].first) + " has " +
                                            std::to_string(fields.size()) + " fields, expected 2");
    }
    edges.emplace_back(fields[0], fields[1]);
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_edge_list(in, path.string());
}

void write_weights_csv(std::ostream& out, const SpatialWeights& w) {
  out << "src,dst,weight\n";
  const auto& ids = w.unit_ids();
  for (std::size_t i = 0; i < w.n(); ++i) {
    for (const auto& nb : w.neighbors(i)) {
      out << ids[i] << ',' << ids[nb.index] << ',' << format_double(nb.weight) << '\n';
    }
  }
}

nlohmann::json weights_json(const SpatialWeights& w) {
  nlohmann::json units = nlohmann::json::array();
  const auto& ids = w.unit_ids();
  for (std::size_t i = 0; i < w.n(); ++i) {
    nlohmann::json nbs = nlohmann::json::array();
    for (const auto& nb : w.neighbors(i)) nbs.push_back({{"id", ids[nb.index]}, {"weight", nb.weight}});
    units.push_back({{"id", ids[i]}, {"neighbors", nbs}});
  }
  const auto summaries = weight_summaries(w);
  return {{"n", w.n()}, {"nnz", w.nnz()}, {"s0", summaries.s0}, {"units", units}};
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

Contiguity parse_contiguity(std::string_view text) {
  if (text == "queen") return Contiguity::queen;
  if (text == "rook") return Contiguity::rook;
  throw Error(ErrorKind::InvalidArgument, "contiguity must be queen or rook, got '" + std::string(text) + "'");
}

std::string to_string(Contiguity c) { return c == Contiguity::queen ? "queen" : "rook"; }

ScenarioConfig scenario_config_from_json(const nlohmann::json& doc) {
  static const std::unordered_set<std::string> known = {
      "case", "grid", "D", "contiguity", "covariance", "rho_sar", "replications", "B", "alpha", "master_seed"};
  if (!doc.is_object()) throw Error(ErrorKind::InvalidArgument, "scenario config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw Error(ErrorKind::InvalidArgument, "unknown scenario config key '" + key + "'");
  }

  ScenarioConfig c;
  try {
    if (doc.contains("case")) {
      const auto name = doc.at("case").get<std::string>();
      if (name == "identical") c.scenario = ScenarioCase::identical;
      else if (name == "independent") c.scenario = ScenarioCase::independent;
      else if (name == "sar") c.scenario = ScenarioCase::sar;
      else throw Error(ErrorKind::InvalidArgument, "unknown case '" + name + "'");
    }
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      if (g.is_array() && g.size() == 2) {
        c.rows = g[0].get<std::size_t>();
        c.cols = g[1].get<std::size_t>();
      } else {
        c.rows = g.at("rows").get<std::size_t>();
        c.cols = g.at("cols").get<std::size_t>();
      }
    }
    if (doc.contains("D")) c.parts = doc.at("D").get<std::size_t>();
    if (doc.contains("contiguity")) c.contiguity = parse_contiguity(doc.at("contiguity").get<std::string>());
    if (doc.contains("covariance")) {
      const auto& cov = doc.at("covariance");
      for (const auto& [key, value] : cov.items()) {
        if (key != "kind" && key != "rho1" && key != "toeplitz_rho" && key != "dof") {
          throw Error(ErrorKind::InvalidArgument, "unknown covariance key '" + key + "'");
        }
      }
      if (cov.contains("kind")) {
        const auto kind = cov.at("kind").get<std::string>();
        if (kind == "identity") c.covariance.kind = CovarianceKind::identity;
        else if (kind == "exchangeable") c.covariance.kind = CovarianceKind::exchangeable;
        else if (kind == "wishart_toeplitz") c.covariance.kind = CovarianceKind::wishart_toeplitz;
        else throw Error(ErrorKind::InvalidArgument, "unknown covariance kind '" + kind + "'");
      }
      if (cov.contains("rho1")) c.covariance.rho1 = cov.at("rho1").get<double>();
      if (cov.contains("toeplitz_rho")) c.covariance.toeplitz_rho = cov.at("toeplitz_rho").get<double>();
      if (cov.contains("dof")) c.covariance.dof = cov.at("dof").get<std::size_t>();
    }
    if (doc.contains("rho_sar")) c.rho_sar = doc.at("rho_sar").get<double>();
    if (doc.contains("replications")) c.replications = doc.at("replications").get<std::size_t>();
    if (doc.contains("B")) c.permutations = doc.at("B").get<std::size_t>();
    if (doc.contains("alpha")) c.alpha = doc.at("alpha").get<double>();
    if (doc.contains("master_seed")) c.master_seed = doc.at("master_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("scenario config: ") + e.what());
  }
  c.covariance.dim = c.parts - 1;
  validate(c);
  return c;
}

nlohmann::json scenario_config_json(const ScenarioConfig& c) {
  nlohmann::json cov = {{"kind", to_string(c.covariance.kind)},
                        {"rho1", c.covariance.rho1},
                        {"toeplitz_rho", c.covariance.toeplitz_rho},
                        {"dof", c.covariance.dof}};
  return {{"case", case_name(c.scenario)},
          {"grid", {{"rows", c.rows}, {"cols", c.cols}}},
          {"D", c.parts},
          {"contiguity", to_string(c.contiguity)},
          {"covariance", cov},
          {"rho_sar", c.rho_sar},
          {"replications", c.replications},
          {"B", c.permutations},
          {"alpha", c.alpha},
          {"master_seed", c.master_seed}};
}

namespace {

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

nlohmann::json aggregate_json(const StatisticAggregate& a) {
  nlohmann::json out = {{"mean", a.mean}, {"sd", a.sd}};
  out["rejection_rate"] = a.rejection_rate ? nlohmann::json(*a.rejection_rate) : nlohmann::json(nullptr);
  return out;
}

}  // namespace

void write_scenario_records(std::ostream& out, const ScenarioResult& result) {
  out << "replication,I_a,upper_bound,I_m,p_a,p_m\n";
  for (std::size_t r = 0; r < result.records.size(); ++r) {
    const auto& rec = result.records[r];
    out << r + 1 << ',' << format_double(rec.reyes) << ',' << format_double(rec.bound) << ','
        << optional_field(rec.moran_mean) << ',' << optional_field(rec.p_reyes) << ','
        << optional_field(rec.p_moran) << '\n';
  }
}

void write_scenario_timings(std::ostream& out, const ScenarioResult& result) {
  out << "replication,time_a_ns,time_m_ns\n";
  for (std::size_t r = 0; r < result.records.size(); ++r) {
    const auto& rec = result.records[r];
    out << r + 1 << ',' << rec.time_reyes_ns << ',' << rec.time_moran_ns << '\n';
  }
}

nlohmann::json scenario_summary_json(const ScenarioResult& result) {
  nlohmann::json out;
  out["config"] = scenario_config_json(result.config);
  out["replications"] = result.records.size();
  out["I_a"] = aggregate_json(result.reyes);
  out["I_m"] = result.moran_mean ? aggregate_json(*result.moran_mean) : nlohmann::json(nullptr);
  out["bound_respected"] = result.bound_respected;
  out["saturated"] = result.saturated;
  return out;
}

}  // namespace reyes

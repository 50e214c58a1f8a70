#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reyes/analysis.hpp"
#include "reyes/errors.hpp"
#include "reyes/io.hpp"
#include "reyes/plot_data.hpp"
#include "reyes/simulation.hpp"

namespace fs = std::filesystem;
using namespace reyes;

namespace {

struct InputFlags {
  std::string compositions;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string edges;
  std::string contiguity = "queen";
  std::string zero_replace = "off";
  double zero_delta = 0.5;
  std::string island_policy = "error";
};

struct OutputFlags {
  std::string out;
  std::string format = "json";
};

void add_weights_flags(CLI::App* cmd, InputFlags& in) {
  auto* rows = cmd->add_option("--rows", in.rows, "Lattice rows")->check(CLI::PositiveNumber);
  auto* cols = cmd->add_option("--cols", in.cols, "Lattice columns")->check(CLI::PositiveNumber);
  auto* edges = cmd->add_option("--edges", in.edges, "Edge list CSV (src,dst)")->check(CLI::ExistingFile);
  rows->needs(cols);
  cols->needs(rows);
  edges->excludes(rows)->excludes(cols);
  cmd->add_option("--contiguity", in.contiguity, "Lattice neighbours")
      ->check(CLI::IsMember({"queen", "rook"}))
      ->capture_default_str();
  cmd->add_option("--island-policy", in.island_policy, "Units without neighbours")
      ->check(CLI::IsMember({"error", "drop"}))
      ->capture_default_str();
}

void add_input_flags(CLI::App* cmd, InputFlags& in) {
  cmd->add_option("compositions", in.compositions, "Compositions CSV (id,part,...)")
      ->required()
      ->check(CLI::ExistingFile);
  add_weights_flags(cmd, in);
  cmd->add_option("--zero-replace", in.zero_replace, "Zero handling")
      ->check(CLI::IsMember({"off", "multiplicative"}))
      ->capture_default_str();
  cmd->add_option("--zero-delta", in.zero_delta, "Replacement as a fraction of the column minimum")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_output_flags(CLI::App* cmd, OutputFlags& out) {
  cmd->add_option("--out", out.out, "Output file (default stdout)");
  cmd->add_option("--format", out.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file(path, text);
  }
}

AnalysisRequest request_from(const InputFlags& in) {
  AnalysisRequest req;
  req.compositions_path = in.compositions;
  if (!in.edges.empty()) {
    req.weights_source = fs::path(in.edges);
  } else if (in.rows > 0) {
    req.weights_source = LatticeSpec{in.rows, in.cols};
  } else {
    throw Error(ErrorKind::InvalidArgument, "give either --rows/--cols or --edges");
  }
  req.contiguity = parse_contiguity(in.contiguity);
  req.zeros.enabled = in.zero_replace == "multiplicative";
  req.zeros.delta = in.zero_delta;
  req.island_policy = in.island_policy == "drop" ? IslandPolicy::drop_unit : IslandPolicy::error;
  return req;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::string report_csv(const ReyesReport& r) {
  std::ostringstream out;
  out << "label,n,parts,I_a,upper_bound,E_R,var_R,p_pos,p_neg,p_two,se,B,seed\n";
  out << r.label << ',' << r.statistic.n << ',' << r.statistic.parts << ',' << format_double(r.statistic.value)
      << ',' << format_double(r.statistic.upper_bound) << ',' << format_double(r.statistic.e_r) << ','
      << csv_optional(r.statistic.var_r) << ',' << format_double(r.p_values.p_pos) << ','
      << format_double(r.p_values.p_neg) << ',' << format_double(r.p_values.p_two) << ','
      << csv_optional(r.p_values.se) << ',' << r.provenance.permutations << ',' << r.provenance.seed << '\n';
  return out.str();
}

std::vector<nlohmann::json> read_json_files(const std::vector<std::string>& paths) {
  std::vector<nlohmann::json> docs;
  for (const auto& p : paths) {
    try {
      docs.push_back(nlohmann::json::parse(read_file(p)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::InvalidArgument, p + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial autocorrelation for compositional data on areal units"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::uint64_t permutations = 10000;
  double alpha = 0.05;
  unsigned workers = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    cmd->add_option("--permutations,-B", permutations, "Monte Carlo permutations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  };

  // analyze
  InputFlags an_in;
  OutputFlags an_out;
  std::string label;
  auto* analyze_cmd = app.add_subcommand("analyze", "I_a with moments and a Monte Carlo permutation test");
  add_input_flags(analyze_cmd, an_in);
  add_output_flags(analyze_cmd, an_out);
  add_common(analyze_cmd);
  analyze_cmd->add_option("--label", label, "Label stored in the report (e.g. a day index)");

  // exact
  InputFlags ex_in;
  OutputFlags ex_out;
  std::size_t cap = kDefaultExactCap;
  auto* exact_cmd = app.add_subcommand("exact", "Full n! permutation distribution for small n");
  add_input_flags(exact_cmd, ex_in);
  add_output_flags(exact_cmd, ex_out);
  exact_cmd->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  exact_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  exact_cmd->add_option("--max-units", cap, "Largest n to enumerate (at most 12)")->capture_default_str();

  // simulate
  std::string config_path;
  std::string sim_out;
  std::string sim_format = "json";
  std::optional<std::size_t> replications;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a simulation scenario from a JSON config");
  simulate_cmd->add_option("--config", config_path, "Scenario config JSON")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", sim_out,
                           "Output directory for results.csv, timings.csv and summary.json");
  simulate_cmd->add_option("--format", sim_format, "Stdout format when --out is absent")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  simulate_cmd->add_option("--replications", replications, "Override the config's replications");
  auto* sim_seed = simulate_cmd->add_option("--seed", seed, "Override the config's master_seed");
  auto* sim_b = simulate_cmd->add_option("--permutations,-B", permutations, "Override the config's B");
  auto* sim_alpha = simulate_cmd->add_option("--alpha", alpha, "Override the config's alpha");
  simulate_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  // weights
  InputFlags w_in;
  OutputFlags w_out;
  std::string ids_from;
  bool binary = false;
  auto* weights_cmd = app.add_subcommand("weights", "Build and print spatial weights");
  add_weights_flags(weights_cmd, w_in);
  add_output_flags(weights_cmd, w_out);
  weights_cmd->add_option("--ids-from", ids_from, "Compositions CSV supplying unit ids for --edges")
      ->check(CLI::ExistingFile);
  weights_cmd->add_flag("--binary", binary, "Skip row standardization");

  // plot-data
  std::string kind = "daily";
  std::vector<std::string> inputs;
  std::string timings_path;
  std::string pd_out;
  std::string schema_path;
  auto* plot_cmd = app.add_subcommand("plot-data", "Tidy CSV series from reports or scenario outputs");
  plot_cmd->add_option("--kind", kind, "daily: analyze reports; scenario: results CSV; rejection: summaries")
      ->check(CLI::IsMember({"daily", "scenario", "rejection"}))
      ->capture_default_str();
  plot_cmd->add_option("inputs", inputs, "Input files")->check(CLI::ExistingFile);
  plot_cmd->add_option("--timings", timings_path, "timings.csv for --kind scenario")->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", pd_out, "Output CSV (default stdout)");
  plot_cmd->add_option("--schema", schema_path, "Schema JSON path (default <out>.schema.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze_cmd) {
      AnalysisRequest req = request_from(an_in);
      req.permutations = permutations;
      req.seed = seed;
      req.alpha = alpha;
      req.workers = workers;
      req.label = label;
      const ReyesReport report = analyze(req);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      emit(an_out.out, an_out.format == "json" ? dump(to_json(report, req)) : report_csv(report));
    } else if (*exact_cmd) {
      const PreparedInput input = prepare_input(request_from(ex_in));
      const ExactReport report = exact_analysis(input, alpha, cap, workers);
      if (ex_out.format == "json") {
        emit(ex_out.out, dump(to_json(report)));
      } else {
        std::ostringstream out;
        out << "rank,I_a\n";
        for (std::size_t r = 0; r < report.distribution.values.size(); ++r) {
          out << r << ',' << format_double(report.distribution.values[r]) << '\n';
        }
        emit(ex_out.out, out.str());
      }
    } else if (*simulate_cmd) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_file(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, config_path + ": " + e.what());
      }
      if (*sim_seed) doc["master_seed"] = seed;
      if (*sim_b) doc["B"] = permutations;
      if (*sim_alpha) doc["alpha"] = alpha;
      if (replications) doc["replications"] = *replications;
      const ScenarioConfig config = scenario_config_from_json(doc);
      const ScenarioResult result = run_scenario(config, workers);
      if (!sim_out.empty()) {
        fs::create_directories(sim_out);
        std::ostringstream records, timings;
        write_scenario_records(records, result);
        write_scenario_timings(timings, result);
        write_file(fs::path(sim_out) / "results.csv", records.str());
        write_file(fs::path(sim_out) / "timings.csv", timings.str());
        write_file(fs::path(sim_out) / "summary.json", dump(scenario_summary_json(result)));
      } else if (sim_format == "json") {
        std::cout << dump(scenario_summary_json(result));
      } else {
        write_scenario_records(std::cout, result);
      }
    } else if (*weights_cmd) {
      SpatialWeights w = [&] {
        if (!w_in.edges.empty()) {
          const auto edges = read_edge_list(w_in.edges);
          std::vector<std::string> ids;
          if (!ids_from.empty()) {
            ids = read_compositions(ids_from).ids;
          } else {
            std::unordered_set<std::string> seen;
            for (const auto& [a, b] : edges) {
              if (seen.insert(a).second) ids.push_back(a);
              if (seen.insert(b).second) ids.push_back(b);
            }
          }
          return from_edge_list(edges, ids);
        }
        if (w_in.rows == 0) throw Error(ErrorKind::InvalidArgument, "give either --rows/--cols or --edges");
        return lattice_weights(w_in.rows, w_in.cols, parse_contiguity(w_in.contiguity));
      }();
      if (!binary) {
        w = row_standardize(w, w_in.island_policy == "drop" ? IslandPolicy::drop_unit : IslandPolicy::error);
      }
      if (w_out.format == "json") {
        nlohmann::json doc = weights_json(w);
        doc["standardized"] = w.standardized();
        if (!w.standardized()) doc.erase("s0");
        emit(w_out.out, dump(doc));
      } else {
        std::ostringstream out;
        write_weights_csv(out, w);
        emit(w_out.out, out.str());
      }
    } else if (*plot_cmd) {
      SeriesTable table;
      if (kind == "daily") {
        table = daily_series(read_json_files(inputs));
      } else if (kind == "rejection") {
        table = rejection_series(read_json_files(inputs));
      } else {
        if (inputs.size() > 1) throw Error(ErrorKind::InvalidArgument, "--kind scenario takes one results CSV");
        if (inputs.empty()) {
          table.columns = scenario_series(ScenarioResult{}).columns;
        } else {
          std::ifstream results(inputs.front(), std::ios::binary);
          std::optional<std::ifstream> timings;
          if (!timings_path.empty()) timings.emplace(timings_path, std::ios::binary);
          table = scenario_series(results, timings ? &*timings : nullptr);
        }
      }
      std::ostringstream out;
      write_csv(out, table);
      emit(pd_out, out.str());
      const std::string schema = !schema_path.empty() ? schema_path : (pd_out.empty() ? "" : pd_out + ".schema.json");
      if (!schema.empty()) write_file(schema, dump(schema_json(table, kind)));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

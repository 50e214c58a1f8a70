#include "reyes/analysis.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "reyes/errors.hpp"

namespace reyes {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json statistic_json(const ReyesStatistic& s) {
  nlohmann::json out = {{"I_a", s.value},
                        {"upper_bound", s.upper_bound},
                        {"E_R", s.e_r},
                        {"E_R2", optional_json(s.e_r2)},
                        {"var_R", optional_json(s.var_r)},
                        {"E_R2_printed_cross_term", optional_json(s.e_r2_printed)}};
  if (s.var_r && *s.var_r > 0.0) {
    out["z"] = (s.value - s.e_r) / std::sqrt(*s.var_r);
  } else {
    out["z"] = nullptr;
  }
  return out;
}

nlohmann::json p_values_json(const PValueReport& p) {
  return {{"p_pos", p.p_pos},
          {"p_neg", p.p_neg},
          {"p_two", p.p_two},
          {"se", optional_json(p.se)},
          {"correction", p.correction == Correction::raw ? "raw" : "plus_one"}};
}

nlohmann::json summary_json(const DistributionSummary& d) {
  nlohmann::json q = nlohmann::json::object();
  for (const auto& [p, v] : d.quantiles) q[format_double(p)] = v;
  return {{"mean", d.mean}, {"sd", d.sd}, {"min", d.min}, {"max", d.max}, {"quantiles", q}};
}

}  // namespace

PreparedInput prepare_input(const AnalysisRequest& request) {
  const std::string comp_bytes = read_file(request.compositions_path);
  std::istringstream comp_stream(comp_bytes);
  const CompositionTable table = parse_compositions(comp_stream, request.compositions_path.string());

  std::map<std::string, std::string> digests;
  digests["compositions"] = sha256_hex(comp_bytes);

  SpatialWeights raw_w = [&] {
    if (const auto* path = std::get_if<std::filesystem::path>(&request.weights_source)) {
      const std::string edge_bytes = read_file(*path);
      digests["edges"] = sha256_hex(edge_bytes);
      std::istringstream edge_stream(edge_bytes);
      const auto edges = parse_edge_list(edge_stream, path->string());
      return from_edge_list(edges, table.ids);
    }
    const auto& grid = std::get<LatticeSpec>(request.weights_source);
    if (grid.rows * grid.cols != table.ids.size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "lattice " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " has " +
                      std::to_string(grid.rows * grid.cols) + " units but the compositions have " +
                      std::to_string(table.ids.size()) + " rows");
    }
    return lattice_weights(grid.rows, grid.cols, request.contiguity).relabeled(table.ids);
  }();

  SpatialWeights w = row_standardize(raw_w, request.island_policy);
  CompositionSample full = to_sample(table, request.zeros);

  std::vector<std::string> dropped;
  if (w.n() != full.n()) {
    std::unordered_set<std::string> kept(w.unit_ids().begin(), w.unit_ids().end());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      if (kept.count(table.ids[i])) rows.push_back(i);
      else dropped.push_back(table.ids[i]);
    }
    full = full.subset(rows);
  }
  return {std::move(full), std::move(w), table.part_names, std::move(dropped), std::move(digests)};
}

std::optional<std::string> mean_sanity_warning(const DistributionSummary& summary, std::size_t n,
                                               std::uint64_t permutations) {
  const double expected = expected_value_randomization(n);
  const double gap = std::abs(summary.mean - expected);
  const double limit = 4.0 * summary.sd / std::sqrt(static_cast<double>(permutations));
  if (gap <= limit) return std::nullopt;
  return "permutation mean " + format_double(summary.mean) + " differs from E_R = " +
         format_double(expected) + " by more than 4 sd/sqrt(B) = " + format_double(limit);
}

ReyesReport analyze(const PreparedInput& input, const AnalysisRequest& request) {
  if (request.permutations < 1) throw Error(ErrorKind::InvalidArgument, "permutations must be >= 1");
  if (!(request.alpha > 0.0 && request.alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
  ReyesReport report;
  report.label = request.label;
  report.alpha = request.alpha;
  report.statistic = reyes_statistic(input.sample, input.weights);
  const auto dist = monte_carlo_distribution(input.sample, input.weights, request.permutations,
                                             request.seed, {TestStatistic::reyes, request.workers});
  report.p_values = p_values(dist);
  report.distribution = summarize(dist);
  report.critical = critical_values(dist, request.alpha);
  report.provenance = {request.seed, request.permutations, input.digests};
  report.part_names = input.part_names;
  report.dropped_units = input.dropped_units;
  if (auto warning = mean_sanity_warning(report.distribution, input.sample.n(), request.permutations)) {
    report.warnings.push_back(*warning);
  }
  return report;
}

ReyesReport analyze(const AnalysisRequest& request) { return analyze(prepare_input(request), request); }

nlohmann::json to_json(const ReyesReport& report, const AnalysisRequest& request) {
  nlohmann::json weights;
  if (const auto* path = std::get_if<std::filesystem::path>(&request.weights_source)) {
    weights = {{"type", "edges"}, {"path", path->filename().string()}};
  } else {
    const auto& grid = std::get<LatticeSpec>(request.weights_source);
    weights = {{"type", "lattice"},
               {"rows", grid.rows},
               {"cols", grid.cols},
               {"contiguity", to_string(request.contiguity)}};
  }
  nlohmann::json zeros = {{"enabled", request.zeros.enabled}};
  if (request.zeros.enabled) {
    zeros["policy"] = request.zeros.policy == DeltaPolicy::fixed ? "fixed" : "fraction_of_min";
    zeros["delta"] = request.zeros.delta;
  }

  nlohmann::json out;
  out["label"] = report.label;
  out["n"] = report.statistic.n;
  out["parts"] = report.statistic.parts;
  out["part_names"] = report.part_names;
  out["statistic"] = statistic_json(report.statistic);
  out["p_values"] = p_values_json(report.p_values);
  out["distribution"] = summary_json(report.distribution);
  out["critical_values"] = {{"alpha", report.alpha},
                            {"lower", report.critical.lower},
                            {"upper", report.critical.upper}};
  out["dropped_units"] = report.dropped_units;
  out["warnings"] = report.warnings;
  out["provenance"] = {{"seed", report.provenance.seed},
                       {"B", report.provenance.permutations},
                       {"weights", weights},
                       {"zero_replacement", zeros},
                       {"island_policy", request.island_policy == IslandPolicy::error ? "error" : "drop"},
                       {"digests", report.provenance.digests}};
  return out;
}

ExactReport exact_analysis(const PreparedInput& input, double alpha, std::size_t cap, unsigned workers) {
  ExactReport report;
  report.alpha = alpha;
  report.statistic = reyes_statistic(input.sample, input.weights);
  report.distribution = exact_distribution(input.sample, input.weights, cap, {TestStatistic::reyes, workers});
  report.p_values = p_values(report.distribution);
  report.summary = summarize(report.distribution);
  report.critical = critical_values(report.distribution, alpha);
  report.digests = input.digests;
  return report;
}

nlohmann::json to_json(const ExactReport& report) {
  nlohmann::json out;
  out["n"] = report.statistic.n;
  out["parts"] = report.statistic.parts;
  out["permutations"] = report.distribution.count;
  out["statistic"] = statistic_json(report.statistic);
  out["p_values"] = p_values_json(report.p_values);
  out["distribution"] = summary_json(report.summary);
  out["critical_values"] = {{"alpha", report.alpha},
                            {"lower", report.critical.lower},
                            {"upper", report.critical.upper}};
  out["provenance"] = {{"digests", report.digests}};
  return out;
}

}  // namespace reyes

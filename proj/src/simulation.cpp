#include "reyes/simulation.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <random>

#include <Eigen/Sparse>

#include "reyes/errors.hpp"
#include "reyes/inference.hpp"
#include "reyes/random.hpp"
#include "reyes/statistic.hpp"
#include "reyes/summation.hpp"

namespace reyes {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be square and nonempty");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::NotPositiveDefinite, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  }
  return llt.matrixL();
}

Eigen::MatrixXd standard_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  CounterStream stream(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(stream);
  }
  return z;
}

Eigen::MatrixXd make_covariance(const CovarianceSpec& spec) {
  const auto dim = static_cast<Eigen::Index>(spec.dim);
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "covariance dimension must be >= 1");
  Eigen::MatrixXd sigma;
  switch (spec.kind) {
    case CovarianceKind::identity:
      sigma = Eigen::MatrixXd::Identity(dim, dim);
      break;
    case CovarianceKind::exchangeable: {
      if (dim > 1) {
        const double lower = -1.0 / static_cast<double>(dim - 1);
        if (!(spec.rho1 > lower && spec.rho1 < 1.0)) {
          throw Error(ErrorKind::NotPositiveDefinite,
                      "exchangeable correlation must lie in (" + std::to_string(lower) + ", 1)");
        }
      }
      sigma = Eigen::MatrixXd::Constant(dim, dim, spec.rho1);
      sigma.diagonal().setOnes();
      break;
    }
    case CovarianceKind::wishart_toeplitz: {
      const std::size_t dof = spec.dof == 0 ? spec.dim + 2 : spec.dof;
      if (dof < spec.dim) {
        throw Error(ErrorKind::InvalidArgument, "Wishart degrees of freedom must be >= dimension");
      }
      Eigen::MatrixXd scale(dim, dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
          scale(i, j) = std::pow(spec.toeplitz_rho, static_cast<double>(std::abs(i - j)));
        }
      }
      const Eigen::MatrixXd l = cholesky_factor(scale);
      // Bartlett decomposition: A lower triangular, A_ii^2 ~ chi2(dof - i), A_ij ~ N(0,1).
      CounterStream stream(spec.seed, 0);
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        std::chi_squared_distribution<double> chi2(static_cast<double>(dof) - static_cast<double>(i));
        a(i, i) = std::sqrt(chi2(stream));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(stream);
      }
      const Eigen::MatrixXd la = l * a;
      sigma = (la * la.transpose()) / static_cast<double>(dof);
      sigma = 0.5 * (sigma + sigma.transpose());
      break;
    }
  }
  cholesky_factor(sigma);
  return sigma;
}

CompositionSample logistic_normal_sample(std::size_t n, std::size_t parts, const Eigen::MatrixXd& sigma,
                                         const ContrastMatrix& psi, std::uint64_t seed) {
  if (psi.parts() != parts || static_cast<std::size_t>(sigma.rows()) + 1 != parts) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be (D-1) x (D-1) for D parts");
  }
  const Eigen::MatrixXd l = cholesky_factor(sigma);
  const Eigen::MatrixXd coords = standard_normal_matrix(n, parts - 1, seed) * l.transpose();
  return CompositionSample::from_ilr(coords, psi);
}

CompositionSample sar_sample(const SpatialWeights& w, double rho, const Eigen::MatrixXd& sigma,
                             const ContrastMatrix& psi, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorKind::InvalidArgument, "SAR rho must satisfy |rho| < 1");
  if (!w.standardized()) throw Error(ErrorKind::NotStandardized, "SAR needs row-standardized weights");
  const std::size_t parts = psi.parts();
  if (static_cast<std::size_t>(sigma.rows()) + 1 != parts) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be (D-1) x (D-1) for D parts");
  }
  const Eigen::MatrixXd l = cholesky_factor(sigma);
  const Eigen::MatrixXd e = standard_normal_matrix(w.n(), parts - 1, seed) * l.transpose();

  const auto n = static_cast<Eigen::Index>(w.n());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(w.nnz() + w.n());
  for (std::size_t i = 0; i < w.n(); ++i) {
    triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 1.0);
    for (const auto& nb : w.neighbors(i)) {
      triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nb.index),
                            -rho * nb.weight);
    }
  }
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(triplets.begin(), triplets.end());
  system.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "I - rho W is singular");
  const Eigen::MatrixXd y = lu.solve(e);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "SAR solve failed");
  const double residual = (system * y - e).cwiseAbs().maxCoeff();
  if (residual > kSarResidualTol) {
    throw Error(ErrorKind::SingularSystem, "SAR solve residual " + std::to_string(residual));
  }
  return CompositionSample::from_ilr(y, psi, w.unit_ids());
}

std::string to_string(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::identical: return "identical";
    case ScenarioCase::independent: return "independent";
    case ScenarioCase::sar: return "sar";
  }
  return "unknown";
}

std::string to_string(CovarianceKind k) {
  switch (k) {
    case CovarianceKind::identity: return "identity";
    case CovarianceKind::exchangeable: return "exchangeable";
    case CovarianceKind::wishart_toeplitz: return "wishart_toeplitz";
  }
  return "unknown";
}

void validate(const ScenarioConfig& config) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (config.rows < 2 || config.cols < 2) fail("grid needs at least 2 rows and 2 columns");
  if (config.parts < 2) fail("compositions need at least 2 parts");
  if (config.replications < 1) fail("replications must be >= 1");
  if (config.permutations < 1) fail("permutations must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (config.scenario == ScenarioCase::sar && !(std::abs(config.rho_sar) < 1.0)) {
    fail("rho_sar must lie in (-1, 1)");
  }
}

std::uint64_t replication_seed(const ScenarioConfig& config, SeedTag tag, std::size_t replication) {
  return derive_seed(config.master_seed, static_cast<std::uint64_t>(tag), replication);
}

namespace {

CovarianceSpec covariance_for(const ScenarioConfig& config, std::size_t replication) {
  CovarianceSpec spec = config.covariance;
  spec.dim = config.parts - 1;
  if (spec.kind == CovarianceKind::wishart_toeplitz) {
    spec.seed = replication_seed(config, SeedTag::covariance, replication);
  }
  return spec;
}

template <class Fn>
std::int64_t timed(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
}

StatisticAggregate aggregate(const std::vector<double>& values, const std::vector<double>& pvals,
                             double alpha) {
  StatisticAggregate out;
  CompensatedSum sum;
  for (double v : values) sum += v;
  const auto count = static_cast<double>(values.size());
  out.mean = sum.value() / count;
  CompensatedSum sq;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.sd = values.size() > 1 ? std::sqrt(sq.value() / (count - 1.0)) : 0.0;
  if (!pvals.empty()) {
    std::size_t rejected = 0;
    for (double p : pvals) rejected += p < alpha ? 1 : 0;
    out.rejection_rate = static_cast<double>(rejected) / static_cast<double>(pvals.size());
  }
  return out;
}

/// Runs `body(r)` for every replication in parallel and rethrows the first
/// failure (by replication index) afterwards.
template <class Body>
void for_each_replication(std::size_t count, unsigned workers, Body&& body) {
  std::vector<std::exception_ptr> failures(count);
  const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1u, workers))
  for (long long r = 0; r < total; ++r) {
    try {
      body(static_cast<std::size_t>(r));
    } catch (...) {
      failures[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void finish(ScenarioResult& result) {
  std::vector<double> reyes, moran, p_reyes, p_moran;
  for (const auto& rec : result.records) {
    reyes.push_back(rec.reyes);
    if (rec.moran_mean) moran.push_back(*rec.moran_mean);
    if (rec.p_reyes) p_reyes.push_back(*rec.p_reyes);
    if (rec.p_moran) p_moran.push_back(*rec.p_moran);
    if (std::abs(rec.reyes) > rec.bound + kBoundTol) result.bound_respected = false;
    if (std::abs(rec.reyes - rec.bound) <= kBoundTol) ++result.saturated;
  }
  result.reyes = aggregate(reyes, p_reyes, result.config.alpha);
  if (!moran.empty()) result.moran_mean = aggregate(moran, p_moran, result.config.alpha);
}

ScenarioResult run_with_sampler(const ScenarioConfig& config, unsigned workers,
                                const std::function<CompositionSample(const SpatialWeights&,
                                                                      const Eigen::MatrixXd&,
                                                                      const ContrastMatrix&,
                                                                      std::uint64_t)>& draw) {
  validate(config);
  const SpatialWeights w =
      row_standardize(lattice_weights(config.rows, config.cols, config.contiguity));
  const ContrastMatrix psi = contrast_matrix(config.parts);
  const bool shared_sigma = config.covariance.kind != CovarianceKind::wishart_toeplitz;
  const Eigen::MatrixXd fixed_sigma = shared_sigma ? make_covariance(covariance_for(config, 0))
                                                   : Eigen::MatrixXd();

  ScenarioResult result;
  result.config = config;
  result.records.resize(config.replications);
  for_each_replication(config.replications, workers, [&](std::size_t r) {
    const Eigen::MatrixXd sigma = shared_sigma ? fixed_sigma : make_covariance(covariance_for(config, r));
    const CompositionSample sample =
        draw(w, sigma, psi, replication_seed(config, SeedTag::data, r));
    const std::uint64_t perm_seed = replication_seed(config, SeedTag::permutation, r);

    ReplicationRecord& rec = result.records[r];
    rec.time_reyes_ns = timed([&] {
      const auto dist = monte_carlo_distribution(sample, w, config.permutations, perm_seed,
                                                 {TestStatistic::reyes, 1});
      rec.reyes = dist.observed;
      rec.p_reyes = p_values(dist).p_pos;
    });
    rec.time_moran_ns = timed([&] {
      const auto dist = monte_carlo_distribution(sample, w, config.permutations, perm_seed,
                                                 {TestStatistic::moran_mean, 1});
      rec.moran_mean = dist.observed;
      rec.p_moran = p_values(dist).p_pos;
    });
    rec.bound = upper_bound(sample, w);
  });
  finish(result);
  return result;
}

}  // namespace

ScenarioResult run_case1(const ScenarioConfig& config, unsigned workers) {
  if (config.scenario != ScenarioCase::identical) {
    throw Error(ErrorKind::InvalidArgument, "run_case1 needs the identical scenario");
  }
  validate(config);
  const SpatialWeights w =
      row_standardize(lattice_weights(config.rows, config.cols, config.contiguity));
  const ContrastMatrix psi = contrast_matrix(config.parts);
  const bool shared_sigma = config.covariance.kind != CovarianceKind::wishart_toeplitz;
  const Eigen::MatrixXd fixed_sigma = shared_sigma ? make_covariance(covariance_for(config, 0))
                                                   : Eigen::MatrixXd();

  ScenarioResult result;
  result.config = config;
  result.records.resize(config.replications);
  for_each_replication(config.replications, workers, [&](std::size_t r) {
    const Eigen::MatrixXd sigma = shared_sigma ? fixed_sigma : make_covariance(covariance_for(config, r));
    const CompositionSample one = logistic_normal_sample(
        1, config.parts, sigma, psi, replication_seed(config, SeedTag::data, r));
    Eigen::MatrixXd raw = one.raw().replicate(static_cast<Eigen::Index>(w.n()), 1);
    const CompositionSample sample(raw, {}, psi);

    ReplicationRecord& rec = result.records[r];
    rec.time_reyes_ns = timed([&] {
      const BoundedValue v = reyes_i_or_bound(sample, w);
      rec.reyes = v.value;
      rec.bound = v.upper_bound;
      rec.degenerate = v.degenerate;
    });
  });
  finish(result);
  return result;
}

ScenarioResult run_case2(const ScenarioConfig& config, unsigned workers) {
  if (config.scenario != ScenarioCase::independent) {
    throw Error(ErrorKind::InvalidArgument, "run_case2 needs the independent scenario");
  }
  return run_with_sampler(config, workers,
                          [&](const SpatialWeights& w, const Eigen::MatrixXd& sigma,
                              const ContrastMatrix& psi, std::uint64_t seed) {
                            return logistic_normal_sample(w.n(), config.parts, sigma, psi, seed);
                          });
}

ScenarioResult run_case3(const ScenarioConfig& config, unsigned workers) {
  if (config.scenario != ScenarioCase::sar) {
    throw Error(ErrorKind::InvalidArgument, "run_case3 needs the sar scenario");
  }
  return run_with_sampler(config, workers,
                          [&](const SpatialWeights& w, const Eigen::MatrixXd& sigma,
                              const ContrastMatrix& psi, std::uint64_t seed) {
                            return sar_sample(w, config.rho_sar, sigma, psi, seed);
                          });
}

ScenarioResult run_scenario(const ScenarioConfig& config, unsigned workers) {
  switch (config.scenario) {
    case ScenarioCase::identical: return run_case1(config, workers);
    case ScenarioCase::independent: return run_case2(config, workers);
    case ScenarioCase::sar: return run_case3(config, workers);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown scenario");
}

}  // namespace reyes

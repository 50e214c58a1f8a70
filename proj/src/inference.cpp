#include "reyes/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reyes/errors.hpp"
#include "reyes/random.hpp"
#include "reyes/summation.hpp"

namespace reyes {
namespace {

// Above this many units the n x n Gram cache is not worth its memory.
constexpr std::size_t kGramLimit = 2048;
constexpr std::size_t kMaxExactUnits = 12;

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

template <class Kernel>
std::vector<double> enumerate_all(const Kernel& kernel, unsigned workers) {
  const std::size_t n = kernel.n();
  const std::uint64_t total = factorial(n);
  std::vector<double> values(total);
  const std::uint64_t chunks = std::min<std::uint64_t>(total, std::max(1u, workers) * 8ull);
  const std::uint64_t per_chunk = (total + chunks - 1) / chunks;
  const auto chunk_count = static_cast<long long>((total + per_chunk - 1) / per_chunk);

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1u, workers))
  for (long long c = 0; c < chunk_count; ++c) {
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * per_chunk;
    const std::uint64_t end = std::min(total, begin + per_chunk);
    std::vector<std::uint32_t> perm = permutation_of_rank(n, begin);
    for (std::uint64_t r = begin; r < end; ++r) {
      values[r] = kernel.evaluate(perm);
      std::next_permutation(perm.begin(), perm.end());
    }
  }
  return values;
}

template <class Kernel>
std::vector<double> sample_relabelings(const Kernel& kernel, std::uint64_t permutations,
                                       std::uint64_t seed, unsigned workers) {
  const std::size_t n = kernel.n();
  std::vector<double> values(permutations);
  const auto count = static_cast<long long>(permutations);

#pragma omp parallel num_threads(std::max(1u, workers))
  {
    std::vector<std::uint32_t> perm(n);
#pragma omp for schedule(static)
    for (long long b = 0; b < count; ++b) {
      random_permutation(seed, static_cast<std::uint64_t>(b), perm);
      values[static_cast<std::size_t>(b)] = kernel.evaluate(perm);
    }
  }
  return values;
}

std::vector<std::uint32_t> identity(std::size_t n) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  return perm;
}

template <class Kernel>
PermutationDistribution build_exact(const Kernel& kernel, unsigned workers) {
  PermutationDistribution dist;
  dist.mode = DistributionMode::exact;
  dist.observed = kernel.evaluate(identity(kernel.n()));
  dist.values = enumerate_all(kernel, workers);
  dist.count = dist.values.size();
  return dist;
}

template <class Kernel>
PermutationDistribution build_monte_carlo(const Kernel& kernel, std::uint64_t permutations,
                                          std::uint64_t seed, unsigned workers) {
  PermutationDistribution dist;
  dist.mode = DistributionMode::monte_carlo;
  dist.seed = seed;
  dist.observed = kernel.evaluate(identity(kernel.n()));
  dist.values = sample_relabelings(kernel, permutations, seed, workers);
  dist.count = dist.values.size();
  return dist;
}

}  // namespace

ReyesKernel::ReyesKernel(const CompositionSample& sample, const SpatialWeights& w) : w_(w) {
  require_compatible(w, sample.n());
  CenteredSample c = prepare_centered(sample);
  if (c.degenerate) {
    throw Error(ErrorKind::DegenerateSample, "all compositions coincide after centering");
  }
  coords_ = std::move(c.coords);
  scale_ = static_cast<double>(sample.n()) / (w.total() * c.sum_sq);
  if (sample.n() <= kGramLimit) gram_ = coords_ * coords_.transpose();
}

double ReyesKernel::evaluate(std::span<const std::uint32_t> perm) const {
  double num = 0.0;
  if (gram_.size() > 0) {
    for (std::size_t i = 0; i < w_.n(); ++i) {
      const auto col = gram_.col(perm[i]);
      double row = 0.0;
      for (const auto& nb : w_.neighbors(i)) row += nb.weight * col[perm[nb.index]];
      num += row;
    }
  } else {
    const auto dims = coords_.cols();
    std::vector<double> lag(static_cast<std::size_t>(dims));
    for (std::size_t i = 0; i < w_.n(); ++i) {
      std::fill(lag.begin(), lag.end(), 0.0);
      for (const auto& nb : w_.neighbors(i)) {
        const auto src = coords_.row(perm[nb.index]);
        for (Eigen::Index d = 0; d < dims; ++d) lag[static_cast<std::size_t>(d)] += nb.weight * src[d];
      }
      const auto own = coords_.row(perm[i]);
      for (Eigen::Index d = 0; d < dims; ++d) num += own[d] * lag[static_cast<std::size_t>(d)];
    }
  }
  return num * scale_;
}

MoranMeanKernel::MoranMeanKernel(const CompositionSample& sample, const SpatialWeights& w) : w_(w) {
  require_compatible(w, sample.n());
  const Eigen::MatrixXd& x = sample.raw();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  deviations_ = (x.rowwise() - mean).transpose();
  scale_.resize(deviations_.rows());
  for (Eigen::Index j = 0; j < deviations_.rows(); ++j) {
    const double largest = deviations_.row(j).cwiseAbs().maxCoeff();
    const double magnitude = 1.0 + x.col(j).cwiseAbs().maxCoeff();
    if (largest <= 1e-12 * magnitude) {
      throw Error(ErrorKind::ConstantVector, "part " + std::to_string(j + 1) + " is constant");
    }
    scale_[j] = static_cast<double>(sample.n()) / (w.total() * deviations_.row(j).squaredNorm());
  }
}

double MoranMeanKernel::evaluate(std::span<const std::uint32_t> perm) const {
  const auto parts = static_cast<std::size_t>(deviations_.rows());
  std::vector<double> num(parts, 0.0);
  std::vector<double> lag(parts);
  for (std::size_t i = 0; i < w_.n(); ++i) {
    std::fill(lag.begin(), lag.end(), 0.0);
    for (const auto& nb : w_.neighbors(i)) {
      const double* src = deviations_.col(perm[nb.index]).data();
      for (std::size_t j = 0; j < parts; ++j) lag[j] += nb.weight * src[j];
    }
    const double* own = deviations_.col(perm[i]).data();
    for (std::size_t j = 0; j < parts; ++j) num[j] += own[j] * lag[j];
  }
  double total = 0.0;
  for (std::size_t j = 0; j < parts; ++j) total += num[j] * scale_[static_cast<Eigen::Index>(j)];
  return total / static_cast<double>(parts);
}

std::vector<std::uint32_t> permutation_of_rank(std::size_t n, std::uint64_t rank) {
  std::vector<std::uint32_t> pool = identity(n);
  std::vector<std::uint32_t> perm;
  perm.reserve(n);
  for (std::size_t k = n; k > 0; --k) {
    const std::uint64_t block = factorial(k - 1);
    const auto pick = static_cast<std::size_t>(rank / block);
    rank %= block;
    perm.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return perm;
}

void random_permutation(std::uint64_t seed, std::uint64_t index, std::span<std::uint32_t> perm) {
  std::iota(perm.begin(), perm.end(), 0u);
  CounterStream stream(seed, index);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::uint32_t j = stream.below(static_cast<std::uint32_t>(i));
    std::swap(perm[i - 1], perm[j]);
  }
}

PermutationDistribution exact_distribution(const CompositionSample& sample, const SpatialWeights& w,
                                           std::size_t cap, PermutationOptions options) {
  const std::size_t limit = std::min(cap, kMaxExactUnits);
  if (sample.n() > limit) {
    throw Error(ErrorKind::TooManyUnits, "exact enumeration of " + std::to_string(sample.n()) +
                                             "! relabelings exceeds the cap of " +
                                             std::to_string(limit) + " units");
  }
  if (options.statistic == TestStatistic::moran_mean) {
    return build_exact(MoranMeanKernel(sample, w), options.workers);
  }
  return build_exact(ReyesKernel(sample, w), options.workers);
}

PermutationDistribution monte_carlo_distribution(const CompositionSample& sample,
                                                 const SpatialWeights& w, std::uint64_t permutations,
                                                 std::uint64_t seed, PermutationOptions options) {
  if (permutations < 1) throw Error(ErrorKind::InvalidArgument, "need at least one permutation");
  if (options.statistic == TestStatistic::moran_mean) {
    return build_monte_carlo(MoranMeanKernel(sample, w), permutations, seed, options.workers);
  }
  return build_monte_carlo(ReyesKernel(sample, w), permutations, seed, options.workers);
}

PValueReport p_values(const PermutationDistribution& dist, Correction correction) {
  if (dist.values.empty()) throw Error(ErrorKind::EmptyDistribution, "no permutation values");
  std::uint64_t at_least = 0;
  std::uint64_t at_most = 0;
  // Arrangements related by a symmetry of W give the same value up to rounding.
  const double tol = kTieTolerance * std::max(1.0, std::abs(dist.observed));
  for (double v : dist.values) {
    if (v >= dist.observed - tol) ++at_least;
    if (v <= dist.observed + tol) ++at_most;
  }
  const auto b = static_cast<double>(dist.values.size());
  PValueReport out;
  out.correction = correction;
  if (correction == Correction::raw) {
    out.p_pos = static_cast<double>(at_least) / b;
    out.p_neg = static_cast<double>(at_most) / b;
  } else {
    out.p_pos = (static_cast<double>(at_least) + 1.0) / (b + 1.0);
    out.p_neg = (static_cast<double>(at_most) + 1.0) / (b + 1.0);
  }
  out.p_two = std::min(1.0, 2.0 * std::min(out.p_pos, out.p_neg));
  if (dist.mode == DistributionMode::monte_carlo) {
    out.se = std::sqrt(out.p_pos * (1.0 - out.p_pos) / b);
  }
  return out;
}

double nearest_rank_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyDistribution, "no values");
  const auto count = static_cast<double>(sorted.size());
  // The slack absorbs representation error in p * N (0.95 * 100 -> 95).
  auto rank = static_cast<std::size_t>(std::ceil(p * count - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

CriticalValues critical_values(const PermutationDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
  if (dist.values.empty()) throw Error(ErrorKind::EmptyDistribution, "no permutation values");
  std::vector<double> sorted = dist.values;
  std::sort(sorted.begin(), sorted.end());
  return {nearest_rank_quantile(sorted, alpha), nearest_rank_quantile(sorted, 1.0 - alpha)};
}

DistributionSummary summarize(const PermutationDistribution& dist) {
  if (dist.values.empty()) throw Error(ErrorKind::EmptyDistribution, "no permutation values");
  DistributionSummary out;
  CompensatedSum sum;
  for (double v : dist.values) sum += v;
  const auto count = static_cast<double>(dist.values.size());
  out.mean = sum.value() / count;
  CompensatedSum sq;
  for (double v : dist.values) sq += (v - out.mean) * (v - out.mean);
  const double dof = (dist.mode == DistributionMode::exact || dist.values.size() < 2) ? count : count - 1.0;
  out.sd = std::sqrt(sq.value() / dof);

  std::vector<double> sorted = dist.values;
  std::sort(sorted.begin(), sorted.end());
  out.min = sorted.front();
  out.max = sorted.back();
  for (double p : {0.01, 0.025, 0.05, 0.5, 0.95, 0.975, 0.99}) {
    out.quantiles.emplace_back(p, nearest_rank_quantile(sorted, p));
  }
  return out;
}

}  // namespace reyes

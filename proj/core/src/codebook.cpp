#include "lcd/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "lcd/error.hpp"

namespace lcd {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Uniform in [0, 1) from the raw engine output, identical on every platform.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_data(VectorsView data, std::size_t k) {
  if (data.dim == 0 || data.data.size() % data.dim != 0) {
    throw Error(ErrorCode::kDimMismatch, "training data is not a whole number of vectors");
  }
  if (k == 0) {
    throw Error(ErrorCode::kInvalidParams, "cluster count must be >= 1");
  }
  if (data.rows() < k) {
    throw Error(ErrorCode::kInsufficientData, "need at least " + std::to_string(k) +
                                                  " vectors, got " + std::to_string(data.rows()));
  }
  for (double v : data.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "training data is not finite");
  }
}

std::vector<double> kmeanspp_seed(VectorsView data, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.dim;
  std::vector<double> centers;
  centers.reserve(k * dim);
  auto first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  const auto r0 = data.row(first);
  centers.insert(centers.end(), r0.begin(), r0.end());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(data.row(i), r0);

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) {
      throw Error(ErrorCode::kInsufficientData,
                  "fewer than " + std::to_string(k) + " distinct vectors in training data");
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    const auto row = data.row(pick);
    centers.insert(centers.end(), row.begin(), row.end());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(data.row(i), row));
  }
  return centers;
}

// Returns true when any assignment changed.
bool assign_all(VectorsView data, const std::vector<double>& centers, std::vector<std::size_t>& assign,
                std::vector<double>& d2, double& objective) {
  bool changed = false;
  objective = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double best = 0.0;
    const std::size_t c = nearest_row(centers, data.dim, data.row(i), &best);
    if (c != assign[i]) {
      assign[i] = c;
      changed = true;
    }
    d2[i] = best;
    objective += best;
  }
  return changed;
}

}  // namespace

std::size_t nearest_row(std::span<const double> table, std::size_t dim, std::span<const double> x,
                        double* sq_dist) {
  const std::size_t count = table.size() / dim;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    const double d = squared_distance(x, table.subspan(c * dim, dim));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (sq_dist) *sq_dist = best_d;
  return best;
}

std::vector<double> pool_features(std::span<const LocalFeatureSet> sets, std::size_t* dim_out) {
  std::size_t dim = 0;
  std::size_t total = 0;
  for (const auto& s : sets) {
    if (s.empty()) continue;
    if (dim == 0) dim = s.dim();
    if (s.dim() != dim) {
      throw Error(ErrorCode::kDimMismatch, "feature sets disagree on dimension");
    }
    total += s.data().size();
  }
  std::vector<double> out;
  out.reserve(total);
  for (const auto& s : sets) out.insert(out.end(), s.data().begin(), s.data().end());
  if (dim_out) *dim_out = dim;
  return out;
}

std::vector<double> sample_rows(std::vector<double> rows, std::size_t dim, std::size_t limit,
                                std::uint64_t seed) {
  const std::size_t n = dim ? rows.size() / dim : 0;
  if (limit == 0 || n <= limit) return rows;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < limit; ++i) {
    const auto span = static_cast<double>(n - i);
    const std::size_t j = i + std::min(n - i - 1, static_cast<std::size_t>(uniform01(rng) * span));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  std::vector<double> out;
  out.reserve(limit * dim);
  for (std::size_t i : idx) {
    const auto first = rows.begin() + static_cast<std::ptrdiff_t>(i * dim);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(dim));
  }
  return out;
}

KMeansResult kmeans_fit(VectorsView data, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  check_data(data, k);
  const std::size_t n = data.rows();
  const std::size_t dim = data.dim;
  std::mt19937_64 rng(seed);

  KMeansResult result;
  std::vector<double> centers = kmeanspp_seed(data, k, rng);
  std::vector<std::size_t> assign(n, k);
  std::vector<double> d2(n);
  double objective = 0.0;
  assign_all(data, centers, assign, d2, objective);
  result.objective_history.push_back(objective);

  std::vector<std::size_t> counts(k);
  std::vector<double> sums(k * dim);
  while (result.iterations < max_iter) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[assign[i]];

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] > 1 && d2[i] > far_d) {
          far_d = d2[i];
          far = i;
        }
      }
      if (far == n) break;
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
      d2[far] = 0.0;
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      double* dst = sums.data() + assign[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] += row[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) centers[c * dim + j] = sums[c * dim + j] * inv;
    }
    ++result.iterations;

    const bool changed = assign_all(data, centers, assign, d2, objective);
    result.objective_history.push_back(objective);
    if (!changed) {
      result.converged = true;
      break;
    }
  }

  result.vocabulary.k = k;
  result.vocabulary.dim = dim;
  result.vocabulary.centroids = std::move(centers);
  return result;
}

namespace {

double variance_floor(VectorsView data) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.dim;
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += data.row(i)[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = data.row(i)[j] - mean[j];
      total += d * d;
    }
  }
  const double mean_var = total / static_cast<double>(n) / static_cast<double>(dim);
  return std::max(kVarianceFloorRatio * mean_var, std::numeric_limits<double>::min());
}

}  // namespace

GmmScorer::GmmScorer(const GmmModel& m) : model_(&m) {
  log_norm_.resize(m.k);
  inv_var_.resize(m.k * m.dim);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t c = 0; c < m.k; ++c) {
    double sum_log_var = 0.0;
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double v = m.variances[c * m.dim + j];
      sum_log_var += std::log(v);
      inv_var_[c * m.dim + j] = 1.0 / v;
    }
    log_norm_[c] = std::log(m.weights[c]) - 0.5 * (static_cast<double>(m.dim) * log2pi + sum_log_var);
  }
}

double GmmScorer::log_posteriors(std::span<const double> x, std::vector<double>& out) const {
  const GmmModel& m = *model_;
  out.resize(m.k);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < m.k; ++c) {
    double q = 0.0;
    const double* mu = m.means.data() + c * m.dim;
    const double* iv = inv_var_.data() + c * m.dim;
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double d = x[j] - mu[j];
      q += d * d * iv[j];
    }
    out[c] = log_norm_[c] - 0.5 * q;
    peak = std::max(peak, out[c]);
  }
  double sum = 0.0;
  for (double lp : out) sum += std::exp(lp - peak);
  const double log_px = peak + std::log(sum);
  for (double& lp : out) lp -= log_px;
  return log_px;
}

std::vector<double> posteriors(const GmmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw Error(ErrorCode::kDimMismatch, "GMM expects dim " + std::to_string(model.dim) + ", got " +
                                             std::to_string(x.size()));
  }
  std::vector<double> post;
  GmmScorer(model).log_posteriors(x, post);
  for (double& p : post) p = std::exp(p);
  return post;
}

double mean_log_likelihood(const GmmModel& model, VectorsView data) {
  if (data.dim != model.dim) {
    throw Error(ErrorCode::kDimMismatch, "GMM dimension differs from data");
  }
  const GmmScorer scorer(model);
  std::vector<double> scratch;
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    total += scorer.log_posteriors(data.row(i), scratch);
  }
  return total / static_cast<double>(data.rows());
}

GmmResult gmm_fit(VectorsView data, std::size_t k, std::uint64_t seed, std::size_t max_iter, double tol) {
  check_data(data, k);
  const std::size_t n = data.rows();
  const std::size_t dim = data.dim;
  const double floor = variance_floor(data);

  const KMeansResult init = kmeans_fit(data, k, seed, max_iter);
  GmmModel model;
  model.k = k;
  model.dim = dim;
  model.means = init.vocabulary.centroids;
  model.weights.assign(k, 0.0);
  model.variances.assign(k * dim, 0.0);
  {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      const std::size_t c = nearest_row(model.means, dim, row);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = row[j] - model.means[c * dim + j];
        model.variances[c * dim + j] += d * d;
      }
    }
    double wsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double cnt = static_cast<double>(std::max<std::size_t>(counts[c], 1));
      for (std::size_t j = 0; j < dim; ++j) {
        double& v = model.variances[c * dim + j];
        v = std::max(counts[c] ? v / cnt : floor, floor);
      }
      model.weights[c] = cnt;
      wsum += cnt;
    }
    for (double& w : model.weights) w /= wsum;
  }

  GmmResult result;
  std::vector<double> log_post;
  std::vector<double> nk(k);
  std::vector<double> sx(k * dim);
  std::vector<double> sxx(k * dim);
  const double min_mass = 1e-10 * static_cast<double>(n);

  while (true) {
    const GmmScorer scorer(model);
    std::fill(nk.begin(), nk.end(), 0.0);
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sxx.begin(), sxx.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      ll += scorer.log_posteriors(row, log_post);
      for (std::size_t c = 0; c < k; ++c) {
        const double g = std::exp(log_post[c]);
        if (g == 0.0) continue;
        nk[c] += g;
        double* px = sx.data() + c * dim;
        double* pxx = sxx.data() + c * dim;
        for (std::size_t j = 0; j < dim; ++j) {
          px[j] += g * row[j];
          pxx[j] += g * row[j] * row[j];
        }
      }
    }
    ll /= static_cast<double>(n);
    if (!std::isfinite(ll)) {
      throw Error(ErrorCode::kNumericalFailure, "GMM log-likelihood is not finite");
    }
    const bool have_prev = !result.log_likelihood_history.empty();
    const double prev = have_prev ? result.log_likelihood_history.back() : 0.0;
    result.log_likelihood_history.push_back(ll);
    if (have_prev && (ll - prev) < tol * std::abs(prev)) {
      result.converged = true;
      break;
    }
    if (result.iterations >= max_iter) break;

    double wsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (nk[c] > min_mass) {
        const double inv = 1.0 / nk[c];
        for (std::size_t j = 0; j < dim; ++j) {
          const double mu = sx[c * dim + j] * inv;
          model.means[c * dim + j] = mu;
          model.variances[c * dim + j] = std::max(sxx[c * dim + j] * inv - mu * mu, floor);
        }
      }
      model.weights[c] = std::max(nk[c], min_mass);
      wsum += model.weights[c];
    }
    for (double& w : model.weights) w /= wsum;
    ++result.iterations;
  }
  result.model = std::move(model);
  return result;
}

}  // namespace lcd

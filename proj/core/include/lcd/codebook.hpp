#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lcd/local_features.hpp"

namespace lcd {

/// Read-only row-major view over a set of equal-length vectors.
struct VectorsView {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t rows() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const noexcept {
    return data.subspan(i * dim, dim);
  }
};

/// Concatenates the rows of several feature sets. Throws DimMismatch when
/// non-empty sets disagree on dimension.
std::vector<double> pool_features(std::span<const LocalFeatureSet> sets, std::size_t* dim_out);

/// At most `limit` rows drawn uniformly without replacement using the seed,
/// kept in their original order. limit == 0 keeps everything.
std::vector<double> sample_rows(std::vector<double> rows, std::size_t dim, std::size_t limit,
                                std::uint64_t seed);

struct Vocabulary {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim, row-major

  std::span<const double> centroid(std::size_t i) const noexcept {
    return {centroids.data() + i * dim, dim};
  }
};

struct GmmModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> weights;    // k, sum to 1
  std::vector<double> means;      // k x dim
  std::vector<double> variances;  // k x dim, diagonal

  std::span<const double> mean(std::size_t i) const noexcept {
    return {means.data() + i * dim, dim};
  }
  std::span<const double> variance(std::size_t i) const noexcept {
    return {variances.data() + i * dim, dim};
  }
};

inline constexpr std::size_t kDefaultVocabularySize = 1024;
inline constexpr std::size_t kDefaultGmmComponents = 256;
inline constexpr std::size_t kDefaultPcaDim = 80;

/// Relative to the mean per-dimension data variance.
inline constexpr double kVarianceFloorRatio = 1e-4;

struct KMeansResult {
  Vocabulary vocabulary;
  std::vector<double> objective_history;  // sum of squared distances, per assignment step
  std::size_t iterations = 0;
  bool converged = false;
};

/// k-means++ seeding then Lloyd iterations until the assignment is a fixpoint
/// or max_iter updates. Empty clusters take the point farthest from its
/// centroid. Ties go to the lowest centroid index.
KMeansResult kmeans_fit(VectorsView data, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter = 100);

struct GmmResult {
  GmmModel model;
  std::vector<double> log_likelihood_history;  // mean per-point log-likelihood
  std::size_t iterations = 0;
  bool converged = false;
};

/// Diagonal-covariance EM initialized from kmeans_fit. Stops when the relative
/// log-likelihood gain drops below tol or after max_iter M-steps.
GmmResult gmm_fit(VectorsView data, std::size_t k, std::uint64_t seed,
                  std::size_t max_iter = 100, double tol = 1e-6);

/// GMM with per-component normalizers precomputed for repeated evaluation.
class GmmScorer {
 public:
  explicit GmmScorer(const GmmModel& model);

  /// Writes normalized log responsibilities for x and returns log p(x).
  double log_posteriors(std::span<const double> x, std::vector<double>& out) const;

  const GmmModel& model() const noexcept { return *model_; }

 private:
  const GmmModel* model_;
  std::vector<double> log_norm_;  // log w - 0.5 (d log 2pi + sum log var)
  std::vector<double> inv_var_;   // k x dim
};

/// Component responsibilities for x, normalized in the log domain.
std::vector<double> posteriors(const GmmModel& model, std::span<const double> x);

/// Mean per-point log-likelihood of data under the model.
double mean_log_likelihood(const GmmModel& model, VectorsView data);

/// Index of the nearest row in a row-major (count x dim) table; ties go to the
/// lowest index.
std::size_t nearest_row(std::span<const double> table, std::size_t dim,
                        std::span<const double> x, double* sq_dist = nullptr);

}  // namespace lcd

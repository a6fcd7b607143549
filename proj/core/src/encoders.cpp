#include "lcd/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lcd/error.hpp"

namespace lcd {

namespace {

void check_dim(const LocalFeatureSet& features, std::size_t expected, const char* what) {
  if (!features.empty() && features.dim() != expected) {
    throw Error(ErrorCode::kDimMismatch, std::string(what) + " expects dim " +
                                             std::to_string(expected) + ", features have " +
                                             std::to_string(features.dim()));
  }
}

// Accumulation visits features in lexicographic order of their values so the
// result does not depend on extraction order.
std::vector<std::size_t> canonical_order(const LocalFeatureSet& features) {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = features.row(a);
    const auto rb = features.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

}  // namespace

Descriptor encode_bovw(const LocalFeatureSet& features, const Vocabulary& vocab) {
  check_dim(features, vocab.dim, "vocabulary");
  Descriptor d;
  d.source = "bovw";
  d.values.assign(vocab.k, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    d.values[nearest_row(vocab.centroids, vocab.dim, features.row(i))] += 1.0;
  }
  l2_normalize_in_place(d.values);
  return d;
}

Descriptor encode_vlad(const LocalFeatureSet& features, const GmmModel& model,
                       const EncoderOptions& options) {
  check_dim(features, model.dim, "GMM");
  const std::size_t dim = model.dim;
  Descriptor d;
  d.source = "vlad";
  d.values.assign(model.k * dim, 0.0);
  for (std::size_t i : canonical_order(features)) {
    const auto x = features.row(i);
    const std::size_t c = nearest_row(model.means, dim, x);
    double* block = d.values.data() + c * dim;
    const auto mu = model.mean(c);
    for (std::size_t j = 0; j < dim; ++j) block[j] += x[j] - mu[j];
  }
  if (options.vlad_intra_normalize) {
    for (std::size_t c = 0; c < model.k; ++c) {
      l2_normalize_in_place(std::span<double>(d.values).subspan(c * dim, dim));
    }
  }
  l2_normalize_in_place(d.values);
  return d;
}

Descriptor encode_fv(const LocalFeatureSet& features, const GmmModel& model,
                     const EncoderOptions& options) {
  if (features.empty()) {
    throw Error(ErrorCode::kEmptyFeatureSet, "Fisher vector needs at least one feature");
  }
  check_dim(features, model.dim, "GMM");
  const std::size_t k = model.k;
  const std::size_t dim = model.dim;
  Descriptor d;
  d.source = "fv";
  d.values.assign(2 * k * dim, 0.0);
  double* mean_part = d.values.data();
  double* var_part = d.values.data() + k * dim;

  std::vector<double> inv_sigma(k * dim);
  for (std::size_t i = 0; i < k * dim; ++i) inv_sigma[i] = 1.0 / std::sqrt(model.variances[i]);

  const GmmScorer scorer(model);
  std::vector<double> gamma;
  for (std::size_t i : canonical_order(features)) {
    const auto x = features.row(i);
    scorer.log_posteriors(x, gamma);
    for (std::size_t c = 0; c < k; ++c) {
      const double g = std::exp(gamma[c]);
      if (g == 0.0) continue;
      const auto mu = model.mean(c);
      for (std::size_t j = 0; j < dim; ++j) {
        const double z = (x[j] - mu[j]) * inv_sigma[c * dim + j];
        mean_part[c * dim + j] += g * z;
        var_part[c * dim + j] += g * (z * z - 1.0);
      }
    }
  }

  const auto n = static_cast<double>(features.size());
  for (std::size_t c = 0; c < k; ++c) {
    const double su = 1.0 / (n * std::sqrt(model.weights[c]));
    const double sv = 1.0 / (n * std::sqrt(2.0 * model.weights[c]));
    for (std::size_t j = 0; j < dim; ++j) {
      mean_part[c * dim + j] *= su;
      var_part[c * dim + j] *= sv;
    }
  }
  if (options.fv_power_normalize) {
    for (double& v : d.values) v = std::copysign(std::sqrt(std::abs(v)), v);
  }
  l2_normalize_in_place(d.values);
  return d;
}

}  // namespace lcd

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lcd/image.hpp"

namespace lcd {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Local descriptors for one image, stored row-major (count x dim).
class LocalFeatureSet {
 public:
  LocalFeatureSet() = default;
  explicit LocalFeatureSet(std::size_t dim) : dim_(dim) {}

  /// Throws DimMismatch when values.size() != dim().
  void add(std::span<const double> values, Position where = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  const Position& position(std::size_t i) const noexcept { return positions_[i]; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<Position> positions_;
};

struct DenseParams {
  std::size_t step = 8;   // grid spacing in pixels
  std::size_t patch = 16; // square patch side, split into 4x4 cells
};

inline constexpr std::size_t kSpatialBins = 4;
inline constexpr std::size_t kOrientationBins = 8;
inline constexpr std::size_t kLocalDescriptorDim = kSpatialBins * kSpatialBins * kOrientationBins;

/// Number of grid points per axis for an extent: floor((extent - patch) / step) + 1.
std::size_t dense_grid_count(std::size_t extent, const DenseParams& params);

/// Upright 128-d gradient histograms on a regular grid. Gradients are central
/// differences with replicated borders; votes are spread trilinearly over
/// (x, y, orientation). Each vector is l2-normalized, clipped at 0.2 and
/// renormalized; flat patches stay all-zero. Positions are patch centers.
LocalFeatureSet dense_descriptors(const GrayImage& img, const DenseParams& params = {});

struct PcaModel {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> mean;         // in_dim
  std::vector<double> basis;        // out_dim rows of in_dim, row-major
  std::vector<double> eigenvalues;  // out_dim, descending

  std::span<const double> basis_row(std::size_t r) const noexcept {
    return {basis.data() + r * in_dim, in_dim};
  }
};

/// Top out_dim principal axes of the pooled descriptors (population
/// covariance). Rows are sign-fixed so their first nonzero entry is positive.
PcaModel fit_pca(std::span<const LocalFeatureSet> training, std::size_t out_dim);

/// basis * (x - mean) for one vector.
std::vector<double> project(const PcaModel& model, std::span<const double> x);

LocalFeatureSet apply_pca(const PcaModel& model, const LocalFeatureSet& features);

}  // namespace lcd

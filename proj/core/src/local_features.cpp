#include "lcd/local_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "lcd/descriptor.hpp"
#include "lcd/error.hpp"

namespace lcd {

void LocalFeatureSet::add(std::span<const double> values, Position where) {
  if (values.size() != dim_) {
    throw Error(ErrorCode::kDimMismatch, "local descriptor has dim " + std::to_string(values.size()) +
                                             ", set expects " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  positions_.push_back(where);
}

std::size_t dense_grid_count(std::size_t extent, const DenseParams& params) {
  if (params.step == 0 || params.patch == 0 || extent < params.patch) return 0;
  return (extent - params.patch) / params.step + 1;
}

namespace {

constexpr double kClip = 0.2;

void normalize_sift(std::span<double> v) {
  l2_normalize_in_place(v);
  bool clipped = false;
  for (double& x : v) {
    if (x > kClip) {
      x = kClip;
      clipped = true;
    }
  }
  if (clipped) l2_normalize_in_place(v);
}

}  // namespace

LocalFeatureSet dense_descriptors(const GrayImage& img, const DenseParams& params) {
  if (params.step == 0) {
    throw Error(ErrorCode::kInvalidParams, "dense step must be >= 1");
  }
  if (params.patch < kSpatialBins) {
    throw Error(ErrorCode::kInvalidParams, "dense patch must be >= 4 pixels");
  }
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  if (params.patch > std::min(w, h)) {
    throw Error(ErrorCode::kImageTooSmall, "patch " + std::to_string(params.patch) +
                                               " larger than image " + std::to_string(w) + "x" +
                                               std::to_string(h));
  }

  std::vector<double> magnitude(w * h);
  std::vector<double> angle(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t ym = y == 0 ? 0 : y - 1;
    const std::size_t yp = std::min(y + 1, h - 1);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xm = x == 0 ? 0 : x - 1;
      const std::size_t xp = std::min(x + 1, w - 1);
      const double gx = 0.5 * (img.at(xp, y) - img.at(xm, y));
      const double gy = 0.5 * (img.at(x, yp) - img.at(x, ym));
      magnitude[y * w + x] = std::hypot(gx, gy);
      double a = std::atan2(gy, gx);
      if (a < 0.0) a += 2.0 * std::numbers::pi;
      angle[y * w + x] = a;
    }
  }

  const std::size_t nx = dense_grid_count(w, params);
  const std::size_t ny = dense_grid_count(h, params);
  const double cell = static_cast<double>(params.patch) / static_cast<double>(kSpatialBins);
  const double bin_width = 2.0 * std::numbers::pi / static_cast<double>(kOrientationBins);
  const auto last_cell = static_cast<long>(kSpatialBins) - 1;

  LocalFeatureSet out(kLocalDescriptorDim);
  std::vector<double> hist(kLocalDescriptorDim);
  for (std::size_t gy = 0; gy < ny; ++gy) {
    const std::size_t y0 = gy * params.step;
    for (std::size_t gx = 0; gx < nx; ++gx) {
      const std::size_t x0 = gx * params.step;
      std::fill(hist.begin(), hist.end(), 0.0);
      for (std::size_t py = 0; py < params.patch; ++py) {
        const double cv = (static_cast<double>(py) + 0.5) / cell - 0.5;
        const auto cy0 = static_cast<long>(std::floor(cv));
        const double fy = cv - static_cast<double>(cy0);
        for (std::size_t px = 0; px < params.patch; ++px) {
          const std::size_t idx = (y0 + py) * w + (x0 + px);
          const double mag = magnitude[idx];
          if (mag == 0.0) continue;
          const double cu = (static_cast<double>(px) + 0.5) / cell - 0.5;
          const auto cx0 = static_cast<long>(std::floor(cu));
          const double fx = cu - static_cast<double>(cx0);
          const double ob = angle[idx] / bin_width;
          const double of = std::floor(ob);
          const double fo = ob - of;
          const auto o0 = static_cast<std::size_t>(of) % kOrientationBins;
          const std::size_t o1 = (o0 + 1) % kOrientationBins;
          for (int dy = 0; dy < 2; ++dy) {
            const long cy = cy0 + dy;
            if (cy < 0 || cy > last_cell) continue;
            const double wy = dy == 0 ? 1.0 - fy : fy;
            for (int dx = 0; dx < 2; ++dx) {
              const long cx = cx0 + dx;
              if (cx < 0 || cx > last_cell) continue;
              const double wxy = wy * (dx == 0 ? 1.0 - fx : fx) * mag;
              const std::size_t base =
                  (static_cast<std::size_t>(cy) * kSpatialBins + static_cast<std::size_t>(cx)) *
                  kOrientationBins;
              hist[base + o0] += wxy * (1.0 - fo);
              hist[base + o1] += wxy * fo;
            }
          }
        }
      }
      normalize_sift(hist);
      const double half = static_cast<double>(params.patch) / 2.0;
      out.add(hist, {static_cast<double>(x0) + half, static_cast<double>(y0) + half});
    }
  }
  return out;
}

PcaModel fit_pca(std::span<const LocalFeatureSet> training, std::size_t out_dim) {
  std::size_t in_dim = 0;
  std::size_t count = 0;
  for (const auto& set : training) {
    if (set.empty()) continue;
    if (in_dim == 0) in_dim = set.dim();
    if (set.dim() != in_dim) {
      throw Error(ErrorCode::kDimMismatch, "training sets disagree on descriptor dimension");
    }
    count += set.size();
  }
  if (out_dim == 0) {
    throw Error(ErrorCode::kInvalidParams, "PCA output dimension must be >= 1");
  }
  if (count == 0 || count < out_dim) {
    throw Error(ErrorCode::kInsufficientData, "PCA needs at least " + std::to_string(out_dim) +
                                                  " descriptors, got " + std::to_string(count));
  }
  if (out_dim > in_dim) {
    throw Error(ErrorCode::kInvalidParams, "PCA output dimension " + std::to_string(out_dim) +
                                               " exceeds input dimension " + std::to_string(in_dim));
  }

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in_dim));
  for (const auto& set : training) {
    if (set.empty()) continue;
    Eigen::Map<const RowMatrix> rows(set.data().data(), static_cast<Eigen::Index>(set.size()),
                                     static_cast<Eigen::Index>(in_dim));
    mean += rows.colwise().sum().transpose();
  }
  mean /= static_cast<double>(count);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mean.size(), mean.size());
  for (const auto& set : training) {
    if (set.empty()) continue;
    Eigen::Map<const RowMatrix> rows(set.data().data(), static_cast<Eigen::Index>(set.size()),
                                     static_cast<Eigen::Index>(in_dim));
    const RowMatrix centered = rows.rowwise() - mean.transpose();
    cov.noalias() += centered.transpose() * centered;
  }
  cov /= static_cast<double>(count);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "covariance eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const auto n = values.size();
  const double largest = std::max(values(n - 1), 0.0);
  const double tol = largest * static_cast<double>(in_dim) * 1e-12;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values(i) > tol && largest > 0.0) ++rank;
  }
  if (rank < out_dim) {
    throw Error(ErrorCode::kDegenerateCovariance,
                "covariance rank " + std::to_string(rank) + " < requested " +
                    std::to_string(out_dim) + "; achievable output dimension is " +
                    std::to_string(rank));
  }

  PcaModel model;
  model.in_dim = in_dim;
  model.out_dim = out_dim;
  model.mean.assign(mean.data(), mean.data() + mean.size());
  model.basis.resize(out_dim * in_dim);
  model.eigenvalues.resize(out_dim);
  for (std::size_t r = 0; r < out_dim; ++r) {
    const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(r);
    Eigen::VectorXd v = vectors.col(col);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (std::abs(v(j)) > 1e-12) {
        if (v(j) < 0.0) v = -v;
        break;
      }
    }
    std::copy(v.data(), v.data() + v.size(), model.basis.begin() + static_cast<std::ptrdiff_t>(r * in_dim));
    model.eigenvalues[r] = values(col);
  }
  return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.in_dim) {
    throw Error(ErrorCode::kDimMismatch, "PCA expects dim " + std::to_string(model.in_dim) +
                                             ", got " + std::to_string(x.size()));
  }
  std::vector<double> out(model.out_dim, 0.0);
  for (std::size_t r = 0; r < model.out_dim; ++r) {
    const auto row = model.basis_row(r);
    double acc = 0.0;
    for (std::size_t j = 0; j < model.in_dim; ++j) acc += row[j] * (x[j] - model.mean[j]);
    out[r] = acc;
  }
  return out;
}

LocalFeatureSet apply_pca(const PcaModel& model, const LocalFeatureSet& features) {
  if (features.dim() != model.in_dim) {
    throw Error(ErrorCode::kDimMismatch, "PCA expects dim " + std::to_string(model.in_dim) +
                                             ", features have " + std::to_string(features.dim()));
  }
  LocalFeatureSet out(model.out_dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.add(project(model, features.row(i)), features.position(i));
  }
  return out;
}

}  // namespace lcd

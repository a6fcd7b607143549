#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "lcd/descriptor.hpp"
#include "lcd/image.hpp"

namespace lcd {

struct GistParams {
  std::size_t scales = 4;
  std::size_t orientations_per_scale = 8;
  std::size_t grid = 4;              // blocks per side
  std::size_t canonical_size = 256;  // square working resolution

  std::size_t filter_count() const noexcept { return scales * orientations_per_scale; }
  std::size_t dimension() const noexcept { return filter_count() * grid * grid; }

  /// Throws InvalidParams when a count is zero or the grid does not fit.
  void validate() const;
};

namespace detail {
struct FftPlans;
}

/// Frequency-domain Gabor filters, one per (scale, orientation), stored in
/// unshifted FFT layout (DC at index 0) and canonical_size x canonical_size.
/// Immutable once built; safe to share between threads.
class GaborBank {
 public:
  std::size_t scales() const noexcept { return scales_; }
  std::size_t orientations_per_scale() const noexcept { return orientations_; }
  std::size_t canonical_size() const noexcept { return size_; }
  std::size_t size() const noexcept { return filters_.size(); }

  /// Filter for (scale, orientation) = (i / orientations, i % orientations).
  const std::vector<double>& filter(std::size_t i) const { return filters_.at(i); }

 private:
  friend GaborBank build_gabor_bank(const GistParams& params);
  friend std::vector<double> gist_responses(const GrayImage&, const GaborBank&,
                                            const GistParams&);

  std::size_t scales_ = 0;
  std::size_t orientations_ = 0;
  std::size_t size_ = 0;
  std::vector<std::vector<double>> filters_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

/// Orientations within a scale rotate one radial profile by pi/orientations.
/// Scale s peaks at 0.3 / 1.85^s cycles per pixel. The DC term is zero.
GaborBank build_gabor_bank(const GistParams& params);

/// Pooled filter magnitudes before normalization: for each filter (scale-major),
/// grid x grid block means ordered column by column.
std::vector<double> gist_responses(const GrayImage& img, const GaborBank& bank,
                                   const GistParams& params);

/// Pooled responses below this magnitude are treated as an exactly-zero
/// descriptor (a flat input carries no texture).
inline constexpr double kGistZeroResponse = 1e-6;

/// Resize, prewhiten, filter, pool and l2-normalize. source = "gist".
Descriptor compute_gist(const GrayImage& img, const GaborBank& bank, const GistParams& params);

}  // namespace lcd

#pragma once

#include <span>
#include <string>
#include <vector>

namespace lcd {

/// One whole-image feature vector, the unit of matching.
struct Descriptor {
  std::vector<double> values;
  std::string source;    // "gist", "bovw", "fv", "vlad", or a CNN layer name
  std::string image_id;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Divides every component by the vector's l2 norm. The all-zero vector is
/// returned unchanged. Throws NonFiniteInput on NaN/Inf components.
Descriptor l2_normalize(Descriptor d);

/// In-place form used by the encoders.
void l2_normalize_in_place(std::span<double> values);

double l2_norm(std::span<const double> values);

}  // namespace lcd

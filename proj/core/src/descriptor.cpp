#include "lcd/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "lcd/error.hpp"

namespace lcd {

double l2_norm(std::span<const double> values) {
  // Scaled accumulation keeps huge activations from overflowing.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : values) {
    const double s = v / scale;
    sum += s * s;
  }
  return scale * std::sqrt(sum);
}

void l2_normalize_in_place(std::span<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteInput, "descriptor contains a non-finite value");
    }
  }
  const double norm = l2_norm(values);
  if (norm == 0.0) return;
  for (double& v : values) v /= norm;
}

Descriptor l2_normalize(Descriptor d) {
  l2_normalize_in_place(d.values);
  return d;
}

}  // namespace lcd

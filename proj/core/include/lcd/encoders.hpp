#pragma once

#include "lcd/codebook.hpp"
#include "lcd/descriptor.hpp"
#include "lcd/local_features.hpp"

namespace lcd {

struct EncoderOptions {
  bool fv_power_normalize = true;    // sign(z) |z|^0.5 before the final l2 step
  bool vlad_intra_normalize = true;  // per-component l2 before the final l2 step
};

/// Hard-assignment word histogram (ties to the lowest word), l2-normalized.
/// Dimension vocab.k.
Descriptor encode_bovw(const LocalFeatureSet& features, const Vocabulary& vocab);

/// Residuals to the nearest GMM mean summed per component. Layout: k blocks
/// of dim. Dimension k * dim.
Descriptor encode_vlad(const LocalFeatureSet& features, const GmmModel& model,
                       const EncoderOptions& options = {});

/// Improved Fisher vector: for component i, with gamma the posteriors and
/// z = (x - mu_i) / sigma_i,
///   u_i = 1 / (N sqrt(w_i))  * sum gamma_i z
///   v_i = 1 / (N sqrt(2 w_i)) * sum gamma_i (z^2 - 1)
/// Layout: all u blocks (k x dim) then all v blocks (k x dim). Dimension
/// 2 * k * dim. Throws EmptyFeatureSet for N == 0.
Descriptor encode_fv(const LocalFeatureSet& features, const GmmModel& model,
                     const EncoderOptions& options = {});

}  // namespace lcd

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "lcd/codebook.hpp"
#include "lcd/descriptor.hpp"
#include "lcd/encoders.hpp"
#include "lcd/gist.hpp"
#include "lcd/image.hpp"
#include "lcd/local_features.hpp"

namespace lcd {

enum class DescriptorKind { kGist, kBovw, kVlad, kFv };

std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name) noexcept;
std::string_view descriptor_name(DescriptorKind kind) noexcept;

struct PipelineConfig {
  GistParams gist;
  DenseParams dense;
  /// Longest image side before dense extraction; 0 keeps the input size.
  std::size_t local_image_size = 0;
  EncoderOptions encoder;
};

/// BoVW quantizes raw 128-d local descriptors; VLAD and FV quantize
/// PCA-projected ones when a PCA model is present.
struct PipelineModels {
  std::optional<Vocabulary> vocabulary;
  std::optional<GmmModel> gmm;
  std::optional<PcaModel> pca;
};

/// Dense local descriptors at the configured working resolution.
LocalFeatureSet extract_local(const GrayImage& img, const PipelineConfig& config);

/// One whole-image descriptor type bound to its parameters and models.
/// Immutable after construction; extract() is safe to call concurrently.
class Extractor {
 public:
  /// Throws ConfigError when a required model is missing and DimMismatch
  /// when models disagree on dimension.
  Extractor(DescriptorKind kind, PipelineConfig config, std::shared_ptr<const PipelineModels> models);

  DescriptorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return descriptor_name(kind_); }
  std::size_t dimension() const noexcept;

  Descriptor extract(const GrayImage& img, std::string image_id = {}) const;

 private:
  DescriptorKind kind_;
  PipelineConfig config_;
  std::shared_ptr<const PipelineModels> models_;
  std::optional<GaborBank> bank_;
};

}  // namespace lcd

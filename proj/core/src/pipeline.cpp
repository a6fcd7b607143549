#include "lcd/pipeline.hpp"

#include "lcd/error.hpp"

namespace lcd {

std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name) noexcept {
  if (name == "gist") return DescriptorKind::kGist;
  if (name == "bovw") return DescriptorKind::kBovw;
  if (name == "vlad") return DescriptorKind::kVlad;
  if (name == "fv") return DescriptorKind::kFv;
  return std::nullopt;
}

std::string_view descriptor_name(DescriptorKind kind) noexcept {
  switch (kind) {
    case DescriptorKind::kGist: return "gist";
    case DescriptorKind::kBovw: return "bovw";
    case DescriptorKind::kVlad: return "vlad";
    case DescriptorKind::kFv: return "fv";
  }
  return "unknown";
}

LocalFeatureSet extract_local(const GrayImage& img, const PipelineConfig& config) {
  return dense_descriptors(resize_longest_side(img, config.local_image_size), config.dense);
}

Extractor::Extractor(DescriptorKind kind, PipelineConfig config,
                     std::shared_ptr<const PipelineModels> models)
    : kind_(kind), config_(std::move(config)), models_(std::move(models)) {
  if (!models_) models_ = std::make_shared<const PipelineModels>();
  const auto need = [&](bool present, const char* what) {
    if (!present) {
      throw Error(ErrorCode::kConfig, std::string(descriptor_name(kind_)) + " needs a " + what);
    }
  };
  switch (kind_) {
    case DescriptorKind::kGist:
      bank_ = build_gabor_bank(config_.gist);
      break;
    case DescriptorKind::kBovw:
      need(models_->vocabulary.has_value(), "vocabulary");
      if (models_->vocabulary->dim != kLocalDescriptorDim) {
        throw Error(ErrorCode::kDimMismatch, "vocabulary must be 128-d, got " +
                                                 std::to_string(models_->vocabulary->dim));
      }
      break;
    case DescriptorKind::kVlad:
    case DescriptorKind::kFv: {
      need(models_->gmm.has_value(), "GMM");
      std::size_t local_dim = kLocalDescriptorDim;
      if (models_->pca) {
        if (models_->pca->in_dim != kLocalDescriptorDim) {
          throw Error(ErrorCode::kDimMismatch, "PCA model must take 128-d input");
        }
        local_dim = models_->pca->out_dim;
      }
      if (models_->gmm->dim != local_dim) {
        throw Error(ErrorCode::kDimMismatch, "GMM dim " + std::to_string(models_->gmm->dim) +
                                                 " does not match local descriptor dim " +
                                                 std::to_string(local_dim));
      }
      break;
    }
  }
}

std::size_t Extractor::dimension() const noexcept {
  switch (kind_) {
    case DescriptorKind::kGist: return config_.gist.dimension();
    case DescriptorKind::kBovw: return models_->vocabulary->k;
    case DescriptorKind::kVlad: return models_->gmm->k * models_->gmm->dim;
    case DescriptorKind::kFv: return 2 * models_->gmm->k * models_->gmm->dim;
  }
  return 0;
}

Descriptor Extractor::extract(const GrayImage& img, std::string image_id) const {
  Descriptor d;
  if (kind_ == DescriptorKind::kGist) {
    d = compute_gist(img, *bank_, config_.gist);
  } else {
    LocalFeatureSet local = extract_local(img, config_);
    if (kind_ == DescriptorKind::kBovw) {
      d = encode_bovw(local, *models_->vocabulary);
    } else {
      if (models_->pca) local = apply_pca(*models_->pca, local);
      d = kind_ == DescriptorKind::kVlad ? encode_vlad(local, *models_->gmm, config_.encoder)
                                         : encode_fv(local, *models_->gmm, config_.encoder);
    }
  }
  d.image_id = std::move(image_id);
  return d;
}

}  // namespace lcd

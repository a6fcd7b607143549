#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include "lcd/codebook.hpp"
#include "lcd/local_features.hpp"

namespace lcd {

// Model container layout, all little-endian:
//   "LCDM" | version u32 = 1 | kind u8 | payload
// kind 1 Vocabulary: k u64, dim u64, centroids f64[k*dim]
// kind 2 GmmModel:   k u64, dim u64, weights f64[k], means f64[k*dim],
//                    variances f64[k*dim]
// kind 3 PcaModel:   in_dim u64, out_dim u64, mean f64[in_dim],
//                    basis f64[out_dim*in_dim], eigenvalues f64[out_dim]
// Matrices are row-major. Trailing bytes are rejected.

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelKind : std::uint8_t { kVocabulary = 1, kGmm = 2, kPca = 3 };

using AnyModel = std::variant<Vocabulary, GmmModel, PcaModel>;

void save_model(const std::filesystem::path& path, const Vocabulary& model);
void save_model(const std::filesystem::path& path, const GmmModel& model);
void save_model(const std::filesystem::path& path, const PcaModel& model);

/// Throws IoError or FormatError.
AnyModel load_model(const std::filesystem::path& path);

Vocabulary load_vocabulary(const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace lcd

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcd/descriptor.hpp"
#include "lcd/local_features.hpp"

namespace lcd {

struct LayerSpec {
  std::string_view name;
  std::size_t dim;
};

/// Flattened activation sizes of the standard Caffe reference network.
inline constexpr std::array<LayerSpec, 11> kCnnLayers = {{
    {"CONV1", 290400},
    {"POOL1", 69984},
    {"CONV2", 186624},
    {"POOL2", 43264},
    {"CONV3", 64896},
    {"CONV4", 64896},
    {"CONV5", 43264},
    {"POOL5", 9216},
    {"FC6", 4096},
    {"FC7", 4096},
    {"FC8", 1000},
}};

/// Throws UnknownLayer for names outside kCnnLayers.
std::size_t expected_layer_dim(std::string_view name);

/// Like expected_layer_dim but returns nullopt for unknown names.
std::optional<std::size_t> find_layer_dim(std::string_view name) noexcept;

// LCDF layout, little-endian:
//   "LCDF" | version u32 = 1 | name_len u16 | name utf8 | id_len u16 | id utf8
//   | dim u64 | payload f32[dim]

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

/// Undecoded file contents.
struct FeatureRecord {
  std::string layer;
  std::string image_id;
  std::vector<float> values;
};

/// Raw values are stored as given. Throws IoError, NonFiniteInput, or
/// InvalidParams for names longer than 65535 bytes.
void write_feature_file(const std::filesystem::path& path, std::string_view layer,
                        std::string_view image_id, std::span<const float> values);
void write_feature_file(const std::filesystem::path& path, std::string_view layer,
                        std::string_view image_id, std::span<const double> values);

/// Parses and validates the container without normalizing. Throws IoError,
/// FormatError, or DimMismatch (payload length vs header, header vs Table I).
FeatureRecord read_feature_record(const std::filesystem::path& path);

/// read_feature_record followed by l2 normalization. source = layer name.
Descriptor read_feature_file(const std::filesystem::path& path);

/// Canonical file name inside a feature directory: "<image_id>.<layer>.lcdf",
/// with ':' and '/' replaced by '_'.
std::filesystem::path feature_file_name(std::string_view image_id, std::string_view layer);

/// Every *.lcdf file in dir whose layer equals `layer`, normalized and sorted
/// by image id. Throws IoError for a missing directory.
std::vector<Descriptor> read_feature_dir(const std::filesystem::path& dir, std::string_view layer);

/// Local descriptor sets travel in the same container: layer "local:<dim>",
/// payload count x dim row-major (positions are not stored).
std::string local_layer_name(std::size_t dim);
void write_local_features(const std::filesystem::path& path, std::string_view image_id,
                          const LocalFeatureSet& features);
/// Throws FormatError when the file does not hold a local descriptor set.
LocalFeatureSet read_local_features(const std::filesystem::path& path);

/// Every local descriptor file in dir, ordered by file name; other LCDF
/// files are ignored.
std::vector<LocalFeatureSet> read_local_feature_dir(const std::filesystem::path& dir);

/// Layer name from the header without reading the payload.
std::string peek_layer(const std::filesystem::path& path);

}  // namespace lcd

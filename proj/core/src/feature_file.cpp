#include "lcd/feature_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "lcd/binary_io.hpp"
#include "lcd/error.hpp"
#include "lcd/file_util.hpp"

namespace lcd {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "LCDF";
constexpr std::string_view kLocalPrefix = "local:";

void put_string(binio::Writer& w, std::string_view s, const char* what) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidParams, std::string(what) + " longer than 65535 bytes");
  }
  w.u16(static_cast<std::uint16_t>(s.size()));
  w.bytes(s);
}

}  // namespace

std::optional<std::size_t> find_layer_dim(std::string_view name) noexcept {
  for (const auto& spec : kCnnLayers) {
    if (spec.name == name) return spec.dim;
  }
  return std::nullopt;
}

std::size_t expected_layer_dim(std::string_view name) {
  if (auto d = find_layer_dim(name)) return *d;
  throw Error(ErrorCode::kUnknownLayer, "unknown CNN layer '" + std::string(name) + "'");
}

void write_feature_file(const fs::path& path, std::string_view layer, std::string_view image_id,
                        std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "feature values must be finite");
  }
  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kFeatureFormatVersion);
  put_string(w, layer, "layer name");
  put_string(w, image_id, "image id");
  w.u64(values.size());
  for (float v : values) w.f32(v);
  write_file(path, w.buffer());
}

void write_feature_file(const fs::path& path, std::string_view layer, std::string_view image_id,
                        std::span<const double> values) {
  std::vector<float> narrowed(values.size());
  std::transform(values.begin(), values.end(), narrowed.begin(),
                 [](double v) { return static_cast<float>(v); });
  write_feature_file(path, layer, image_id, std::span<const float>(narrowed));
}

FeatureRecord read_feature_record(const fs::path& path) {
  const std::string data = read_file(path);
  binio::Reader r(data);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size(), "magic") != kMagic) {
    throw Error(ErrorCode::kFormat, path.string() + " is not an LCDF feature file");
  }
  const auto version = r.u32("version");
  if (version != kFeatureFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported LCDF version " + std::to_string(version));
  }
  FeatureRecord rec;
  rec.layer = std::string(r.bytes(r.u16("layer length"), "layer name"));
  rec.image_id = std::string(r.bytes(r.u16("image id length"), "image id"));
  const std::uint64_t dim = r.u64("dim");
  const std::size_t payload = r.remaining();
  if (payload % 4 != 0 || payload / 4 != dim) {
    throw Error(ErrorCode::kDimMismatch, path.string() + ": header declares " + std::to_string(dim) +
                                             " values, payload holds " + std::to_string(payload / 4) +
                                             (payload % 4 ? " (plus a partial value)" : ""));
  }
  if (auto expected = find_layer_dim(rec.layer); expected && *expected != dim) {
    throw Error(ErrorCode::kDimMismatch, path.string() + ": layer " + rec.layer + " must have " +
                                             std::to_string(*expected) + " values, header declares " +
                                             std::to_string(dim));
  }
  rec.values.resize(static_cast<std::size_t>(dim));
  for (auto& v : rec.values) v = r.f32("payload");
  return rec;
}

Descriptor read_feature_file(const fs::path& path) {
  FeatureRecord rec = read_feature_record(path);
  Descriptor d;
  d.source = std::move(rec.layer);
  d.image_id = std::move(rec.image_id);
  d.values.assign(rec.values.begin(), rec.values.end());
  l2_normalize_in_place(d.values);
  return d;
}

fs::path feature_file_name(std::string_view image_id, std::string_view layer) {
  std::string name;
  for (char c : image_id) name += (c == '/' || c == ':') ? '_' : c;
  name += '.';
  for (char c : layer) name += (c == '/' || c == ':') ? '_' : c;
  name += ".lcdf";
  return name;
}

std::string peek_layer(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::array<char, 10> head{};
  in.read(head.data(), head.size());
  if (in.gcount() != static_cast<std::streamsize>(head.size()) ||
      std::string_view(head.data(), 4) != kMagic) {
    throw Error(ErrorCode::kFormat, path.string() + " is not an LCDF feature file");
  }
  const auto len = static_cast<std::size_t>(static_cast<unsigned char>(head[8]) |
                                            (static_cast<unsigned char>(head[9]) << 8));
  std::string name(len, '\0');
  in.read(name.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw Error(ErrorCode::kFormat, "truncated file while reading layer name");
  }
  return name;
}

std::vector<Descriptor> read_feature_dir(const fs::path& dir, std::string_view layer) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lcdf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Descriptor> out;
  for (const auto& f : files) {
    if (peek_layer(f) != layer) continue;
    out.push_back(read_feature_file(f));
  }
  std::sort(out.begin(), out.end(),
            [](const Descriptor& a, const Descriptor& b) { return a.image_id < b.image_id; });
  return out;
}

std::string local_layer_name(std::size_t dim) {
  return std::string(kLocalPrefix) + std::to_string(dim);
}

void write_local_features(const fs::path& path, std::string_view image_id,
                          const LocalFeatureSet& features) {
  write_feature_file(path, local_layer_name(features.dim()), image_id, features.data());
}

LocalFeatureSet read_local_features(const fs::path& path) {
  const FeatureRecord rec = read_feature_record(path);
  const std::string_view layer = rec.layer;
  std::size_t dim = 0;
  if (layer.substr(0, kLocalPrefix.size()) == kLocalPrefix) {
    const auto digits = layer.substr(kLocalPrefix.size());
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) dim = 0;
  }
  if (dim == 0) {
    throw Error(ErrorCode::kFormat, path.string() + " does not hold local descriptors");
  }
  if (rec.values.size() % dim != 0) {
    throw Error(ErrorCode::kDimMismatch, path.string() + ": payload is not a whole number of " +
                                             std::to_string(dim) + "-d descriptors");
  }
  LocalFeatureSet set(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < rec.values.size(); i += dim) {
    std::copy(rec.values.begin() + static_cast<std::ptrdiff_t>(i),
              rec.values.begin() + static_cast<std::ptrdiff_t>(i + dim), row.begin());
    set.add(row);
  }
  return set;
}

std::vector<LocalFeatureSet> read_local_feature_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lcdf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LocalFeatureSet> out;
  for (const auto& f : files) {
    if (peek_layer(f).starts_with(kLocalPrefix)) out.push_back(read_local_features(f));
  }
  return out;
}

}  // namespace lcd

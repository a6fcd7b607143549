#include "lcd/model_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "lcd/binary_io.hpp"
#include "lcd/error.hpp"
#include "lcd/file_util.hpp"

namespace lcd {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return data;
}

void write_file(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename onto " + path.string() + ": " + ec.message());
}

namespace {

constexpr std::string_view kMagic = "LCDM";

binio::Writer header(ModelKind kind) {
  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  return w;
}

void put_all(binio::Writer& w, const std::vector<double>& v) {
  for (double x : v) w.f64(x);
}

std::vector<double> get_n(binio::Reader& r, std::uint64_t n, const char* what) {
  if (n > r.remaining() / 8) {
    throw Error(ErrorCode::kFormat, std::string("truncated file while reading ") + what);
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = r.f64(what);
  return v;
}

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw Error(ErrorCode::kFormat, "model dimensions overflow");
  }
  return a * b;
}

}  // namespace

void save_model(const fs::path& path, const Vocabulary& m) {
  auto w = header(ModelKind::kVocabulary);
  w.u64(m.k);
  w.u64(m.dim);
  put_all(w, m.centroids);
  write_file(path, w.buffer());
}

void save_model(const fs::path& path, const GmmModel& m) {
  auto w = header(ModelKind::kGmm);
  w.u64(m.k);
  w.u64(m.dim);
  put_all(w, m.weights);
  put_all(w, m.means);
  put_all(w, m.variances);
  write_file(path, w.buffer());
}

void save_model(const fs::path& path, const PcaModel& m) {
  auto w = header(ModelKind::kPca);
  w.u64(m.in_dim);
  w.u64(m.out_dim);
  put_all(w, m.mean);
  put_all(w, m.basis);
  put_all(w, m.eigenvalues);
  write_file(path, w.buffer());
}

AnyModel load_model(const fs::path& path) {
  const std::string data = read_file(path);
  binio::Reader r(data);
  if (r.remaining() < 4 || r.bytes(4, "magic") != kMagic) {
    throw Error(ErrorCode::kFormat, path.string() + " is not an LCDM model file");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported model format version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8("kind");
  AnyModel out;
  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::kVocabulary: {
      Vocabulary m;
      const auto k = r.u64("k");
      const auto dim = r.u64("dim");
      m.k = k;
      m.dim = dim;
      m.centroids = get_n(r, checked_product(k, dim), "centroids");
      out = std::move(m);
      break;
    }
    case ModelKind::kGmm: {
      GmmModel m;
      const auto k = r.u64("k");
      const auto dim = r.u64("dim");
      m.k = k;
      m.dim = dim;
      m.weights = get_n(r, k, "weights");
      m.means = get_n(r, checked_product(k, dim), "means");
      m.variances = get_n(r, checked_product(k, dim), "variances");
      out = std::move(m);
      break;
    }
    case ModelKind::kPca: {
      PcaModel m;
      const auto in_dim = r.u64("in_dim");
      const auto out_dim = r.u64("out_dim");
      m.in_dim = in_dim;
      m.out_dim = out_dim;
      m.mean = get_n(r, in_dim, "mean");
      m.basis = get_n(r, checked_product(out_dim, in_dim), "basis");
      m.eigenvalues = get_n(r, out_dim, "eigenvalues");
      out = std::move(m);
      break;
    }
    default:
      throw Error(ErrorCode::kFormat, "unknown model kind " + std::to_string(kind));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, "trailing bytes after model payload in " + path.string());
  }
  return out;
}

namespace {

template <typename T>
T load_as(const fs::path& path, const char* name) {
  AnyModel any = load_model(path);
  if (auto* m = std::get_if<T>(&any)) return std::move(*m);
  throw Error(ErrorCode::kFormat, path.string() + " does not hold a " + name);
}

}  // namespace

Vocabulary load_vocabulary(const fs::path& path) { return load_as<Vocabulary>(path, "vocabulary"); }
GmmModel load_gmm(const fs::path& path) { return load_as<GmmModel>(path, "GMM"); }
PcaModel load_pca(const fs::path& path) { return load_as<PcaModel>(path, "PCA model"); }

}  // namespace lcd

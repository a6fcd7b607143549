#include "lcd/gist.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "lcd/error.hpp"

namespace lcd {

namespace {

using Complex = std::complex<double>;

// Prefilter cutoff in frequency-index units and the contrast floor, both for
// images scaled to [0, 255].
constexpr double kPrefilterCutoff = 4.0;
constexpr double kContrastFloor = 0.2;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

namespace detail {

struct FftPlans {
  explicit FftPlans(std::size_t n) : n(n) {
    const int ni = static_cast<int>(n);
    std::lock_guard lock(planner_mutex());
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
    forward = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void fft(std::vector<Complex>& data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(forward, p, p);
  }
  // Normalized inverse.
  void ifft(std::vector<Complex>& data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(inverse, p, p);
    const double scale = 1.0 / static_cast<double>(n * n);
    for (auto& c : data) c *= scale;
  }

  std::size_t n;
  fftw_plan forward;
  fftw_plan inverse;
};

}  // namespace detail

namespace {

// Signed frequency index for FFT bin k of an n-point transform.
double freq_index(std::size_t k, std::size_t n) {
  const auto ki = static_cast<double>(k);
  return k < (n + 1) / 2 ? ki : ki - static_cast<double>(n);
}

}  // namespace

void GistParams::validate() const {
  if (scales == 0 || orientations_per_scale == 0 || grid == 0 || canonical_size == 0) {
    throw Error(ErrorCode::kInvalidParams, "GIST scales, orientations, grid and size must be >= 1");
  }
  if (grid > canonical_size) {
    throw Error(ErrorCode::kInvalidParams, "GIST grid " + std::to_string(grid) +
                                               " exceeds canonical size " +
                                               std::to_string(canonical_size));
  }
}

GaborBank build_gabor_bank(const GistParams& params) {
  params.validate();
  const std::size_t n = params.canonical_size;
  const double orients = static_cast<double>(params.orientations_per_scale);
  // Angular bandwidth shrinks with the number of orientations.
  const double angular = 16.0 * orients * orients / (32.0 * 32.0);

  GaborBank bank;
  bank.scales_ = params.scales;
  bank.orientations_ = params.orientations_per_scale;
  bank.size_ = n;
  bank.filters_.reserve(params.filter_count());

  for (std::size_t s = 0; s < params.scales; ++s) {
    const double peak = 0.3 / std::pow(1.85, static_cast<double>(s));
    for (std::size_t o = 0; o < params.orientations_per_scale; ++o) {
      const double rotation = std::numbers::pi / orients * static_cast<double>(o);
      std::vector<double> g(n * n);
      for (std::size_t v = 0; v < n; ++v) {
        const double fy = freq_index(v, n);
        for (std::size_t u = 0; u < n; ++u) {
          const double fx = freq_index(u, n);
          const double radius = std::hypot(fx, fy) / static_cast<double>(n);
          double theta = std::atan2(fy, fx) + rotation;
          if (theta < -std::numbers::pi) theta += 2.0 * std::numbers::pi;
          if (theta > std::numbers::pi) theta -= 2.0 * std::numbers::pi;
          const double r = radius / peak - 1.0;
          g[v * n + u] = std::exp(-10.0 * 0.35 * r * r - 2.0 * angular * std::numbers::pi * theta * theta);
        }
      }
      g[0] = 0.0;
      bank.filters_.push_back(std::move(g));
    }
  }
  bank.plans_ = std::make_shared<const detail::FftPlans>(n);
  return bank;
}

std::vector<double> gist_responses(const GrayImage& img, const GaborBank& bank,
                                   const GistParams& params) {
  params.validate();
  if (bank.scales() != params.scales || bank.orientations_per_scale() != params.orientations_per_scale ||
      bank.canonical_size() != params.canonical_size || !bank.plans_) {
    throw Error(ErrorCode::kInvalidParams, "Gabor bank was built for different GIST parameters");
  }
  const std::size_t n = params.canonical_size;
  const std::size_t total = n * n;
  const auto& plans = *bank.plans_;

  const GrayImage canonical =
      (img.width() == n && img.height() == n) ? img : resize_bilinear(img, n, n);

  // Low-pass kernel shared by whitening and contrast estimation.
  const double s1 = kPrefilterCutoff / std::sqrt(std::numbers::ln2);
  std::vector<double> lowpass(total);
  for (std::size_t v = 0; v < n; ++v) {
    const double fy = freq_index(v, n);
    for (std::size_t u = 0; u < n; ++u) {
      const double fx = freq_index(u, n);
      lowpass[v * n + u] = std::exp(-(fx * fx + fy * fy) / (s1 * s1));
    }
  }

  std::vector<Complex> spec(total);
  for (std::size_t i = 0; i < total; ++i) spec[i] = canonical.pixels()[i] * 255.0;
  std::vector<double> pixels(total);
  for (std::size_t i = 0; i < total; ++i) pixels[i] = spec[i].real();

  // Prewhitening: subtract the low-pass component.
  plans.fft(spec);
  for (std::size_t i = 0; i < total; ++i) spec[i] *= lowpass[i];
  plans.ifft(spec);
  std::vector<double> white(total);
  for (std::size_t i = 0; i < total; ++i) white[i] = pixels[i] - spec[i].real();

  // Local contrast normalization.
  for (std::size_t i = 0; i < total; ++i) spec[i] = white[i] * white[i];
  plans.fft(spec);
  for (std::size_t i = 0; i < total; ++i) spec[i] *= lowpass[i];
  plans.ifft(spec);
  for (std::size_t i = 0; i < total; ++i) {
    white[i] /= kContrastFloor + std::sqrt(std::abs(spec[i].real()));
  }

  std::vector<Complex> image_spec(total);
  for (std::size_t i = 0; i < total; ++i) image_spec[i] = white[i];
  plans.fft(image_spec);

  // Block boundaries: floor(linspace(0, n, grid + 1)).
  const std::size_t grid = params.grid;
  std::vector<std::size_t> edges(grid + 1);
  for (std::size_t b = 0; b <= grid; ++b) edges[b] = b * n / grid;

  std::vector<double> out;
  out.reserve(params.dimension());
  std::vector<Complex> response(total);
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const auto& g = bank.filter(f);
    for (std::size_t i = 0; i < total; ++i) response[i] = image_spec[i] * g[i];
    plans.ifft(response);
    for (std::size_t bx = 0; bx < grid; ++bx) {
      for (std::size_t by = 0; by < grid; ++by) {
        double sum = 0.0;
        for (std::size_t y = edges[by]; y < edges[by + 1]; ++y) {
          for (std::size_t x = edges[bx]; x < edges[bx + 1]; ++x) {
            sum += std::abs(response[y * n + x]);
          }
        }
        const auto count = static_cast<double>((edges[by + 1] - edges[by]) * (edges[bx + 1] - edges[bx]));
        out.push_back(sum / count);
      }
    }
  }
  return out;
}

Descriptor compute_gist(const GrayImage& img, const GaborBank& bank, const GistParams& params) {
  Descriptor d;
  d.source = "gist";
  d.values = gist_responses(img, bank, params);
  const double peak = std::abs(*std::max_element(
      d.values.begin(), d.values.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
  if (peak < kGistZeroResponse) {
    std::fill(d.values.begin(), d.values.end(), 0.0);
  }
  l2_normalize_in_place(d.values);
  return d;
}

}  // namespace lcd

#pragma once

// Reference implementations written straight from the textbook definitions.
// They share no code with the library: plain nested vectors, linear-domain
// Gaussian densities, and O(n^2) threshold enumeration.

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <vector>

namespace lcd::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Vec normalized(Vec v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return v;
  const double n = std::sqrt(s);
  for (double& x : v) x /= n;
  return v;
}

inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Index of the first minimum over all candidates.
inline std::size_t argmin_distance(const Vec& x, const Mat& centers) {
  Vec d;
  for (const auto& c : centers) d.push_back(dist2(x, c));
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] < d[best]) best = i;
  }
  return best;
}

inline Vec bovw(const Mat& features, const Mat& words) {
  Vec h(words.size(), 0.0);
  for (const auto& f : features) h[argmin_distance(f, words)] += 1.0;
  return normalized(h);
}

inline Vec vlad(const Mat& features, const Mat& means, bool intra) {
  const std::size_t k = means.size();
  const std::size_t d = means[0].size();
  Mat blocks(k, Vec(d, 0.0));
  for (const auto& f : features) {
    const std::size_t c = argmin_distance(f, means);
    for (std::size_t j = 0; j < d; ++j) blocks[c][j] += f[j] - means[c][j];
  }
  Vec out;
  for (auto& b : blocks) {
    if (intra) b = normalized(b);
    out.insert(out.end(), b.begin(), b.end());
  }
  return normalized(out);
}

inline double gaussian_density(const Vec& x, const Vec& mean, const Vec& var) {
  double p = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double z = x[j] - mean[j];
    p *= std::exp(-z * z / (2.0 * var[j])) / std::sqrt(2.0 * std::numbers::pi * var[j]);
  }
  return p;
}

inline Vec soft_assign(const Vec& x, const Vec& weights, const Mat& means, const Mat& vars) {
  Vec g(weights.size());
  double total = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    g[c] = weights[c] * gaussian_density(x, means[c], vars[c]);
    total += g[c];
  }
  for (double& v : g) v /= total;
  return g;
}

// Gradient of the average log-likelihood w.r.t. means and standard
// deviations, whitened by the diagonal Fisher information.
inline Vec fisher(const Mat& features, const Vec& weights, const Mat& means, const Mat& vars,
                  bool power) {
  const std::size_t k = weights.size();
  const std::size_t d = means[0].size();
  const double n = static_cast<double>(features.size());
  Mat gm(k, Vec(d, 0.0));
  Mat gs(k, Vec(d, 0.0));
  for (const auto& x : features) {
    const Vec g = soft_assign(x, weights, means, vars);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::sqrt(vars[c][j]);
        const double z = (x[j] - means[c][j]) / sigma;
        gm[c][j] += g[c] * z / (n * std::sqrt(weights[c]));
        gs[c][j] += g[c] * (z * z - 1.0) / (n * std::sqrt(2.0 * weights[c]));
      }
    }
  }
  Vec out;
  for (const auto& b : gm) out.insert(out.end(), b.begin(), b.end());
  for (const auto& b : gs) out.insert(out.end(), b.begin(), b.end());
  if (power) {
    for (double& v : out) v = (v < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(v));
  }
  return normalized(out);
}

struct ScoredMatch {
  double distance;
  bool correct;
};

struct SweepPoint {
  double threshold;
  double precision;
  double recall;
};

// Every distinct distance as a threshold; each point recounts from scratch.
inline std::vector<SweepPoint> sweep(const std::vector<ScoredMatch>& matches, std::size_t positives) {
  std::vector<double> thresholds;
  for (const auto& m : matches) {
    bool seen = false;
    for (double t : thresholds) seen = seen || t == m.distance;
    if (!seen) thresholds.push_back(m.distance);
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    for (std::size_t j = i + 1; j < thresholds.size(); ++j) {
      if (thresholds[j] < thresholds[i]) std::swap(thresholds[i], thresholds[j]);
    }
  }
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (const auto& m : matches) {
      if (m.distance <= t) {
        if (m.correct) ++tp;
        else ++fp;
      }
    }
    const double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.push_back({t, precision, static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return out;
}

inline double average_precision(const std::vector<SweepPoint>& points) {
  std::map<double, double> best;
  for (const auto& p : points) {
    if (p.recall <= 0.0) continue;
    auto it = best.find(p.recall);
    if (it == best.end()) best[p.recall] = p.precision;
    else it->second = std::max(it->second, p.precision);
  }
  if (best.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [r, p] : best) s += p;
  return s / static_cast<double>(best.size());
}

}  // namespace lcd::oracle

// Acceptance suite: one line per criterion, nonzero exit when any check fails.
//
//   PASS | FAIL | SKIP  <name>  <measurements>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lcd/codebook.hpp"
#include "lcd/descriptor.hpp"
#include "lcd/encoders.hpp"
#include "lcd/error.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/experiment.hpp"
#include "lcd/feature_file.hpp"
#include "lcd/matching.hpp"
#include "lcd/pipeline.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace lcd;
using Clock = std::chrono::steady_clock;

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Verdict encoder_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t k = 1 + rng() % 3;
    const std::size_t dim = 1 + rng() % 3;
    const std::size_t n = 1 + rng() % 10;
    oracle::Mat rows, means, vars;
    oracle::Vec weights;
    LocalFeatureSet features(dim);
    for (std::size_t i = 0; i < n; ++i) {
      oracle::Vec r(dim);
      for (double& v : r) v = g(rng);
      features.add(r);
      rows.push_back(r);
    }
    GmmModel gmm{k, dim, {}, {}, {}};
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      weights.push_back(u(rng));
      total += weights.back();
      oracle::Vec m(dim), s(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        m[j] = g(rng);
        s[j] = u(rng);
      }
      means.push_back(m);
      vars.push_back(s);
      gmm.means.insert(gmm.means.end(), m.begin(), m.end());
      gmm.variances.insert(gmm.variances.end(), s.begin(), s.end());
    }
    for (double& w : weights) w /= total;
    gmm.weights = weights;
    const Vocabulary vocab{k, dim, gmm.means};

    auto compare = [&worst](const std::vector<double>& got, const oracle::Vec& want) {
      if (got.size() != want.size()) {
        worst = INFINITY;
        return;
      }
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    };
    compare(encode_bovw(features, vocab).values, oracle::bovw(rows, means));
    for (bool intra : {false, true}) {
      compare(encode_vlad(features, gmm, {true, intra}).values, oracle::vlad(rows, means, intra));
    }
    for (bool power : {false, true}) {
      compare(encode_fv(features, gmm, {power, true}).values, oracle::fisher(rows, weights, means, vars, power));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-9 && secs < 5.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "max_abs_err=" + fmt(worst, 3) + " (<= 1e-9) time=" + fmt(secs, 3) + "s (< 5s)"};
}

// ---------------------------------------------------------------------------

Verdict dimension_contract() {
  // Default-sized models; contents are irrelevant to the shapes.
  auto models = std::make_shared<PipelineModels>();
  models->vocabulary = Vocabulary{kDefaultVocabularySize, kLocalDescriptorDim,
                                  std::vector<double>(kDefaultVocabularySize * kLocalDescriptorDim, 0.0)};
  models->pca = PcaModel{kLocalDescriptorDim, kDefaultPcaDim, std::vector<double>(kLocalDescriptorDim),
                         std::vector<double>(kDefaultPcaDim * kLocalDescriptorDim),
                         std::vector<double>(kDefaultPcaDim)};
  models->gmm = GmmModel{kDefaultGmmComponents, kDefaultPcaDim,
                         std::vector<double>(kDefaultGmmComponents, 1.0 / kDefaultGmmComponents),
                         std::vector<double>(kDefaultGmmComponents * kDefaultPcaDim),
                         std::vector<double>(kDefaultGmmComponents * kDefaultPcaDim, 1.0)};
  const PipelineConfig cfg;
  const std::map<DescriptorKind, std::size_t> want = {{DescriptorKind::kGist, 512},
                                                      {DescriptorKind::kBovw, 1024},
                                                      {DescriptorKind::kFv, 40960},
                                                      {DescriptorKind::kVlad, 20480}};
  bool ok = true;
  std::string detail;
  const GrayImage img = testing::Scene(1).render(160, 120);
  for (const auto& [kind, dim] : want) {
    const Extractor ex(kind, cfg, models);
    const std::size_t got = ex.extract(img).values.size();
    ok = ok && got == dim && ex.dimension() == dim;
    detail += std::string(ex.name()) + "=" + std::to_string(got) + " ";
  }

  // Every layer accepts exactly its own size on ingest and rejects one off.
  const std::vector<std::pair<std::string, std::size_t>> layers = {
      {"CONV1", 290400}, {"POOL1", 69984}, {"CONV2", 186624}, {"POOL2", 43264},
      {"CONV3", 64896},  {"CONV4", 64896}, {"CONV5", 43264},  {"POOL5", 9216},
      {"FC6", 4096},     {"FC7", 4096},    {"FC8", 1000}};
  testing::TempDir dir("accept_dims");
  std::size_t validated = 0;
  for (const auto& [name, dim] : layers) {
    const std::vector<float> good(dim, 0.5f);
    const std::vector<float> bad(dim - 1, 0.5f);
    write_feature_file(dir / "good.lcdf", name, "x", std::span<const float>(good));
    write_feature_file(dir / "bad.lcdf", name, "x", std::span<const float>(bad));
    bool layer_ok = read_feature_file(dir / "good.lcdf").values.size() == dim;
    try {
      read_feature_file(dir / "bad.lcdf");
      layer_ok = false;
    } catch (const Error& e) {
      layer_ok = layer_ok && e.code() == ErrorCode::kDimMismatch;
    }
    if (layer_ok) ++validated;
  }
  ok = ok && validated == layers.size();
  detail += "layers_validated=" + std::to_string(validated) + "/11";
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

// ---------------------------------------------------------------------------

Verdict normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-6.0, 6.0);
  double worst_norm = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng() % 256);
    const double s = std::pow(10.0, scale(rng));
    for (double& x : v) x = s * g(rng);
    l2_normalize_in_place(v);
    worst_norm = std::max(worst_norm, std::abs(l2_norm(v) - 1.0));
  }
  std::vector<double> zero(32, 0.0);
  l2_normalize_in_place(zero);
  const bool zero_ok = std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; });

  std::size_t rank_mismatch = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t dim = 2 + rng() % 30;
    const std::size_t n = 2 + rng() % 40;
    auto raw_vec = [&] {
      std::vector<double> v(dim);
      const double s = std::exp(scale(rng));
      for (double& x : v) x = s * g(rng);
      return v;
    };
    const std::vector<double> q_raw = raw_vec();
    const Descriptor q = l2_normalize({q_raw, "raw", "q"});
    DescriptorDatabase db;
    std::vector<double> dist, cosine;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> r = raw_vec();
      const Descriptor d = l2_normalize({r, "raw", std::to_string(i)});
      dist.push_back(std::sqrt(oracle::dist2(q.values, d.values)));
      double dot = 0.0, nq = 0.0, nr = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        dot += q_raw[j] * r[j];
        nq += q_raw[j] * q_raw[j];
        nr += r[j] * r[j];
      }
      cosine.push_back(dot / std::sqrt(nq * nr));
      db.add(d);
    }
    std::vector<std::size_t> by_dist(n), by_cos(n);
    for (std::size_t i = 0; i < n; ++i) by_dist[i] = by_cos[i] = i;
    std::stable_sort(by_dist.begin(), by_dist.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
    std::stable_sort(by_cos.begin(), by_cos.end(), [&](auto a, auto b) { return cosine[a] > cosine[b]; });
    const bool same = by_dist == by_cos && nearest_neighbor(q, db).matched_index == by_cos.front();
    if (!same) ++rank_mismatch;
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_norm <= 1e-12 && zero_ok && rank_mismatch == 0 && secs < 1.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "max_norm_err=" + fmt(worst_norm, 3) + " (<= 1e-12) zero_fixed=" + (zero_ok ? "yes" : "no") +
              " ranking_mismatches=" + std::to_string(rank_mismatch) + "/100 time=" + fmt(secs, 3) + "s (< 1s)"};
}

// ---------------------------------------------------------------------------

Verdict optimization_monotonicity() {
  const auto t0 = Clock::now();
  constexpr double kSlack = 1e-9;
  std::size_t violations = 0;
  std::size_t kmeans_steps = 0, gmm_steps = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t dim = 2 + rng() % 7;
    const std::size_t clusters = 2 + rng() % 6;
    const std::size_t n = 200 + rng() % 300;
    std::vector<double> centers(clusters * dim);
    for (double& c : centers) c = 4.0 * g(rng);
    std::vector<double> data;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = rng() % clusters;
      for (std::size_t j = 0; j < dim; ++j) data.push_back(centers[c * dim + j] + g(rng));
    }
    const VectorsView view{data, dim};
    const std::size_t k = 2 + rng() % 8;

    const KMeansResult km = kmeans_fit(view, k, seed);
    for (std::size_t i = 1; i < km.objective_history.size(); ++i) {
      const double prev = km.objective_history[i - 1];
      if (km.objective_history[i] > prev + kSlack * std::max(1.0, std::abs(prev))) ++violations;
    }
    kmeans_steps += km.objective_history.size();

    const GmmResult gm = gmm_fit(view, k, seed, 60, 0.0);
    for (std::size_t i = 1; i < gm.log_likelihood_history.size(); ++i) {
      const double prev = gm.log_likelihood_history[i - 1];
      if (gm.log_likelihood_history[i] < prev - kSlack * std::max(1.0, std::abs(prev))) ++violations;
    }
    gmm_steps += gm.log_likelihood_history.size();
  }
  const double secs = seconds_since(t0);
  const bool ok = violations == 0 && secs < 30.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "violations=" + std::to_string(violations) + " kmeans_steps=" + std::to_string(kmeans_steps) +
              " em_steps=" + std::to_string(gmm_steps) + " time=" + fmt(secs, 3) + "s (< 30s)"};
}

// ---------------------------------------------------------------------------

Verdict pr_ap_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::size_t mismatches = 0;
  bool recall_monotone = true;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t nq = 1 + rng() % 20;
    std::vector<std::string> qs, rs = {"decoy"};
    std::vector<IdPair> pairs;
    std::vector<Match> matches;
    std::vector<oracle::ScoredMatch> scored;
    for (std::size_t i = 0; i < nq; ++i) {
      qs.push_back("q" + std::to_string(i));
      rs.push_back("r" + std::to_string(i));
      const bool loop = i == 0 || rng() % 5 != 0;
      if (loop) pairs.emplace_back(qs.back(), rs.back());
      const bool correct = loop && rng() % 3 != 0;
      const double d = static_cast<double>(rng() % 16) / 16.0;
      matches.push_back({qs.back(), correct ? rs.back() : "decoy", 0, d});
      scored.push_back({d, correct});
    }
    const GroundTruth gt(qs, rs, pairs);
    const PrCurve curve = pr_curve(matches, gt);
    const auto want = oracle::sweep(scored, pairs.size());
    bool same = curve.points.size() == want.size() && curve.ap == oracle::average_precision(want) &&
                average_precision(curve) == curve.ap;
    for (std::size_t i = 0; same && i < want.size(); ++i) {
      same = curve.points[i].threshold == want[i].threshold && curve.points[i].precision == want[i].precision &&
             curve.points[i].recall == want[i].recall;
      if (i > 0 && curve.points[i].recall < curve.points[i - 1].recall) recall_monotone = false;
    }
    if (!same) ++mismatches;
  }

  std::vector<std::string> qs, rs = {"decoy"};
  std::vector<IdPair> pairs;
  std::vector<Match> perfect, adversarial;
  for (int i = 0; i < 20; ++i) {
    qs.push_back("q" + std::to_string(i));
    rs.push_back("r" + std::to_string(i));
    pairs.emplace_back(qs.back(), rs.back());
    perfect.push_back({qs.back(), rs.back(), 0, 0.05 * i});
    adversarial.push_back({qs.back(), "decoy", 0, 0.05 * i});
  }
  const GroundTruth gt(qs, rs, pairs);
  const double ap_perfect = pr_curve(perfect, gt).ap;
  const PrCurve bad = pr_curve(adversarial, gt);
  const bool adversarial_zero_precision =
      std::all_of(bad.points.begin(), bad.points.end(), [](const PrPoint& p) { return p.precision == 0.0; });

  const double secs = seconds_since(t0);
  const bool ok = mismatches == 0 && recall_monotone && ap_perfect == 1.0 && bad.ap == 0.0 &&
                  adversarial_zero_precision && secs < 5.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "mismatches=" + std::to_string(mismatches) + "/50 recall_monotone=" + (recall_monotone ? "yes" : "no") +
              " perfect_ap=" + fmt(ap_perfect) + " adversarial_ap=" + fmt(bad.ap) + " time=" + fmt(secs, 3) +
              "s (< 5s)"};
}

// ---------------------------------------------------------------------------

struct Perturbation {
  double gain;
  double offset;
};

// Mild first; brighter and more saturated after.
const std::vector<Perturbation> kBrightnessLevels = {
    {1.0, 0.03}, {1.2, 0.1}, {1.4, 0.2}, {1.7, 0.3}, {2.0, 0.4}};
constexpr std::size_t kScenes = 30;
constexpr double kShift = 2.0;
constexpr std::size_t kE2eVocabulary = 256;

Verdict end_to_end_synthetic() {
  const auto t0 = Clock::now();
  std::vector<testing::Scene> scenes;
  std::vector<GrayImage> refs;
  for (std::size_t i = 0; i < kScenes; ++i) {
    scenes.emplace_back(5000 + i);
    refs.push_back(scenes.back().render(160, 120));
  }

  PipelineConfig cfg;
  auto models = std::make_shared<PipelineModels>();
  {
    std::vector<LocalFeatureSet> sets;
    for (const auto& img : refs) sets.push_back(extract_local(img, cfg));
    std::size_t dim = 0;
    const auto rows = pool_features(sets, &dim);
    models->vocabulary = kmeans_fit({rows, dim}, kE2eVocabulary, 1).vocabulary;
  }

  std::vector<std::string> qids, rids;
  std::vector<IdPair> pairs;
  for (std::size_t i = 0; i < kScenes; ++i) {
    rids.push_back("r" + std::to_string(i));
    qids.push_back("q" + std::to_string(i));
    pairs.emplace_back(qids.back(), rids.back());
  }
  const GroundTruth gt(qids, rids, pairs);

  bool ok = true;
  std::string detail;
  for (DescriptorKind kind : {DescriptorKind::kGist, DescriptorKind::kBovw}) {
    const Extractor ex(kind, cfg, models);
    DescriptorDatabase db;
    for (std::size_t i = 0; i < kScenes; ++i) db.add(ex.extract(refs[i], rids[i]));
    std::vector<double> aps;
    for (const auto& level : kBrightnessLevels) {
      std::vector<Descriptor> queries;
      for (std::size_t i = 0; i < kScenes; ++i) {
        const GrayImage q =
            testing::adjust_brightness(scenes[i].render(160, 120, kShift, kShift), level.gain, level.offset);
        queries.push_back(ex.extract(q, qids[i]));
      }
      std::vector<Match> matches;
      for (const auto& d : detect_loops(queries, db, INFINITY)) matches.push_back(d.match);
      aps.push_back(pr_curve(matches, gt).ap);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < aps.size(); ++i) monotone = monotone && aps[i] <= aps[i - 1] + 0.05;
    const bool mild_ok = aps.front() >= 0.95;
    ok = ok && monotone && mild_ok;
    detail += std::string(ex.name()) + "_ap=[";
    for (std::size_t i = 0; i < aps.size(); ++i) detail += (i ? "," : "") + fmt(aps[i], 3);
    detail += "] ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          detail + "(mild >= 0.95, non-increasing within 0.05) time=" + fmt(secs, 3) + "s (< 120s)"};
}

// ---------------------------------------------------------------------------

// Needs an experiment config over the public City Centre sequence with
// descriptors gist, bovw, vlad, fv, POOL5, FC6, FC7, FC8.
Verdict city_centre() {
  const char* cfg_path = std::getenv("LCD_CITY_CENTRE_CONFIG");
  if (cfg_path == nullptr || *cfg_path == '\0') {
    return {Outcome::kSkip, "dataset not available (set LCD_CITY_CENTRE_CONFIG to an experiment config)"};
  }
  const auto t0 = Clock::now();
  const ExperimentConfig config = parse_experiment_config(cfg_path);
  const ProtocolReport report = run_protocol(config);
  std::map<std::string, double> ap;
  for (const auto& r : report.experiments.at(0).sources) ap[r.source] = r.curve.ap;
  for (const char* s : {"gist", "bovw", "vlad", "fv", "POOL5", "FC6", "FC7", "FC8"}) {
    if (!ap.count(s)) return {Outcome::kFail, std::string("config does not evaluate ") + s};
  }
  const std::map<std::string, double> table = {
      {"gist", 0.81021}, {"bovw", 0.81246}, {"fv", 0.85176}, {"vlad", 0.87275}};
  bool within = true;
  std::string detail;
  for (const auto& [s, ref] : table) {
    within = within && std::abs(ap[s] - ref) <= 0.08;
    detail += s + "=" + fmt(ap[s]) + " ";
  }
  const bool handcrafted_order = ap["vlad"] > ap["fv"] && ap["fv"] > ap["bovw"] && ap["fv"] > ap["gist"] &&
                                 std::abs(ap["bovw"] - ap["gist"]) <= 0.08;
  bool cnn_order = ap["POOL5"] > ap["FC6"] && ap["FC6"] > ap["FC7"] && ap["FC7"] > ap["FC8"];
  for (const auto& [source, value] : ap) {
    if (find_layer_dim(source) && source != "POOL5") cnn_order = cnn_order && ap["POOL5"] > value;
  }
  for (const char* s : {"POOL5", "FC6", "FC7", "FC8"}) detail += std::string(s) + "=" + fmt(ap[s]) + " ";
  const double secs = seconds_since(t0);
  const bool ok = within && handcrafted_order && cnn_order && secs < 3600.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          detail + "within_0.08=" + (within ? "yes" : "no") + " vlad>fv>bovw~gist=" +
              (handcrafted_order ? "yes" : "no") + " pool5_best,pool5>fc6>fc7>fc8=" + (cnn_order ? "yes" : "no") +
              " time=" + fmt(secs, 3) + "s"};
}

// ---------------------------------------------------------------------------

Verdict benchmark_self_consistency() {
  std::vector<GrayImage> images;
  for (std::uint64_t s = 0; s < 4; ++s) images.push_back(testing::Scene(300 + s).render(160, 120));
  const std::vector<Extractor> ex = {
      Extractor(DescriptorKind::kGist, {}, std::make_shared<PipelineModels>())};
  benchmark_extraction(images, ex, 1);  // warm caches and FFT plans
  const double a = benchmark_extraction(images, ex, 5).rows.at(0).mean_seconds;
  const double b = benchmark_extraction(images, ex, 5).rows.at(0).mean_seconds;
  const double variation = std::abs(a - b) / std::min(a, b);
  return {variation < 0.2 ? Outcome::kPass : Outcome::kFail,
          "gist_mean_s=" + fmt(a, 3) + "," + fmt(b, 3) + " variation=" + fmt(100.0 * variation, 3) + "% (< 20%)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> checks = {
      {"encoder-oracle-equivalence", encoder_oracle},
      {"dimension-contract", dimension_contract},
      {"l2-normalization", normalization},
      {"optimization-monotonicity", optimization_monotonicity},
      {"pr-ap-oracle", pr_ap_oracle},
      {"end-to-end-synthetic", end_to_end_synthetic},
      {"city-centre-table", city_centre},
      {"benchmark-self-consistency", benchmark_self_consistency},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    if (v.outcome == Outcome::kFail) ++failures;
    std::printf("%s  %-28s %s\n", tag, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

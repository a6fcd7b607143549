#include "lcd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "lcd/error.hpp"
#include "lcd/feature_file.hpp"
#include "lcd/file_util.hpp"
#include "lcd/model_io.hpp"
#include "lcd/parallel.hpp"

namespace lcd {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string_view rest = value;
  while (true) {
    const auto comma = rest.find(',');
    std::string item = trim(rest.substr(0, comma));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kConfig, key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorCode::kConfig, key + ": expected true or false, got '" + value + "'");
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string safe_name(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return out;
}

}  // namespace

void set_config_value(ExperimentConfig& c, std::string key, const std::string& raw,
                      const fs::path& base) {
  std::replace(key.begin(), key.end(), '_', '-');
  const std::string value = trim(raw);
  auto paths = [&] {
    std::vector<fs::path> out;
    for (const auto& item : split_list(value)) out.push_back(resolve(base, item));
    return out;
  };
  if (key == "reference-images") c.reference_images = resolve(base, value);
  else if (key == "reference-features") c.reference_features = resolve(base, value);
  else if (key == "query-images") c.query_images = paths();
  else if (key == "query-features") c.query_features = paths();
  else if (key == "ground-truth") c.ground_truth = paths();
  else if (key == "labels") c.labels = split_list(value);
  else if (key == "descriptors") c.descriptors = split_list(value);
  else if (key == "vocabulary") c.vocabulary = resolve(base, value);
  else if (key == "gmm") c.gmm = resolve(base, value);
  else if (key == "pca") c.pca = resolve(base, value);
  else if (key == "vocab-size") c.vocab_size = parse_count(key, value);
  else if (key == "gmm-components") c.gmm_components = parse_count(key, value);
  else if (key == "pca-dim") c.pca_dim = parse_count(key, value);
  else if (key == "max-training-descriptors") c.max_training_descriptors = parse_count(key, value);
  else if (key == "seed") c.seed = parse_count(key, value);
  else if (key == "exclusion-radius") c.exclusion_radius = parse_count(key, value);
  else if (key == "jobs") c.jobs = parse_count(key, value);
  else if (key == "output") c.output = resolve(base, value);
  else if (key == "gist-scales") c.pipeline.gist.scales = parse_count(key, value);
  else if (key == "gist-orientations") c.pipeline.gist.orientations_per_scale = parse_count(key, value);
  else if (key == "gist-grid") c.pipeline.gist.grid = parse_count(key, value);
  else if (key == "gist-size") c.pipeline.gist.canonical_size = parse_count(key, value);
  else if (key == "dense-step") c.pipeline.dense.step = parse_count(key, value);
  else if (key == "dense-patch") c.pipeline.dense.patch = parse_count(key, value);
  else if (key == "local-image-size") c.pipeline.local_image_size = parse_count(key, value);
  else if (key == "fv-power-normalize") c.pipeline.encoder.fv_power_normalize = parse_bool(key, value);
  else if (key == "vlad-intra-normalize") c.pipeline.encoder.vlad_intra_normalize = parse_bool(key, value);
  else throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

ExperimentConfig parse_experiment_config(const fs::path& path) {
  std::istringstream in(read_file(path));
  const fs::path base = path.parent_path();
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(std::string_view(line).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, path.string() + ":" + std::to_string(line_no) +
                                          ": expected 'key = value'");
    }
    set_config_value(config, trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1), base);
  }
  return config;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  auto path_list = [](const std::vector<fs::path>& v) {
    std::vector<std::string> s;
    for (const auto& p : v) s.push_back(p.string());
    return join(s);
  };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"reference-images", c.reference_images.string()},
      {"reference-features", c.reference_features.string()},
      {"query-images", path_list(c.query_images)},
      {"query-features", path_list(c.query_features)},
      {"ground-truth", path_list(c.ground_truth)},
      {"labels", join(c.labels)},
      {"descriptors", join(c.descriptors)},
      {"vocabulary", c.vocabulary.string()},
      {"gmm", c.gmm.string()},
      {"pca", c.pca.string()},
      {"vocab-size", std::to_string(c.vocab_size)},
      {"gmm-components", std::to_string(c.gmm_components)},
      {"pca-dim", std::to_string(c.pca_dim)},
      {"max-training-descriptors", std::to_string(c.max_training_descriptors)},
      {"seed", std::to_string(c.seed)},
      {"exclusion-radius", std::to_string(c.exclusion_radius)},
      {"jobs", std::to_string(c.jobs)},
      {"output", c.output.string()},
      {"gist-scales", std::to_string(c.pipeline.gist.scales)},
      {"gist-orientations", std::to_string(c.pipeline.gist.orientations_per_scale)},
      {"gist-grid", std::to_string(c.pipeline.gist.grid)},
      {"gist-size", std::to_string(c.pipeline.gist.canonical_size)},
      {"dense-step", std::to_string(c.pipeline.dense.step)},
      {"dense-patch", std::to_string(c.pipeline.dense.patch)},
      {"local-image-size", std::to_string(c.pipeline.local_image_size)},
      {"fv-power-normalize", b(c.pipeline.encoder.fv_power_normalize)},
      {"vlad-intra-normalize", b(c.pipeline.encoder.vlad_intra_normalize)},
  };
}

std::string default_label(const fs::path& query_dir) {
  fs::path p = query_dir.lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  return "vs" + p.filename().string();
}

namespace {

struct ImageSet {
  std::vector<std::string> ids;
  std::vector<GrayImage> images;
};

ImageSet load_image_set(const fs::path& dir, std::size_t jobs) {
  const auto files = list_images(dir);
  if (files.empty()) throw Error(ErrorCode::kConfig, "no images in " + dir.string());
  std::vector<std::optional<GrayImage>> loaded(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) { loaded[i] = load_grayscale(files[i]); });
  ImageSet set;
  for (std::size_t i = 0; i < files.size(); ++i) {
    set.ids.push_back(files[i].stem().string());
    set.images.push_back(std::move(*loaded[i]));
  }
  return set;
}

std::shared_ptr<const PipelineModels> prepare_models(const ExperimentConfig& c,
                                                     const std::vector<DescriptorKind>& kinds,
                                                     const ImageSet* reference,
                                                     std::vector<std::string>& notes) {
  auto models = std::make_shared<PipelineModels>();
  const bool want_vocab = std::ranges::count(kinds, DescriptorKind::kBovw) > 0;
  const bool want_gmm = std::ranges::count(kinds, DescriptorKind::kVlad) > 0 ||
                        std::ranges::count(kinds, DescriptorKind::kFv) > 0;
  if (!c.vocabulary.empty()) {
    models->vocabulary = load_vocabulary(c.vocabulary);
    notes.push_back("vocabulary: loaded from " + c.vocabulary.string());
  }
  if (!c.pca.empty()) {
    models->pca = load_pca(c.pca);
    notes.push_back("pca: loaded from " + c.pca.string());
  }
  if (!c.gmm.empty()) {
    models->gmm = load_gmm(c.gmm);
    notes.push_back("gmm: loaded from " + c.gmm.string());
  }
  const bool train_vocab = want_vocab && !models->vocabulary;
  const bool train_gmm = want_gmm && !models->gmm;
  if (!train_vocab && !train_gmm) return models;
  if (!reference) {
    throw Error(ErrorCode::kConfig, "models must be given or trainable from reference-images");
  }

  std::vector<LocalFeatureSet> local(reference->images.size());
  parallel_for(local.size(), c.jobs, [&](std::size_t i) {
    local[i] = extract_local(reference->images[i], c.pipeline);
  });
  std::size_t dim = 0;
  const std::vector<double> pooled =
      sample_rows(pool_features(local, &dim), kLocalDescriptorDim, c.max_training_descriptors, c.seed);
  const std::size_t rows = pooled.size() / kLocalDescriptorDim;
  const std::string provenance = " on reference set (" + std::to_string(rows) +
                                 " descriptors, seed " + std::to_string(c.seed) + ")";

  if (train_vocab) {
    const std::size_t k = std::min(c.vocab_size, rows);
    models->vocabulary = kmeans_fit({pooled, kLocalDescriptorDim}, k, c.seed).vocabulary;
    notes.push_back("vocabulary: k=" + std::to_string(k) + " trained" + provenance);
  }
  if (train_gmm) {
    std::vector<double> data = pooled;
    std::size_t gmm_dim = kLocalDescriptorDim;
    if (!models->pca && c.pca_dim > 0) {
      LocalFeatureSet all(kLocalDescriptorDim);
      for (std::size_t i = 0; i < rows; ++i) {
        all.add(std::span<const double>(pooled).subspan(i * kLocalDescriptorDim, kLocalDescriptorDim));
      }
      models->pca = fit_pca(std::span<const LocalFeatureSet>(&all, 1), c.pca_dim);
      notes.push_back("pca: " + std::to_string(kLocalDescriptorDim) + "->" + std::to_string(c.pca_dim) +
                      " trained" + provenance);
    }
    if (models->pca) {
      gmm_dim = models->pca->out_dim;
      data.clear();
      for (std::size_t i = 0; i < rows; ++i) {
        const auto p = project(*models->pca, std::span<const double>(pooled).subspan(
                                                  i * kLocalDescriptorDim, kLocalDescriptorDim));
        data.insert(data.end(), p.begin(), p.end());
      }
    }
    const std::size_t k = std::min(c.gmm_components, rows);
    models->gmm = gmm_fit({data, gmm_dim}, k, c.seed).model;
    notes.push_back("gmm: k=" + std::to_string(k) + " trained" + provenance);
  }
  return models;
}

std::vector<Descriptor> descriptors_for(const std::string& source, const fs::path& features_dir,
                                        const ImageSet* images, const Extractor* extractor,
                                        std::size_t jobs, const std::string& set_name) {
  if (!features_dir.empty()) {
    auto loaded = read_feature_dir(features_dir, source);
    if (!loaded.empty()) return loaded;
  }
  if (images && extractor) {
    std::vector<Descriptor> out(images->images.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) {
      out[i] = extractor->extract(images->images[i], images->ids[i]);
    });
    return out;
  }
  throw Error(ErrorCode::kConfig, "no '" + source + "' descriptors available for " + set_name);
}

}  // namespace

ProtocolReport run_protocol(const ExperimentConfig& c) {
  if (c.reference_images.empty() && c.reference_features.empty()) {
    throw Error(ErrorCode::kConfig, "config needs reference-images or reference-features");
  }
  const std::size_t query_sets = c.query_set_count();
  if (query_sets == 0) throw Error(ErrorCode::kConfig, "config needs at least one query set");
  if ((!c.query_images.empty() && c.query_images.size() != query_sets) ||
      (!c.query_features.empty() && c.query_features.size() != query_sets)) {
    throw Error(ErrorCode::kConfig, "query-images and query-features list different numbers of sets");
  }
  if (c.ground_truth.size() != query_sets) {
    throw Error(ErrorCode::kConfig, "ground-truth must list one file per query set");
  }
  if (!c.labels.empty() && c.labels.size() != query_sets) {
    throw Error(ErrorCode::kConfig, "labels must list one label per query set");
  }
  if (c.descriptors.empty()) throw Error(ErrorCode::kConfig, "config lists no descriptors");

  ProtocolReport report;
  report.sources = c.descriptors;

  std::vector<DescriptorKind> kinds;
  for (const auto& s : c.descriptors) {
    if (auto k = parse_descriptor_kind(s)) kinds.push_back(*k);
  }
  // Hand-crafted sources fall back to encoding only when images are present.
  std::optional<ImageSet> reference;
  if (!c.reference_images.empty()) reference = load_image_set(c.reference_images, c.jobs);
  std::vector<std::optional<ImageSet>> queries(query_sets);
  for (std::size_t q = 0; q < query_sets; ++q) {
    if (!c.query_images.empty()) queries[q] = load_image_set(c.query_images[q], c.jobs);
  }

  const bool any_images = reference.has_value();
  std::shared_ptr<const PipelineModels> models;
  if (!kinds.empty() && any_images) {
    models = prepare_models(c, kinds, &*reference, report.notes);
  }

  for (std::size_t q = 0; q < query_sets; ++q) {
    ExperimentResult exp;
    if (!c.labels.empty()) {
      exp.label = c.labels[q];
    } else {
      exp.label = default_label(!c.query_images.empty() ? c.query_images[q] : c.query_features[q]);
    }
    const auto pairs = read_ground_truth_csv(c.ground_truth[q]);
    for (const auto& source : c.descriptors) {
      std::optional<Extractor> extractor;
      if (auto kind = parse_descriptor_kind(source); kind && models) {
        extractor.emplace(*kind, c.pipeline, models);
      }
      const Extractor* ex = extractor ? &*extractor : nullptr;
      auto refs = descriptors_for(source, c.reference_features, reference ? &*reference : nullptr, ex,
                                  c.jobs, "reference set");
      auto qs = descriptors_for(source, c.query_features.empty() ? fs::path{} : c.query_features[q],
                                queries[q] ? &*queries[q] : nullptr, ex, c.jobs, exp.label);

      DescriptorDatabase db;
      std::vector<std::string> ref_ids;
      for (auto& d : refs) {
        ref_ids.push_back(d.image_id);
        db.add(std::move(d));
      }
      std::vector<std::string> query_ids;
      for (const auto& d : qs) query_ids.push_back(d.image_id);
      const GroundTruth gt(query_ids, ref_ids, pairs);

      const auto decisions = detect_loops(qs, db, std::numeric_limits<double>::infinity(),
                                          c.exclusion_radius, c.jobs);
      SourceResult result;
      result.source = source;
      for (const auto& d : decisions) result.matches.push_back(d.match);
      result.curve = pr_curve(result.matches, gt);
      exp.sources.push_back(std::move(result));
    }
    report.experiments.push_back(std::move(exp));
  }
  return report;
}

void write_report(const ProtocolReport& report, const ExperimentConfig& config, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::string table = "experiment";
  for (const auto& s : report.sources) table += "," + s;
  table += "\n";
  for (const auto& exp : report.experiments) {
    table += exp.label;
    for (const auto& s : report.sources) {
      table += ",";
      for (const auto& r : exp.sources) {
        if (r.source == s) table += format_number(r.curve.ap);
      }
    }
    table += "\n";
  }
  write_file(dir / "ap_table.csv", table);

  for (const auto& exp : report.experiments) {
    for (const auto& r : exp.sources) {
      const std::string stem = safe_name(exp.label) + "_" + safe_name(r.source);
      write_pr_csv(dir / ("pr_" + stem + ".csv"), r.curve);
      write_pr_svg(dir / ("pr_" + stem + ".svg"), r.curve, exp.label + " " + r.source);
      std::string m = "query_id,matched_id,distance\n";
      for (const auto& match : r.matches) {
        m += match.query_id + "," + match.matched_id + "," + format_number(match.distance) + "\n";
      }
      write_file(dir / ("matches_" + stem + ".csv"), m);
    }
  }

  std::string manifest = "# loop-closure evaluation manifest\n";
  manifest += "tool = lcd " + std::string(kToolVersion) + "\n";
  manifest += "command = eval\n";
  manifest +=
      "ap-definition = mean over distinct positive recall levels of the maximum precision at that "
      "level\n";
  manifest += "precision-at-zero-acceptances = 1\n";
  manifest += "recall-denominator = queries with at least one true pair\n";
  manifest += "[config]\n";
  for (const auto& [k, v] : config_entries(config)) manifest += k + " = " + v + "\n";
  manifest += "[models]\n";
  for (const auto& n : report.notes) manifest += n + "\n";
  write_file(dir / "manifest.txt", manifest);
}

BenchmarkTable benchmark_extraction(std::span<const GrayImage> images, std::span<const Extractor> extractors,
                                    std::size_t repetitions) {
  if (images.empty()) throw Error(ErrorCode::kInvalidParams, "benchmark needs at least one image");
  if (repetitions == 0) throw Error(ErrorCode::kInvalidParams, "benchmark needs at least one repetition");
  BenchmarkTable table;
  table.images = images.size();
  table.repetitions = repetitions;
  for (const auto& ex : extractors) {
    using Clock = std::chrono::steady_clock;
    Clock::duration total{};
    std::size_t samples = 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
      for (const auto& img : images) {
        const auto t0 = Clock::now();
        const Descriptor d = ex.extract(img);
        total += Clock::now() - t0;
        ++samples;
        if (d.values.empty()) throw Error(ErrorCode::kNumericalFailure, "empty descriptor");
      }
    }
    table.rows.push_back({std::string(ex.name()),
                          std::chrono::duration<double>(total).count() / static_cast<double>(samples),
                          samples});
  }
  return table;
}

void write_benchmark_csv(const fs::path& path, const BenchmarkTable& table) {
  std::string s = "# mean wall-clock seconds per image, extraction only (decode and model load excluded); images=" +
                  std::to_string(table.images) + " repetitions=" + std::to_string(table.repetitions) + "\n";
  s += "descriptor,mean_seconds,samples\n";
  for (const auto& r : table.rows) {
    s += r.source + "," + format_number(r.mean_seconds) + "," + std::to_string(r.samples) + "\n";
  }
  write_file(path, s);
}

}  // namespace lcd

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcd/evaluation.hpp"
#include "lcd/pipeline.hpp"

namespace lcd {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// One evaluation run: a reference set, one or more query sets (each with its
/// own ground truth), and the descriptor sources to compare.
///
/// Plain-text form: one `key = value` per line, `#` starts a comment. Keys are
/// the CLI flag names (underscores are accepted for dashes). Lists are
/// comma-separated. Relative paths resolve against the config file's folder.
///
///   reference-images / reference-features   directory of images / LCDF files
///   query-images / query-features           lists, one entry per query set
///   ground-truth                            list of CSVs, aligned with queries
///   labels                                  optional; default "vs<query dir>"
///   descriptors                             gist, bovw, vlad, fv or layer names
///   vocabulary, gmm, pca                    model files (trained if absent)
///   vocab-size, gmm-components, pca-dim, max-training-descriptors
///   seed, exclusion-radius, jobs, output
///   gist-scales, gist-orientations, gist-grid, gist-size
///   dense-step, dense-patch, local-image-size
///   fv-power-normalize, vlad-intra-normalize  (true/false)
struct ExperimentConfig {
  std::filesystem::path reference_images;
  std::filesystem::path reference_features;
  std::vector<std::filesystem::path> query_images;
  std::vector<std::filesystem::path> query_features;
  std::vector<std::filesystem::path> ground_truth;
  std::vector<std::string> labels;
  std::vector<std::string> descriptors;
  std::filesystem::path vocabulary;
  std::filesystem::path gmm;
  std::filesystem::path pca;
  std::size_t vocab_size = kDefaultVocabularySize;
  std::size_t gmm_components = kDefaultGmmComponents;
  std::size_t pca_dim = kDefaultPcaDim;  // 0 disables PCA for trained GMMs
  std::size_t max_training_descriptors = 100000;
  std::uint64_t seed = 0;
  std::size_t exclusion_radius = 0;
  std::size_t jobs = 0;
  std::filesystem::path output;
  PipelineConfig pipeline;

  std::size_t query_set_count() const noexcept {
    return std::max(query_images.size(), query_features.size());
  }
};

/// Throws ConfigError for unknown keys, malformed values, or IoError.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);

/// Applies one key/value pair. base resolves relative paths.
void set_config_value(ExperimentConfig& config, std::string key, const std::string& value,
                      const std::filesystem::path& base = {});

/// Canonical key/value echo, in a fixed order; parses back to the same config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

struct SourceResult {
  std::string source;
  PrCurve curve;
  std::vector<Match> matches;
};

struct ExperimentResult {
  std::string label;
  std::vector<SourceResult> sources;
};

struct ProtocolReport {
  std::vector<std::string> sources;
  std::vector<ExperimentResult> experiments;
  std::vector<std::string> notes;  // model provenance, one line each
};

/// Loads or encodes descriptors for every set, matches each query set against
/// the reference set and sweeps the threshold. Throws ConfigError for an
/// incomplete config; other errors propagate from the modules.
ProtocolReport run_protocol(const ExperimentConfig& config);

/// ap_table.csv, pr_<label>_<source>.{csv,svg}, matches_<label>_<source>.csv
/// and manifest.txt under dir. Output bytes depend only on the inputs.
void write_report(const ProtocolReport& report, const ExperimentConfig& config,
                  const std::filesystem::path& dir);

/// Label for a query set directory: "vs" + its final path component.
std::string default_label(const std::filesystem::path& query_dir);

struct BenchmarkRow {
  std::string source;
  double mean_seconds = 0.0;  // per image, extraction only
  std::size_t samples = 0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  std::size_t images = 0;
  std::size_t repetitions = 0;
};

/// Wall-clock extraction time per image and descriptor. Images arrive
/// decoded and extractors arrive with models loaded, so neither is timed.
BenchmarkTable benchmark_extraction(std::span<const GrayImage> images,
                                    std::span<const Extractor> extractors, std::size_t repetitions);

void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkTable& table);

}  // namespace lcd

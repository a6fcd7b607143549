#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "lcd/codebook.hpp"
#include "lcd/error.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/experiment.hpp"
#include "lcd/feature_file.hpp"
#include "lcd/file_util.hpp"
#include "lcd/image.hpp"
#include "lcd/matching.hpp"
#include "lcd/model_io.hpp"
#include "lcd/parallel.hpp"
#include "lcd/pipeline.hpp"

namespace lcd::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLocalSource = "dsift";

struct PipelineFlags {
  std::size_t gist_scales = 4;
  std::size_t gist_orientations = 8;
  std::size_t gist_grid = 4;
  std::size_t gist_size = 256;
  std::size_t dense_step = 8;
  std::size_t dense_patch = 16;
  std::size_t local_image_size = 0;
  bool no_fv_power = false;
  bool no_vlad_intra = false;

  void add_gist(CLI::App* app) {
    app->add_option("--gist-scales", gist_scales, "GIST filter scales")->capture_default_str();
    app->add_option("--gist-orientations", gist_orientations, "GIST orientations per scale")
        ->capture_default_str();
    app->add_option("--gist-grid", gist_grid, "GIST pooling blocks per side")->capture_default_str();
    app->add_option("--gist-size", gist_size, "GIST working resolution (square)")->capture_default_str();
  }
  void add_dense(CLI::App* app) {
    app->add_option("--dense-step", dense_step, "dense grid step in pixels")->capture_default_str();
    app->add_option("--dense-patch", dense_patch, "dense patch side in pixels")->capture_default_str();
    app->add_option("--local-image-size", local_image_size,
                    "longest side before dense extraction (0 keeps the input size)")
        ->capture_default_str();
  }
  void add_encoder(CLI::App* app) {
    app->add_flag("--no-fv-power", no_fv_power, "disable FV power normalization");
    app->add_flag("--no-vlad-intra", no_vlad_intra, "disable VLAD intra-normalization");
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.gist = {gist_scales, gist_orientations, gist_grid, gist_size};
    c.dense = {dense_step, dense_patch};
    c.local_image_size = local_image_size;
    c.encoder.fv_power_normalize = !no_fv_power;
    c.encoder.vlad_intra_normalize = !no_vlad_intra;
    return c;
  }
};

struct ModelFlags {
  std::string vocab;
  std::string gmm;
  std::string pca;

  void add(CLI::App* app) {
    app->add_option("--vocab", vocab, "vocabulary model file (BoVW)");
    app->add_option("--gmm", gmm, "GMM model file (VLAD, FV)");
    app->add_option("--pca", pca, "PCA model applied before VLAD/FV");
  }

  std::shared_ptr<const PipelineModels> load() const {
    auto m = std::make_shared<PipelineModels>();
    if (!vocab.empty()) m->vocabulary = load_vocabulary(vocab);
    if (!gmm.empty()) m->gmm = load_gmm(gmm);
    if (!pca.empty()) m->pca = load_pca(pca);
    return m;
  }
};

std::string manifest_text(const CLI::App* sub) {
  std::string s = "# lcd run manifest\n";
  s += "tool = lcd " + std::string(kToolVersion) + "\n";
  s += "command = " + sub->get_name() + "\n";
  s += sub->config_to_str(true, false);
  return s;
}

void write_manifest_in(const fs::path& dir, const CLI::App* sub) {
  write_file(dir / "manifest.txt", manifest_text(sub));
}

void write_manifest_beside(const fs::path& file, const CLI::App* sub) {
  fs::path m = file;
  m += ".manifest.txt";
  write_file(m, manifest_text(sub));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Local descriptors for training: LCDF files from --input, or dense
// extraction from --images.
std::vector<LocalFeatureSet> training_features(const std::string& input, const std::string& images,
                                               const PipelineConfig& pipeline, std::size_t jobs) {
  if (!input.empty() == !images.empty()) {
    throw Error(ErrorCode::kConfig, "give exactly one of --input or --images");
  }
  if (!input.empty()) {
    auto sets = read_local_feature_dir(input);
    if (sets.empty()) throw Error(ErrorCode::kConfig, "no local descriptor files in " + input);
    return sets;
  }
  const auto files = list_images(images);
  if (files.empty()) throw Error(ErrorCode::kConfig, "no images in " + images);
  std::vector<LocalFeatureSet> sets(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    sets[i] = extract_local(load_grayscale(files[i]), pipeline);
  });
  return sets;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<std::string> image_stems(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const auto& f : list_images(dir)) ids.push_back(f.stem().string());
  return ids;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Whole-image descriptors and loop-closure evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  PipelineFlags pf;
  ModelFlags mf;

  // train-codebook
  std::string tc_kind = "gmm";
  std::optional<std::size_t> tc_k;
  std::string tc_input, tc_images, tc_out, tc_pca;
  std::size_t tc_max_iter = 100;
  double tc_tol = 1e-6;
  std::size_t tc_max_desc = 0;
  auto* tc = app.add_subcommand("train-codebook", "learn a k-means vocabulary or a diagonal GMM");
  tc->add_option("--kind", tc_kind, "kmeans (BoVW vocabulary) or gmm (VLAD/FV)")
      ->check(CLI::IsMember({"kmeans", "gmm"}))
      ->capture_default_str();
  tc->add_option("--k", tc_k, "clusters (default 1024 for kmeans, 256 for gmm)");
  tc->add_option("--seed", seed, "random seed")->capture_default_str();
  tc->add_option("--input", tc_input, "directory of local descriptor LCDF files");
  tc->add_option("--images", tc_images, "directory of images (dense extraction)");
  tc->add_option("--pca", tc_pca, "PCA model applied to descriptors before fitting");
  tc->add_option("--max-iter", tc_max_iter, "iteration cap")->capture_default_str();
  tc->add_option("--tol", tc_tol, "GMM relative log-likelihood tolerance")->capture_default_str();
  tc->add_option("--max-descriptors", tc_max_desc, "seeded subsample size (0 = all)")->capture_default_str();
  tc->add_option("--out", tc_out, "model file")->required();
  tc->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
  pf.add_dense(tc);

  // train-pca
  std::string tp_input, tp_images, tp_out;
  std::size_t tp_dim = kDefaultPcaDim;
  std::size_t tp_max_desc = 0;
  auto* tp = app.add_subcommand("train-pca", "learn the PCA projection for local descriptors");
  tp->add_option("--input", tp_input, "directory of local descriptor LCDF files");
  tp->add_option("--images", tp_images, "directory of images (dense extraction)");
  tp->add_option("--out-dim", tp_dim, "output dimension")->capture_default_str();
  tp->add_option("--max-descriptors", tp_max_desc, "seeded subsample size (0 = all)")->capture_default_str();
  tp->add_option("--seed", seed, "random seed for subsampling")->capture_default_str();
  tp->add_option("--out", tp_out, "model file")->required();
  tp->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
  pf.add_dense(tp);

  // encode
  std::string en_desc, en_images, en_out;
  auto* en = app.add_subcommand("encode", "compute one descriptor per image into LCDF files");
  en->add_option("--desc", en_desc, "gist, bovw, vlad, fv, or dsift (local descriptors)")
      ->required()
      ->check(CLI::IsMember({"gist", "bovw", "vlad", "fv", "dsift"}));
  en->add_option("--images", en_images, "image directory")->required();
  en->add_option("--out", en_out, "output directory")->required();
  en->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
  mf.add(en);
  pf.add_gist(en);
  pf.add_dense(en);
  pf.add_encoder(en);

  // import-features
  std::string im_input, im_out, im_layer;
  auto* im = app.add_subcommand("import-features", "validate externally produced LCDF files");
  im->add_option("--input", im_input, "directory of LCDF files")->required();
  im->add_option("--out", im_out, "dataset feature directory")->required();
  im->add_option("--layer", im_layer, "only import this layer");

  // match
  std::string ma_ref, ma_query, ma_source, ma_out;
  double ma_threshold = std::numeric_limits<double>::infinity();
  std::size_t ma_radius = 0;
  auto* ma = app.add_subcommand("match", "nearest-neighbor loop detection between feature sets");
  ma->add_option("--reference", ma_ref, "reference (map) feature directory")->required();
  ma->add_option("--query", ma_query, "query feature directory")->required();
  ma->add_option("--source", ma_source, "descriptor source / layer name")->required();
  ma->add_option("--threshold", ma_threshold, "accept matches with distance <= threshold");
  ma->add_option("--exclusion-radius", ma_radius, "skip entries within this many frames")
      ->capture_default_str();
  ma->add_option("--out", ma_out, "matches CSV")->required();
  ma->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();

  // eval
  std::string ev_config, ev_output;
  std::optional<std::uint64_t> ev_seed;
  std::optional<std::size_t> ev_jobs;
  auto* ev = app.add_subcommand("eval", "run the precision-recall protocol from a config file");
  ev->add_option("--config", ev_config, "experiment config")->required();
  ev->add_option("--output", ev_output, "override the output directory");
  ev->add_option("--seed", ev_seed, "override the seed");
  ev->add_option("--jobs", ev_jobs, "override worker threads");

  // bench
  std::string be_images, be_desc = "gist", be_out;
  std::size_t be_reps = 3;
  auto* be = app.add_subcommand("bench", "time descriptor extraction per image");
  be->add_option("--images", be_images, "image directory")->required();
  be->add_option("--desc", be_desc, "comma-separated descriptor list")->capture_default_str();
  be->add_option("--repetitions", be_reps, "passes over the image set")->capture_default_str();
  be->add_option("--out", be_out, "timing CSV (stdout if omitted)");
  mf.add(be);
  pf.add_gist(be);
  pf.add_dense(be);
  pf.add_encoder(be);

  // convert-gt
  std::string cg_input, cg_out, cg_qids, cg_rids, cg_qimages, cg_rimages;
  auto* cg = app.add_subcommand("convert-gt", "convert a 0/1 loop-closure matrix to the pair CSV");
  cg->add_option("--input", cg_input, "matrix text file: row = query, column = reference")->required();
  cg->add_option("--out", cg_out, "ground-truth CSV")->required();
  cg->add_option("--query-ids", cg_qids, "file with one query id per line");
  cg->add_option("--reference-ids", cg_rids, "file with one reference id per line");
  cg->add_option("--query-images", cg_qimages, "derive query ids from image file names");
  cg->add_option("--reference-images", cg_rimages, "derive reference ids from image file names");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "lcd: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (tc->parsed()) {
      const auto sets = training_features(tc_input, tc_images, pf.config(), jobs);
      std::size_t dim = 0;
      std::vector<double> rows = pool_features(sets, &dim);
      if (!tc_pca.empty()) {
        const PcaModel pca = load_pca(tc_pca);
        std::vector<double> projected;
        for (std::size_t i = 0; i * dim < rows.size(); ++i) {
          const auto p = project(pca, std::span<const double>(rows).subspan(i * dim, dim));
          projected.insert(projected.end(), p.begin(), p.end());
        }
        rows = std::move(projected);
        dim = pca.out_dim;
      }
      rows = sample_rows(std::move(rows), dim, tc_max_desc, seed);
      const VectorsView view{rows, dim};
      if (tc_kind == "kmeans") {
        const auto fit = kmeans_fit(view, tc_k.value_or(kDefaultVocabularySize), seed, tc_max_iter);
        save_model(tc_out, fit.vocabulary);
        out << "vocabulary k=" << fit.vocabulary.k << " dim=" << dim << " iterations=" << fit.iterations
            << " objective=" << format_number(fit.objective_history.back()) << "\n";
      } else {
        const auto fit = gmm_fit(view, tc_k.value_or(kDefaultGmmComponents), seed, tc_max_iter, tc_tol);
        save_model(tc_out, fit.model);
        out << "gmm k=" << fit.model.k << " dim=" << dim << " iterations=" << fit.iterations
            << " mean-log-likelihood=" << format_number(fit.log_likelihood_history.back()) << "\n";
      }
      write_manifest_beside(tc_out, tc);
    } else if (tp->parsed()) {
      auto sets = training_features(tp_input, tp_images, pf.config(), jobs);
      if (tp_max_desc > 0) {
        std::size_t dim = 0;
        const auto rows = sample_rows(pool_features(sets, &dim), dim, tp_max_desc, seed);
        LocalFeatureSet capped(dim);
        for (std::size_t i = 0; i * dim < rows.size(); ++i) {
          capped.add(std::span<const double>(rows).subspan(i * dim, dim));
        }
        sets.assign(1, std::move(capped));
      }
      const PcaModel model = fit_pca(sets, tp_dim);
      save_model(tp_out, model);
      out << "pca " << model.in_dim << "->" << model.out_dim << "\n";
      write_manifest_beside(tp_out, tp);
    } else if (en->parsed()) {
      const auto files = list_images(en_images);
      if (files.empty()) throw Error(ErrorCode::kConfig, "no images in " + en_images);
      ensure_dir(en_out);
      const PipelineConfig config = pf.config();
      std::optional<Extractor> extractor;
      if (en_desc != kLocalSource) {
        extractor.emplace(*parse_descriptor_kind(en_desc), config, mf.load());
      }
      parallel_for(files.size(), jobs, [&](std::size_t i) {
        const std::string id = files[i].stem().string();
        const GrayImage img = load_grayscale(files[i]);
        if (extractor) {
          const Descriptor d = extractor->extract(img, id);
          write_feature_file(fs::path(en_out) / feature_file_name(id, d.source), d.source, id,
                             std::span<const double>(d.values));
        } else {
          const LocalFeatureSet local = extract_local(img, config);
          write_local_features(fs::path(en_out) / feature_file_name(id, local_layer_name(local.dim())),
                               id, local);
        }
      });
      out << "encoded " << files.size() << " images as " << en_desc << "\n";
      write_manifest_in(en_out, en);
    } else if (im->parsed()) {
      ensure_dir(im_out);
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(im_input)) {
        if (e.is_regular_file() && e.path().extension() == ".lcdf") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      std::map<std::string, std::size_t> per_layer;
      for (const auto& f : files) {
        FeatureRecord rec = read_feature_record(f);
        if (!im_layer.empty() && rec.layer != im_layer) continue;
        if (rec.image_id.empty()) throw Error(ErrorCode::kFormat, f.string() + ": empty image id");
        write_feature_file(fs::path(im_out) / feature_file_name(rec.image_id, rec.layer), rec.layer,
                           rec.image_id, std::span<const float>(rec.values));
        ++per_layer[rec.layer];
      }
      for (const auto& [layer, n] : per_layer) {
        out << layer << ": " << n << " files";
        if (auto d = find_layer_dim(layer)) out << " (dim " << *d << ")";
        out << "\n";
      }
      write_manifest_in(im_out, im);
    } else if (ma->parsed()) {
      DescriptorDatabase db;
      for (auto& d : read_feature_dir(ma_ref, ma_source)) db.add(std::move(d));
      const auto queries = read_feature_dir(ma_query, ma_source);
      const auto decisions = detect_loops(queries, db, ma_threshold, ma_radius, jobs);
      std::string csv = "query_id,matched_id,distance,accepted\n";
      for (const auto& d : decisions) {
        csv += d.match.query_id + "," + d.match.matched_id + "," + format_number(d.match.distance) + "," +
               (d.accepted ? "1" : "0") + "\n";
      }
      write_file(ma_out, csv);
      write_manifest_beside(ma_out, ma);
      out << decisions.size() << " queries matched\n";
    } else if (ev->parsed()) {
      ExperimentConfig config = parse_experiment_config(ev_config);
      if (!ev_output.empty()) config.output = ev_output;
      if (ev_seed) config.seed = *ev_seed;
      if (ev_jobs) config.jobs = *ev_jobs;
      if (config.output.empty()) throw Error(ErrorCode::kConfig, "config sets no output directory");
      const ProtocolReport report = run_protocol(config);
      write_report(report, config, config.output);
      for (const auto& exp : report.experiments) {
        for (const auto& r : exp.sources) {
          out << exp.label << " " << r.source << " AP=" << format_number(r.curve.ap) << "\n";
        }
      }
    } else if (be->parsed()) {
      const auto files = list_images(be_images);
      if (files.empty()) throw Error(ErrorCode::kConfig, "no images in " + be_images);
      std::vector<GrayImage> images;
      for (const auto& f : files) images.push_back(load_grayscale(f));
      const auto models = mf.load();
      std::vector<Extractor> extractors;
      for (const auto& name : split_csv_list(be_desc)) {
        const auto kind = parse_descriptor_kind(name);
        if (!kind) throw Error(ErrorCode::kConfig, "unknown descriptor '" + name + "'");
        extractors.emplace_back(*kind, pf.config(), models);
      }
      const BenchmarkTable table = benchmark_extraction(images, extractors, be_reps);
      if (be_out.empty()) {
        out << "descriptor,mean_seconds,samples\n";
        for (const auto& r : table.rows) {
          out << r.source << "," << format_number(r.mean_seconds) << "," << r.samples << "\n";
        }
      } else {
        write_benchmark_csv(be_out, table);
        write_manifest_beside(be_out, be);
      }
    } else if (cg->parsed()) {
      std::istringstream in(read_file(cg_input));
      std::vector<std::vector<int>> matrix;
      std::string line;
      while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::vector<int> values;
        double v = 0;
        while (row >> v) values.push_back(v != 0.0 ? 1 : 0);
        if (!row.eof()) throw Error(ErrorCode::kFormat, cg_input + ": non-numeric matrix entry");
        if (!values.empty()) matrix.push_back(std::move(values));
      }
      if (matrix.empty()) throw Error(ErrorCode::kFormat, cg_input + ": empty matrix");
      const std::size_t cols = matrix.front().size();
      for (const auto& r : matrix) {
        if (r.size() != cols) throw Error(ErrorCode::kFormat, cg_input + ": ragged matrix");
      }
      auto ids_for = [](const std::string& list, const std::string& dir, std::size_t n) {
        std::vector<std::string> ids;
        if (!list.empty()) ids = read_id_list(list);
        else if (!dir.empty()) ids = image_stems(dir);
        else for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
        if (ids.size() != n) {
          throw Error(ErrorCode::kConfig, "id list has " + std::to_string(ids.size()) +
                                              " entries, matrix needs " + std::to_string(n));
        }
        return ids;
      };
      const auto qids = ids_for(cg_qids, cg_qimages, matrix.size());
      const auto rids = ids_for(cg_rids, cg_rimages, cols);
      std::vector<IdPair> pairs;
      for (std::size_t q = 0; q < matrix.size(); ++q) {
        for (std::size_t r = 0; r < cols; ++r) {
          if (matrix[q][r]) pairs.emplace_back(qids[q], rids[r]);
        }
      }
      write_ground_truth_csv(cg_out, pairs);
      out << pairs.size() << " true pairs\n";
    }
  } catch (const Error& e) {
    err << "lcd: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "lcd: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace lcd::cli

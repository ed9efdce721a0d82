#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hsclean/classify.hpp"
#include "hsclean/datacube.hpp"
#include "hsclean/errors.hpp"
#include "hsclean/experiment.hpp"
#include "hsclean/metrics.hpp"
#include "hsclean/noisegen.hpp"
#include "hsclean/rlpa.hpp"
#include "hsclean/segmentation.hpp"
#include "hsclean/ssgraph.hpp"

namespace fs = std::filesystem;
using namespace hsclean;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

void check_same_grid(const SpectralCube& cube, const LabelField& field, const std::string& what) {
  if (field.height() != cube.height() || field.width() != cube.width()) {
    throw DataError(what + " grid is " + std::to_string(field.height()) + "x" + std::to_string(field.width()) +
                    ", cube is " + std::to_string(cube.height()) + "x" + std::to_string(cube.width()));
  }
}

struct SynthArgs {
  SynthSource source;
  std::string cube, labels;
};

void run_synth(const SynthArgs& a) {
  const auto result = synth_cube(make_line_synth_spec(a.source), a.source.seed);
  save_cube(result.cube, a.cube, cube_format_for(a.cube));
  save_labels(result.labels, a.labels);
}

struct NoisifyArgs {
  std::string labels, out;
  double rho = 0.0;
  std::uint64_t seed = 0;
};

void run_noisify(const NoisifyArgs& a) {
  const LabelField field = load_labels(a.labels);
  const auto pixels = field.labeled_pixels();
  const LabelMatrix clean = to_onehot(field, pixels);
  const LabelMatrix noisy = apply_label_noise(clean, {a.rho, a.seed});
  const auto labels = from_onehot(noisy);
  save_labels(field.with_labels(pixels, labels), a.out);
  std::fprintf(stderr, "flipped %zu of %zu labels\n", count_flips(clean, noisy), pixels.size());
}

struct SegmentArgs {
  std::string cube, out;
  SegmentationParams params;
  std::size_t superpixels = 0;
};

void run_segment(SegmentArgs a) {
  const SpectralCube cube = load_cube(a.cube, cube_format_for(a.cube));
  if (a.superpixels > 0) a.params.fixed_count = a.superpixels;
  const SuperpixelMap map = segment_cube(cube, a.params);
  save_superpixels(map, a.out);
  std::fprintf(stderr, "%zu superpixels\n", map.count);
}

struct CleanseArgs {
  std::string cube, labels, segmap, clean, out, diag;
  std::string graph = "spectral-spatial";
  std::string fallback = "keep-original";
  std::size_t knn = 10;
  RlpaConfig rlpa;
  SegmentationParams segmentation;
};

void run_cleanse(CleanseArgs a) {
  if (a.graph != "spectral-spatial" && a.graph != "spectral") throw ConfigError("--graph expects spectral-spatial or spectral");
  if (a.fallback == "lowest-class") {
    a.rlpa.fallback = UnreachableFallback::LowestClass;
  } else if (a.fallback != "keep-original") {
    throw ConfigError("--fallback expects keep-original or lowest-class");
  }
  a.rlpa.validate();
  if (!a.diag.empty() && a.clean.empty()) throw ConfigError("--diag needs --clean");

  const SpectralCube cube = load_cube(a.cube, cube_format_for(a.cube));
  const LabelField noisy_field = load_labels(a.labels);
  check_same_grid(cube, noisy_field, "label");
  const auto pixels = noisy_field.labeled_pixels();
  if (pixels.empty()) throw DataError("no labeled pixels in " + a.labels);
  const SampleSet samples = SampleSet::from_cube(cube, pixels);

  SparseAffinity w;
  if (a.graph == "spectral") {
    w = build_affinity_spectral_only(samples, a.knn);
  } else {
    SuperpixelMap map;
    if (a.segmap.empty()) {
      map = segment_cube(cube, a.segmentation);
    } else {
      map = load_superpixels(a.segmap);
      if (map.height != cube.height() || map.width != cube.width()) throw DataError("superpixel map does not match the cube");
      validate_superpixels(map);
    }
    w = build_affinity(samples, map);
  }
  const TransitionMatrix t = build_transition(w);
  const LabelMatrix noisy = to_onehot(noisy_field, pixels);

  std::optional<std::vector<int>> reference;
  if (!a.clean.empty()) {
    const LabelField clean_field = load_labels(a.clean);
    check_same_grid(cube, clean_field, "clean label");
    reference.emplace();
    for (const auto p : pixels) reference->push_back(clean_field[p]);
  }
  const CleanseResult result = reference ? rlpa_cleanse(t, noisy, a.rlpa, std::span<const int>(*reference))
                                         : rlpa_cleanse(t, noisy, a.rlpa);
  save_labels(noisy_field.with_labels(pixels, result.labels), a.out);

  if (!a.diag.empty()) {
    std::string csv = "round,per_round_noisy,cumulative_noisy\n";
    csv += "0," + std::to_string(*result.initial_noisy) + "," + std::to_string(*result.initial_noisy) + "\n";
    for (const auto& r : result.rounds) {
      csv += std::to_string(r.round) + "," + std::to_string(r.per_round_noisy) + "," +
             std::to_string(r.cumulative_noisy) + "\n";
    }
    write_text(a.diag, csv);
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i) changed += result.labels[i] != noisy.label(i);
  std::fprintf(stderr, "%zu samples, %zu seeds per round, %zu labels changed\n", pixels.size(), result.seeds_per_round,
               changed);
}

struct ClassifyArgs {
  std::string train_x, train_y, test_x, out;
  std::string clf = "nn";
  ElmParams elm;
};

void run_classify(const ClassifyArgs& a) {
  const SpectraMatrix x = load_spectra_csv(a.train_x);
  const std::vector<int> y = load_label_list(a.train_y);
  const SpectraMatrix q = load_spectra_csv(a.test_x);
  auto clf = make_classifier(parse_classifier_kind(a.clf), a.elm);
  clf->fit(x, y);
  save_label_list(clf->predict(q), a.out);
}

struct EvaluateArgs {
  std::string truth, pred, map;
  int classes = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  const LabelField truth = load_labels(a.truth);
  const LabelField pred = load_labels(a.pred);
  if (truth.pixel_count() != pred.pixel_count()) throw DataError("truth and prediction sizes differ");
  const int classes = a.classes > 0 ? a.classes : std::max(truth.num_classes(), pred.num_classes());
  std::vector<int> t, p;
  for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
    if (truth[i] == 0 || pred[i] == 0) continue;
    t.push_back(truth[i]);
    p.push_back(pred[i]);
  }
  const ConfusionMatrix m = confusion(t, p, classes);
  const auto aa = average_accuracy(m);
  std::printf("samples,%zu\noa,%.10f\naa,%.10f\nkappa,%.10f\n", m.total(), overall_accuracy(m), aa.value, kappa(m));
  for (const int c : aa.excluded_classes) std::fprintf(stderr, "class %d has no samples; left out of AA\n", c);
  if (!a.map.empty()) write_ppm(render_map(pred, default_palette(classes)), a.map);
}

struct ExperimentArgs {
  std::string config, out, maps;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load_with_overrides(const ExperimentArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (a.threads) cfg.threads = *a.threads;
  if (a.seed) cfg.seeds = {*a.seed};
  if (!a.maps.empty()) cfg.maps_dir = fs::path(a.maps);
  return cfg;
}

void run_experiment_cmd(const ExperimentArgs& a) {
  const ExperimentConfig cfg = load_with_overrides(a);
  const ExperimentReport report = run_experiment(cfg);
  write_text(a.out, format_report_csv(report));
  std::fprintf(stderr, "%zu rows, %zu superpixels, %.1f s\n", report.rows.size(), report.superpixels,
               report.elapsed_seconds);
  if (report.aa_cells_with_excluded_classes > 0) {
    std::fprintf(stderr, "note: %zu runs had classes without test samples (left out of AA)\n",
                 report.aa_cells_with_excluded_classes);
  }
}

struct SweepArgs {
  ExperimentArgs base;
  std::vector<double> eta{0.1, 0.3, 0.5, 0.7, 0.9, 0.975};
  std::vector<double> alpha{0.1, 0.3, 0.5, 0.7, 0.9, 0.975};
};

void run_sweep(const SweepArgs& a) {
  const ExperimentConfig cfg = load_with_overrides(a.base);
  write_text(a.base.out, format_sweep_csv(parameter_sweep(cfg, a.eta, a.alpha)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise cleansing for hyperspectral image classification"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cube and its ground truth");
  synth_cmd->add_option("--height", synth.source.height)->capture_default_str();
  synth_cmd->add_option("--width", synth.source.width)->capture_default_str();
  synth_cmd->add_option("--bands", synth.source.bands)->capture_default_str();
  synth_cmd->add_option("--classes", synth.source.classes)->capture_default_str();
  synth_cmd->add_option("--grid-rows", synth.source.grid_rows)->capture_default_str();
  synth_cmd->add_option("--grid-cols", synth.source.grid_cols)->capture_default_str();
  synth_cmd->add_option("--sigma", synth.source.sigma, "Per-band gaussian noise")->capture_default_str();
  synth_cmd->add_option("--separation", synth.source.separation, "Spacing of class means")->capture_default_str();
  synth_cmd->add_option("--out-cube", synth.cube, "Cube file (.csv or raw-f32)")->required();
  synth_cmd->add_option("--out-labels", synth.labels, "Ground-truth label grid")->required();

  NoisifyArgs noisify;
  auto* noisify_cmd = app.add_subcommand("noisify", "Inject symmetric label noise");
  noisify_cmd->add_option("--labels", noisify.labels)->required();
  noisify_cmd->add_option("--rho", noisify.rho, "Flip probability")->required();
  noisify_cmd->add_option("--out", noisify.out)->required();

  SegmentArgs segment;
  auto* segment_cmd = app.add_subcommand("segment", "Superpixel segmentation of a cube");
  segment_cmd->add_option("--cube", segment.cube)->required();
  segment_cmd->add_option("--tbase", segment.params.t_base)->capture_default_str();
  segment_cmd->add_option("--superpixels", segment.superpixels, "Fixed superpixel count (skips LoG budgeting)");
  segment_cmd->add_option("--compactness", segment.params.slic.compactness)->capture_default_str();
  segment_cmd->add_option("--slic-iters", segment.params.slic.max_iters)->capture_default_str();
  segment_cmd->add_option("--log-sigma", segment.params.log_sigma)->capture_default_str();
  segment_cmd->add_option("--out", segment.out)->required();

  CleanseArgs cleanse;
  auto* cleanse_cmd = app.add_subcommand("cleanse", "Random label propagation cleansing");
  cleanse_cmd->add_option("--cube", cleanse.cube)->required();
  cleanse_cmd->add_option("--labels", cleanse.labels, "Noisy training labels; 0 marks unused pixels")->required();
  cleanse_cmd->add_option("--segmap", cleanse.segmap, "Superpixel map; computed from the cube when omitted");
  cleanse_cmd->add_option("--clean", cleanse.clean, "Clean reference labels for diagnostics");
  cleanse_cmd->add_option("--eta", cleanse.rlpa.eta)->capture_default_str();
  cleanse_cmd->add_option("--alpha", cleanse.rlpa.alpha)->capture_default_str();
  cleanse_cmd->add_option("--rounds", cleanse.rlpa.rounds)->capture_default_str();
  cleanse_cmd->add_option("--threads", cleanse.rlpa.threads, "0 uses every core")->capture_default_str();
  cleanse_cmd->add_option("--fallback", cleanse.fallback, "keep-original or lowest-class")->capture_default_str();
  cleanse_cmd->add_option("--graph", cleanse.graph, "spectral-spatial or spectral")->capture_default_str();
  cleanse_cmd->add_option("--knn", cleanse.knn, "Neighbours for the spectral graph")->capture_default_str();
  cleanse_cmd->add_option("--tbase", cleanse.segmentation.t_base)->capture_default_str();
  cleanse_cmd->add_option("--out", cleanse.out)->required();
  cleanse_cmd->add_option("--diag", cleanse.diag, "CSV of noisy-label counts per round");

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Train a classifier and predict");
  classify_cmd->add_option("--train-x", classify.train_x, "CSV, one spectrum per line")->required();
  classify_cmd->add_option("--train-y", classify.train_y, "One label per line")->required();
  classify_cmd->add_option("--test-x", classify.test_x)->required();
  classify_cmd->add_option("--clf", classify.clf, "nn or elm")->capture_default_str();
  classify_cmd->add_option("--hidden", classify.elm.hidden)->capture_default_str();
  classify_cmd->add_option("--lambda", classify.elm.lambda)->capture_default_str();
  classify_cmd->add_option("--out", classify.out)->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "OA, AA and kappa of a prediction");
  evaluate_cmd->add_option("--truth", evaluate.truth)->required();
  evaluate_cmd->add_option("--pred", evaluate.pred)->required();
  evaluate_cmd->add_option("--classes", evaluate.classes, "Class count; defaults to the largest label");
  evaluate_cmd->add_option("--map", evaluate.map, "Write the prediction as a PPM map");

  ExperimentArgs experiment;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a configured noise/cleansing experiment");
  experiment_cmd->add_option("--config", experiment.config)->required();
  experiment_cmd->add_option("--out", experiment.out, "Results CSV")->required();
  experiment_cmd->add_option("--threads", experiment.threads, "Parallel runs; 0 uses every core");
  experiment_cmd->add_option("--maps", experiment.maps, "Directory for classification maps");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over eta and alpha");
  sweep_cmd->add_option("--config", sweep.base.config)->required();
  sweep_cmd->add_option("--out", sweep.base.out, "Sweep CSV")->required();
  sweep_cmd->add_option("--threads", sweep.base.threads);
  sweep_cmd->add_option("--eta", sweep.eta)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--alpha", sweep.alpha)->delimiter(',')->capture_default_str();

  // --seed may also follow the subcommand.
  for (auto* sub : app.get_subcommands({})) sub->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const bool seed_given = app.count("--seed") > 0 || app.get_subcommands().front()->count("--seed") > 0;
    if (*synth_cmd) {
      synth.source.seed = seed;
      run_synth(synth);
    } else if (*noisify_cmd) {
      noisify.seed = seed;
      run_noisify(noisify);
    } else if (*segment_cmd) {
      run_segment(segment);
    } else if (*cleanse_cmd) {
      cleanse.rlpa.seed = seed;
      run_cleanse(cleanse);
    } else if (*classify_cmd) {
      classify.elm.seed = seed;
      run_classify(classify);
    } else if (*evaluate_cmd) {
      run_evaluate(evaluate);
    } else if (*experiment_cmd) {
      if (seed_given) experiment.seed = seed;
      run_experiment_cmd(experiment);
    } else if (*sweep_cmd) {
      if (seed_given) sweep.base.seed = seed;
      run_sweep(sweep);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

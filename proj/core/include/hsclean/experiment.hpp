#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsclean/classify.hpp"
#include "hsclean/datacube.hpp"
#include "hsclean/rlpa.hpp"
#include "hsclean/segmentation.hpp"

namespace hsclean {

// Synthetic source used when no cube/labels files are configured. Class
// means sit on a line through a random base spectrum, spaced `separation`
// apart in random order, so neighbouring regions differ along the leading
// principal axis.
struct SynthSource {
  std::size_t height = 60;
  std::size_t width = 60;
  std::size_t bands = 50;
  int classes = 6;
  std::size_t grid_rows = 3;
  std::size_t grid_cols = 4;
  double sigma = 0.05;
  double separation = 0.1;
  std::uint64_t seed = 1;
};

SynthSpec make_line_synth_spec(const SynthSource& source);

enum class GraphKind { SpectralSpatial, SpectralOnly };

struct ExperimentConfig {
  // Data: files when both paths are set, otherwise `synth`.
  std::optional<std::filesystem::path> cube_path;
  std::optional<std::filesystem::path> labels_path;
  SynthSource synth;

  SplitScheme split = PerClassScheme{50};
  std::vector<double> rhos{0.1, 0.2, 0.3, 0.4, 0.5};
  // Subset of "nla", "rlpa", "oracle-clean".
  std::vector<std::string> methods{"nla", "rlpa"};
  std::vector<ClassifierKind> classifiers{ClassifierKind::NearestNeighbor, ClassifierKind::Elm};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  RlpaConfig rlpa;
  GraphKind graph = GraphKind::SpectralSpatial;
  std::size_t knn = 10;
  SegmentationParams segmentation;
  ElmParams elm;

  // Parallel (seed, rho) jobs; 0 = hardware concurrency. Output does not
  // depend on it.
  std::size_t threads = 1;
  std::optional<std::filesystem::path> maps_dir;

  void validate() const;
};

// key = value lines; '#' starts a comment; list keys (rho, method,
// classifier, seed) repeat, every other key may appear once.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string format_experiment_config(const ExperimentConfig& config);

// Cube, ground truth and superpixels shared by all runs of one config.
struct ExperimentData {
  SpectralCube cube;
  LabelField truth;
  SuperpixelMap segments;
};

ExperimentData prepare_experiment_data(const ExperimentConfig& config);

struct ResultRow {
  std::string method;
  std::string classifier;
  double rho = 0.0;
  std::optional<std::uint64_t> seed;  // empty for the mean row
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
};

struct ExperimentReport {
  // Per-seed rows, each group followed by its mean row, sorted by
  // (method, classifier, rho, seed).
  std::vector<ResultRow> rows;
  std::string config_echo;
  double elapsed_seconds = 0.0;
  std::size_t superpixels = 0;
  // (rho, seed) cells whose AA skipped classes absent from the test set.
  std::size_t aa_cells_with_excluded_classes = 0;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentData& data);

// CSV with header method,classifier,rho,seed,oa,aa,kappa; LF line endings.
std::string format_report_csv(const ExperimentReport& report);

struct SweepCell {
  double eta = 0.0;
  double alpha = 0.0;
  double mean_oa = 0.0;
};

// RLPA-only runs of `config` for every (eta, alpha); mean OA over all
// classifier/rho/seed rows of each run.
std::vector<SweepCell> parameter_sweep(const ExperimentConfig& config, const std::vector<double>& eta_grid,
                                       const std::vector<double>& alpha_grid);
std::string format_sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace hsclean

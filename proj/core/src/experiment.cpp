#include "hsclean/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hsclean/errors.hpp"
#include "hsclean/metrics.hpp"
#include "hsclean/noisegen.hpp"
#include "hsclean/random.hpp"
#include "hsclean/ssgraph.hpp"
#include "parallel.hpp"
#include "textio.hpp"

namespace hsclean {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kCleanseStream = 3;
constexpr std::uint64_t kElmStream = 4;

const std::set<std::string> kMethods{"nla", "rlpa", "oracle-clean"};

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

std::uint64_t rho_key(double rho) { return std::bit_cast<std::uint64_t>(rho); }

}  // namespace

SynthSpec make_line_synth_spec(const SynthSource& source) {
  SynthSpec spec = make_synth_spec(source.height, source.width, source.bands, source.classes, source.grid_rows,
                                   source.grid_cols, source.sigma, source.seed);
  Rng rng(split_seed(source.seed, 0x11E));
  std::vector<double> base(source.bands);
  for (auto& b : base) b = rng.uniform(0.3, 0.7);
  std::vector<double> dir(source.bands);
  double norm = 0.0;
  for (auto& d : dir) {
    d = rng.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  for (auto& d : dir) d /= norm;
  std::vector<int> level(static_cast<std::size_t>(source.classes));
  std::iota(level.begin(), level.end(), 0);
  rng.shuffle(std::span<int>(level));
  const double centre = 0.5 * (source.classes - 1);
  for (int c = 0; c < source.classes; ++c) {
    const double offset = (level[static_cast<std::size_t>(c)] - centre) * source.separation;
    auto& mean = spec.class_means[static_cast<std::size_t>(c)];
    for (std::size_t b = 0; b < source.bands; ++b) mean[b] = base[b] + offset * dir[b];
  }
  spec.validate();
  return spec;
}

void ExperimentConfig::validate() const {
  if (cube_path.has_value() != labels_path.has_value()) {
    throw ConfigError("cube and labels must be configured together");
  }
  if (rhos.empty()) throw ConfigError("no noise levels configured");
  for (const double r : rhos) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("noise level " + shortest(r) + " outside [0, 1]");
  }
  if (methods.empty()) throw ConfigError("no methods configured");
  for (const auto& m : methods) {
    if (!kMethods.count(m)) throw ConfigError("unknown method '" + m + "' (expected nla, rlpa or oracle-clean)");
  }
  if (classifiers.empty()) throw ConfigError("no classifiers configured");
  if (seeds.empty()) throw ConfigError("no seeds configured");
  rlpa.validate();
  if (graph == GraphKind::SpectralOnly && knn < 1) throw ConfigError("knn must be at least 1");
  if (elm.hidden < 1 || !(elm.lambda > 0.0)) throw ConfigError("invalid ELM parameters");
}

namespace {

struct ConfigParser {
  ExperimentConfig cfg;
  std::set<std::string> seen_scalars;
  bool cleared_rho = false, cleared_method = false, cleared_classifier = false, cleared_seed = false;

  static std::uint64_t to_u64(std::string_view v, const std::string& key) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("'" + key + "' expects a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
  }
  static double to_double(std::string_view v, const std::string& key) {
    try {
      return textio::parse_double(v, key);
    } catch (const DataError&) {
      throw ConfigError("'" + key + "' expects a number, got '" + std::string(v) + "'");
    }
  }

  void apply(const std::string& key, std::string_view v) {
    const bool list = key == "rho" || key == "method" || key == "classifier" || key == "seed";
    if (!list && !seen_scalars.insert(key).second) throw ConfigError("key '" + key + "' given twice");

    if (key == "rho") {
      if (!cleared_rho) cfg.rhos.clear(), cleared_rho = true;
      cfg.rhos.push_back(to_double(v, key));
    } else if (key == "method") {
      if (!cleared_method) cfg.methods.clear(), cleared_method = true;
      cfg.methods.emplace_back(v);
    } else if (key == "classifier") {
      if (!cleared_classifier) cfg.classifiers.clear(), cleared_classifier = true;
      cfg.classifiers.push_back(parse_classifier_kind(std::string(v)));
    } else if (key == "seed") {
      if (!cleared_seed) cfg.seeds.clear(), cleared_seed = true;
      cfg.seeds.push_back(to_u64(v, key));
    } else if (key == "cube") {
      cfg.cube_path = std::filesystem::path(std::string(v));
    } else if (key == "labels") {
      cfg.labels_path = std::filesystem::path(std::string(v));
    } else if (key == "synth.height") {
      cfg.synth.height = to_u64(v, key);
    } else if (key == "synth.width") {
      cfg.synth.width = to_u64(v, key);
    } else if (key == "synth.bands") {
      cfg.synth.bands = to_u64(v, key);
    } else if (key == "synth.classes") {
      cfg.synth.classes = static_cast<int>(to_u64(v, key));
    } else if (key == "synth.grid_rows") {
      cfg.synth.grid_rows = to_u64(v, key);
    } else if (key == "synth.grid_cols") {
      cfg.synth.grid_cols = to_u64(v, key);
    } else if (key == "synth.sigma") {
      cfg.synth.sigma = to_double(v, key);
    } else if (key == "synth.separation") {
      cfg.synth.separation = to_double(v, key);
    } else if (key == "synth.seed") {
      cfg.synth.seed = to_u64(v, key);
    } else if (key == "split") {
      const auto colon = v.find(':');
      if (colon == std::string_view::npos) throw ConfigError("split expects per_class:N or fraction:P");
      const auto kind = v.substr(0, colon);
      const auto arg = v.substr(colon + 1);
      if (kind == "per_class") {
        cfg.split = PerClassScheme{to_u64(arg, key)};
      } else if (kind == "fraction") {
        cfg.split = FractionScheme{to_double(arg, key)};
      } else {
        throw ConfigError("unknown split scheme '" + std::string(kind) + "'");
      }
    } else if (key == "eta") {
      cfg.rlpa.eta = to_double(v, key);
    } else if (key == "alpha") {
      cfg.rlpa.alpha = to_double(v, key);
    } else if (key == "rounds") {
      cfg.rlpa.rounds = to_u64(v, key);
    } else if (key == "fallback") {
      if (v == "keep-original") {
        cfg.rlpa.fallback = UnreachableFallback::KeepOriginal;
      } else if (v == "lowest-class") {
        cfg.rlpa.fallback = UnreachableFallback::LowestClass;
      } else {
        throw ConfigError("fallback expects keep-original or lowest-class");
      }
    } else if (key == "graph") {
      if (v == "spectral-spatial") {
        cfg.graph = GraphKind::SpectralSpatial;
      } else if (v == "spectral") {
        cfg.graph = GraphKind::SpectralOnly;
      } else {
        throw ConfigError("graph expects spectral-spatial or spectral");
      }
    } else if (key == "knn") {
      cfg.knn = to_u64(v, key);
    } else if (key == "tbase") {
      cfg.segmentation.t_base = to_u64(v, key);
    } else if (key == "superpixels") {
      cfg.segmentation.fixed_count = to_u64(v, key);
    } else if (key == "compactness") {
      cfg.segmentation.slic.compactness = to_double(v, key);
    } else if (key == "slic_iters") {
      cfg.segmentation.slic.max_iters = to_u64(v, key);
    } else if (key == "log_sigma") {
      cfg.segmentation.log_sigma = to_double(v, key);
    } else if (key == "log_threshold") {
      cfg.segmentation.log_threshold = to_double(v, key);
    } else if (key == "elm.hidden") {
      cfg.elm.hidden = to_u64(v, key);
    } else if (key == "elm.lambda") {
      cfg.elm.lambda = to_double(v, key);
    } else if (key == "threads") {
      cfg.threads = to_u64(v, key);
    } else if (key == "maps") {
      cfg.maps_dir = std::filesystem::path(std::string(v));
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  ConfigParser parser;
  std::size_t lineno = 0;
  for (const auto raw : textio::nonblank_lines(text)) {
    ++lineno;
    auto line = raw.substr(0, raw.find('#'));
    line = textio::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line '" + std::string(line) + "' is not key = value");
    }
    const std::string key(textio::trim(line.substr(0, eq)));
    const auto value = textio::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line '" + std::string(line) + "' has an empty key");
    parser.apply(key, value);
  }
  parser.cfg.validate();
  return parser.cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = textio::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(text);
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  if (c.cube_path) {
    out << "cube = " << c.cube_path->string() << "\nlabels = " << c.labels_path->string() << "\n";
  } else {
    out << "synth.height = " << c.synth.height << "\nsynth.width = " << c.synth.width
        << "\nsynth.bands = " << c.synth.bands << "\nsynth.classes = " << c.synth.classes
        << "\nsynth.grid_rows = " << c.synth.grid_rows << "\nsynth.grid_cols = " << c.synth.grid_cols
        << "\nsynth.sigma = " << shortest(c.synth.sigma) << "\nsynth.separation = " << shortest(c.synth.separation)
        << "\nsynth.seed = " << c.synth.seed << "\n";
  }
  if (const auto* f = std::get_if<FractionScheme>(&c.split)) {
    out << "split = fraction:" << shortest(f->fraction) << "\n";
  } else {
    out << "split = per_class:" << std::get<PerClassScheme>(c.split).count << "\n";
  }
  for (const double r : c.rhos) out << "rho = " << shortest(r) << "\n";
  for (const auto& m : c.methods) out << "method = " << m << "\n";
  for (const auto k : c.classifiers) out << "classifier = " << to_string(k) << "\n";
  for (const auto s : c.seeds) out << "seed = " << s << "\n";
  out << "eta = " << shortest(c.rlpa.eta) << "\nalpha = " << shortest(c.rlpa.alpha) << "\nrounds = " << c.rlpa.rounds
      << "\nfallback = " << (c.rlpa.fallback == UnreachableFallback::KeepOriginal ? "keep-original" : "lowest-class")
      << "\ngraph = " << (c.graph == GraphKind::SpectralSpatial ? "spectral-spatial" : "spectral")
      << "\nknn = " << c.knn << "\ntbase = " << c.segmentation.t_base << "\n";
  if (c.segmentation.fixed_count) out << "superpixels = " << *c.segmentation.fixed_count << "\n";
  out << "compactness = " << shortest(c.segmentation.slic.compactness) << "\nslic_iters = " << c.segmentation.slic.max_iters
      << "\nlog_sigma = " << shortest(c.segmentation.log_sigma) << "\n";
  if (c.segmentation.log_threshold) out << "log_threshold = " << shortest(*c.segmentation.log_threshold) << "\n";
  out << "elm.hidden = " << c.elm.hidden << "\nelm.lambda = " << shortest(c.elm.lambda) << "\n";
  return out.str();
}

ExperimentData prepare_experiment_data(const ExperimentConfig& config) {
  config.validate();
  ExperimentData data;
  if (config.cube_path) {
    data.cube = load_cube(*config.cube_path, cube_format_for(*config.cube_path));
    data.truth = load_labels(*config.labels_path);
    if (data.truth.height() != data.cube.height() || data.truth.width() != data.cube.width()) {
      throw DataError("label grid dimensions do not match the cube");
    }
  } else {
    auto synth = synth_cube(make_line_synth_spec(config.synth), split_seed(config.synth.seed, 0xC0BE));
    data.cube = std::move(synth.cube);
    data.truth = std::move(synth.labels);
  }
  if (data.truth.num_classes() < 2) throw DataError("experiments need at least 2 classes");
  data.segments = segment_cube(data.cube, config.segmentation);
  return data;
}

namespace {

struct CellResult {
  std::vector<ResultRow> rows;
  bool aa_excluded = false;
};

TransitionMatrix build_graph(const ExperimentConfig& config, const ExperimentData& data, const SampleSet& samples) {
  const SparseAffinity w = config.graph == GraphKind::SpectralSpatial
                               ? build_affinity(samples, data.segments)
                               : build_affinity_spectral_only(samples, std::min(config.knn, samples.size() - 1));
  return build_transition(w);
}

CellResult run_cell(const ExperimentConfig& config, const ExperimentData& data, std::uint64_t seed, double rho) {
  CellResult cell;
  const int classes = data.truth.num_classes();
  const SampleSplit split = train_test_split(data.truth, config.split, split_seed(seed, kSplitStream));
  const SampleSet samples = SampleSet::from_cube(data.cube, split.train_indices);
  const SpectraMatrix test_x = data.cube.gather(split.test_indices);
  std::vector<int> test_y(split.test_indices.size());
  for (std::size_t i = 0; i < test_y.size(); ++i) test_y[i] = data.truth[split.test_indices[i]];

  const LabelMatrix clean = to_onehot(data.truth, split.train_indices);
  const LabelMatrix noisy =
      apply_label_noise(clean, {rho, split_seed(split_seed(seed, kNoiseStream), rho_key(rho))});

  for (const auto& method : config.methods) {
    std::vector<std::size_t> rows;  // training rows used
    std::vector<int> labels;
    if (method == "nla") {
      labels = from_onehot(noisy);
      rows.resize(labels.size());
      std::iota(rows.begin(), rows.end(), 0);
    } else if (method == "rlpa") {
      RlpaConfig rc = config.rlpa;
      rc.seed = split_seed(split_seed(seed, kCleanseStream), rho_key(rho));
      rc.threads = 1;
      const TransitionMatrix t = build_graph(config, data, samples);
      labels = rlpa_cleanse(t, noisy, rc).labels;
      rows.resize(labels.size());
      std::iota(rows.begin(), rows.end(), 0);
    } else {
      for (std::size_t i = 0; i < noisy.rows(); ++i) {
        if (noisy.label(i) == clean.label(i)) {
          rows.push_back(i);
          labels.push_back(noisy.label(i));
        }
      }
      if (rows.empty()) throw DataError("oracle-clean: every training label is noisy");
    }
    SpectraMatrix train_x(static_cast<Eigen::Index>(rows.size()), samples.spectra.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      train_x.row(static_cast<Eigen::Index>(r)) = samples.spectra.row(static_cast<Eigen::Index>(rows[r]));
    }

    for (const auto kind : config.classifiers) {
      ElmParams elm = config.elm;
      elm.seed = split_seed(seed, kElmStream);
      auto clf = make_classifier(kind, elm);
      clf->fit(train_x, labels);
      const auto pred = clf->predict(test_x);
      // Predictions may name classes the training labels never used; the
      // matrix spans the ground-truth classes.
      const ConfusionMatrix m = confusion(test_y, pred, classes);
      const auto aa = average_accuracy(m);
      cell.aa_excluded = cell.aa_excluded || !aa.excluded_classes.empty();
      cell.rows.push_back({method, clf->name(), rho, seed, overall_accuracy(m), aa.value, kappa(m)});

      if (config.maps_dir) {
        const LabelField map = LabelField(data.truth.height(), data.truth.width(),
                                          std::vector<int>(data.truth.pixel_count(), 0), classes)
                                   .with_labels(split.test_indices, pred);
        const auto name = "map_" + method + "_" + clf->name() + "_rho" + shortest(rho) + "_seed" +
                          std::to_string(seed) + ".ppm";
        write_ppm(render_map(map, default_palette(classes)), *config.maps_dir / name);
      }
    }
  }
  return cell;
}

bool row_less(const ResultRow& a, const ResultRow& b) {
  if (a.method != b.method) return a.method < b.method;
  if (a.classifier != b.classifier) return a.classifier < b.classifier;
  if (a.rho != b.rho) return a.rho < b.rho;
  // Mean rows sort after the seeds of their group.
  if (a.seed.has_value() != b.seed.has_value()) return a.seed.has_value();
  return a.seed.value_or(0) < b.seed.value_or(0);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_experiment_data(config));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentData& data) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::pair<std::uint64_t, double>> jobs;
  for (const auto seed : config.seeds) {
    for (const double rho : config.rhos) jobs.emplace_back(seed, rho);
  }
  if (config.maps_dir) std::filesystem::create_directories(*config.maps_dir);
  std::vector<CellResult> cells(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    try {
      cells[j] = run_cell(config, data, jobs[j].first, jobs[j].second);
    } catch (const ConfigError& e) {
      throw ConfigError("cell seed=" + std::to_string(jobs[j].first) + " rho=" + shortest(jobs[j].second) + ": " +
                        e.what());
    } catch (const DataError& e) {
      throw DataError("cell seed=" + std::to_string(jobs[j].first) + " rho=" + shortest(jobs[j].second) + ": " +
                      e.what());
    }
  });

  ExperimentReport report;
  report.config_echo = format_experiment_config(config);
  report.superpixels = data.segments.count;
  for (auto& c : cells) {
    report.aa_cells_with_excluded_classes += c.aa_excluded ? 1 : 0;
    report.rows.insert(report.rows.end(), c.rows.begin(), c.rows.end());
  }
  std::sort(report.rows.begin(), report.rows.end(), row_less);

  // Mean rows, accumulated in sorted order.
  std::vector<ResultRow> means;
  for (std::size_t i = 0; i < report.rows.size();) {
    std::size_t j = i;
    ResultRow mean{report.rows[i].method, report.rows[i].classifier, report.rows[i].rho, std::nullopt, 0, 0, 0};
    while (j < report.rows.size() && report.rows[j].method == mean.method &&
           report.rows[j].classifier == mean.classifier && report.rows[j].rho == mean.rho) {
      mean.oa += report.rows[j].oa;
      mean.aa += report.rows[j].aa;
      mean.kappa += report.rows[j].kappa;
      ++j;
    }
    const auto count = static_cast<double>(j - i);
    mean.oa /= count;
    mean.aa /= count;
    mean.kappa /= count;
    means.push_back(mean);
    i = j;
  }
  report.rows.insert(report.rows.end(), means.begin(), means.end());
  std::sort(report.rows.begin(), report.rows.end(), row_less);

  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_report_csv(const ExperimentReport& report) {
  std::string out = "method,classifier,rho,seed,oa,aa,kappa\n";
  for (const auto& r : report.rows) {
    out += r.method + "," + r.classifier + "," + shortest(r.rho) + "," +
           (r.seed ? std::to_string(*r.seed) : std::string("mean")) + "," + fixed(r.oa) + "," + fixed(r.aa) + "," +
           fixed(r.kappa) + "\n";
  }
  return out;
}

std::vector<SweepCell> parameter_sweep(const ExperimentConfig& config, const std::vector<double>& eta_grid,
                                       const std::vector<double>& alpha_grid) {
  if (eta_grid.empty() || alpha_grid.empty()) throw ConfigError("sweep grids must be non-empty");
  for (const double e : eta_grid) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("sweep eta values must lie in (0, 1)");
  }
  for (const double a : alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("sweep alpha values must lie in (0, 1)");
  }
  ExperimentConfig base = config;
  base.methods = {"rlpa"};
  base.maps_dir.reset();
  const ExperimentData data = prepare_experiment_data(base);

  std::vector<SweepCell> cells;
  for (const double eta : eta_grid) {
    for (const double alpha : alpha_grid) {
      ExperimentConfig c = base;
      c.rlpa.eta = eta;
      c.rlpa.alpha = alpha;
      const ExperimentReport report = run_experiment(c, data);
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& r : report.rows) {
        if (!r.seed) continue;
        sum += r.oa;
        ++count;
      }
      cells.push_back({eta, alpha, sum / static_cast<double>(count)});
    }
  }
  return cells;
}

std::string format_sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "eta,alpha,mean_oa\n";
  for (const auto& c : cells) out += shortest(c.eta) + "," + shortest(c.alpha) + "," + fixed(c.mean_oa) + "\n";
  return out;
}

}  // namespace hsclean

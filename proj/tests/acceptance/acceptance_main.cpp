// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "helpers.hpp"
#include "hsclean/experiment.hpp"
#include "hsclean/metrics.hpp"
#include "hsclean/noisegen.hpp"
#include "hsclean/propagation.hpp"
#include "hsclean/random.hpp"
#include "hsclean/rlpa.hpp"
#include "oracle.hpp"

using namespace hsclean;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 60 x 60 cube, 6 classes on a 3 x 4 grid of 20 x 15 regions, 50 bands,
// 100 training samples per class.
ExperimentConfig synthetic_setting(double sigma) {
  ExperimentConfig c;
  c.synth.height = 60;
  c.synth.width = 60;
  c.synth.bands = 50;
  c.synth.classes = 6;
  c.synth.grid_rows = 3;
  c.synth.grid_cols = 4;
  c.synth.sigma = sigma;
  c.synth.separation = 0.5;
  c.synth.seed = 1;
  c.segmentation.t_base = 200;
  c.split = PerClassScheme{100};
  c.rhos = {0.1, 0.2, 0.3, 0.4, 0.5};
  c.methods = {"nla", "rlpa"};
  c.classifiers = {ClassifierKind::NearestNeighbor, ClassifierKind::Elm};
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.threads = std::max(1u, std::thread::hardware_concurrency());
  return c;
}

// Pixels whose segment majority class differs from their own.
std::size_t impure_pixels(const ExperimentData& data) {
  std::map<int, std::map<int, std::size_t>> tally;
  for (std::size_t p = 0; p < data.truth.pixel_count(); ++p) ++tally[data.segments[p]][data.truth[p]];
  std::size_t impure = 0;
  for (const auto& [seg, counts] : tally) {
    std::size_t total = 0, top = 0;
    for (const auto& [cls, n] : counts) {
      total += n;
      top = std::max(top, n);
    }
    impure += total - top;
  }
  return impure;
}

oracle::DenseMatrix dense_of(const BlockMatrix& m) {
  const Eigen::MatrixXd d = m.dense();
  oracle::DenseMatrix out(m.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(i, j) = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

// ||F - (alpha T F + (1 - alpha) Y)||_inf by dense loops.
double dense_residual(const oracle::DenseMatrix& t, const oracle::DenseMatrix& y, double alpha, const ScoreMatrix& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t c = 0; c < y.cols; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < t.cols; ++j) acc += t(i, j) * f(j, static_cast<int>(c));
      const double r = f(i, static_cast<int>(c)) - (alpha * acc + (1.0 - alpha) * y(i, c));
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

// Structural checks on a transition matrix; `segment_of` maps a node to its
// superpixel, or is empty for graphs without one.
struct StructureTally {
  std::size_t matrices = 0;
  double worst_column_error = 0.0;
  double most_negative = 0.0;
  std::size_t cross_entries = 0;
};

void check_structure(const TransitionMatrix& t, const std::function<int(std::size_t)>& segment_of, StructureTally& tally) {
  ++tally.matrices;
  std::vector<double> sums(t.size(), 0.0);
  const oracle::DenseMatrix d = dense_of(t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double v = d(i, j);
      sums[j] += v;
      tally.most_negative = std::min(tally.most_negative, v);
      if (v != 0.0 && segment_of && segment_of(i) != segment_of(j)) ++tally.cross_entries;
    }
  }
  for (const double s : sums) tally.worst_column_error = std::max(tally.worst_column_error, std::abs(s - 1.0));
}

// Residual tally shared by criteria 1, 5 and 6.
struct ResidualTally {
  std::size_t instances = 0;
  double worst = 0.0;
};

Outcome propagation_oracle(ResidualTally& residuals, StructureTally& structure) {
  const auto start = Clock::now();
  Rng rng(20240901);
  double worst = 0.0;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 1 + rng.below(50);
    const int classes = 1 + static_cast<int>(rng.below(8));
    const double alpha = g % 2 ? 0.9 : 0.5;
    const auto graph = test::random_block_graph(n, rng);
    const auto y = test::random_seeds(n, classes, rng);
    const auto f = propagate_closed(graph.t, y, alpha);
    const auto yd = test::to_dense(y);
    const auto ref = oracle::dense_fixed_point(graph.dense, yd, alpha, 10000);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < classes; ++c) worst = std::max(worst, std::abs(f(i, c) - ref(i, static_cast<std::size_t>(c))));
    residuals.worst = std::max(residuals.worst, dense_residual(graph.dense, yd, alpha, f));
    ++residuals.instances;
    const auto& t = graph.t;
    check_structure(t, [&t](std::size_t i) { return static_cast<int>(t.block_of(i)); }, structure);
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-8 && elapsed < 10.0, fmt("100 graphs, max |closed - dense| = %.3g (<= 1e-8), %.2f s (< 10 s)", worst, elapsed)};
}

Outcome noise_calibration() {
  bool ok = true;
  double worst_rate = 0.0, worst_z = 0.0;
  const std::size_t n = 100000;
  std::uint64_t seed = 1000;
  for (const double rho : {0.1, 0.3, 0.5}) {
    for (const int classes : {9, 16}) {
      const auto stats = oracle::mc_flip_stats(classes, rho, n, seed++);
      worst_rate = std::max(worst_rate, std::abs(stats.rho_hat - rho));
      const double p = rho / (classes - 1);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      for (const double f : stats.target_frequency) worst_z = std::max(worst_z, std::abs(f - p) / se);
    }
  }
  ok = worst_rate <= 0.005 && worst_z <= 3.0;
  return {ok, fmt("max |rate - rho| = %.4f (<= 0.005), max per-class deviation = %.2f SE (<= 3)", worst_rate, worst_z)};
}

struct TrainingSet {
  SampleSplit split;
  LabelMatrix clean;
  TransitionMatrix t;
};

TrainingSet training_set(const ExperimentConfig& cfg, const ExperimentData& data, std::uint64_t seed) {
  TrainingSet s;
  s.split = train_test_split(data.truth, cfg.split, split_seed(seed, 1));
  s.clean = to_onehot(data.truth, s.split.train_indices);
  s.t = build_transition(build_affinity(SampleSet::from_cube(data.cube, s.split.train_indices), data.segments));
  return s;
}

void record_graph(const TrainingSet& s, const ExperimentData& data, std::uint64_t seed, ResidualTally& residuals,
                  StructureTally& structure) {
  const auto& pixels = s.split.train_indices;
  check_structure(s.t, [&](std::size_t i) { return data.segments[pixels[i]]; }, structure);
  // Residual of one RLPA-style seed matrix on this graph.
  Rng rng(split_seed(seed, 99));
  std::vector<int> labels(s.clean.labels().begin(), s.clean.labels().end());
  for (auto& l : labels)
    if (rng.uniform01() > 0.7) l = 0;
  const LabelMatrix y(s.clean.cols(), labels);
  const auto f = propagate_closed(s.t, y, 0.9);
  residuals.worst = std::max(residuals.worst, dense_residual(dense_of(s.t), test::to_dense(y), 0.9, f));
  ++residuals.instances;
}

Outcome identity_cleansing(ResidualTally& residuals, StructureTally& structure) {
  const auto start = Clock::now();
  const auto cfg = synthetic_setting(0.0);
  const auto data = prepare_experiment_data(cfg);
  const std::size_t impure = impure_pixels(data);
  int unchanged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = training_set(cfg, data, seed);
    record_graph(s, data, seed, residuals, structure);
    RlpaConfig rc;
    rc.eta = 0.7;
    rc.alpha = 0.9;
    rc.rounds = 10;
    rc.seed = seed;
    const auto noisy = apply_label_noise(s.clean, {0.0, seed});
    const auto out = rlpa_cleanse(s.t, noisy, rc);
    unchanged += std::equal(out.labels.begin(), out.labels.end(), noisy.labels().begin());
  }
  const double elapsed = seconds_since(start);
  return {impure == 0 && unchanged == 20 && elapsed < 30.0,
          fmt("%zu segments, %zu impure pixels, unchanged for %d/20 seeds, %.1f s (< 30 s)", data.segments.count,
              impure, unchanged, elapsed)};
}

Outcome noisy_count_trend(ResidualTally& residuals, StructureTally& structure) {
  const auto cfg = synthetic_setting(0.05);
  const auto data = prepare_experiment_data(cfg);
  const std::size_t impure = impure_pixels(data);
  bool ok = impure == 0;
  std::string detail = fmt("%zu segments, %zu impure pixels", data.segments.count, impure);
  std::vector<TrainingSet> sets;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    sets.push_back(training_set(cfg, data, seed));
    record_graph(sets.back(), data, seed, residuals, structure);
  }
  for (const double rho : {0.1, 0.2, 0.5}) {
    std::vector<std::size_t> initial, final_count;
    int monotone = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto& s = sets[seed - 1];
      const auto noisy = apply_label_noise(s.clean, {rho, split_seed(seed, 2)});
      RlpaConfig rc;
      rc.rounds = 100;
      rc.seed = split_seed(seed, 3);
      const auto out = rlpa_cleanse(s.t, noisy, rc, s.clean.labels());
      initial.push_back(*out.initial_noisy);
      final_count.push_back(out.rounds.back().cumulative_noisy);
      monotone += out.rounds[99].cumulative_noisy <= out.rounds[9].cumulative_noisy;
    }
    std::sort(initial.begin(), initial.end());
    std::sort(final_count.begin(), final_count.end());
    // Median of 20 values: mean of the two middle ones.
    const double med_initial = 0.5 * static_cast<double>(initial[9] + initial[10]);
    const double med_final = 0.5 * static_cast<double>(final_count[9] + final_count[10]);
    const bool cell = med_final < 0.5 * med_initial && monotone >= 16;
    ok = ok && cell;
    detail += fmt("; rho=%.1f median %.1f -> %.1f, S100<=S10 in %d/20", rho, med_initial, med_final, monotone);
  }
  return {ok, detail};
}

double mean_oa(const ExperimentReport& r, const std::string& method, const std::string& clf, double rho) {
  for (const auto& row : r.rows)
    if (!row.seed && row.method == method && row.classifier == clf && row.rho == rho) return row.oa;
  return std::nan("");
}

Outcome accuracy_trend(std::string& csv_out) {
  const auto start = Clock::now();
  const auto cfg = synthetic_setting(0.05);
  const auto report = run_experiment(cfg);
  const double elapsed = seconds_since(start);
  csv_out = format_report_csv(report);
  bool ok = elapsed < 300.0;
  std::string detail;
  for (const std::string clf : {"nn", "elm"}) {
    detail += clf + ":";
    for (const double rho : cfg.rhos) {
      const double gain = 100.0 * (mean_oa(report, "rlpa", clf, rho) - mean_oa(report, "nla", clf, rho));
      const double need = rho >= 0.3 ? 5.0 : 0.0;
      ok = ok && gain >= need;
      detail += fmt(" %.1f:%+.2f", rho, gain);
    }
    detail += "; ";
  }
  return {ok, detail + fmt("%.1f s (< 300 s)", elapsed)};
}

// Optional run on the public scenes. HSCLEAN_DATASETS must hold
// <name>.raw and <name>_gt.txt for indian_pines, paviaU and salinas.
std::optional<Outcome> real_datasets() {
  const char* root = std::getenv("HSCLEAN_DATASETS");
  if (!root) return std::nullopt;
  const std::filesystem::path dir(root);
  const std::vector<std::string> names{"indian_pines", "paviaU", "salinas"};
  for (const auto& n : names) {
    if (!std::filesystem::exists(dir / (n + ".raw")) || !std::filesystem::exists(dir / (n + "_gt.txt"))) return std::nullopt;
  }
  std::map<std::pair<std::string, double>, std::pair<double, double>> sums;  // (clf, rho) -> (rlpa, nla)
  for (const auto& n : names) {
    ExperimentConfig c;
    c.cube_path = dir / (n + ".raw");
    c.labels_path = dir / (n + "_gt.txt");
    c.split = n == "indian_pines" ? SplitScheme{FractionScheme{0.1}} : SplitScheme{PerClassScheme{50}};
    c.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto report = run_experiment(c);
    for (const auto clf : {"nn", "elm"}) {
      for (const double rho : c.rhos) {
        auto& s = sums[{clf, rho}];
        s.first += mean_oa(report, "rlpa", clf, rho);
        s.second += mean_oa(report, "nla", clf, rho);
      }
    }
  }
  int losing = 0;
  for (const auto& [key, s] : sums) losing += s.first <= s.second;
  return Outcome{losing <= 1, fmt("%d of %zu (classifier, rho) cells without an RLPA gain (<= 1)", losing, sums.size())};
}

Outcome metric_correctness() {
  ConfusionMatrix m(2);
  m.add(1, 1, 35);
  m.add(1, 2, 5);
  m.add(2, 1, 10);
  m.add(2, 2, 50);
  const double oa = overall_accuracy(m), k = kappa(m), aa = average_accuracy(m).value;
  bool ok = std::abs(oa - 0.85) <= 1e-10 && std::abs(k - 0.34 / 0.49) <= 1e-10 &&
            std::abs(aa - (35.0 / 40.0 + 50.0 / 60.0) / 2.0) <= 1e-10;

  ConfusionMatrix diag(3);
  diag.add(1, 1, 12);
  diag.add(2, 2, 7);
  diag.add(3, 3, 30);
  ConfusionMatrix chance(2);
  chance.add(1, 1, 25);
  chance.add(1, 2, 25);
  chance.add(2, 1, 25);
  chance.add(2, 2, 25);
  const double k_diag = kappa(diag), k_chance = kappa(chance);
  ok = ok && std::abs(k_diag - 1.0) <= 1e-10 && std::abs(k_chance) <= 1e-10;
  return {ok, fmt("OA=%.12f kappa=%.12f AA=%.12f; diagonal kappa=%.3g; chance kappa=%.3g", oa, k, aa, k_diag, k_chance)};
}

Outcome parallel_determinism(const std::string& csv_parallel) {
  auto cfg = synthetic_setting(0.05);
  cfg.threads = 1;
  const std::string serial = format_report_csv(run_experiment(cfg));
  auto cfg3 = synthetic_setting(0.05);
  cfg3.threads = 3;
  const std::string three = format_report_csv(run_experiment(cfg3));
  const bool ok = serial == csv_parallel && serial == three;
  return {ok, fmt("threads 1 / 3 / %zu: %zu-byte CSVs %s", synthetic_setting(0.05).threads, serial.size(),
                  ok ? "identical" : "differ")};
}

// Independent partition and 4-connectivity check.
bool valid_partition(const SuperpixelMap& m) {
  const std::size_t n = m.height * m.width;
  if (m.segment.size() != n || m.count == 0) return false;
  std::vector<std::size_t> size(m.count, 0);
  for (const int s : m.segment) {
    if (s < 0 || static_cast<std::size_t>(s) >= m.count) return false;
    ++size[static_cast<std::size_t>(s)];
  }
  if (std::find(size.begin(), size.end(), 0u) != size.end()) return false;
  std::vector<char> seen(n, 0);
  std::vector<char> segment_started(m.count, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    const auto s = static_cast<std::size_t>(m.segment[start]);
    if (segment_started[s]) return false;  // second component of one segment
    segment_started[s] = 1;
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t y = p / m.width, x = p % m.width;
      const std::size_t nb[4] = {x > 0 ? p - 1 : p, x + 1 < m.width ? p + 1 : p, y > 0 ? p - m.width : p,
                                 y + 1 < m.height ? p + m.width : p};
      for (const auto q : nb) {
        if (!seen[q] && m.segment[q] == m.segment[p]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
  }
  return true;
}

Outcome segmentation_contract() {
  Rng rng(31337);
  int valid = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 10 + rng.below(51), w = 10 + rng.below(51);
    PCImage img{h, w, std::vector<double>(h * w), false};
    switch (trial % 3) {
      case 0:  // white noise
        for (auto& v : img.values) v = rng.normal();
        break;
      case 1: {  // random rectangles over a ramp
        for (std::size_t p = 0; p < h * w; ++p) img.values[p] = 0.01 * static_cast<double>(p % w);
        for (int r = 0; r < 6; ++r) {
          const std::size_t y0 = rng.below(h), x0 = rng.below(w), y1 = y0 + rng.below(h - y0) + 1,
                            x1 = x0 + rng.below(w - x0) + 1;
          const double level = rng.uniform(-5, 5);
          for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = x0; x < x1; ++x) img.values[y * w + x] = level;
        }
        break;
      }
      default:  // smooth blobs plus noise
        for (std::size_t p = 0; p < h * w; ++p) {
          const double y = static_cast<double>(p / w), x = static_cast<double>(p % w);
          img.values[p] = std::sin(x / 5.0) * std::cos(y / 7.0) + 0.1 * rng.normal();
        }
    }
    const std::size_t target = 1 + rng.below(std::min<std::size_t>(h * w, 200));
    SlicParams params;
    params.compactness = rng.uniform(1.0, 40.0);
    valid += valid_partition(segment_superpixels(img, target, params));
  }

  std::size_t truth_total = 0, recalled = 0;
  for (std::size_t k = 2; k <= 8; ++k) {
    const std::size_t stripe = 6 + 2 * k, h = stripe, w = k * stripe;
    PCImage img{h, w, std::vector<double>(h * w), false};
    for (std::size_t p = 0; p < h * w; ++p) img.values[p] = static_cast<double>(((p % w) / stripe) % 2 ? 1 : 0) + 0.1 * static_cast<double>((p % w) / stripe);
    const auto map = segment_superpixels(img, k);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x + 1 < w; ++x) {
        if ((x + 1) % stripe != 0) continue;  // true boundary between x and x + 1
        ++truth_total;
        recalled += map[y * w + x] != map[y * w + x + 1];
      }
    }
  }
  const double recall = static_cast<double>(recalled) / static_cast<double>(truth_total);
  return {valid == 50 && recall == 1.0, fmt("%d/50 random maps valid; stripe boundary recall %.4f", valid, recall)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  ResidualTally residuals;
  StructureTally structure;
  std::string csv;
  report(1, "propagation oracle equivalence", guarded([&] { return propagation_oracle(residuals, structure); }));
  const Outcome c5 = guarded([&] { return identity_cleansing(residuals, structure); });
  const Outcome c6 = guarded([&] { return noisy_count_trend(residuals, structure); });
  report(2, "fixed-point residual",
         {residuals.instances > 0 && residuals.worst <= 1e-10,
          fmt("%zu instances, max residual %.3g (<= 1e-10)", residuals.instances, residuals.worst)});
  report(3, "transition structure",
         {structure.matrices > 0 && structure.worst_column_error <= 1e-12 && structure.most_negative >= 0.0 &&
              structure.cross_entries == 0,
          fmt("%zu matrices, max |colsum - 1| = %.3g, min entry %.3g, %zu cross-segment entries", structure.matrices,
              structure.worst_column_error, structure.most_negative, structure.cross_entries)});
  report(4, "noise generator calibration", guarded(noise_calibration));
  report(5, "identity cleansing", c5);
  report(6, "noisy-label count trend", c6);
  report(7, "accuracy gain trend", guarded([&] { return accuracy_trend(csv); }));
  if (const auto real = real_datasets()) {
    report(7, "accuracy gain on public scenes (optional)", *real);
  } else {
    std::printf("SKIP  7 accuracy gain on public scenes (optional): HSCLEAN_DATASETS not set or incomplete\n");
  }
  report(8, "metric correctness", guarded(metric_correctness));
  report(9, "determinism under parallelism", guarded([&] { return parallel_determinism(csv); }));
  report(10, "segmentation contract", guarded(segmentation_contract));
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

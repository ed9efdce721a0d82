#include "helpers.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

namespace hsclean::test {

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto stamp = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  path_ = std::filesystem::temp_directory_path() /
          ("hsclean_" + tag + "_" + std::to_string(mix64(stamp + counter++)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

RandomBlockGraph random_block_graph(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<GraphBlock> blocks;
  std::size_t pos = 0;
  int segment = 0;
  while (pos < n) {
    const std::size_t m = std::min<std::size_t>(n - pos, 1 + rng.below(12));
    GraphBlock b;
    b.segment = segment++;
    b.nodes.assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + m));
    std::sort(b.nodes.begin(), b.nodes.end());
    const auto mm = static_cast<Eigen::Index>(m);
    b.weights = Eigen::MatrixXd::Zero(mm, mm);
    for (Eigen::Index r = 0; r < mm; ++r) {
      b.weights(r, r) = 1.0;
      for (Eigen::Index c = r + 1; c < mm; ++c) {
        if (rng.uniform01() < 0.7) b.weights(r, c) = b.weights(c, r) = rng.uniform01();
      }
    }
    blocks.push_back(std::move(b));
    pos += m;
  }
  RandomBlockGraph g;
  g.t = build_transition(SparseAffinity(n, std::move(blocks)));
  g.dense = oracle::DenseMatrix(n, n);
  const Eigen::MatrixXd d = g.t.dense();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g.dense(i, j) = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return g;
}

LabelMatrix random_seeds(std::size_t n, int classes, Rng& rng) {
  std::vector<int> labels(n, 0);
  for (auto& l : labels) {
    if (rng.uniform01() < 0.6) l = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }
  if (std::all_of(labels.begin(), labels.end(), [](int v) { return v == 0; })) labels[0] = 1;
  return LabelMatrix(classes, std::move(labels));
}

oracle::DenseMatrix to_dense(const LabelMatrix& y) {
  oracle::DenseMatrix d(y.rows(), static_cast<std::size_t>(y.cols()));
  for (std::size_t i = 0; i < y.rows(); ++i) {
    if (y.label(i) > 0) d(i, static_cast<std::size_t>(y.label(i) - 1)) = 1.0;
  }
  return d;
}

SynthSpec stripe_synth_spec(std::size_t height, std::size_t width, std::size_t bands, int classes,
                            std::size_t grid_rows, std::size_t grid_cols, double sigma) {
  SynthSpec spec;
  spec.height = height;
  spec.width = width;
  spec.bands = bands;
  spec.num_classes = classes;
  spec.grid_rows = grid_rows;
  spec.grid_cols = grid_cols;
  spec.sigma_spec = sigma;
  spec.region_classes.resize(grid_rows * grid_cols);
  for (std::size_t k = 0; k < spec.region_classes.size(); ++k) {
    spec.region_classes[k] = static_cast<int>(k % static_cast<std::size_t>(classes)) + 1;
  }
  spec.class_means.resize(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    spec.class_means[static_cast<std::size_t>(c)].assign(bands, 0.1 + 0.8 * c / std::max(1, classes - 1));
  }
  spec.validate();
  return spec;
}

}  // namespace hsclean::test

#include "hsclean/ssgraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hsclean/errors.hpp"
#include "textio.hpp"

namespace hsclean {

SampleSet SampleSet::from_cube(const SpectralCube& cube, std::span<const std::size_t> pixels) {
  return {cube.gather(pixels), {pixels.begin(), pixels.end()}};
}

BlockMatrix::BlockMatrix(std::size_t n, std::vector<GraphBlock> blocks)
    : n_(n), blocks_(std::move(blocks)), node_block_(n, n), node_local_(n, 0) {
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& block = blocks_[b];
    const auto m = static_cast<Eigen::Index>(block.nodes.size());
    if (block.weights.rows() != m || block.weights.cols() != m) {
      throw DataError("block weight matrix does not match its node list");
    }
    for (std::size_t l = 0; l < block.nodes.size(); ++l) {
      const auto node = block.nodes[l];
      if (node >= n_) throw DataError("block node out of range");
      if (node_block_[node] != n_) throw DataError("node assigned to two blocks");
      node_block_[node] = b;
      node_local_[node] = l;
    }
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (node_block_[i] == n_) throw DataError("node " + std::to_string(i) + " belongs to no block");
  }
}

double BlockMatrix::at(std::size_t i, std::size_t j) const {
  if (node_block_[i] != node_block_[j]) return 0.0;
  return blocks_[node_block_[i]].weights(static_cast<Eigen::Index>(node_local_[i]),
                                          static_cast<Eigen::Index>(node_local_[j]));
}

std::size_t BlockMatrix::nonzeros() const {
  std::size_t nnz = 0;
  for (const auto& b : blocks_) nnz += static_cast<std::size_t>((b.weights.array() != 0.0).count());
  return nnz;
}

std::vector<Triplet> BlockMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nonzeros());
  for (const auto& b : blocks_) {
    for (std::size_t c = 0; c < b.nodes.size(); ++c) {
      for (std::size_t r = 0; r < b.nodes.size(); ++r) {
        const double v = b.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (v != 0.0) out.push_back({b.nodes[r], b.nodes[c], v});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  return out;
}

Eigen::MatrixXd BlockMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : triplets()) {
    out(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  }
  return out;
}

std::vector<double> BlockMatrix::column_sums() const {
  std::vector<double> sums(n_, 0.0);
  for (const auto& b : blocks_) {
    for (std::size_t c = 0; c < b.nodes.size(); ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < b.nodes.size(); ++r) {
        s += b.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
      sums[b.nodes[c]] = s;
    }
  }
  return sums;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("spectra differ in length");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double spectral_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

namespace {

std::span<const double> row_of(const SpectraMatrix& m, std::size_t i) {
  return {m.data() + i * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

// Pairwise squared distances of the given rows plus the Gaussian weights.
Eigen::MatrixXd gaussian_block(const SpectraMatrix& spectra, std::span<const std::size_t> rows) {
  const std::size_t m = rows.size();
  Eigen::MatrixXd sq(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d2 = squared_distance(row_of(spectra, rows[i]), row_of(spectra, rows[j]));
      sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d2;
      total += d2;
    }
  }
  const double sigma = std::max(std::sqrt(total / static_cast<double>(m)), kSigmaFloor);
  const double denom = 2.0 * sigma * sigma;
  for (Eigen::Index i = 0; i < sq.rows(); ++i) {
    for (Eigen::Index j = 0; j < sq.cols(); ++j) sq(i, j) = std::exp(-sq(i, j) / denom);
  }
  return sq;
}

}  // namespace

double region_sigma(const SpectraMatrix& spectra) {
  const auto m = static_cast<std::size_t>(spectra.rows());
  if (m == 0) throw DataError("region_sigma: empty segment");
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) total += squared_distance(row_of(spectra, i), row_of(spectra, j));
  }
  return std::max(std::sqrt(total / static_cast<double>(m)), kSigmaFloor);
}

SparseAffinity build_affinity(const SampleSet& samples, const SuperpixelMap& segmap) {
  const std::size_t n = samples.size();
  if (samples.pixels.size() != n) throw DataError("sample spectra and pixel lists differ in length");
  std::map<int, std::vector<std::size_t>> by_segment;
  for (std::size_t i = 0; i < n; ++i) {
    if (samples.pixels[i] >= segmap.segment.size()) {
      throw DataError("sample pixel " + std::to_string(samples.pixels[i]) + " outside the superpixel map");
    }
    by_segment[segmap[samples.pixels[i]]].push_back(i);
  }
  std::vector<GraphBlock> blocks;
  blocks.reserve(by_segment.size());
  for (auto& [segment, nodes] : by_segment) {
    Eigen::MatrixXd w = gaussian_block(samples.spectra, nodes);
    blocks.push_back({segment, std::move(nodes), std::move(w)});
  }
  return SparseAffinity(n, std::move(blocks));
}

SparseAffinity build_affinity_spectral_only(const SampleSet& samples, std::size_t k_neighbors) {
  const std::size_t n = samples.size();
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
  if (k_neighbors >= n) throw ConfigError("k_neighbors must be smaller than the sample count");

  Eigen::MatrixXd sq(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          squared_distance(samples.spectrum(i), samples.spectrum(j));
    }
  }

  std::vector<std::vector<unsigned char>> edge(n, std::vector<unsigned char>(n, 0));
  double dist_sum = 0.0;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_neighbors), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
                        const double db = sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
                        return da != db ? da < db : a < b;
                      });
    for (std::size_t r = 0; r < k_neighbors; ++r) {
      const std::size_t j = order[r];
      edge[i][j] = edge[j][i] = 1;
      dist_sum += std::sqrt(sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  const double sigma = std::max(dist_sum / static_cast<double>(n * k_neighbors), kSigmaFloor);
  const double denom = 2.0 * sigma * sigma;

  // Connected components become blocks, ordered by their smallest node.
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = ncomp;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      for (std::size_t q = 0; q < n; ++q) {
        if (edge[p][q] && comp[q] < 0) {
          comp[q] = ncomp;
          stack.push_back(q);
        }
      }
    }
    ++ncomp;
  }
  std::vector<GraphBlock> blocks(static_cast<std::size_t>(ncomp));
  for (std::size_t i = 0; i < n; ++i) blocks[static_cast<std::size_t>(comp[i])].nodes.push_back(i);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& block = blocks[b];
    block.segment = static_cast<int>(b);
    const auto m = static_cast<Eigen::Index>(block.nodes.size());
    block.weights = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) {
        const auto i = block.nodes[static_cast<std::size_t>(r)];
        const auto j = block.nodes[static_cast<std::size_t>(c)];
        if (i == j || edge[i][j]) {
          block.weights(r, c) = std::exp(-sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / denom);
        }
      }
    }
  }
  return SparseAffinity(n, std::move(blocks));
}

TransitionMatrix build_transition(const SparseAffinity& affinity) {
  std::vector<GraphBlock> blocks = affinity.blocks();
  for (auto& block : blocks) {
    for (Eigen::Index c = 0; c < block.weights.cols(); ++c) {
      double sum = 0.0;
      for (Eigen::Index r = 0; r < block.weights.rows(); ++r) sum += block.weights(r, c);
      if (!(sum > 0.0)) throw InternalError("affinity column with zero mass");
      for (Eigen::Index r = 0; r < block.weights.rows(); ++r) block.weights(r, c) /= sum;
    }
  }
  return TransitionMatrix(affinity.size(), std::move(blocks));
}

std::string format_transition(const TransitionMatrix& t) {
  const auto entries = t.triplets();
  std::string out = std::to_string(t.size()) + " " + std::to_string(entries.size()) + "\n";
  for (const auto& e : entries) {
    out += std::to_string(e.row);
    out += ' ';
    out += std::to_string(e.col);
    out += ' ';
    out += textio::format_g17(e.value);
    out += '\n';
  }
  return out;
}

void write_transition(const TransitionMatrix& t, const std::filesystem::path& path) {
  textio::write_file(path, format_transition(t));
}

}  // namespace hsclean

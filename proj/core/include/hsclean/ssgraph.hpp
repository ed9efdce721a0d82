#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hsclean/datacube.hpp"
#include "hsclean/segmentation.hpp"

namespace hsclean {

// Training samples: spectra (one per row) and their flat pixel indices.
struct SampleSet {
  SpectraMatrix spectra;
  std::vector<std::size_t> pixels;

  std::size_t size() const { return static_cast<std::size_t>(spectra.rows()); }
  std::span<const double> spectrum(std::size_t i) const {
    return {spectra.data() + i * static_cast<std::size_t>(spectra.cols()), static_cast<std::size_t>(spectra.cols())};
  }

  static SampleSet from_cube(const SpectralCube& cube, std::span<const std::size_t> pixels);
};

// One diagonal block: the nodes of one superpixel (or one connected
// component for spectral-only graphs) with their dense local weights.
// A zero local weight means "no edge".
struct GraphBlock {
  int segment = 0;
  std::vector<std::size_t> nodes;  // ascending global node ids
  Eigen::MatrixXd weights;         // nodes.size() square
};

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Square n x n matrix that is block diagonal up to a node permutation.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(std::size_t n, std::vector<GraphBlock> blocks);

  std::size_t size() const { return n_; }
  const std::vector<GraphBlock>& blocks() const { return blocks_; }
  std::size_t block_of(std::size_t node) const { return node_block_[node]; }
  std::size_t local_index(std::size_t node) const { return node_local_[node]; }

  // Entry (i, j); zero across blocks.
  double at(std::size_t i, std::size_t j) const;
  std::size_t nonzeros() const;
  // Nonzero entries sorted by (col, row).
  std::vector<Triplet> triplets() const;
  Eigen::MatrixXd dense() const;
  std::vector<double> column_sums() const;

 private:
  std::size_t n_ = 0;
  std::vector<GraphBlock> blocks_;
  std::vector<std::size_t> node_block_;
  std::vector<std::size_t> node_local_;
};

// Symmetric affinity W with unit diagonal and weights in (0, 1].
class SparseAffinity : public BlockMatrix {
 public:
  SparseAffinity() = default;
  SparseAffinity(std::size_t n, std::vector<GraphBlock> blocks) : BlockMatrix(n, std::move(blocks)) {}
};

// Column-stochastic T with the block structure of its source affinity.
class TransitionMatrix : public BlockMatrix {
 public:
  TransitionMatrix() = default;
  TransitionMatrix(std::size_t n, std::vector<GraphBlock> blocks) : BlockMatrix(n, std::move(blocks)) {}
};

inline constexpr double kSigmaFloor = 1e-12;

// Squared Euclidean distance, accumulated band by band in order.
double squared_distance(std::span<const double> a, std::span<const double> b);
// Euclidean distance; throws DataError on length mismatch.
double spectral_distance(std::span<const double> a, std::span<const double> b);

// sqrt(sum over all ordered pairs (i, j), i == j included, of |x_i - x_j|^2
// divided by the number of spectra), floored at kSigmaFloor.
double region_sigma(const SpectraMatrix& spectra);

// Spectral-spatial affinity over the samples: an edge for every pair in the
// same superpixel with weight exp(-d^2 / (2 sigma^2)), sigma from
// region_sigma over that superpixel's samples. No cross-segment edges.
SparseAffinity build_affinity(const SampleSet& samples, const SuperpixelMap& segmap);

// Spectral-only k-nearest-neighbour graph (union-symmetrised) with
// sigma = mean k-NN distance. Blocks are its connected components.
SparseAffinity build_affinity_spectral_only(const SampleSet& samples, std::size_t k_neighbors);

// Column normalisation: T_ij = W_ij / sum_k W_kj.
TransitionMatrix build_transition(const SparseAffinity& affinity);

// Text: header "n nnz", then "row col value" per line sorted by (col, row),
// values with 17 significant digits.
void write_transition(const TransitionMatrix& t, const std::filesystem::path& path);
std::string format_transition(const TransitionMatrix& t);

}  // namespace hsclean

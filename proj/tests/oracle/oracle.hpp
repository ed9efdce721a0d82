#pragma once

// Brute-force reference implementations. Test code only: nothing here is
// linked into the library or the tool.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hsclean/datacube.hpp"
#include "hsclean/segmentation.hpp"

namespace hsclean::oracle {

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {}
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// `iters` literal steps of F <- alpha T F + (1 - alpha) Y from F0 = Y.
DenseMatrix dense_fixed_point(const DenseMatrix& t, const DenseMatrix& y, double alpha, std::size_t iters);

// Affinity by double loop over all sample pairs, same float expression
// order as the sparse path.
DenseMatrix brute_affinity(const SpectraMatrix& spectra, const std::vector<std::size_t>& pixels,
                           const SuperpixelMap& segmap);

struct FlipStats {
  double rho_hat = 0.0;
  // Index k - 2 holds the frequency of flips 1 -> k, k = 2..C.
  std::vector<double> target_frequency;
  std::vector<std::size_t> target_count;
};

// Runs the production noise generator on `trials` rows of class 1 and
// tallies where they land.
FlipStats mc_flip_stats(int num_classes, double rho, std::size_t trials, std::uint64_t seed);

}  // namespace hsclean::oracle

#pragma once

#include <cstddef>
#include <cstdint>

#include "hsclean/datacube.hpp"

namespace hsclean {

// Symmetric label noise: each labeled row flips with probability rho to a
// class drawn uniformly from the C - 1 other classes.
struct NoiseSpec {
  double rho = 0.0;
  std::uint64_t seed = 0;
};

// One generator seeded from spec.seed is consumed row by row in index order:
// a uniform draw u in (0, 1) decides the flip (u <= rho), and a flipped row
// then draws its new class. Unlabeled rows are left untouched and consume
// nothing.
LabelMatrix apply_label_noise(const LabelMatrix& clean, const NoiseSpec& spec);

// Number of rows whose class differs.
std::size_t count_flips(const LabelMatrix& clean, const LabelMatrix& noisy);

}  // namespace hsclean

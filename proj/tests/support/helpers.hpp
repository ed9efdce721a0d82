#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsclean/datacube.hpp"
#include "hsclean/random.hpp"
#include "hsclean/ssgraph.hpp"
#include "oracle.hpp"

namespace hsclean::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

// Random column-stochastic block matrix with n nodes split into random
// blocks, plus its dense copy.
struct RandomBlockGraph {
  TransitionMatrix t;
  oracle::DenseMatrix dense;
};
RandomBlockGraph random_block_graph(std::size_t n, Rng& rng);

// Random labels in 0..classes (0 = unlabeled) with at least one labeled row.
LabelMatrix random_seeds(std::size_t n, int classes, Rng& rng);

oracle::DenseMatrix to_dense(const LabelMatrix& y);

// Synthetic cube with class means along one axis (level c -> c * step in
// every band), no spectral noise unless sigma > 0.
SynthSpec stripe_synth_spec(std::size_t height, std::size_t width, std::size_t bands, int classes,
                            std::size_t grid_rows, std::size_t grid_cols, double sigma);

}  // namespace hsclean::test

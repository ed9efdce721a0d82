#include "hsclean/noisegen.hpp"

#include <cmath>
#include <vector>

#include "hsclean/errors.hpp"
#include "hsclean/random.hpp"

namespace hsclean {

LabelMatrix apply_label_noise(const LabelMatrix& clean, const NoiseSpec& spec) {
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw ConfigError("noise level rho must lie in [0, 1]");
  const int num_classes = clean.cols();
  if (spec.rho > 0.0 && num_classes < 2) {
    throw ConfigError("label noise needs at least 2 classes when rho > 0");
  }
  Rng rng(spec.seed);
  std::vector<int> noisy(clean.labels().begin(), clean.labels().end());
  for (auto& label : noisy) {
    if (label == 0) continue;
    if (rng.uniform01() <= spec.rho) {
      // Uniform over {1..C} \ {label}: draw from C - 1 slots and skip the
      // true class.
      const int slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1))) + 1;
      label = slot < label ? slot : slot + 1;
    }
  }
  return LabelMatrix(num_classes, std::move(noisy));
}

std::size_t count_flips(const LabelMatrix& clean, const LabelMatrix& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw DataError("count_flips: shape mismatch");
  }
  std::size_t flips = 0;
  for (std::size_t i = 0; i < clean.rows(); ++i) {
    if (clean.label(i) != noisy.label(i)) ++flips;
  }
  return flips;
}

}  // namespace hsclean

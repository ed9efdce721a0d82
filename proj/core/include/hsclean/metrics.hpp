#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "hsclean/datacube.hpp"

namespace hsclean {

// C x C counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 0);

  int num_classes() const { return classes_; }
  std::size_t operator()(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>((truth - 1) * classes_ + (predicted - 1))];
  }
  std::size_t total() const { return total_; }
  std::size_t trace() const;
  std::size_t row_total(int truth) const;
  std::size_t col_total(int predicted) const;

  // Labels are 1-based; throws DataError outside 1..C.
  void add(int truth, int predicted, std::size_t count = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_ = 0;
  std::size_t total_ = 0;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes);

double overall_accuracy(const ConfusionMatrix& m);

struct AverageAccuracy {
  double value = 0.0;
  // Classes without test samples, left out of the mean.
  std::vector<int> excluded_classes;
};
AverageAccuracy average_accuracy(const ConfusionMatrix& m);

// Cohen's kappa, (p_o - p_e) / (1 - p_e) with p_e = sum_i row_i col_i / total^2.
// A degenerate p_e = 1 returns 1 when p_o = 1, else 0.
double kappa(const ConfusionMatrix& m);

using Rgb = std::array<std::uint8_t, 3>;
using Palette = std::map<int, Rgb>;

// Distinct colours for classes 1..num_classes.
Palette default_palette(int num_classes);

struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Rgb> pixels;
};

// Binary PPM (P6), one pixel per label, background black.
RgbImage render_map(const LabelField& field, const Palette& palette);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace hsclean

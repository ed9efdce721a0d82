#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace hsclean {

// One sample spectrum per row.
using SpectraMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// H x W x D reflectance cube, band-interleaved-by-pixel. Flat pixel index is
// row-major: y * width + x.
class SpectralCube {
 public:
  SpectralCube() = default;
  SpectralCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixel_count() const { return height_ * width_; }

  std::span<const float> data() const { return data_; }
  std::span<const float> spectrum(std::size_t pixel) const {
    return {data_.data() + pixel * bands_, bands_};
  }
  std::span<const float> spectrum(std::size_t y, std::size_t x) const {
    return spectrum(y * width_ + x);
  }

  // Gathers the spectra of the given flat pixel indices, one per row.
  SpectraMatrix gather(std::span<const std::size_t> pixels) const;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
};

// Per-pixel class ids in {0..C}; 0 is background / unlabeled.
class LabelField {
 public:
  LabelField() = default;
  // C is taken as the maximum label present.
  LabelField(std::size_t height, std::size_t width, std::vector<int> labels);
  LabelField(std::size_t height, std::size_t width, std::vector<int> labels, int num_classes);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return labels_.size(); }
  int num_classes() const { return num_classes_; }
  // False when every pixel is background (C = 0).
  bool has_supervised_classes() const { return num_classes_ > 0; }

  int operator[](std::size_t pixel) const { return labels_[pixel]; }
  int at(std::size_t y, std::size_t x) const { return labels_[y * width_ + x]; }
  std::span<const int> labels() const { return labels_; }

  // Flat indices of all non-background pixels, ascending.
  std::vector<std::size_t> labeled_pixels() const;

  // Copy with the listed pixels set to the given labels.
  LabelField with_labels(std::span<const std::size_t> pixels, std::span<const int> values) const;
  // Copy keeping only the listed pixels; everything else becomes background.
  LabelField restricted_to(std::span<const std::size_t> pixels) const;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  int num_classes_ = 0;
  std::vector<int> labels_;
};

// N x C one-hot label matrix. Stored as one class id per row (0 = unlabeled
// all-zero row), which makes the at-most-one-1-per-row invariant structural.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(int num_classes, std::vector<int> row_labels);

  std::size_t rows() const { return labels_.size(); }
  int cols() const { return num_classes_; }

  // Entry (i, j) with 0-based column j, i.e. 1 iff row i is labeled j + 1.
  int operator()(std::size_t i, int j) const { return labels_[i] == j + 1 ? 1 : 0; }
  // 1-based class of row i, or 0 for an unlabeled row.
  int label(std::size_t i) const { return labels_[i]; }
  bool labeled(std::size_t i) const { return labels_[i] != 0; }
  std::span<const int> labels() const { return labels_; }

  // Row-major dense copy (N x C) of zeros and ones.
  Eigen::MatrixXd dense() const;

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  int num_classes_ = 0;
  std::vector<int> labels_;
};

struct SampleSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::map<int, std::size_t> per_class_counts;  // training samples per class
};

struct FractionScheme {
  double fraction = 0.1;
};
struct PerClassScheme {
  std::size_t count = 50;
};
using SplitScheme = std::variant<FractionScheme, PerClassScheme>;

// Synthetic cube: a grid_rows x grid_cols tiling of rectangles, each with a
// class; pixels get their class mean plus i.i.d. gaussian noise per band.
struct SynthSpec {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  int num_classes = 0;
  std::size_t grid_rows = 1;
  std::size_t grid_cols = 1;
  std::vector<int> region_classes;        // grid_rows * grid_cols, row-major
  std::vector<std::vector<double>> class_means;  // C rows of D values
  double sigma_spec = 0.0;

  // Throws ConfigError when the settings are inconsistent.
  void validate() const;
  // Class of the region containing pixel (y, x).
  int class_at(std::size_t y, std::size_t x) const;
};

// Builds a valid SynthSpec with randomly drawn class means (uniform in
// [0.1, 0.9] per band) and a region->class assignment that uses every class.
// Neighbouring regions never share a class.
SynthSpec make_synth_spec(std::size_t height, std::size_t width, std::size_t bands,
                          int num_classes, std::size_t grid_rows, std::size_t grid_cols,
                          double sigma_spec, std::uint64_t seed);

struct SynthResult {
  SpectralCube cube;
  LabelField labels;
};

SynthResult synth_cube(const SynthSpec& spec, std::uint64_t seed);

enum class CubeFormat { RawF32, Csv };

// raw-f32: ASCII header "H W D\n" followed by H*W*D little-endian float32
// values, band-interleaved-by-pixel.
// csv: header line "H,W,D" then one line per pixel with D comma-separated
// values, pixels in row-major order.
SpectralCube load_cube(const std::filesystem::path& path, CubeFormat format);
void save_cube(const SpectralCube& cube, const std::filesystem::path& path, CubeFormat format);
// Picks the format from the extension: ".csv" is csv, anything else raw-f32.
CubeFormat cube_format_for(const std::filesystem::path& path);

// Plain-text grid, one image row per line, space-separated integers.
LabelField load_labels(const std::filesystem::path& path);
void save_labels(const LabelField& field, const std::filesystem::path& path);

// Spectra as CSV, one sample per line, comma-separated bands.
SpectraMatrix load_spectra_csv(const std::filesystem::path& path);
void save_spectra_csv(const SpectraMatrix& spectra, const std::filesystem::path& path);

// One integer label per line.
std::vector<int> load_label_list(const std::filesystem::path& path);
void save_label_list(std::span<const int> labels, const std::filesystem::path& path);

// One-hot rows for the given pixels. Throws DataError on a background pixel.
LabelMatrix to_onehot(const LabelField& field, std::span<const std::size_t> indices);
// Row-wise argmax (1-based class ids; 0 for an all-zero row).
std::vector<int> from_onehot(const LabelMatrix& matrix);

// Train/test split of the non-background pixels.
//  fraction(p): round(p * class size) per class, at least 1.
//  per_class(n): min(n, class size - 1) per class.
// Classes are processed in ascending id, pixels shuffled per class with one
// generator, so the result is a pure function of (field, scheme, seed).
SampleSplit train_test_split(const LabelField& field, const SplitScheme& scheme, std::uint64_t seed);

}  // namespace hsclean

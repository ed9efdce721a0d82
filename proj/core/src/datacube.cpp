#include "hsclean/datacube.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "hsclean/errors.hpp"
#include "hsclean/random.hpp"
#include "textio.hpp"

namespace hsclean {

namespace {

void require_finite(std::span<const float> values, const std::string& source) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("non-finite value at element " + std::to_string(i) + " of " + source);
    }
  }
}

std::size_t checked_dim(long long v, const char* what, const std::string& source) {
  if (v <= 0) throw DataError(std::string("non-positive ") + what + " in header of " + source);
  return static_cast<std::size_t>(v);
}

}  // namespace

SpectralCube::SpectralCube(std::size_t height, std::size_t width, std::size_t bands,
                           std::vector<float> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (height_ == 0 || width_ == 0 || bands_ == 0) {
    throw DataError("cube dimensions must be positive");
  }
  if (data_.size() != height_ * width_ * bands_) {
    throw DataError("cube payload has " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(height_ * width_ * bands_));
  }
  require_finite(data_, "cube");
}

SpectraMatrix SpectralCube::gather(std::span<const std::size_t> pixels) const {
  SpectraMatrix out(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(bands_));
  for (std::size_t r = 0; r < pixels.size(); ++r) {
    if (pixels[r] >= pixel_count()) throw DataError("pixel index out of range");
    const auto s = spectrum(pixels[r]);
    for (std::size_t b = 0; b < bands_; ++b) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = s[b];
  }
  return out;
}

LabelField::LabelField(std::size_t height, std::size_t width, std::vector<int> labels)
    : LabelField(height, width, labels,
                 labels.empty() ? 0 : std::max(0, *std::max_element(labels.begin(), labels.end()))) {}

LabelField::LabelField(std::size_t height, std::size_t width, std::vector<int> labels,
                       int num_classes)
    : height_(height), width_(width), num_classes_(num_classes), labels_(std::move(labels)) {
  if (labels_.size() != height_ * width_) {
    throw DataError("label grid has " + std::to_string(labels_.size()) + " entries, expected " +
                    std::to_string(height_ * width_));
  }
  for (const int v : labels_) {
    if (v < 0) throw DataError("negative label " + std::to_string(v));
    if (v > num_classes_) throw DataError("label " + std::to_string(v) + " exceeds class count");
  }
}

std::vector<std::size_t> LabelField::labeled_pixels() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 0) out.push_back(i);
  }
  return out;
}

LabelField LabelField::with_labels(std::span<const std::size_t> pixels,
                                   std::span<const int> values) const {
  if (pixels.size() != values.size()) throw DataError("pixel/label count mismatch");
  std::vector<int> next = labels_;
  int classes = num_classes_;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] >= next.size()) throw DataError("pixel index out of range");
    next[pixels[i]] = values[i];
    classes = std::max(classes, values[i]);
  }
  return LabelField(height_, width_, std::move(next), classes);
}

LabelField LabelField::restricted_to(std::span<const std::size_t> pixels) const {
  std::vector<int> next(labels_.size(), 0);
  for (const auto p : pixels) {
    if (p >= next.size()) throw DataError("pixel index out of range");
    next[p] = labels_[p];
  }
  return LabelField(height_, width_, std::move(next), num_classes_);
}

LabelMatrix::LabelMatrix(int num_classes, std::vector<int> row_labels)
    : num_classes_(num_classes), labels_(std::move(row_labels)) {
  if (num_classes_ < 0) throw DataError("negative class count");
  for (const int v : labels_) {
    if (v < 0 || v > num_classes_) {
      throw DataError("label " + std::to_string(v) + " outside 0.." + std::to_string(num_classes_));
    }
  }
}

Eigen::MatrixXd LabelMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), num_classes_);
  for (std::size_t i = 0; i < rows(); ++i) {
    if (labels_[i] > 0) out(static_cast<Eigen::Index>(i), labels_[i] - 1) = 1.0;
  }
  return out;
}

void SynthSpec::validate() const {
  if (height == 0 || width == 0 || bands == 0) throw ConfigError("synth: dimensions must be positive");
  if (num_classes < 1) throw ConfigError("synth: need at least one class");
  if (grid_rows == 0 || grid_cols == 0 || grid_rows > height || grid_cols > width) {
    throw ConfigError("synth: region grid must fit inside the image");
  }
  if (region_classes.size() != grid_rows * grid_cols) {
    throw ConfigError("synth: region_classes must have grid_rows * grid_cols entries");
  }
  std::vector<bool> seen(static_cast<std::size_t>(num_classes) + 1, false);
  for (const int c : region_classes) {
    if (c < 1 || c > num_classes) throw ConfigError("synth: region class out of range");
    seen[static_cast<std::size_t>(c)] = true;
  }
  for (int c = 1; c <= num_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw ConfigError("synth: class " + std::to_string(c) + " has no region");
    }
  }
  if (class_means.size() != static_cast<std::size_t>(num_classes)) {
    throw ConfigError("synth: need one mean spectrum per class");
  }
  for (const auto& m : class_means) {
    if (m.size() != bands) throw ConfigError("synth: mean spectrum length must equal bands");
    for (const double v : m) {
      if (!std::isfinite(v)) throw ConfigError("synth: non-finite class mean");
    }
  }
  if (!(sigma_spec >= 0.0) || !std::isfinite(sigma_spec)) {
    throw ConfigError("synth: sigma_spec must be finite and >= 0");
  }
}

int SynthSpec::class_at(std::size_t y, std::size_t x) const {
  // Region r spans rows [r*H/R, (r+1)*H/R).
  const std::size_t r = std::min(grid_rows - 1, (y * grid_rows) / height);
  const std::size_t c = std::min(grid_cols - 1, (x * grid_cols) / width);
  return region_classes[r * grid_cols + c];
}

SynthSpec make_synth_spec(std::size_t height, std::size_t width, std::size_t bands,
                          int num_classes, std::size_t grid_rows, std::size_t grid_cols,
                          double sigma_spec, std::uint64_t seed) {
  if (num_classes < 1) throw ConfigError("synth: need at least one class");
  if (grid_rows * grid_cols < static_cast<std::size_t>(num_classes)) {
    throw ConfigError("synth: region grid has fewer cells than classes");
  }
  Rng rng(split_seed(seed, 0x5EC));
  SynthSpec spec;
  spec.height = height;
  spec.width = width;
  spec.bands = bands;
  spec.num_classes = num_classes;
  spec.grid_rows = grid_rows;
  spec.grid_cols = grid_cols;
  spec.sigma_spec = sigma_spec;

  // Cycle through a shuffled class order so every class is used, then avoid
  // identical 4-neighbours where the class count allows it.
  std::vector<int> order(static_cast<std::size_t>(num_classes));
  std::iota(order.begin(), order.end(), 1);
  rng.shuffle(std::span<int>(order));
  spec.region_classes.resize(grid_rows * grid_cols);
  for (std::size_t r = 0; r < grid_rows; ++r) {
    for (std::size_t c = 0; c < grid_cols; ++c) {
      const std::size_t k = r * grid_cols + c;
      int cls = order[k % order.size()];
      if (num_classes >= 3 && k >= order.size()) {
        for (int attempt = 0; attempt < num_classes; ++attempt) {
          const bool clash_left = c > 0 && spec.region_classes[k - 1] == cls;
          const bool clash_up = r > 0 && spec.region_classes[k - grid_cols] == cls;
          if (!clash_left && !clash_up) break;
          cls = cls % num_classes + 1;
        }
      }
      spec.region_classes[k] = cls;
    }
  }

  spec.class_means.assign(static_cast<std::size_t>(num_classes), std::vector<double>(bands));
  for (auto& mean : spec.class_means) {
    for (auto& v : mean) v = rng.uniform(0.1, 0.9);
  }
  spec.validate();
  return spec;
}

SynthResult synth_cube(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<float> data(spec.height * spec.width * spec.bands);
  std::vector<int> labels(spec.height * spec.width);
  std::size_t k = 0;
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const int cls = spec.class_at(y, x);
      labels[y * spec.width + x] = cls;
      const auto& mean = spec.class_means[static_cast<std::size_t>(cls - 1)];
      for (std::size_t b = 0; b < spec.bands; ++b) {
        double v = mean[b];
        if (spec.sigma_spec > 0.0) v += spec.sigma_spec * rng.normal();
        data[k++] = static_cast<float>(v);
      }
    }
  }
  return {SpectralCube(spec.height, spec.width, spec.bands, std::move(data)),
          LabelField(spec.height, spec.width, std::move(labels), spec.num_classes)};
}

CubeFormat cube_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CubeFormat::Csv : CubeFormat::RawF32;
}

SpectralCube load_cube(const std::filesystem::path& path, CubeFormat format) {
  const std::string source = path.string();
  const std::string text = textio::read_file(path);
  if (format == CubeFormat::RawF32) {
    const auto nl = text.find('\n');
    if (nl == std::string::npos) throw DataError("missing header line in " + source);
    const auto fields = textio::split(std::string_view(text).substr(0, nl), " \t\r");
    if (fields.size() != 3) throw DataError("malformed header in " + source + ": expected 'H W D'");
    const auto h = checked_dim(textio::parse_int(fields[0], source), "height", source);
    const auto w = checked_dim(textio::parse_int(fields[1], source), "width", source);
    const auto d = checked_dim(textio::parse_int(fields[2], source), "bands", source);
    const std::size_t expected = h * w * d;
    const std::size_t payload = text.size() - nl - 1;
    if (payload != expected * sizeof(float)) {
      throw DataError("size mismatch in " + source + ": header declares " + std::to_string(expected) +
                      " values, payload holds " + std::to_string(payload) + " bytes");
    }
    std::vector<float> data(expected);
    const char* src = text.data() + nl + 1;
    for (std::size_t i = 0; i < expected; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, src + i * 4, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      data[i] = std::bit_cast<float>(bits);
    }
    require_finite(data, source);
    return SpectralCube(h, w, d, std::move(data));
  }

  const auto lines = textio::nonblank_lines(text);
  if (lines.empty()) throw DataError("empty cube file " + source);
  const auto header = textio::split(lines[0], ", \t");
  if (header.size() != 3) throw DataError("malformed header in " + source + ": expected 'H,W,D'");
  const auto h = checked_dim(textio::parse_int(header[0], source), "height", source);
  const auto w = checked_dim(textio::parse_int(header[1], source), "width", source);
  const auto d = checked_dim(textio::parse_int(header[2], source), "bands", source);
  if (lines.size() - 1 != h * w) {
    throw DataError("size mismatch in " + source + ": header declares " + std::to_string(h * w) +
                    " pixels, payload has " + std::to_string(lines.size() - 1));
  }
  std::vector<float> data;
  data.reserve(h * w * d);
  for (std::size_t p = 1; p < lines.size(); ++p) {
    const auto values = textio::split(lines[p], ",");
    if (values.size() != d) {
      throw DataError("size mismatch in " + source + " at pixel " + std::to_string(p - 1) +
                      ": expected " + std::to_string(d) + " bands");
    }
    for (const auto v : values) data.push_back(static_cast<float>(textio::parse_double(v, source)));
  }
  require_finite(data, source);
  return SpectralCube(h, w, d, std::move(data));
}

void save_cube(const SpectralCube& cube, const std::filesystem::path& path, CubeFormat format) {
  std::string out = format == CubeFormat::RawF32
                        ? std::to_string(cube.height()) + " " + std::to_string(cube.width()) + " " +
                              std::to_string(cube.bands()) + "\n"
                        : std::to_string(cube.height()) + "," + std::to_string(cube.width()) + "," +
                              std::to_string(cube.bands()) + "\n";
  if (format == CubeFormat::RawF32) {
    const auto values = cube.data();
    const std::size_t offset = out.size();
    out.resize(offset + values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto bits = std::bit_cast<std::uint32_t>(values[i]);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(out.data() + offset + i * 4, &bits, 4);
    }
  } else {
    char buf[32];
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
      const auto s = cube.spectrum(p);
      for (std::size_t b = 0; b < s.size(); ++b) {
        // 9 significant digits round-trip any float exactly.
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(s[b]));
        if (b) out += ',';
        out += buf;
      }
      out += '\n';
    }
  }
  textio::write_file(path, out);
}

LabelField load_labels(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = textio::read_file(path);
  const auto lines = textio::nonblank_lines(text);
  if (lines.empty()) throw DataError("empty label file " + source);
  std::size_t width = 0;
  std::vector<int> labels;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto tokens = textio::split(lines[r], " \t");
    if (r == 0) {
      width = tokens.size();
    } else if (tokens.size() != width) {
      throw DataError("dimension mismatch in " + source + ": row " + std::to_string(r) + " has " +
                      std::to_string(tokens.size()) + " entries, expected " + std::to_string(width));
    }
    for (const auto t : tokens) {
      const auto v = textio::parse_int(t, source);
      if (v < 0) throw DataError("negative label " + std::to_string(v) + " in " + source);
      labels.push_back(static_cast<int>(v));
    }
  }
  return LabelField(lines.size(), width, std::move(labels));
}

void save_labels(const LabelField& field, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t y = 0; y < field.height(); ++y) {
    for (std::size_t x = 0; x < field.width(); ++x) {
      if (x) out += ' ';
      out += std::to_string(field.at(y, x));
    }
    out += '\n';
  }
  textio::write_file(path, out);
}

SpectraMatrix load_spectra_csv(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = textio::read_file(path);
  const auto lines = textio::nonblank_lines(text);
  if (lines.empty()) throw DataError("no spectra in " + source);
  SpectraMatrix out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = textio::split(lines[i], ", \t");
    if (i == 0) out.resize(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(fields.size()));
    if (static_cast<Eigen::Index>(fields.size()) != out.cols()) {
      throw DataError("line " + std::to_string(i + 1) + " of " + source + " has " + std::to_string(fields.size()) +
                      " values, expected " + std::to_string(out.cols()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double v = textio::parse_double(fields[j], source);
      if (!std::isfinite(v)) throw DataError("non-finite value in " + source);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

void save_spectra_csv(const SpectraMatrix& spectra, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index i = 0; i < spectra.rows(); ++i) {
    for (Eigen::Index j = 0; j < spectra.cols(); ++j) {
      if (j) out += ',';
      out += textio::format_g17(spectra(i, j));
    }
    out += '\n';
  }
  textio::write_file(path, out);
}

std::vector<int> load_label_list(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::vector<int> out;
  for (const auto line : textio::nonblank_lines(textio::read_file(path))) {
    for (const auto token : textio::split(line, " \t,")) {
      const auto v = textio::parse_int(token, source);
      if (v < 0) throw DataError("negative label in " + source);
      out.push_back(static_cast<int>(v));
    }
  }
  return out;
}

void save_label_list(std::span<const int> labels, const std::filesystem::path& path) {
  std::string out;
  for (const int l : labels) out += std::to_string(l) + "\n";
  textio::write_file(path, out);
}

LabelMatrix to_onehot(const LabelField& field, std::span<const std::size_t> indices) {
  std::vector<int> rows;
  rows.reserve(indices.size());
  for (const auto i : indices) {
    if (i >= field.pixel_count()) throw DataError("pixel index out of range");
    if (field[i] <= 0) throw DataError("background pixel " + std::to_string(i) + " in sample list");
    rows.push_back(field[i]);
  }
  return LabelMatrix(field.num_classes(), std::move(rows));
}

std::vector<int> from_onehot(const LabelMatrix& matrix) {
  return {matrix.labels().begin(), matrix.labels().end()};
}

SampleSplit train_test_split(const LabelField& field, const SplitScheme& scheme,
                             std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < field.pixel_count(); ++i) {
    if (field[i] > 0) by_class[field[i]].push_back(i);
  }
  if (by_class.empty()) throw DataError("split: no labeled pixels");

  if (const auto* f = std::get_if<FractionScheme>(&scheme)) {
    if (!(f->fraction > 0.0 && f->fraction <= 1.0)) throw ConfigError("split: fraction must be in (0, 1]");
  } else if (std::get<PerClassScheme>(scheme).count == 0) {
    throw ConfigError("split: per-class count must be positive");
  }

  Rng rng(seed);
  SampleSplit split;
  for (auto& [cls, pixels] : by_class) {
    std::size_t take = 0;
    if (const auto* f = std::get_if<FractionScheme>(&scheme)) {
      const auto rounded = static_cast<std::size_t>(std::llround(f->fraction * static_cast<double>(pixels.size())));
      take = std::clamp<std::size_t>(rounded, 1, pixels.size());
    } else {
      if (pixels.size() < 2) {
        throw DataError("split: class " + std::to_string(cls) + " has fewer than 2 samples");
      }
      take = std::min(std::get<PerClassScheme>(scheme).count, pixels.size() - 1);
    }
    rng.shuffle(std::span<std::size_t>(pixels));
    split.train_indices.insert(split.train_indices.end(), pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(take));
    split.test_indices.insert(split.test_indices.end(), pixels.begin() + static_cast<std::ptrdiff_t>(take), pixels.end());
    split.per_class_counts[cls] = take;
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

}  // namespace hsclean

#include "hsclean/metrics.hpp"

#include <cmath>
#include <cctype>
#include <cstring>

#include "hsclean/errors.hpp"
#include "textio.hpp"

namespace hsclean {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : classes_(num_classes), counts_(static_cast<std::size_t>(num_classes * num_classes), 0) {
  if (num_classes < 0) throw DataError("negative class count");
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (int c = 1; c <= classes_; ++c) t += (*this)(c, c);
  return t;
}

std::size_t ConfusionMatrix::row_total(int truth) const {
  std::size_t t = 0;
  for (int c = 1; c <= classes_; ++c) t += (*this)(truth, c);
  return t;
}

std::size_t ConfusionMatrix::col_total(int predicted) const {
  std::size_t t = 0;
  for (int r = 1; r <= classes_; ++r) t += (*this)(r, predicted);
  return t;
}

void ConfusionMatrix::add(int truth, int predicted, std::size_t count) {
  if (truth < 1 || truth > classes_ || predicted < 1 || predicted > classes_) {
    throw DataError("label pair (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                    ") outside 1.." + std::to_string(classes_));
  }
  counts_[static_cast<std::size_t>((truth - 1) * classes_ + (predicted - 1))] += count;
  total_ += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw DataError("confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (truth.size() != predicted.size()) throw DataError("truth and prediction lengths differ");
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

double overall_accuracy(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("accuracy of an empty confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

AverageAccuracy average_accuracy(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("accuracy of an empty confusion matrix");
  AverageAccuracy aa;
  double sum = 0.0;
  int used = 0;
  for (int c = 1; c <= m.num_classes(); ++c) {
    const std::size_t row = m.row_total(c);
    if (row == 0) {
      aa.excluded_classes.push_back(c);
      continue;
    }
    sum += static_cast<double>(m(c, c)) / static_cast<double>(row);
    ++used;
  }
  aa.value = sum / used;
  return aa;
}

double kappa(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("kappa of an empty confusion matrix");
  const auto total = static_cast<double>(m.total());
  const double po = static_cast<double>(m.trace()) / total;
  double pe = 0.0;
  for (int c = 1; c <= m.num_classes(); ++c) {
    pe += static_cast<double>(m.row_total(c)) * static_cast<double>(m.col_total(c));
  }
  pe /= total * total;
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

Palette default_palette(int num_classes) {
  Palette p;
  for (int c = 1; c <= num_classes; ++c) {
    // Golden-angle hue walk at full saturation.
    const double hue = std::fmod((c - 1) * 137.508, 360.0) / 60.0;
    const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hue)) {
      case 0: r = 1; g = x; break;
      case 1: r = x; g = 1; break;
      case 2: g = 1; b = x; break;
      case 3: g = x; b = 1; break;
      case 4: r = x; b = 1; break;
      default: r = 1; b = x; break;
    }
    const double v = c % 2 ? 1.0 : 0.75;
    p[c] = {static_cast<std::uint8_t>(std::lround(255 * r * v)), static_cast<std::uint8_t>(std::lround(255 * g * v)),
            static_cast<std::uint8_t>(std::lround(255 * b * v))};
  }
  return p;
}

RgbImage render_map(const LabelField& field, const Palette& palette) {
  RgbImage img{field.height(), field.width(), std::vector<Rgb>(field.pixel_count(), Rgb{0, 0, 0})};
  for (std::size_t p = 0; p < field.pixel_count(); ++p) {
    const int label = field[p];
    if (label == 0) continue;
    const auto it = palette.find(label);
    if (it == palette.end()) throw DataError("no palette entry for class " + std::to_string(label));
    img.pixels[p] = it->second;
  }
  return img;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  for (const auto& px : image.pixels) out.append(reinterpret_cast<const char*>(px.data()), 3);
  textio::write_file(path, out);
}

static_assert(sizeof(Rgb) == 3);

RgbImage read_ppm(const std::filesystem::path& path) {
  const std::string data = textio::read_file(path);
  std::size_t pos = 0;
  // Header tokens separated by whitespace, '#' comments allowed.
  auto token = [&]() {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return std::string_view(data).substr(start, pos - start);
  };
  if (token() != "P6") throw DataError("not a binary PPM: " + path.string());
  const auto w = textio::parse_int(token(), path.string());
  const auto h = textio::parse_int(token(), path.string());
  const auto maxval = textio::parse_int(token(), path.string());
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError("unsupported PPM header in " + path.string());
  ++pos;  // single whitespace before the raster
  const auto n = static_cast<std::size_t>(w * h);
  if (data.size() - pos != n * 3) throw DataError("PPM raster size mismatch in " + path.string());
  RgbImage img{static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::vector<Rgb>(n)};
  std::memcpy(img.pixels.data(), data.data() + pos, n * 3);
  return img;
}

}  // namespace hsclean

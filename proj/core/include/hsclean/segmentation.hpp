#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hsclean/datacube.hpp"

namespace hsclean {

// Single-channel image, row-major.
struct PCImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  // Set when the cube has no spectral variance; values are then all zero.
  bool zero_variance = false;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

// Projection of each mean-centred pixel spectrum on the leading eigenvector
// of the band covariance. The eigenvector's first nonzero component is made
// positive.
PCImage first_principal_component(const SpectralCube& cube);

struct EdgeStats {
  std::size_t edge_pixels = 0;   // N_f
  std::size_t total_pixels = 0;  // N_I
  std::vector<unsigned char> edge_mask;  // 1 on detected edge pixels
};

// Laplacian-of-Gaussian zero-crossing detector. A pixel is an edge when its
// response changes sign against its right or lower neighbour with a jump
// larger than `threshold`. Without a threshold, 1e-4 * (max - min) of the
// response is used. Borders are replicated.
EdgeStats log_edge_stats(const PCImage& img, double kernel_sigma,
                         std::optional<double> threshold = std::nullopt);

inline constexpr std::size_t kMinSuperpixels = 16;

// T = T_base * N_f / N_I, rounded and clamped to [16, N_I].
std::size_t superpixel_count(std::size_t edge_pixels, std::size_t total_pixels, std::size_t t_base);

struct SuperpixelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> segment;  // id in 0..count-1 per pixel
  std::size_t count = 0;

  int operator[](std::size_t pixel) const { return segment[pixel]; }
};

struct SlicParams {
  double compactness = 10.0;
  std::size_t max_iters = 10;
};

// SLIC on (intensity, x, y). Intensity is rescaled to [0, 100] before
// clustering. Grid-seeded, no randomness. Components smaller than a quarter
// of the grid cell are merged into their largest 4-adjacent neighbour, and
// every remaining 4-connected component becomes its own segment, so the
// output count can differ slightly from `target`.
SuperpixelMap segment_superpixels(const PCImage& img, std::size_t target, const SlicParams& params = {});

struct SegmentationParams {
  std::size_t t_base = 2000;
  double log_sigma = 2.0;
  std::optional<double> log_threshold;
  SlicParams slic;
  // Bypasses LoG budgeting when set.
  std::optional<std::size_t> fixed_count;
};

// Full chain: PCA -> LoG budgeting -> SLIC.
SuperpixelMap segment_cube(const SpectralCube& cube, const SegmentationParams& params = {});

// Throws DataError unless the map is a partition into non-empty, 4-connected
// segments with ids 0..count-1.
void validate_superpixels(const SuperpixelMap& map);

// Stored with the label text-grid format.
void save_superpixels(const SuperpixelMap& map, const std::filesystem::path& path);
SuperpixelMap load_superpixels(const std::filesystem::path& path);

}  // namespace hsclean

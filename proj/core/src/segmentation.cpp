#include "hsclean/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "hsclean/errors.hpp"

namespace hsclean {

PCImage first_principal_component(const SpectralCube& cube) {
  const std::size_t n = cube.pixel_count();
  const std::size_t d = cube.bands();
  if (n < 2) throw DataError("PCA needs at least 2 pixels");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t p = 0; p < n; ++p) {
    const auto s = cube.spectrum(p);
    for (std::size_t b = 0; b < d; ++b) mean[static_cast<Eigen::Index>(b)] += s[b];
  }
  mean /= static_cast<double>(n);

  Eigen::MatrixXd centred(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t p = 0; p < n; ++p) {
    const auto s = cube.spectrum(p);
    for (std::size_t b = 0; b < d; ++b) {
      centred(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = s[b] - mean[static_cast<Eigen::Index>(b)];
    }
  }
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);

  PCImage img{cube.height(), cube.width(), std::vector<double>(n, 0.0), false};
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  if (cov.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    img.zero_variance = true;
    return img;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InternalError("covariance eigendecomposition failed");
  Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
  for (Eigen::Index b = 0; b < axis.size(); ++b) {
    if (std::abs(axis[b]) > 1e-12) {
      if (axis[b] < 0) axis = -axis;
      break;
    }
  }
  const Eigen::VectorXd proj = centred * axis;
  for (std::size_t p = 0; p < n; ++p) img.values[p] = proj[static_cast<Eigen::Index>(p)];
  return img;
}

namespace {

std::vector<double> log_response(const PCImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int size = 2 * radius + 1;
  std::vector<double> kernel(static_cast<std::size_t>(size * size));
  const double s2 = sigma * sigma;
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double r2 = dx * dx + dy * dy;
      const double v = (r2 - 2.0 * s2) / (s2 * s2) * std::exp(-r2 / (2.0 * s2));
      kernel[static_cast<std::size_t>((dy + radius) * size + dx + radius)] = v;
      sum += v;
    }
  }
  // Zero-sum kernel: flat regions respond with exactly the same value.
  const double bias = sum / static_cast<double>(kernel.size());
  for (auto& v : kernel) v -= bias;

  const auto h = static_cast<int>(img.height);
  const auto w = static_cast<int>(img.width);
  std::vector<double> out(img.values.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          acc += kernel[static_cast<std::size_t>((dy + radius) * size + dx + radius)] *
                 img.values[static_cast<std::size_t>(yy * w + xx)];
        }
      }
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

}  // namespace

EdgeStats log_edge_stats(const PCImage& img, double kernel_sigma, std::optional<double> threshold) {
  if (!(kernel_sigma > 0.0)) throw ConfigError("LoG kernel sigma must be positive");
  const std::size_t n = img.height * img.width;
  if (img.values.size() != n) throw DataError("image size mismatch");
  for (const double v : img.values) {
    if (!std::isfinite(v)) throw DataError("non-finite image value");
  }
  EdgeStats stats;
  stats.total_pixels = n;
  stats.edge_mask.assign(n, 0);
  if (n == 0) return stats;

  const auto resp = log_response(img, kernel_sigma);
  const auto [lo, hi] = std::minmax_element(resp.begin(), resp.end());
  const double thr = threshold.value_or(1e-4 * (*hi - *lo));

  auto mark = [&](std::size_t p, std::size_t q) {
    const double a = resp[p];
    const double b = resp[q];
    if (!((a > 0 && b < 0) || (a < 0 && b > 0))) return;
    if (std::abs(a - b) <= thr) return;
    // The pixel nearer the crossing carries the edge.
    stats.edge_mask[std::abs(a) <= std::abs(b) ? p : q] = 1;
  };
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t p = y * img.width + x;
      if (x + 1 < img.width) mark(p, p + 1);
      if (y + 1 < img.height) mark(p, p + img.width);
    }
  }
  stats.edge_pixels = static_cast<std::size_t>(std::count(stats.edge_mask.begin(), stats.edge_mask.end(), 1));
  return stats;
}

std::size_t superpixel_count(std::size_t edge_pixels, std::size_t total_pixels, std::size_t t_base) {
  if (total_pixels == 0) throw DataError("superpixel_count: empty image");
  const double raw = static_cast<double>(t_base) * static_cast<double>(edge_pixels) /
                     static_cast<double>(total_pixels);
  const auto rounded = static_cast<std::size_t>(std::llround(raw));
  return std::min(std::max(rounded, kMinSuperpixels), total_pixels);
}

namespace {

struct Center {
  double x = 0;
  double y = 0;
  double v = 0;
};

// Labels 4-connected components of `labels`; returns component id per pixel
// and the number of components. Ids follow raster order of first pixel.
std::size_t connected_components(std::size_t h, std::size_t w, const std::vector<int>& labels,
                                 std::vector<int>& comp) {
  comp.assign(labels.size(), -1);
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t y = p / w;
      const std::size_t x = p % w;
      auto visit = [&](std::size_t q) {
        if (comp[q] < 0 && labels[q] == labels[p]) {
          comp[q] = next;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    ++next;
  }
  return static_cast<std::size_t>(next);
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

SuperpixelMap segment_superpixels(const PCImage& img, std::size_t target, const SlicParams& params) {
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  const std::size_t n = h * w;
  if (n == 0 || img.values.size() != n) throw DataError("segment_superpixels: bad image");
  if (target < 1) throw ConfigError("superpixel count must be at least 1");
  if (target > n) throw ConfigError("superpixel count exceeds pixel count");
  if (!(params.compactness > 0.0)) throw ConfigError("SLIC compactness must be positive");

  // Intensity on [0, 100] so the compactness scale is image independent.
  std::vector<double> v(n, 0.0);
  {
    const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
    if (*hi > *lo) {
      for (std::size_t p = 0; p < n; ++p) v[p] = (img.values[p] - *lo) / (*hi - *lo) * 100.0;
    }
  }

  const double aspect = static_cast<double>(w) / static_cast<double>(h);
  auto nx = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(target) * aspect)));
  nx = std::clamp<std::size_t>(nx, 1, w);
  auto ny = static_cast<std::size_t>(std::llround(static_cast<double>(target) / static_cast<double>(nx)));
  ny = std::clamp<std::size_t>(ny, 1, h);
  const double sx = static_cast<double>(w) / static_cast<double>(nx);
  const double sy = static_cast<double>(h) / static_cast<double>(ny);
  const double step = std::sqrt(static_cast<double>(n) / static_cast<double>(nx * ny));

  auto gradient = [&](std::size_t x, std::size_t y) {
    const std::size_t xl = x > 0 ? x - 1 : x;
    const std::size_t xr = x + 1 < w ? x + 1 : x;
    const std::size_t yu = y > 0 ? y - 1 : y;
    const std::size_t yd = y + 1 < h ? y + 1 : y;
    const double gx = v[y * w + xr] - v[y * w + xl];
    const double gy = v[yd * w + x] - v[yu * w + x];
    return gx * gx + gy * gy;
  };

  std::vector<Center> centers;
  centers.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      auto cx = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * sx);
      auto cy = static_cast<std::size_t>((static_cast<double>(j) + 0.5) * sy);
      cx = std::min(cx, w - 1);
      cy = std::min(cy, h - 1);
      // Move the seed off edges: lowest gradient in its 3x3 neighbourhood.
      std::size_t bx = cx;
      std::size_t by = cy;
      double best = gradient(cx, cy);
      for (std::size_t yy = cy > 0 ? cy - 1 : 0; yy <= std::min(cy + 1, h - 1); ++yy) {
        for (std::size_t xx = cx > 0 ? cx - 1 : 0; xx <= std::min(cx + 1, w - 1); ++xx) {
          const double g = gradient(xx, yy);
          if (g < best) {
            best = g;
            bx = xx;
            by = yy;
          }
        }
      }
      centers.push_back({static_cast<double>(bx), static_cast<double>(by), v[by * w + bx]});
    }
  }

  std::vector<int> label(n);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto i = std::min(nx - 1, static_cast<std::size_t>(static_cast<double>(x) / sx));
      const auto j = std::min(ny - 1, static_cast<std::size_t>(static_cast<double>(y) / sy));
      label[y * w + x] = static_cast<int>(j * nx + i);
    }
  }

  const double spatial_weight = (params.compactness * params.compactness) / (step * step);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < params.max_iters; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::vector<int> next = label;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& c = centers[k];
      const auto x0 = static_cast<std::ptrdiff_t>(std::floor(c.x - 2.0 * step));
      const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(c.x + 2.0 * step));
      const auto y0 = static_cast<std::ptrdiff_t>(std::floor(c.y - 2.0 * step));
      const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(c.y + 2.0 * step));
      for (auto y = std::max<std::ptrdiff_t>(y0, 0); y <= std::min<std::ptrdiff_t>(y1, static_cast<std::ptrdiff_t>(h) - 1); ++y) {
        for (auto x = std::max<std::ptrdiff_t>(x0, 0); x <= std::min<std::ptrdiff_t>(x1, static_cast<std::ptrdiff_t>(w) - 1); ++x) {
          const auto p = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
          const double dv = v[p] - c.v;
          const double dx = static_cast<double>(x) - c.x;
          const double dy = static_cast<double>(y) - c.y;
          const double d = dv * dv + (dx * dx + dy * dy) * spatial_weight;
          // Strict comparison: ties go to the lower center id.
          if (d < dist[p]) {
            dist[p] = d;
            next[p] = static_cast<int>(k);
          }
        }
      }
    }
    const bool changed = next != label;
    label = std::move(next);

    std::vector<Center> sums(centers.size());
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      auto& s = sums[static_cast<std::size_t>(label[p])];
      s.x += static_cast<double>(p % w);
      s.y += static_cast<double>(p / w);
      s.v += v[p];
      ++counts[static_cast<std::size_t>(label[p])];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const auto cnt = static_cast<double>(counts[k]);
      centers[k] = {sums[k].x / cnt, sums[k].y / cnt, sums[k].v / cnt};
    }
    if (!changed && iter > 0) break;
  }

  // Connectivity: every 4-connected component becomes a candidate segment;
  // small ones are absorbed by their largest neighbour.
  std::vector<int> comp;
  const std::size_t ncomp = connected_components(h, w, label, comp);
  std::vector<std::size_t> size(ncomp, 0);
  for (const int c : comp) ++size[static_cast<std::size_t>(c)];
  std::vector<std::vector<std::size_t>> adjacent(ncomp);
  for (std::size_t p = 0; p < n; ++p) {
    const auto a = static_cast<std::size_t>(comp[p]);
    if (p % w + 1 < w && comp[p + 1] != comp[p]) {
      adjacent[a].push_back(static_cast<std::size_t>(comp[p + 1]));
      adjacent[static_cast<std::size_t>(comp[p + 1])].push_back(a);
    }
    if (p + w < n && comp[p + w] != comp[p]) {
      adjacent[a].push_back(static_cast<std::size_t>(comp[p + w]));
      adjacent[static_cast<std::size_t>(comp[p + w])].push_back(a);
    }
  }
  std::vector<std::size_t> parent(ncomp);
  std::iota(parent.begin(), parent.end(), 0);
  const auto min_size = std::max<std::size_t>(1, static_cast<std::size_t>(step * step / 4.0));
  // Members of each merged group, so adjacency can be gathered per group.
  std::vector<std::vector<std::size_t>> members(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) members[c] = {c};
  for (std::size_t c = 0; c < ncomp; ++c) {
    const std::size_t root = find_root(parent, c);
    if (root != c || size[root] >= min_size) continue;
    std::size_t best = ncomp;
    for (const auto m : members[root]) {
      for (const auto nb : adjacent[m]) {
        const std::size_t r = find_root(parent, nb);
        if (r == root) continue;
        if (best == ncomp || size[r] > size[best] || (size[r] == size[best] && r < best)) best = r;
      }
    }
    if (best == ncomp) continue;
    // Keep the lower id as root so raster-order relabelling stays stable.
    const std::size_t keep = std::min(root, best);
    const std::size_t drop = std::max(root, best);
    parent[drop] = keep;
    size[keep] += size[drop];
    members[keep].insert(members[keep].end(), members[drop].begin(), members[drop].end());
    members[drop].clear();
  }

  SuperpixelMap map{h, w, std::vector<int>(n, -1), 0};
  std::vector<int> final_id(ncomp, -1);
  int next_id = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t r = find_root(parent, static_cast<std::size_t>(comp[p]));
    if (final_id[r] < 0) final_id[r] = next_id++;
    map.segment[p] = final_id[r];
  }
  map.count = static_cast<std::size_t>(next_id);
  return map;
}

SuperpixelMap segment_cube(const SpectralCube& cube, const SegmentationParams& params) {
  const PCImage pc = first_principal_component(cube);
  std::size_t target = 0;
  if (params.fixed_count) {
    target = *params.fixed_count;
  } else {
    const EdgeStats stats = log_edge_stats(pc, params.log_sigma, params.log_threshold);
    target = superpixel_count(stats.edge_pixels, stats.total_pixels, params.t_base);
  }
  return segment_superpixels(pc, std::min(target, cube.pixel_count()), params.slic);
}

void validate_superpixels(const SuperpixelMap& map) {
  const std::size_t n = map.height * map.width;
  if (map.segment.size() != n) throw DataError("superpixel map size mismatch");
  std::vector<std::size_t> seen(map.count, 0);
  for (const int s : map.segment) {
    if (s < 0 || static_cast<std::size_t>(s) >= map.count) throw DataError("segment id out of range");
    ++seen[static_cast<std::size_t>(s)];
  }
  for (std::size_t k = 0; k < map.count; ++k) {
    if (seen[k] == 0) throw DataError("segment " + std::to_string(k) + " is empty");
  }
  std::vector<int> comp;
  const std::size_t ncomp = connected_components(map.height, map.width, map.segment, comp);
  if (ncomp != map.count) throw DataError("a segment is not 4-connected");
}

void save_superpixels(const SuperpixelMap& map, const std::filesystem::path& path) {
  save_labels(LabelField(map.height, map.width, map.segment), path);
}

SuperpixelMap load_superpixels(const std::filesystem::path& path) {
  const LabelField field = load_labels(path);
  SuperpixelMap map{field.height(), field.width(),
                    std::vector<int>(field.labels().begin(), field.labels().end()), 0};
  map.count = static_cast<std::size_t>(field.num_classes()) + 1;
  validate_superpixels(map);
  return map;
}

}  // namespace hsclean

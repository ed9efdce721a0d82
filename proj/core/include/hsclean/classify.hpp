#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hsclean/datacube.hpp"

namespace hsclean {

// Per-band affine map to zero mean and unit variance, estimated on training
// spectra. Constant bands are only centred.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const SpectraMatrix& x);
  SpectraMatrix apply(const SpectraMatrix& x) const;
  std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
};

// 1-nearest-neighbour model. Training spectra are stored standardized.
struct NnModel {
  Standardizer standardizer;
  SpectraMatrix train;
  std::vector<int> labels;
};

NnModel nn_fit(const SpectraMatrix& x, std::span<const int> y);
// Euclidean 1-NN; distance ties go to the lower training index.
std::vector<int> nn_predict(const NnModel& model, const SpectraMatrix& x);

struct ElmParams {
  std::size_t hidden = 500;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
};

// Single-hidden-layer extreme learning machine with sigmoid units: random
// input weights and biases (uniform in [-1, 1]), ridge-regularised output
// weights solving (G'G + lambda I) beta = G' Y.
struct ElmModel {
  Standardizer standardizer;
  Eigen::MatrixXd input_weights;   // D x H
  Eigen::RowVectorXd biases;       // H
  Eigen::MatrixXd output_weights;  // H x C
  double lambda = 0.0;
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(output_weights.cols()); }
};

ElmModel elm_fit(const SpectraMatrix& x, std::span<const int> y, const ElmParams& params);
// Output scores G * beta, one row per query.
Eigen::MatrixXd elm_scores(const ElmModel& model, const SpectraMatrix& x);
// Row-wise argmax of the scores; ties go to the lower class.
std::vector<int> elm_predict(const ElmModel& model, const SpectraMatrix& x);

// Pluggable classifier used by the experiment runner.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string name() const = 0;
  virtual void fit(const SpectraMatrix& x, std::span<const int> y) = 0;
  virtual std::vector<int> predict(const SpectraMatrix& x) const = 0;
};

enum class ClassifierKind { NearestNeighbor, Elm };

ClassifierKind parse_classifier_kind(const std::string& name);
std::string to_string(ClassifierKind kind);
std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ElmParams& elm = {});

}  // namespace hsclean

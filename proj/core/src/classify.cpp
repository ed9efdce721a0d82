#include "hsclean/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "hsclean/errors.hpp"
#include "hsclean/random.hpp"

namespace hsclean {

Standardizer Standardizer::fit(const SpectraMatrix& x) {
  if (x.rows() == 0) throw DataError("cannot standardize an empty training set");
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale = Eigen::RowVectorXd::Ones(x.cols());
  if (x.rows() > 1) {
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
      const double var = (x.col(b).array() - s.mean[b]).square().sum() / static_cast<double>(x.rows() - 1);
      if (var > 0.0) s.scale[b] = 1.0 / std::sqrt(var);
    }
  }
  return s;
}

SpectraMatrix Standardizer::apply(const SpectraMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != dims()) {
    throw DataError("expected " + std::to_string(dims()) + " bands, got " + std::to_string(x.cols()));
  }
  SpectraMatrix out = (x.rowwise() - mean).array().rowwise() * scale.array();
  return out;
}

namespace {

void check_training(const SpectraMatrix& x, std::span<const int> y) {
  if (x.rows() == 0) throw DataError("empty training set");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("training spectra and labels differ in count");
  for (const int v : y) {
    if (v < 1) throw DataError("training labels must be positive class ids");
  }
}

}  // namespace

NnModel nn_fit(const SpectraMatrix& x, std::span<const int> y) {
  check_training(x, y);
  NnModel m;
  m.standardizer = Standardizer::fit(x);
  m.train = m.standardizer.apply(x);
  m.labels.assign(y.begin(), y.end());
  return m;
}

std::vector<int> nn_predict(const NnModel& model, const SpectraMatrix& x) {
  const SpectraMatrix q = model.standardizer.apply(x);
  std::vector<int> out(static_cast<std::size_t>(q.rows()));
  const Eigen::Index d = q.cols();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index j = 0; j < model.train.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index b = 0; b < d && acc < best; ++b) {
        const double diff = q(i, b) - model.train(j, b);
        acc += diff * diff;
      }
      if (acc < best) {
        best = acc;
        arg = static_cast<std::size_t>(j);
      }
    }
    out[static_cast<std::size_t>(i)] = model.labels[arg];
  }
  return out;
}

namespace {

Eigen::MatrixXd hidden_layer(const ElmModel& m, const SpectraMatrix& standardized) {
  Eigen::MatrixXd g = standardized * m.input_weights;
  g.rowwise() += m.biases;
  return g.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

ElmModel elm_fit(const SpectraMatrix& x, std::span<const int> y, const ElmParams& params) {
  check_training(x, y);
  if (params.hidden < 1) throw ConfigError("ELM needs at least one hidden unit");
  if (!(params.lambda > 0.0)) throw ConfigError("ELM ridge lambda must be positive");

  ElmModel m;
  m.lambda = params.lambda;
  m.seed = params.seed;
  m.standardizer = Standardizer::fit(x);
  const auto d = x.cols();
  const auto h = static_cast<Eigen::Index>(params.hidden);
  Rng rng(params.seed);
  m.input_weights.resize(d, h);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) m.input_weights(r, c) = rng.uniform(-1.0, 1.0);
  }
  m.biases.resize(h);
  for (Eigen::Index c = 0; c < h; ++c) m.biases[c] = rng.uniform(-1.0, 1.0);

  const int classes = *std::max_element(y.begin(), y.end());
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(x.rows(), classes);
  for (std::size_t i = 0; i < y.size(); ++i) target(static_cast<Eigen::Index>(i), y[i] - 1) = 1.0;

  const Eigen::MatrixXd g = hidden_layer(m, m.standardizer.apply(x));
  Eigen::MatrixXd gram = g.transpose() * g;
  gram.diagonal().array() += params.lambda;
  m.output_weights = gram.ldlt().solve(g.transpose() * target);
  if (!m.output_weights.allFinite()) throw DataError("ELM output weights are not finite");
  return m;
}

Eigen::MatrixXd elm_scores(const ElmModel& model, const SpectraMatrix& x) {
  return hidden_layer(model, model.standardizer.apply(x)) * model.output_weights;
}

std::vector<int> elm_predict(const ElmModel& model, const SpectraMatrix& x) {
  const Eigen::MatrixXd scores = elm_scores(model, x);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, arg)) arg = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
  }
  return out;
}

namespace {

class NnClassifier final : public Classifier {
 public:
  std::string name() const override { return "nn"; }
  void fit(const SpectraMatrix& x, std::span<const int> y) override { model_ = nn_fit(x, y); }
  std::vector<int> predict(const SpectraMatrix& x) const override { return nn_predict(model_, x); }

 private:
  NnModel model_;
};

class ElmClassifier final : public Classifier {
 public:
  explicit ElmClassifier(ElmParams params) : params_(params) {}
  std::string name() const override { return "elm"; }
  void fit(const SpectraMatrix& x, std::span<const int> y) override { model_ = elm_fit(x, y, params_); }
  std::vector<int> predict(const SpectraMatrix& x) const override { return elm_predict(model_, x); }

 private:
  ElmParams params_;
  ElmModel model_;
};

}  // namespace

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "nn") return ClassifierKind::NearestNeighbor;
  if (name == "elm") return ClassifierKind::Elm;
  throw ConfigError("unknown classifier '" + name + "' (expected nn or elm)");
}

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::NearestNeighbor ? "nn" : "elm";
}

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ElmParams& elm) {
  if (kind == ClassifierKind::NearestNeighbor) return std::make_unique<NnClassifier>();
  return std::make_unique<ElmClassifier>(elm);
}

}  // namespace hsclean

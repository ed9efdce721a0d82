#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hsclean/datacube.hpp"
#include "hsclean/ssgraph.hpp"

namespace hsclean {

// Propagated soft labels, N x C.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {}

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  double operator()(std::size_t i, int j) const { return values_(static_cast<Eigen::Index>(i), j); }
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

// Fixed point of F <- alpha T F + (1 - alpha) Y, i.e. the solution of
// (I - alpha T) F = (1 - alpha) Y. Each diagonal block is solved on its
// own; blocks without labeled rows are exactly zero. alpha in [0, 1).
ScoreMatrix propagate_closed(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha);

struct IterativeResult {
  ScoreMatrix scores;
  std::size_t iterations = 0;
  bool converged = false;
};

// Iterates from F0 = Y until the max-norm change is <= tol or max_iters.
IterativeResult propagate_iterative(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha,
                                    double tol, std::size_t max_iters);

// Max-norm of F - (alpha T F + (1 - alpha) Y).
double fixed_point_residual(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha,
                            const ScoreMatrix& scores);

// Row-wise argmax as 1-based classes. An all-zero row takes its fallback
// label (or class 1 without fallbacks). Ties prefer the fallback label when
// it attains the maximum, otherwise the lowest class.
std::vector<int> assign_labels(const ScoreMatrix& scores,
                               std::optional<std::span<const int>> fallback = std::nullopt);

// Most frequent vote; ties prefer `original` when it is among the modes,
// otherwise the lowest label.
int majority_vote(std::span<const int> votes, int original);

}  // namespace hsclean

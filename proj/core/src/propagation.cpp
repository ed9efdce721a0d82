#include "hsclean/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>

#include "hsclean/errors.hpp"

namespace hsclean {

namespace {

void check_shapes(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha) {
  if (t.size() != seeds.rows()) throw DataError("transition matrix and label matrix disagree on N");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
}

// Local label rows of one block.
Eigen::MatrixXd block_seeds(const GraphBlock& block, const LabelMatrix& seeds, bool& any) {
  const auto m = static_cast<Eigen::Index>(block.nodes.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, seeds.cols());
  any = false;
  for (Eigen::Index r = 0; r < m; ++r) {
    const int label = seeds.label(block.nodes[static_cast<std::size_t>(r)]);
    if (label > 0) {
      y(r, label - 1) = 1.0;
      any = true;
    }
  }
  return y;
}

}  // namespace

ScoreMatrix propagate_closed(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha) {
  check_shapes(t, seeds, alpha);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seeds.rows()), seeds.cols());
  for (const auto& block : t.blocks()) {
    bool any = false;
    const Eigen::MatrixXd y = block_seeds(block, seeds, any);
    if (!any) continue;
    const auto m = static_cast<Eigen::Index>(block.nodes.size());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) - alpha * block.weights;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::MatrixXd local = lu.solve((1.0 - alpha) * y);
    if (!local.allFinite()) throw InternalError("propagation block solve produced non-finite scores");
    for (Eigen::Index r = 0; r < m; ++r) {
      f.row(static_cast<Eigen::Index>(block.nodes[static_cast<std::size_t>(r)])) = local.row(r);
    }
  }
  return ScoreMatrix(std::move(f));
}

IterativeResult propagate_iterative(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha,
                                    double tol, std::size_t max_iters) {
  check_shapes(t, seeds, alpha);
  IterativeResult result;
  result.converged = true;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seeds.rows()), seeds.cols());
  for (const auto& block : t.blocks()) {
    bool any = false;
    const Eigen::MatrixXd y = block_seeds(block, seeds, any);
    const Eigen::MatrixXd base = (1.0 - alpha) * y;
    Eigen::MatrixXd current = y;
    std::size_t iters = 0;
    bool converged = false;
    while (iters < max_iters) {
      Eigen::MatrixXd next = alpha * (block.weights * current) + base;
      const double change = (next - current).cwiseAbs().maxCoeff();
      current = std::move(next);
      ++iters;
      if (change <= tol) {
        converged = true;
        break;
      }
    }
    result.iterations = std::max(result.iterations, iters);
    result.converged = result.converged && converged;
    for (Eigen::Index r = 0; r < current.rows(); ++r) {
      f.row(static_cast<Eigen::Index>(block.nodes[static_cast<std::size_t>(r)])) = current.row(r);
    }
  }
  result.scores = ScoreMatrix(std::move(f));
  return result;
}

double fixed_point_residual(const TransitionMatrix& t, const LabelMatrix& seeds, double alpha,
                            const ScoreMatrix& scores) {
  check_shapes(t, seeds, alpha);
  double worst = 0.0;
  for (const auto& block : t.blocks()) {
    bool any = false;
    const Eigen::MatrixXd y = block_seeds(block, seeds, any);
    const auto m = static_cast<Eigen::Index>(block.nodes.size());
    Eigen::MatrixXd local(m, seeds.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
      local.row(r) = scores.values().row(static_cast<Eigen::Index>(block.nodes[static_cast<std::size_t>(r)]));
    }
    const Eigen::MatrixXd diff = local - (alpha * (block.weights * local) + (1.0 - alpha) * y);
    if (diff.size() > 0) worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<int> assign_labels(const ScoreMatrix& scores, std::optional<std::span<const int>> fallback) {
  if (fallback && fallback->size() != scores.rows()) throw DataError("fallback labels do not match score rows");
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const int preferred = fallback ? (*fallback)[i] : 0;
    double best = 0.0;
    int arg = 0;
    for (int j = 0; j < scores.cols(); ++j) {
      const double v = scores(i, j);
      if (arg == 0 || v > best) {
        best = v;
        arg = j + 1;
      }
    }
    if (arg == 0 || best == 0.0) {
      out[i] = preferred > 0 ? preferred : 1;
      continue;
    }
    if (preferred > 0 && preferred <= scores.cols() && scores(i, preferred - 1) == best) arg = preferred;
    out[i] = arg;
  }
  return out;
}

int majority_vote(std::span<const int> votes, int original) {
  if (votes.empty()) throw DataError("majority_vote: no votes");
  std::map<int, std::size_t> counts;
  for (const int v : votes) ++counts[v];
  std::size_t top = 0;
  int winner = 0;
  for (const auto& [label, count] : counts) {
    if (count > top) {
      top = count;
      winner = label;
    }
  }
  const auto it = counts.find(original);
  if (it != counts.end() && it->second == top) return original;
  return winner;
}

}  // namespace hsclean

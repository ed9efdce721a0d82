#include "hsclean/rlpa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "hsclean/errors.hpp"
#include "hsclean/random.hpp"
#include "parallel.hpp"

namespace hsclean {

void RlpaConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
}

namespace {

std::size_t seed_count(std::size_t n, double eta) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * eta));
}

}  // namespace

std::vector<int> rlpa_round(const TransitionMatrix& t, const LabelMatrix& noisy, const RlpaConfig& cfg,
                            std::size_t round) {
  const std::size_t n = noisy.rows();
  const std::size_t l = seed_count(n, cfg.eta);
  Rng rng(split_seed(cfg.seed, round));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));

  std::vector<int> seeds(n, 0);
  for (std::size_t k = 0; k < l; ++k) seeds[perm[k]] = noisy.label(perm[k]);
  const ScoreMatrix scores = propagate_closed(t, LabelMatrix(noisy.cols(), std::move(seeds)), cfg.alpha);

  if (cfg.fallback == UnreachableFallback::KeepOriginal) return assign_labels(scores, noisy.labels());
  return assign_labels(scores);
}

CleanseResult rlpa_cleanse(const TransitionMatrix& t, const LabelMatrix& noisy, const RlpaConfig& cfg,
                           std::optional<std::span<const int>> clean_reference) {
  cfg.validate();
  const std::size_t n = noisy.rows();
  if (t.size() != n) throw DataError("transition matrix is not built over these samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!noisy.labeled(i)) throw DataError("every training sample needs a (noisy) label");
  }
  if (clean_reference && clean_reference->size() != n) throw DataError("clean reference length mismatch");
  const std::size_t l = seed_count(n, cfg.eta);
  if (l == 0) throw ConfigError("eta too small: no labeled seeds for " + std::to_string(n) + " samples");

  std::vector<std::vector<int>> per_round(cfg.rounds);
  parallel_for(cfg.rounds, cfg.threads, [&](std::size_t s) { per_round[s] = rlpa_round(t, noisy, cfg, s + 1); });

  CleanseResult result;
  result.seeds_per_round = l;
  const int classes = noisy.cols();
  std::vector<int> votes(cfg.rounds);
  result.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < cfg.rounds; ++s) votes[s] = per_round[s][i];
    result.labels[i] = majority_vote(votes, noisy.label(i));
  }

  if (clean_reference) {
    const auto& clean = *clean_reference;
    std::size_t initial = 0;
    for (std::size_t i = 0; i < n; ++i) initial += noisy.label(i) != clean[i] ? 1 : 0;
    result.initial_noisy = initial;

    // Running tallies reproduce majority_vote over each prefix of rounds.
    std::vector<std::size_t> tally(n * static_cast<std::size_t>(classes + 1), 0);
    auto prefix_winner = [&](std::size_t i) {
      const std::size_t* row = tally.data() + i * static_cast<std::size_t>(classes + 1);
      std::size_t top = 0;
      int winner = 0;
      for (int c = 1; c <= classes; ++c) {
        if (row[c] > top) {
          top = row[c];
          winner = c;
        }
      }
      const int original = noisy.label(i);
      return row[original] == top ? original : winner;
    };
    for (std::size_t s = 0; s < cfg.rounds; ++s) {
      RoundDiagnostics diag;
      diag.round = s + 1;
      for (std::size_t i = 0; i < n; ++i) {
        const int vote = per_round[s][i];
        ++tally[i * static_cast<std::size_t>(classes + 1) + static_cast<std::size_t>(vote)];
        diag.per_round_noisy += vote != clean[i] ? 1 : 0;
        diag.cumulative_noisy += prefix_winner(i) != clean[i] ? 1 : 0;
      }
      result.rounds.push_back(diag);
    }
  }
  return result;
}

}  // namespace hsclean

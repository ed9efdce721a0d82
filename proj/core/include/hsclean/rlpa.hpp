#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hsclean/datacube.hpp"
#include "hsclean/propagation.hpp"
#include "hsclean/ssgraph.hpp"

namespace hsclean {

// What a round assigns to a sample whose block received no labeled seed.
enum class UnreachableFallback { KeepOriginal, LowestClass };

struct RlpaConfig {
  double eta = 0.7;     // share of samples kept as labeled seeds per round
  double alpha = 0.9;   // propagation retention weight, 0 < alpha < 1
  std::size_t rounds = 100;
  std::uint64_t seed = 0;
  UnreachableFallback fallback = UnreachableFallback::KeepOriginal;
  // Worker threads for the rounds; 0 means hardware concurrency. The result
  // does not depend on this value.
  std::size_t threads = 1;

  void validate() const;
};

struct RoundDiagnostics {
  std::size_t round = 0;  // 1-based
  // Disagreements with the clean reference of this round's labels alone,
  // and of the majority vote over rounds 1..round.
  std::size_t per_round_noisy = 0;
  std::size_t cumulative_noisy = 0;
};

struct CleanseResult {
  std::vector<int> labels;  // 1-based classes, one per sample
  std::size_t seeds_per_round = 0;  // l = round(N * eta)
  // Disagreements of the noisy input with the reference; filled only when a
  // clean reference is supplied, as are the per-round rows.
  std::optional<std::size_t> initial_noisy;
  std::vector<RoundDiagnostics> rounds;
};

// Labels assigned by one round: the first l samples of a seeded random
// permutation keep their noisy labels, the rest are cleared, scores are
// propagated with propagate_closed and assigned row-wise.
std::vector<int> rlpa_round(const TransitionMatrix& t, const LabelMatrix& noisy, const RlpaConfig& cfg,
                            std::size_t round);

// Random label propagation with majority-vote fusion. Rounds use seeds
// split_seed(cfg.seed, s) and run in parallel; votes are fused in round
// order with each sample's noisy label as the tie anchor.
CleanseResult rlpa_cleanse(const TransitionMatrix& t, const LabelMatrix& noisy, const RlpaConfig& cfg,
                           std::optional<std::span<const int>> clean_reference = std::nullopt);

}  // namespace hsclean

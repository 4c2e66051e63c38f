#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "castream/oracle.hpp"
#include "castream/perception.hpp"
#include "castream/types.hpp"

namespace castream {

// Chunk ordinals in descending saliency order.
struct SortedGroup {
  std::vector<int> indices;
};

struct RankingResult {
  std::vector<int> global_order;   // permutation of 0..D-1, best first
  WeightSeries normalized_weights; // rank index mapped to [0,1], by chunk
  WeightSeries smoothed_weights;
  long sort_calls_used = 0;
};

// In-flight state of one two-group merge. Uncommitted items returned by the
// oracle sit at the front of their source deque in the oracle's order, which
// keeps both deques globally sorted under a correct comparator. A fully
// source-blind pool would lose the domination guarantee the commit step
// relies on, so source identity is retained.
struct MergeState {
  std::deque<int> a;
  std::deque<int> b;
  std::vector<int> committed;
};

// Resumable progress of a whole-video sort: results of completed merges in
// post-order plus the state of the merge that was interrupted.
struct RankingSnapshot {
  std::vector<std::vector<int>> completed_merges;
  MergeState current;
  bool current_valid = false;
  long sort_calls = 0;

  std::string to_json() const;
  static RankingSnapshot from_json(const std::string& text);
};

class RankingError : public std::runtime_error {
 public:
  RankingError(const std::string& what, RankingSnapshot snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const RankingSnapshot& snapshot() const { return snapshot_; }

 private:
  RankingSnapshot snapshot_;
};

// Each window's chunks sorted by raw rating descending, ties to lower index.
// No oracle calls.
std::vector<SortedGroup> seed_groups(const PerceptionResult& p);

// Merges two individually sorted groups through sort windows of at most m
// candidates. Exact under a noiseless comparator.
SortedGroup merge_two(const SortedGroup& a, const SortedGroup& b, const std::string& summary,
                      int window_length, RatingOracle& oracle);

// Binary recursion over the group list (left half gets ceil(k/2) groups).
// `resume`, when given, replays completed merges without oracle calls and
// continues the interrupted one.
std::vector<int> global_sort(const std::vector<SortedGroup>& groups, const std::string& summary,
                             int window_length, RatingOracle& oracle,
                             const RankingSnapshot* resume = nullptr,
                             long* sort_calls_used = nullptr);

// Worst-case oracle calls for sorting k groups:
// T(1) = 1, T(k) = T(floor(k/2)) + T(ceil(k/2)) + 2k - 1.
long long recurrence_calls(long long k);

// Sorted position p (0 = best) maps to weight (D-1-p)/(D-1); D = 1 maps to 1.
WeightSeries rank_to_weights(const std::vector<int>& order, int total_chunks);

// 1-D Gaussian convolution with the kernel truncated to kernel_size taps and
// renormalized over in-range taps at the boundaries; output clamped to [0,1].
WeightSeries gaussian_smooth(const WeightSeries& w, double sigma, int kernel_size);

// Full VOD re-ranking: seed, sort, normalize, smooth. kernel_size <= 0 means
// "use D taps".
RankingResult run_ranking(const PerceptionResult& p, RatingOracle& oracle, double sigma,
                          int kernel_size = 0);

}  // namespace castream

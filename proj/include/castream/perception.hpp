#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "castream/oracle.hpp"
#include "castream/types.hpp"

namespace castream {

struct PerceptionResult {
  std::vector<int> raw_ratings;        // length D, window outputs concatenated
  std::vector<std::string> summaries;  // one per window, last is the global summary
  int window_length = 0;
  std::vector<WindowResponse> responses;  // kept for latency replay

  const std::string& global_summary() const { return summaries.back(); }
};

class PerceptionError : public std::runtime_error {
 public:
  PerceptionError(int window_index, const std::string& what)
      : std::runtime_error("window " + std::to_string(window_index) + ": " + what),
        window_index_(window_index) {}
  int window_index() const { return window_index_; }

 private:
  int window_index_;
};

// JSON-lines store of window responses keyed by (video_id, window_index),
// so an interrupted pass resumes without re-spending oracle calls.
class WindowCache {
 public:
  explicit WindowCache(std::string path);

  std::optional<WindowResponse> lookup(const std::string& video_id, int window_index) const;
  void store(const std::string& video_id, int window_index,
             const std::vector<int>& frame_indices, const WindowResponse& resp);

 private:
  std::string path_;
  // key = video_id + '\x1f' + window_index
  std::map<std::string, WindowResponse> entries_;
};

// Iterates ceil(D/m) windows of m chunks, threading each window's total
// summary into the next request. The final ragged window is sent as-is.
PerceptionResult run_perception(const VideoRecord& video, int window_length,
                                RatingOracle& oracle, WindowCache* cache = nullptr);

// Ratings rescaled to [0,1] with no cross-window correction.
WeightSeries raw_weights(const PerceptionResult& p);

}  // namespace castream

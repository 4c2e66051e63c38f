#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace castream {

// One video chunk: the unit of bitrate decision and saliency weighting.
struct ChunkRecord {
  int index = 0;               // 0-based ordinal within the video
  double duration_s = 1.0;
  double gt_saliency = 0.0;    // ground-truth importance in [0,1]
  std::vector<double> embedding;  // precomputed content feature, length E
};

struct VideoRecord {
  std::string video_id;
  std::string title_info;  // seed text for the first rating window
  std::vector<ChunkRecord> chunks;
  std::vector<double> text_embedding;  // pooled summary feature, length E

  std::size_t chunk_count() const { return chunks.size(); }

  // Enforces the structural invariants: non-empty, equal durations,
  // saliency in range, consistent embedding width.
  void validate() const;
};

// Per-chunk weight values, each in [0,1].
struct WeightSeries {
  std::vector<double> values;

  WeightSeries() = default;
  explicit WeightSeries(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  void validate() const;
};

struct MetricReport {
  double plcc = 0.0;
  double srcc = 0.0;
  double map50 = 0.0;
  double map15 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  // Correlations on a constant series are undefined; the flags keep that
  // state explicit instead of smuggling a zero into averaged reports.
  bool plcc_defined = true;
  bool srcc_defined = true;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace castream

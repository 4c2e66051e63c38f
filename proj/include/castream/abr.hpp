#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "castream/types.hpp"

namespace castream {

struct BitrateLadder {
  std::vector<double> kbps{300, 750, 1200, 1850, 2850, 4300};

  void validate() const;
  std::size_t levels() const { return kbps.size(); }
};

struct TraceSample {
  double t_s = 0.0;
  double kbps = 0.0;
};

// Throughput over time, piecewise constant between samples, wrapped
// cyclically for sessions longer than the trace.
struct NetworkTrace {
  std::vector<TraceSample> samples;

  void validate() const;
  double duration_s() const;
  static NetworkTrace load(const std::string& path);
};

enum class QualityMap { Linear, Log };

struct QoeParams {
  double rebuffer_penalty = 4.3;    // per second of stall
  double smoothness_penalty = 1.0;  // per unit of quality change
  QualityMap quality_map = QualityMap::Linear;
  // Eq-literal weighting scales the whole per-chunk term; the alternative
  // scales only the quality component.
  bool weight_quality_only = false;
  double buffer_cap_s = 60.0;
};

// Chunk utility for one ladder level: linear in Mbps by default.
double quality_of(double kbps, const QoeParams& params);

struct ChunkDecision {
  int level = 0;
  double rebuffer_s = 0.0;
};

// Sum of w_i * q_i with q_i = quality - rebuffer penalty - smoothness
// penalty; the first chunk carries no smoothness term.
double weighted_qoe(std::span<const ChunkDecision> decisions, const WeightSeries& weights,
                    const QoeParams& params, const BitrateLadder& ladder);

struct StreamState {
  double buffer_s = 0.0;
  int last_level = -1;  // -1 before the first chunk
  int playhead = 0;
  double rebuffer_s = 0.0;
};

// Robust MPC step: exhaustive search over all ladder^N plans under a
// conservatively discounted harmonic-mean throughput prediction. Returns the
// first level of the best plan; ties prefer the lower level. An empty
// throughput history forces the lowest level.
int mpc_decide(const StreamState& state, std::span<const double> weights_ahead,
               std::span<const double> throughput_history_kbps, const BitrateLadder& ladder,
               const QoeParams& params, double chunk_duration_s);

struct SessionChunkRow {
  int chunk = 0;
  int level = 0;
  double kbps = 0.0;
  double download_s = 0.0;
  double rebuffer_s = 0.0;
  double weight = 1.0;
  double q_value = 0.0;
  double buffer_after_s = 0.0;
};

struct SessionReport {
  std::vector<SessionChunkRow> rows;
  double weighted_qoe_total = 0.0;
  double unweighted_qoe_total = 0.0;
  double total_rebuffer_s = 0.0;

  std::string to_json() const;
  static SessionReport from_json(const std::string& text);
};

// Supplies the horizon weights for the chunk about to be decided, given the
// wall-clock time of the decision. VOD slices a fixed series; live sessions
// query the weight pool.
using WeightProvider = std::function<std::vector<double>(int chunk, double now_s)>;

// Chunk-by-chunk trace-driven download with MPC control: playback starts
// after the first chunk, the buffer never goes negative, and rebuffer time
// is exactly the download time not covered by the buffer.
SessionReport simulate_session(int total_chunks, double chunk_duration_s,
                               const NetworkTrace& trace, const BitrateLadder& ladder,
                               const QoeParams& params, int horizon,
                               const WeightProvider& weights);

// Horizon weights from a fixed per-chunk series, padding 1.0 past the end.
WeightProvider vod_weight_provider(const WeightSeries& weights, int horizon);

}  // namespace castream

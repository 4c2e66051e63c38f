#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "castream/forecast.hpp"
#include "castream/oracle.hpp"
#include "castream/types.hpp"

namespace castream {

struct LiveConfig {
  double chunk_duration_s = 1.0;           // d
  int window_length = 10;                  // m
  int horizon = 5;                         // N, ABR lookahead
  std::vector<int> pretrained_louts;       // ascending, default {1,2,3}*m
  double forecast_latency_est_s = 1.35;    // seed for the latency EWMA
  double forecast_latency_actual_s = -1.0; // <0 means "same as estimate"
  double ewma_alpha = 0.3;

  void validate() const;
};

// ceil((rater latency + forecast latency) / d) + m + N
int required_lout(double rater_latency_s, double forecast_latency_s, double chunk_duration_s,
                  int window_length, int horizon);

struct ModelSelection {
  int l_out = 0;
  int shortfall = 0;  // chunks not covered by the chosen model
};

// Smallest available L_out >= required; the largest with a shortfall when
// none suffices.
ModelSelection select_model(int required, const std::vector<int>& available);

struct PoolEntry {
  double weight = 1.0;
  double submitted_at = 0.0;  // forecast submission time; newer wins on overlap
  double written_at = 0.0;
  bool padded = false;
};

// The global future-weight map. Reads never block; writes keep the entry
// from the latest submission.
class WeightPool {
 public:
  void write(int chunk, double weight, double submitted_at, double written_at, bool padded);

  struct QueryResult {
    std::vector<double> weights;  // horizon values, default 1.0 where absent
    int served_from_pool = 0;
    bool fully_served = false;
  };
  // Weights for chunks current+1 .. current+horizon visible at time `now`.
  QueryResult query(int current_chunk, int horizon, double now) const;

  const std::map<int, PoolEntry>& entries() const { return entries_; }

 private:
  std::map<int, PoolEntry> entries_;
};

enum class LiveEventType {
  ChunkPlayed,
  RaterSubmitted,
  RaterResponded,
  ForecastSubmitted,
  ForecastCompleted,
  WeightsQueried,
};

struct LiveEvent {
  double t = 0.0;
  long seq = 0;  // total order among same-time events
  LiveEventType type = LiveEventType::ChunkPlayed;

  int chunk_index = -1;
  int window_index = -1;
  double latency_s = 0.0;        // RaterResponded: measured rater latency
  int required_l_out = 0;        // ForecastSubmitted
  int selected_l_out = 0;
  int shortfall = 0;
  int cover_start = -1;          // ForecastCompleted: first chunk written
  std::vector<double> weights;   // ForecastCompleted: written values (pads included)
  int horizon = 0;               // WeightsQueried
  int served_from_pool = 0;
  bool fully_served = false;
};

using SessionTimeline = std::vector<LiveEvent>;

// Pluggable predictor used by the session; the model-backed implementation
// wraps a bank of trained forecasters, the stub repeats the last rating.
class LivePredictor {
 public:
  virtual ~LivePredictor() = default;
  virtual std::vector<double> predict(const ForecastInput& input, int l_out) = 0;
};

class StubPredictor final : public LivePredictor {
 public:
  std::vector<double> predict(const ForecastInput& input, int l_out) override {
    return std::vector<double>(l_out, input.series.empty() ? 1.0 : input.series.back());
  }
};

class ModelBankPredictor final : public LivePredictor {
 public:
  void add_model(ForecastModel model);
  std::vector<double> predict(const ForecastInput& input, int l_out) override;
  std::vector<int> available_louts() const;

 private:
  std::map<int, ForecastModel> models_;  // keyed by L_out
};

// Single-threaded discrete-event simulation of one live session: playback on
// the d-clock, rater and forecaster as delayed completion events, weight
// queries served from the pool without waiting.
class LiveSession {
 public:
  LiveSession(const VideoRecord& video, LiveConfig cfg, RatingOracle& oracle,
              LivePredictor& predictor);

  // Runs the whole session and returns the event log.
  const SessionTimeline& run();

  const SessionTimeline& timeline() const { return timeline_; }
  const WeightPool& pool() const { return pool_; }
  // Weight lookup for an external consumer (the ABR simulator) at wall time
  // `now`; recorded in the timeline as a WeightsQueried event.
  WeightPool::QueryResult query_weights(int current_chunk, double now);

 private:
  const VideoRecord& video_;
  LiveConfig cfg_;
  RatingOracle& oracle_;
  LivePredictor& predictor_;
  WeightPool pool_;
  SessionTimeline timeline_;
  double forecast_latency_ewma_ = 0.0;
  long next_seq_ = 0;
  bool ran_ = false;
};

// Fraction of queries fully served from the pool, over queries issued at or
// after the first rater submission (earlier ones cannot possibly be served).
double utility(const SessionTimeline& timeline);

// Independent recomputation: rebuilds the pool from ForecastCompleted events
// and re-answers every query.
double replay_utility(const SessionTimeline& timeline);

// Structural checks: nondecreasing timestamps, response-before-forecast
// causality, at most one completion per submission, zero-wait queries on
// chunk boundaries. Throws DomainError on violation.
void validate_timeline(const SessionTimeline& timeline, const LiveConfig& cfg);

// Pooled predicted weight actually visible per chunk at its decision time,
// default 1.0 (the quantity correlated against gt in live reports).
std::vector<double> queried_weights_by_chunk(const SessionTimeline& timeline, int total_chunks);

// JSON-lines export/import of the event log.
void save_timeline(const std::string& path, const SessionTimeline& timeline);
SessionTimeline load_timeline(const std::string& path);

}  // namespace castream

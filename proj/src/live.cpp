#include "castream/live.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

namespace castream {

namespace {

const char* event_name(LiveEventType t) {
  switch (t) {
    case LiveEventType::ChunkPlayed: return "chunk_played";
    case LiveEventType::RaterSubmitted: return "rater_submitted";
    case LiveEventType::RaterResponded: return "rater_responded";
    case LiveEventType::ForecastSubmitted: return "forecast_submitted";
    case LiveEventType::ForecastCompleted: return "forecast_completed";
    case LiveEventType::WeightsQueried: return "weights_queried";
  }
  return "?";
}

LiveEventType event_from_name(const std::string& s) {
  if (s == "chunk_played") return LiveEventType::ChunkPlayed;
  if (s == "rater_submitted") return LiveEventType::RaterSubmitted;
  if (s == "rater_responded") return LiveEventType::RaterResponded;
  if (s == "forecast_submitted") return LiveEventType::ForecastSubmitted;
  if (s == "forecast_completed") return LiveEventType::ForecastCompleted;
  if (s == "weights_queried") return LiveEventType::WeightsQueried;
  throw DomainError("unknown timeline event type: " + s);
}

SessionTimeline sorted_by_time(const SessionTimeline& timeline) {
  SessionTimeline out = timeline;
  std::stable_sort(out.begin(), out.end(), [](const LiveEvent& a, const LiveEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.seq < b.seq;
  });
  return out;
}

}  // namespace

void LiveConfig::validate() const {
  if (chunk_duration_s <= 0.0) throw DomainError("live: chunk duration must be > 0");
  if (window_length < 1) throw DomainError("live: window length must be >= 1");
  if (horizon < 1) throw DomainError("live: horizon must be >= 1");
  if (pretrained_louts.empty()) throw DomainError("live: pretrained L_out list is empty");
  if (!std::is_sorted(pretrained_louts.begin(), pretrained_louts.end())) {
    throw DomainError("live: pretrained L_out list must be ascending");
  }
  if (pretrained_louts.front() < 1) throw DomainError("live: L_out values must be >= 1");
  if (forecast_latency_est_s < 0.0) throw DomainError("live: forecast latency estimate < 0");
  if (ewma_alpha <= 0.0 || ewma_alpha > 1.0) throw DomainError("live: ewma_alpha outside (0,1]");
}

int required_lout(double rater_latency_s, double forecast_latency_s, double chunk_duration_s,
                  int window_length, int horizon) {
  if (chunk_duration_s <= 0.0) throw DomainError("required_lout: chunk duration must be > 0");
  const double gap = (rater_latency_s + forecast_latency_s) / chunk_duration_s;
  // tolerance absorbs accumulated floating error at exact chunk boundaries
  const int elapsed = static_cast<int>(std::ceil(gap - 1e-9));
  return std::max(0, elapsed) + window_length + horizon;
}

ModelSelection select_model(int required, const std::vector<int>& available) {
  if (available.empty()) throw DomainError("select_model: no models available");
  for (int l : available) {
    if (l >= required) return {l, 0};
  }
  const int largest = available.back();
  return {largest, required - largest};
}

void WeightPool::write(int chunk, double weight, double submitted_at, double written_at,
                       bool padded) {
  auto it = entries_.find(chunk);
  if (it != entries_.end() && it->second.submitted_at > submitted_at) return;
  entries_[chunk] = PoolEntry{weight, submitted_at, written_at, padded};
}

WeightPool::QueryResult WeightPool::query(int current_chunk, int horizon, double now) const {
  QueryResult result;
  result.weights.reserve(horizon);
  for (int j = 1; j <= horizon; ++j) {
    const auto it = entries_.find(current_chunk + j);
    if (it != entries_.end() && it->second.written_at <= now) {
      result.weights.push_back(it->second.weight);
      ++result.served_from_pool;
    } else {
      result.weights.push_back(1.0);
    }
  }
  result.fully_served = result.served_from_pool == horizon;
  return result;
}

void ModelBankPredictor::add_model(ForecastModel model) {
  const int l_out = model.hyper.l_out;
  models_.emplace(l_out, std::move(model));
}

std::vector<double> ModelBankPredictor::predict(const ForecastInput& input, int l_out) {
  const auto it = models_.find(l_out);
  if (it == models_.end()) {
    throw DomainError("no trained model with L_out = " + std::to_string(l_out));
  }
  return forward(it->second, input, /*clamp_output=*/true);
}

std::vector<int> ModelBankPredictor::available_louts() const {
  std::vector<int> out;
  out.reserve(models_.size());
  for (const auto& [l, _] : models_) out.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------
// LiveSession
// ---------------------------------------------------------------------------

namespace {

struct PendingResponse {
  double t = 0.0;
  long order = 0;
  int window_index = 0;
  WindowResponse response;
  double submitted_at = 0.0;
};

struct PendingForecast {
  double t = 0.0;
  long order = 0;
  int window_index = 0;
  double submitted_at = 0.0;
  int cover_start = 0;
  std::vector<double> weights;  // real predictions followed by pad values
  int pad_count = 0;
};

}  // namespace

LiveSession::LiveSession(const VideoRecord& video, LiveConfig cfg, RatingOracle& oracle,
                         LivePredictor& predictor)
    : video_(video), cfg_(cfg), oracle_(oracle), predictor_(predictor) {
  cfg_.validate();
  video_.validate();
  forecast_latency_ewma_ = cfg_.forecast_latency_est_s;
}

const SessionTimeline& LiveSession::run() {
  if (ran_) return timeline_;
  ran_ = true;

  const int total = static_cast<int>(video_.chunk_count());
  const int m = cfg_.window_length;
  const double d = cfg_.chunk_duration_s;
  const double actual_forecast_latency = cfg_.forecast_latency_actual_s >= 0.0
                                             ? cfg_.forecast_latency_actual_s
                                             : cfg_.forecast_latency_est_s;

  std::deque<PendingResponse> pending_responses;
  std::deque<PendingForecast> pending_forecasts;
  long pending_order = 0;

  auto log_event = [&](LiveEvent e) {
    e.seq = next_seq_++;
    timeline_.push_back(std::move(e));
  };

  auto deliver_response = [&](const PendingResponse& pr) {
    LiveEvent responded;
    responded.t = pr.t;
    responded.type = LiveEventType::RaterResponded;
    responded.window_index = pr.window_index;
    responded.latency_s = pr.response.latency_s;
    log_event(responded);

    const int required =
        required_lout(pr.response.latency_s, forecast_latency_ewma_, d, m, cfg_.horizon);
    const ModelSelection sel = select_model(required, cfg_.pretrained_louts);

    LiveEvent submitted;
    submitted.t = pr.t;
    submitted.type = LiveEventType::ForecastSubmitted;
    submitted.window_index = pr.window_index;
    submitted.required_l_out = required;
    submitted.selected_l_out = sel.l_out;
    submitted.shortfall = sel.shortfall;
    log_event(submitted);

    ForecastInput input;
    const int w_begin = pr.window_index * m;
    input.series.reserve(m);
    input.frame_embeddings.reserve(m);
    for (std::size_t i = 0; i < pr.response.ratings.size(); ++i) {
      input.series.push_back(static_cast<double>(pr.response.ratings[i]) / 100.0);
      input.frame_embeddings.push_back(video_.chunks[w_begin + i].embedding);
    }
    input.text_embedding = video_.text_embedding;

    PendingForecast pf;
    pf.t = pr.t + actual_forecast_latency;
    pf.order = pending_order++;
    pf.window_index = pr.window_index;
    pf.submitted_at = pr.t;
    pf.cover_start = w_begin + m;  // first chunk after the rated window
    pf.weights = predictor_.predict(input, sel.l_out);
    for (double& w : pf.weights) w = std::clamp(w, 0.0, 1.0);
    pf.pad_count = sel.shortfall;
    pf.weights.insert(pf.weights.end(), sel.shortfall, 1.0);
    pending_forecasts.push_back(std::move(pf));
  };

  auto deliver_forecast = [&](const PendingForecast& pf) {
    for (std::size_t j = 0; j < pf.weights.size(); ++j) {
      pool_.write(pf.cover_start + static_cast<int>(j), pf.weights[j], pf.submitted_at, pf.t,
                  j >= pf.weights.size() - pf.pad_count);
    }
    const double measured = pf.t - pf.submitted_at;
    forecast_latency_ewma_ =
        cfg_.ewma_alpha * measured + (1.0 - cfg_.ewma_alpha) * forecast_latency_ewma_;

    LiveEvent completed;
    completed.t = pf.t;
    completed.type = LiveEventType::ForecastCompleted;
    completed.window_index = pf.window_index;
    completed.latency_s = measured;
    completed.cover_start = pf.cover_start;
    completed.weights = pf.weights;
    completed.shortfall = pf.pad_count;
    log_event(completed);
  };

  // Delivers everything scheduled up to `horizon_t`; responses and forecasts
  // are interleaved in (time, schedule order).
  auto drain_until = [&](double horizon_t, bool inclusive) {
    for (;;) {
      const bool has_r = !pending_responses.empty();
      const bool has_f = !pending_forecasts.empty();
      if (!has_r && !has_f) return;
      double tr = has_r ? pending_responses.front().t : 1e300;
      double tf = has_f ? pending_forecasts.front().t : 1e300;
      const bool pick_response =
          has_r && (tr < tf || (tr == tf && pending_responses.front().order <
                                                pending_forecasts.front().order));
      const double tnext = pick_response ? tr : tf;
      if (inclusive ? tnext > horizon_t : tnext >= horizon_t) return;
      if (pick_response) {
        PendingResponse pr = std::move(pending_responses.front());
        pending_responses.pop_front();
        deliver_response(pr);
      } else {
        PendingForecast pf = std::move(pending_forecasts.front());
        pending_forecasts.pop_front();
        deliver_forecast(pf);
      }
    }
  };

  for (int i = 0; i < total; ++i) {
    const double boundary = static_cast<double>(i + 1) * d;
    drain_until(boundary, /*inclusive=*/false);

    LiveEvent played;
    played.t = boundary;
    played.type = LiveEventType::ChunkPlayed;
    played.chunk_index = i;
    log_event(played);

    if ((i + 1) % m == 0) {
      const int window_index = (i + 1) / m - 1;
      WindowRequest req;
      req.frame_indices.resize(m);
      for (int j = 0; j < m; ++j) req.frame_indices[j] = window_index * m + j;
      req.prev_summary = "live";
      req.video_info = video_.title_info;

      LiveEvent submitted;
      submitted.t = boundary;
      submitted.type = LiveEventType::RaterSubmitted;
      submitted.window_index = window_index;
      log_event(submitted);

      try {
        PendingResponse pr;
        pr.response = oracle_.rate_window(req);
        pr.t = boundary + pr.response.latency_s;
        pr.order = pending_order++;
        pr.window_index = window_index;
        pr.submitted_at = boundary;
        // keep the pending queue time-ordered
        auto pos = std::upper_bound(pending_responses.begin(), pending_responses.end(), pr,
                                    [](const PendingResponse& a, const PendingResponse& b) {
                                      return a.t < b.t;
                                    });
        pending_responses.insert(pos, std::move(pr));
      } catch (const OracleError&) {
        // window skipped, pool unaffected; downstream queries see defaults
      }
    }

    drain_until(boundary, /*inclusive=*/true);

    const WeightPool::QueryResult q = pool_.query(i, cfg_.horizon, boundary);
    LiveEvent query;
    query.t = boundary;
    query.type = LiveEventType::WeightsQueried;
    query.chunk_index = i;
    query.horizon = cfg_.horizon;
    query.weights = q.weights;
    query.served_from_pool = q.served_from_pool;
    query.fully_served = q.fully_served;
    log_event(query);
  }

  // Late completions land after the last boundary; kept for log completeness.
  drain_until(1e300, true);
  return timeline_;
}

WeightPool::QueryResult LiveSession::query_weights(int current_chunk, double now) {
  const WeightPool::QueryResult q = pool_.query(current_chunk, cfg_.horizon, now);
  LiveEvent query;
  query.t = now;
  query.seq = next_seq_++;
  query.type = LiveEventType::WeightsQueried;
  query.chunk_index = current_chunk;
  query.horizon = cfg_.horizon;
  query.weights = q.weights;
  query.served_from_pool = q.served_from_pool;
  query.fully_served = q.fully_served;
  timeline_.push_back(std::move(query));
  return q;
}

// ---------------------------------------------------------------------------
// timeline analysis
// ---------------------------------------------------------------------------

double utility(const SessionTimeline& timeline) {
  const SessionTimeline sorted = sorted_by_time(timeline);
  double first_submit = -1.0;
  for (const LiveEvent& e : sorted) {
    if (e.type == LiveEventType::RaterSubmitted) {
      first_submit = e.t;
      break;
    }
  }
  long total = 0, served = 0;
  for (const LiveEvent& e : sorted) {
    if (e.type != LiveEventType::WeightsQueried) continue;
    if (first_submit < 0.0 || e.t < first_submit) continue;
    ++total;
    if (e.fully_served) ++served;
  }
  return total == 0 ? 0.0 : static_cast<double>(served) / static_cast<double>(total);
}

double replay_utility(const SessionTimeline& timeline) {
  const SessionTimeline sorted = sorted_by_time(timeline);
  WeightPool pool;
  double first_submit = -1.0;
  long total = 0, served = 0;
  for (const LiveEvent& e : sorted) {
    switch (e.type) {
      case LiveEventType::RaterSubmitted:
        if (first_submit < 0.0) first_submit = e.t;
        break;
      case LiveEventType::ForecastCompleted:
        for (std::size_t j = 0; j < e.weights.size(); ++j) {
          pool.write(e.cover_start + static_cast<int>(j), e.weights[j], e.t - e.latency_s, e.t,
                     false);
        }
        break;
      case LiveEventType::WeightsQueried: {
        if (first_submit < 0.0 || e.t < first_submit) break;
        ++total;
        const WeightPool::QueryResult q = pool.query(e.chunk_index, e.horizon, e.t);
        if (q.fully_served) ++served;
        break;
      }
      default:
        break;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(served) / static_cast<double>(total);
}

void validate_timeline(const SessionTimeline& timeline, const LiveConfig& cfg) {
  const SessionTimeline sorted = sorted_by_time(timeline);

  double prev_t = -1e300;
  std::map<int, double> response_t, forecast_submit_t;
  std::map<int, int> submissions, completions;
  for (const LiveEvent& e : sorted) {
    if (e.t < prev_t) throw DomainError("timeline timestamps decrease");
    prev_t = e.t;

    switch (e.type) {
      case LiveEventType::RaterSubmitted:
        submissions[e.window_index] += 1;
        break;
      case LiveEventType::RaterResponded:
        if (!submissions.count(e.window_index)) {
          throw DomainError("rater response without submission");
        }
        response_t[e.window_index] = e.t;
        break;
      case LiveEventType::ForecastSubmitted: {
        const auto it = response_t.find(e.window_index);
        if (it == response_t.end() || it->second > e.t) {
          throw DomainError("forecast submitted before its rating response");
        }
        forecast_submit_t[e.window_index] = e.t;
        break;
      }
      case LiveEventType::ForecastCompleted: {
        completions[e.window_index] += 1;
        if (completions[e.window_index] > 1) {
          throw DomainError("more than one completion for one forecast submission");
        }
        const auto it = forecast_submit_t.find(e.window_index);
        if (it == forecast_submit_t.end() || it->second > e.t) {
          throw DomainError("forecast completed before submission");
        }
        break;
      }
      case LiveEventType::WeightsQueried: {
        // The query path never waits: a playback query sits exactly on its
        // chunk boundary regardless of rater or forecaster latency.
        const double boundary = (e.chunk_index + 1) * cfg.chunk_duration_s;
        if (std::abs(e.t - boundary) > 1e-9 && e.t < boundary) {
          throw DomainError("weight query issued before its chunk boundary");
        }
        break;
      }
      default:
        break;
    }
  }
}

std::vector<double> queried_weights_by_chunk(const SessionTimeline& timeline, int total_chunks) {
  std::vector<double> weights(total_chunks, 1.0);
  for (const LiveEvent& e : timeline) {
    if (e.type != LiveEventType::WeightsQueried || e.weights.empty()) continue;
    const int next = e.chunk_index + 1;
    if (next >= 0 && next < total_chunks) weights[next] = e.weights.front();
  }
  return weights;
}

void save_timeline(const std::string& path, const SessionTimeline& timeline) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write timeline file " + path);
  for (const LiveEvent& e : sorted_by_time(timeline)) {
    nlohmann::json j{{"t", e.t},
                     {"seq", e.seq},
                     {"type", event_name(e.type)},
                     {"chunk_index", e.chunk_index},
                     {"window_index", e.window_index},
                     {"latency_s", e.latency_s},
                     {"required_l_out", e.required_l_out},
                     {"selected_l_out", e.selected_l_out},
                     {"shortfall", e.shortfall},
                     {"cover_start", e.cover_start},
                     {"weights", e.weights},
                     {"horizon", e.horizon},
                     {"served_from_pool", e.served_from_pool},
                     {"fully_served", e.fully_served}};
    out << j.dump() << '\n';
  }
}

SessionTimeline load_timeline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read timeline file " + path);
  SessionTimeline timeline;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DomainError("corrupt timeline line in " + path);
    LiveEvent e;
    e.t = j.at("t").get<double>();
    e.seq = j.at("seq").get<long>();
    e.type = event_from_name(j.at("type").get<std::string>());
    e.chunk_index = j.at("chunk_index").get<int>();
    e.window_index = j.at("window_index").get<int>();
    e.latency_s = j.at("latency_s").get<double>();
    e.required_l_out = j.at("required_l_out").get<int>();
    e.selected_l_out = j.at("selected_l_out").get<int>();
    e.shortfall = j.at("shortfall").get<int>();
    e.cover_start = j.at("cover_start").get<int>();
    e.weights = j.at("weights").get<std::vector<double>>();
    e.horizon = j.at("horizon").get<int>();
    e.served_from_pool = j.at("served_from_pool").get<int>();
    e.fully_served = j.at("fully_served").get<bool>();
    timeline.push_back(std::move(e));
  }
  return timeline;
}

}  // namespace castream

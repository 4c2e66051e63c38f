#include "castream/abr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace castream {

void BitrateLadder::validate() const {
  if (kbps.empty()) throw DomainError("bitrate ladder is empty");
  double prev = 0.0;
  for (double level : kbps) {
    if (level <= prev) throw DomainError("bitrate ladder must be strictly ascending and positive");
    prev = level;
  }
}

void NetworkTrace::validate() const {
  if (samples.empty()) throw DomainError("network trace is empty");
  double prev = -1.0;
  for (const TraceSample& s : samples) {
    if (s.t_s <= prev) throw DomainError("trace timestamps must be strictly increasing");
    if (s.kbps <= 0.0) throw DomainError("trace throughput must be positive");
    prev = s.t_s;
  }
  if (samples.front().t_s < 0.0) throw DomainError("trace timestamps must be nonnegative");
}

double NetworkTrace::duration_s() const {
  // one sample extends one nominal step beyond itself so a single-sample
  // trace still has nonzero period
  if (samples.size() == 1) return std::max(1.0, samples.front().t_s + 1.0);
  return samples.back().t_s + (samples.back().t_s - samples[samples.size() - 2].t_s);
}

NetworkTrace NetworkTrace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read trace file " + path);
  NetworkTrace trace;
  double t, kbps;
  while (in >> t >> kbps) trace.samples.push_back({t, kbps});
  trace.validate();
  return trace;
}

double quality_of(double kbps, const QoeParams& params) {
  switch (params.quality_map) {
    case QualityMap::Linear:
      return kbps / 1000.0;
    case QualityMap::Log:
      return std::log(kbps / 300.0 + 1.0);
  }
  return 0.0;
}

namespace {

double chunk_q(double quality, double prev_quality, bool first, double rebuffer_s,
               const QoeParams& params) {
  double q = quality - params.rebuffer_penalty * rebuffer_s;
  if (!first) q -= params.smoothness_penalty * std::abs(quality - prev_quality);
  return q;
}

double apply_weight(double weight, double quality, double prev_quality, bool first,
                    double rebuffer_s, const QoeParams& params) {
  if (!params.weight_quality_only) {
    return weight * chunk_q(quality, prev_quality, first, rebuffer_s, params);
  }
  double q = weight * quality - params.rebuffer_penalty * rebuffer_s;
  if (!first) q -= params.smoothness_penalty * std::abs(quality - prev_quality);
  return q;
}

double harmonic_mean(std::span<const double> values) {
  double denom = 0.0;
  for (double v : values) denom += 1.0 / v;
  return static_cast<double>(values.size()) / denom;
}

// RobustMPC discount: harmonic-mean prediction divided by (1 + max relative
// error of the same predictor over the recent past).
double conservative_prediction(std::span<const double> history) {
  const std::size_t n = history.size();
  const std::size_t window = std::min<std::size_t>(5, n);
  const double pred = harmonic_mean(history.subspan(n - window, window));

  double max_err = 0.0;
  const std::size_t err_window = std::min<std::size_t>(5, n - 1);
  for (std::size_t k = 0; k < err_window; ++k) {
    const std::size_t i = n - 1 - k;  // predict sample i from up to 5 before it
    const std::size_t w = std::min<std::size_t>(5, i);
    const double p = harmonic_mean(history.subspan(i - w, w));
    max_err = std::max(max_err, std::abs(p - history[i]) / history[i]);
  }
  return pred / (1.0 + max_err);
}

}  // namespace

double weighted_qoe(std::span<const ChunkDecision> decisions, const WeightSeries& weights,
                    const QoeParams& params, const BitrateLadder& ladder) {
  if (decisions.size() != weights.size()) throw DomainError("weighted_qoe: length mismatch");
  ladder.validate();
  double total = 0.0;
  double prev_quality = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const double quality = quality_of(ladder.kbps[decisions[i].level], params);
    total += apply_weight(weights[i], quality, prev_quality, i == 0, decisions[i].rebuffer_s,
                          params);
    prev_quality = quality;
  }
  return total;
}

int mpc_decide(const StreamState& state, std::span<const double> weights_ahead,
               std::span<const double> throughput_history_kbps, const BitrateLadder& ladder,
               const QoeParams& params, double chunk_duration_s) {
  ladder.validate();
  if (weights_ahead.empty()) throw DomainError("mpc_decide: empty weight horizon");
  if (throughput_history_kbps.empty()) return 0;

  const int horizon = static_cast<int>(weights_ahead.size());
  const int levels = static_cast<int>(ladder.levels());
  const double predicted_kbps = conservative_prediction(throughput_history_kbps);

  // counters enumerate all levels^horizon plans; plan[0] ascends slowest so
  // equal-score ties resolve to the lowest first level
  std::vector<int> plan(horizon, 0);
  double best_score = -1e300;
  int best_first = 0;

  for (;;) {
    double buffer = state.buffer_s;
    double prev_quality =
        state.last_level >= 0 ? quality_of(ladder.kbps[state.last_level], params) : 0.0;
    bool have_prev = state.last_level >= 0;
    double score = 0.0;

    for (int j = 0; j < horizon; ++j) {
      const double kbps = ladder.kbps[plan[j]];
      const double quality = quality_of(kbps, params);
      const double download_s = kbps * chunk_duration_s / predicted_kbps;
      const double rebuffer_s = std::max(0.0, download_s - buffer);
      buffer = std::max(buffer - download_s, 0.0) + chunk_duration_s;
      buffer = std::min(buffer, params.buffer_cap_s);
      score += apply_weight(weights_ahead[j], quality, prev_quality, !have_prev, rebuffer_s,
                            params);
      prev_quality = quality;
      have_prev = true;
    }

    if (score > best_score) {
      best_score = score;
      best_first = plan[0];
    }

    int pos = horizon - 1;
    while (pos >= 0 && ++plan[pos] == levels) {
      plan[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return best_first;
}

SessionReport simulate_session(int total_chunks, double chunk_duration_s,
                               const NetworkTrace& trace, const BitrateLadder& ladder,
                               const QoeParams& params, int horizon,
                               const WeightProvider& weights) {
  trace.validate();
  ladder.validate();
  if (total_chunks < 1) throw DomainError("simulate_session: no chunks");
  if (horizon < 1) throw DomainError("simulate_session: horizon must be >= 1");

  const double period = trace.duration_s();
  // advances wall time while consuming kbits against the wrapped trace
  auto download_time = [&](double start_s, double kbits) {
    double t = start_s;
    double left = kbits;
    while (left > 1e-12) {
      const double phase = std::fmod(t, period);
      std::size_t idx = 0;
      for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        if (trace.samples[i].t_s <= phase) idx = i;
      }
      const double seg_end =
          idx + 1 < trace.samples.size() ? trace.samples[idx + 1].t_s : period;
      const double seg_left = std::max(seg_end - phase, 1e-9);
      const double rate = trace.samples[idx].kbps;
      const double possible = rate * seg_left;
      if (possible >= left) {
        t += left / rate;
        left = 0.0;
      } else {
        t += seg_left;
        left -= possible;
      }
    }
    return t - start_s;
  };

  SessionReport report;
  StreamState state;
  std::vector<double> throughput_history;
  double now = 0.0;
  double prev_quality = 0.0;

  for (int i = 0; i < total_chunks; ++i) {
    const std::vector<double> horizon_weights = weights(i, now);
    std::vector<double> padded = horizon_weights;
    padded.resize(horizon, 1.0);

    const int level = mpc_decide(state, padded, throughput_history, ladder, params,
                                 chunk_duration_s);
    const double kbps = ladder.kbps[level];
    const double kbits = kbps * chunk_duration_s;
    const double dl = download_time(now, kbits);
    now += dl;

    double rebuffer = 0.0;
    if (i == 0) {
      state.buffer_s = chunk_duration_s;  // playback starts with the first chunk
    } else {
      rebuffer = std::max(0.0, dl - state.buffer_s);
      state.buffer_s = std::max(state.buffer_s - dl, 0.0) + chunk_duration_s;
    }
    if (state.buffer_s > params.buffer_cap_s) {
      now += state.buffer_s - params.buffer_cap_s;  // wait out the full buffer
      state.buffer_s = params.buffer_cap_s;
    }
    state.rebuffer_s += rebuffer;
    throughput_history.push_back(kbits / dl);

    const double quality = quality_of(kbps, params);
    const double weight = padded.empty() ? 1.0 : padded.front();

    SessionChunkRow row;
    row.chunk = i;
    row.level = level;
    row.kbps = kbps;
    row.download_s = dl;
    row.rebuffer_s = rebuffer;
    row.weight = weight;
    row.q_value = chunk_q(quality, prev_quality, i == 0, rebuffer, params);
    row.buffer_after_s = state.buffer_s;
    report.rows.push_back(row);

    report.unweighted_qoe_total += row.q_value;
    report.weighted_qoe_total += apply_weight(weight, quality, prev_quality, i == 0, rebuffer,
                                              params);
    report.total_rebuffer_s += rebuffer;
    prev_quality = quality;
    state.last_level = level;
    state.playhead = i + 1;
  }
  return report;
}

WeightProvider vod_weight_provider(const WeightSeries& weights, int horizon) {
  return [weights, horizon](int chunk, double) {
    std::vector<double> out;
    out.reserve(horizon);
    for (int j = 0; j < horizon; ++j) {
      const std::size_t idx = static_cast<std::size_t>(chunk) + j;
      out.push_back(idx < weights.size() ? weights[idx] : 1.0);
    }
    return out;
  };
}

std::string SessionReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const SessionChunkRow& r : rows) {
    rows_json.push_back({{"chunk", r.chunk},
                         {"level", r.level},
                         {"kbps", r.kbps},
                         {"download_s", r.download_s},
                         {"rebuffer_s", r.rebuffer_s},
                         {"weight", r.weight},
                         {"q", r.q_value},
                         {"buffer_after_s", r.buffer_after_s}});
  }
  nlohmann::json j{{"rows", rows_json},
                   {"weighted_qoe", weighted_qoe_total},
                   {"unweighted_qoe", unweighted_qoe_total},
                   {"total_rebuffer_s", total_rebuffer_s}};
  return j.dump(2);
}

SessionReport SessionReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DomainError("corrupt session report");
  SessionReport report;
  for (const nlohmann::json& rj : j.at("rows")) {
    SessionChunkRow r;
    r.chunk = rj.at("chunk").get<int>();
    r.level = rj.at("level").get<int>();
    r.kbps = rj.at("kbps").get<double>();
    r.download_s = rj.at("download_s").get<double>();
    r.rebuffer_s = rj.at("rebuffer_s").get<double>();
    r.weight = rj.at("weight").get<double>();
    r.q_value = rj.at("q").get<double>();
    r.buffer_after_s = rj.at("buffer_after_s").get<double>();
    report.rows.push_back(r);
  }
  report.weighted_qoe_total = j.at("weighted_qoe").get<double>();
  report.unweighted_qoe_total = j.at("unweighted_qoe").get<double>();
  report.total_rebuffer_s = j.at("total_rebuffer_s").get<double>();
  return report;
}

}  // namespace castream

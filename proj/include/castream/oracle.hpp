#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "castream/types.hpp"

namespace castream {

// One sliding-window rating request: up to m contiguous chunk ordinals plus
// the summary threaded from the previous window.
struct WindowRequest {
  std::vector<int> frame_indices;
  std::string prev_summary;
  std::string video_info;

  void validate() const;
};

struct WindowResponse {
  std::vector<int> ratings;  // one per requested frame, each in [0,100]
  std::string partial_summary;
  std::string total_summary;
  double latency_s = 0.0;
};

// One comparison request for the ranking stage: a candidate set drawn from
// two sorted groups, ordered against the global summary.
struct SortRequest {
  std::vector<int> candidate_indices;
  std::string global_summary;

  void validate() const;
};

struct CallLedger {
  long rate_calls = 0;
  long sort_calls = 0;
  long token_estimate = 0;
};

// Raised on transport failures and malformed replies. Retriable errors are
// safe to replay against the same oracle; nothing is ever silently patched.
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, bool retriable)
      : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

class RatingOracle {
 public:
  virtual ~RatingOracle() = default;

  virtual WindowResponse rate_window(const WindowRequest& req) = 0;
  virtual std::vector<int> sort_window(const SortRequest& req) = 0;

  CallLedger call_ledger() const {
    std::lock_guard<std::mutex> lock(ledger_mutex_);
    return ledger_;
  }

 protected:
  // Token accounting: fixed per-frame cost plus fixed prompt overhead.
  void charge(bool is_sort, std::size_t frames) {
    std::lock_guard<std::mutex> lock(ledger_mutex_);
    (is_sort ? ledger_.sort_calls : ledger_.rate_calls) += 1;
    ledger_.token_estimate +=
        token_base_ + token_per_frame_ * static_cast<long>(frames);
  }

  long token_per_frame_ = 30;
  long token_base_ = 35;

 private:
  mutable std::mutex ledger_mutex_;
  CallLedger ledger_;
};

struct MockOracleConfig {
  double window_bias_amplitude = 0.0;  // per-window affine distortion strength
  double rating_noise_std = 0.0;
  double comparator_swap_prob = 0.0;   // in [0, 0.5)
  double latency_mean_s = 1.0;
  double latency_std_s = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Ground-truth-driven rating oracle with configurable distortion. Responses
// are a pure function of (request, seed): per-window streams are keyed on
// request content, so replaying a session reproduces byte-identical output.
class MockOracle final : public RatingOracle {
 public:
  MockOracle(const VideoRecord& video, MockOracleConfig cfg);

  WindowResponse rate_window(const WindowRequest& req) override;
  std::vector<int> sort_window(const SortRequest& req) override;

  const MockOracleConfig& config() const { return cfg_; }

 private:
  std::vector<double> gt_;  // saliency by chunk ordinal
  MockOracleConfig cfg_;
};

// Chat-completions-style HTTP client. Strictly optional: everything else in
// the pipeline runs against the mock.
struct HttpOracleConfig {
  std::string endpoint;      // e.g. http://host:port/v1/chat/completions
  std::string model;         // forwarded verbatim in the request body
  std::string api_key_env;   // name of the env var holding the key ("" = none)
  int timeout_s = 60;
};

class HttpOracle final : public RatingOracle {
 public:
  explicit HttpOracle(HttpOracleConfig cfg);

  WindowResponse rate_window(const WindowRequest& req) override;
  std::vector<int> sort_window(const SortRequest& req) override;

 private:
  std::string post_chat(const std::string& prompt);

  HttpOracleConfig cfg_;
  double last_latency_s_ = 0.0;
};

// Prompt assembly and reply parsing are exposed for direct testing of the
// wire format.
std::string build_rating_prompt(const WindowRequest& req);
std::string build_sorting_prompt(const SortRequest& req);
WindowResponse parse_rating_reply(const std::string& content, const WindowRequest& req);
std::vector<int> parse_sorting_reply(const std::string& content, const SortRequest& req);

}  // namespace castream

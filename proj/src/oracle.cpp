#include "castream/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "castream/rng.hpp"

namespace castream {

namespace {

constexpr std::uint64_t kRateTag = 0x72617465;  // stream tags for rate/sort
constexpr std::uint64_t kSortTag = 0x736f7274;

int clamp_rating(double v) {
  const double r = std::round(v);
  if (r < 0.0) return 0;
  if (r > 100.0) return 100;
  return static_cast<int>(r);
}

}  // namespace

void WindowRequest::validate() const {
  if (frame_indices.empty()) throw DomainError("window request has no frames");
  for (std::size_t i = 1; i < frame_indices.size(); ++i) {
    if (frame_indices[i] != frame_indices[i - 1] + 1) {
      throw DomainError("window request indices must be contiguous and increasing");
    }
  }
}

void SortRequest::validate() const {
  if (candidate_indices.empty()) throw DomainError("sort request has no candidates");
  std::vector<int> sorted = candidate_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("sort request has duplicate candidates");
  }
}

void MockOracleConfig::validate() const {
  if (window_bias_amplitude < 0.0) throw DomainError("window_bias_amplitude must be >= 0");
  if (rating_noise_std < 0.0) throw DomainError("rating_noise_std must be >= 0");
  if (comparator_swap_prob < 0.0 || comparator_swap_prob >= 0.5) {
    throw DomainError("comparator_swap_prob must be in [0, 0.5)");
  }
  if (latency_mean_s <= 0.0) throw DomainError("latency_mean_s must be > 0");
  if (latency_std_s < 0.0) throw DomainError("latency_std_s must be >= 0");
}

MockOracle::MockOracle(const VideoRecord& video, MockOracleConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  gt_.reserve(video.chunks.size());
  for (const ChunkRecord& c : video.chunks) gt_.push_back(c.gt_saliency);
}

WindowResponse MockOracle::rate_window(const WindowRequest& req) {
  req.validate();
  const int first = req.frame_indices.front();
  const int last = req.frame_indices.back();
  if (first < 0 || last >= static_cast<int>(gt_.size())) {
    throw OracleError("rate_window: frame index outside bound video", false);
  }

  // Window-keyed stream: the same request under the same seed always yields
  // the same response, and distinct windows get independent distortions.
  Rng rng(mix_seed(mix_seed(cfg_.rng_seed, kRateTag), static_cast<std::uint64_t>(first)));
  const double amp = cfg_.window_bias_amplitude;
  const double a = rng.uniform(1.0 - amp, 1.0 + amp);
  const double b = rng.uniform(-amp, amp);

  WindowResponse resp;
  resp.ratings.reserve(req.frame_indices.size());
  for (int idx : req.frame_indices) {
    const double noise =
        cfg_.rating_noise_std > 0.0 ? rng.normal(0.0, cfg_.rating_noise_std) : 0.0;
    resp.ratings.push_back(clamp_rating(100.0 * (a * gt_[idx] + b) + noise));
  }
  resp.latency_s = std::max(0.0, rng.normal(cfg_.latency_mean_s, cfg_.latency_std_s));
  resp.partial_summary =
      "events in chunks " + std::to_string(first) + "-" + std::to_string(last);
  resp.total_summary = "story through chunk " + std::to_string(last);

  charge(false, req.frame_indices.size());
  return resp;
}

std::vector<int> MockOracle::sort_window(const SortRequest& req) {
  req.validate();
  for (int idx : req.candidate_indices) {
    if (idx < 0 || idx >= static_cast<int>(gt_.size())) {
      throw OracleError("sort_window: candidate outside bound video", false);
    }
  }

  std::vector<int> order = req.candidate_indices;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (gt_[x] != gt_[y]) return gt_[x] > gt_[y];
    return x < y;
  });

  if (cfg_.comparator_swap_prob > 0.0 && order.size() > 1) {
    Rng rng(mix_seed(mix_seed(cfg_.rng_seed, kSortTag),
                     hash_ints(cfg_.rng_seed, req.candidate_indices)));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      if (rng.next_double() < cfg_.comparator_swap_prob) std::swap(order[i], order[i + 1]);
    }
  }

  // permutation check on every call
  std::vector<int> check_in = req.candidate_indices;
  std::vector<int> check_out = order;
  std::sort(check_in.begin(), check_in.end());
  std::sort(check_out.begin(), check_out.end());
  if (check_in != check_out) {
    throw std::logic_error("sort_window produced a non-permutation");
  }

  charge(true, order.size());
  return order;
}

// ---------------------------------------------------------------------------
// HTTP mode
// ---------------------------------------------------------------------------

std::string build_rating_prompt(const WindowRequest& req) {
  const std::string n = std::to_string(req.frame_indices.size());
  std::string p;
  p += "I have uploaded " + n + " frames, each representing a video chunk of 1 second.\n";
  p += "You first extract the frame number attached below the image content.\n";
  p += "These frames exhibit a continuous " + n + " seconds video clip.\n";
  p += "The original video background for title and category are " + req.video_info + ".\n";
  p += "Before this video clip, the periodical video summary is: " + req.prev_summary + ".\n\n";
  p += "Your task is as follows:\n\n";
  p += "1. Based on the frames, periodical summary and background, summarize what story "
       "this video has conveyed so far and output your answer as \"story_total\". "
       "(No more than 100 words)\n\n";
  p += "2. Based on the summary and frames, on a scale of integer (0,100), rate all the " + n +
       " frames such that higher score exhibits higher interestingness score. "
       "Different frames can yield the same scores.\n\n";
  p += "Your answer must be a json format like this:\n\n";
  p += "{\n  \"story_partial\": \"xxx\",\n  \"story_total\": \"xxx\",\n  \"ratings\": [\n";
  p += "    {\"frame\": xxx, \"rating\": xxx},\n    {\"frame\": xxx, \"rating\": xxx}\n  ]\n}\n";
  return p;
}

std::string build_sorting_prompt(const SortRequest& req) {
  std::string frames;
  for (std::size_t i = 0; i < req.candidate_indices.size(); ++i) {
    if (i) frames += ", ";
    frames += std::to_string(req.candidate_indices[i]);
  }
  std::string p;
  p += "I have uploaded " + std::to_string(req.candidate_indices.size()) +
       " frames from a video, with frame numbers " + frames + ".\n";
  p += "The overall video summary is: " + req.global_summary + ".\n\n";
  p += "Rank all the uploaded frames from the most interesting to the least interesting "
       "for a viewer of this video. Every frame number must appear exactly once.\n\n";
  p += "Your answer must be a json format like this:\n\n";
  p += "{\n  \"ranking\": [\n    {\"frame\": xxx},\n    {\"frame\": xxx}\n  ]\n}\n";
  return p;
}

namespace {

using nlohmann::json;

// Replies may arrive as the bare object, as the appendix-style array of
// fragments, or wrapped in markdown fences; collect keys from the whole tree.
void collect(const json& node, std::string* partial, std::string* total, json* ratings,
             json* ranking) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (it.key() == "story_partial" && it.value().is_string()) {
        *partial = it.value().get<std::string>();
      } else if (it.key() == "story_total" && it.value().is_string()) {
        *total = it.value().get<std::string>();
      } else if (it.key() == "ratings" && it.value().is_array()) {
        *ratings = it.value();
      } else if (it.key() == "ranking" && it.value().is_array()) {
        *ranking = it.value();
      } else {
        collect(it.value(), partial, total, ratings, ranking);
      }
    }
  } else if (node.is_array()) {
    bool frame_list = !node.empty();
    for (const json& el : node) {
      if (!(el.is_object() && el.contains("frame"))) frame_list = false;
    }
    if (frame_list) {
      if (node.front().contains("rating")) {
        *ratings = node;
      } else {
        *ranking = node;
      }
      return;
    }
    for (const json& el : node) collect(el, partial, total, ratings, ranking);
  }
}

json parse_content(const std::string& content) {
  std::string body = content;
  const auto fence = body.find("```");
  if (fence != std::string::npos) {
    auto start = body.find('\n', fence);
    auto end = body.rfind("```");
    if (start != std::string::npos && end != std::string::npos && end > start) {
      body = body.substr(start + 1, end - start - 1);
    }
  }
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) {
    throw OracleError("oracle reply is not valid JSON", true);
  }
  return parsed;
}

}  // namespace

WindowResponse parse_rating_reply(const std::string& content, const WindowRequest& req) {
  const json tree = parse_content(content);
  std::string partial, total;
  json ratings, ranking;
  collect(tree, &partial, &total, &ratings, &ranking);
  if (!ratings.is_array()) {
    throw OracleError("oracle reply carries no frame ratings", true);
  }

  WindowResponse resp;
  resp.partial_summary = partial;
  resp.total_summary = total;
  resp.ratings.assign(req.frame_indices.size(), -1);
  for (const json& el : ratings) {
    if (!el.is_object() || !el.contains("frame") || !el.contains("rating") ||
        !el["frame"].is_number_integer() || !el["rating"].is_number()) {
      throw OracleError("malformed rating entry in oracle reply", true);
    }
    const int frame = el["frame"].get<int>();
    const double rating = el["rating"].get<double>();
    const auto pos = std::find(req.frame_indices.begin(), req.frame_indices.end(), frame);
    if (pos == req.frame_indices.end()) {
      throw OracleError("oracle rated unknown frame " + std::to_string(frame), true);
    }
    if (rating < 0.0 || rating > 100.0 || rating != std::floor(rating)) {
      throw OracleError("oracle rating outside integer [0,100] for frame " +
                            std::to_string(frame),
                        true);
    }
    resp.ratings[static_cast<std::size_t>(pos - req.frame_indices.begin())] =
        static_cast<int>(rating);
  }
  for (std::size_t i = 0; i < resp.ratings.size(); ++i) {
    if (resp.ratings[i] < 0) {
      throw OracleError("oracle reply missing frame " + std::to_string(req.frame_indices[i]),
                        true);
    }
  }
  return resp;
}

std::vector<int> parse_sorting_reply(const std::string& content, const SortRequest& req) {
  const json tree = parse_content(content);
  std::string partial, total;
  json ratings, ranking;
  collect(tree, &partial, &total, &ratings, &ranking);
  if (!ranking.is_array()) {
    throw OracleError("oracle reply carries no ranking", true);
  }

  std::vector<int> order;
  for (const json& el : ranking) {
    if (!el.is_object() || !el.contains("frame") || !el["frame"].is_number_integer()) {
      throw OracleError("malformed ranking entry in oracle reply", true);
    }
    order.push_back(el["frame"].get<int>());
  }
  std::vector<int> check_in = req.candidate_indices;
  std::vector<int> check_out = order;
  std::sort(check_in.begin(), check_in.end());
  std::sort(check_out.begin(), check_out.end());
  if (check_in != check_out) {
    throw OracleError("oracle ranking is not a permutation of the request", true);
  }
  return order;
}

HttpOracle::HttpOracle(HttpOracleConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw DomainError("HTTP oracle endpoint is empty");
}

WindowResponse HttpOracle::rate_window(const WindowRequest& req) {
  req.validate();
  const std::string content = post_chat(build_rating_prompt(req));
  WindowResponse resp = parse_rating_reply(content, req);
  resp.latency_s = last_latency_s_;
  charge(false, req.frame_indices.size());
  return resp;
}

std::vector<int> HttpOracle::sort_window(const SortRequest& req) {
  req.validate();
  const std::string content = post_chat(build_sorting_prompt(req));
  std::vector<int> order = parse_sorting_reply(content, req);
  charge(true, order.size());
  return order;
}

}  // namespace castream

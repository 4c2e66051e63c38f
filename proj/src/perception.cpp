#include "castream/perception.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace castream {

namespace {

std::string cache_key(const std::string& video_id, int window_index) {
  return video_id + '\x1f' + std::to_string(window_index);
}

}  // namespace

WindowCache::WindowCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded()) {
      throw DomainError("corrupt cache line in " + path_);
    }
    WindowResponse resp;
    resp.ratings = rec.at("ratings").get<std::vector<int>>();
    resp.partial_summary = rec.at("partial_summary").get<std::string>();
    resp.total_summary = rec.at("total_summary").get<std::string>();
    resp.latency_s = rec.at("latency_s").get<double>();
    entries_[cache_key(rec.at("video_id").get<std::string>(),
                       rec.at("window_index").get<int>())] = std::move(resp);
  }
}

std::optional<WindowResponse> WindowCache::lookup(const std::string& video_id,
                                                  int window_index) const {
  const auto it = entries_.find(cache_key(video_id, window_index));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void WindowCache::store(const std::string& video_id, int window_index,
                        const std::vector<int>& frame_indices, const WindowResponse& resp) {
  entries_[cache_key(video_id, window_index)] = resp;
  nlohmann::json rec{{"video_id", video_id},
                     {"window_index", window_index},
                     {"frame_indices", frame_indices},
                     {"ratings", resp.ratings},
                     {"partial_summary", resp.partial_summary},
                     {"total_summary", resp.total_summary},
                     {"latency_s", resp.latency_s}};
  std::ofstream out(path_, std::ios::app);
  if (!out) throw DomainError("cannot append to cache file " + path_);
  out << rec.dump() << '\n';
}

PerceptionResult run_perception(const VideoRecord& video, int window_length,
                                RatingOracle& oracle, WindowCache* cache) {
  if (window_length < 1) throw DomainError("window length must be >= 1");
  video.validate();

  const int total = static_cast<int>(video.chunk_count());
  const int num_windows = (total + window_length - 1) / window_length;

  PerceptionResult result;
  result.window_length = window_length;
  result.raw_ratings.reserve(total);
  result.summaries.reserve(num_windows);
  result.responses.reserve(num_windows);

  std::string prev_summary = video.title_info;
  for (int k = 0; k < num_windows; ++k) {
    const int begin = k * window_length;
    const int end = std::min(begin + window_length, total);

    WindowRequest req;
    req.frame_indices.resize(end - begin);
    for (int i = begin; i < end; ++i) req.frame_indices[i - begin] = i;
    req.prev_summary = prev_summary;
    req.video_info = video.title_info;

    WindowResponse resp;
    if (auto cached = cache ? cache->lookup(video.video_id, k) : std::nullopt) {
      resp = std::move(*cached);
    } else {
      try {
        resp = oracle.rate_window(req);
      } catch (const OracleError& e) {
        throw PerceptionError(k, e.what());
      }
      if (cache) cache->store(video.video_id, k, req.frame_indices, resp);
    }
    if (resp.ratings.size() != req.frame_indices.size()) {
      throw PerceptionError(k, "response length does not match request");
    }

    result.raw_ratings.insert(result.raw_ratings.end(), resp.ratings.begin(),
                              resp.ratings.end());
    result.summaries.push_back(resp.total_summary);
    prev_summary = resp.total_summary;
    result.responses.push_back(std::move(resp));
  }
  return result;
}

WeightSeries raw_weights(const PerceptionResult& p) {
  WeightSeries w;
  w.values.reserve(p.raw_ratings.size());
  for (int r : p.raw_ratings) w.values.push_back(static_cast<double>(r) / 100.0);
  return w;
}

}  // namespace castream

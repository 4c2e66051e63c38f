#include "castream/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "castream/rng.hpp"

namespace castream {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DatasetError("line " + std::to_string(line_no) + ": " + what + " is not a number: '" +
                       s + "'");
  }
}

std::uint64_t video_seed(std::uint64_t seed, const std::string& video_id) {
  std::uint64_t h = mix_seed(seed, 0x766964);
  for (char c : video_id) h = mix_seed(h, static_cast<unsigned char>(c));
  return h;
}

}  // namespace

std::vector<VideoRecord> load_dataset(const std::string& path, int embed_dim,
                                      std::uint64_t seed, double chunk_duration_s) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read dataset file " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DatasetError("dataset file " + path + " is empty");
  ++line_no;

  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "video_id" || header[1] != "chunk_index" ||
      header[2] != "gt_saliency") {
    throw DatasetError("line 1: header must start with video_id,chunk_index,gt_saliency");
  }
  const int file_embed_cols = static_cast<int>(header.size()) - 3;
  for (int e = 0; e < file_embed_cols; ++e) {
    if (header[3 + e] != "emb_" + std::to_string(e)) {
      throw DatasetError("line 1: embedding column " + std::to_string(e) +
                         " must be named emb_" + std::to_string(e));
    }
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<ChunkRecord>> by_video;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DatasetError("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    }
    ChunkRecord chunk;
    chunk.duration_s = chunk_duration_s;
    chunk.index = static_cast<int>(parse_double(fields[1], line_no, "chunk_index"));
    chunk.gt_saliency = parse_double(fields[2], line_no, "gt_saliency");
    if (chunk.gt_saliency < 0.0 || chunk.gt_saliency > 1.0) {
      throw DatasetError("line " + std::to_string(line_no) + ": gt_saliency " +
                         fields[2] + " outside [0,1]");
    }
    chunk.embedding.reserve(file_embed_cols);
    for (int e = 0; e < file_embed_cols; ++e) {
      chunk.embedding.push_back(parse_double(fields[3 + e], line_no, header[3 + e]));
    }
    if (!by_video.count(fields[0])) order.push_back(fields[0]);
    by_video[fields[0]].push_back(std::move(chunk));
  }

  std::vector<VideoRecord> videos;
  for (const std::string& id : order) {
    VideoRecord video;
    video.video_id = id;
    video.title_info = "video " + id;
    video.chunks = std::move(by_video[id]);
    std::sort(video.chunks.begin(), video.chunks.end(),
              [](const ChunkRecord& a, const ChunkRecord& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < video.chunks.size(); ++i) {
      if (video.chunks[i].index != static_cast<int>(i)) {
        throw DatasetError("video " + id + ": chunk_index values must run 0.." +
                           std::to_string(video.chunks.size() - 1));
      }
    }
    if (file_embed_cols == 0) {
      synthesize_embeddings(video, embed_dim, video_seed(seed, id));
    } else {
      // pooled text stand-in: mean of the provided frame features
      video.text_embedding.assign(file_embed_cols, 0.0);
      for (const ChunkRecord& c : video.chunks) {
        for (int e = 0; e < file_embed_cols; ++e) video.text_embedding[e] += c.embedding[e];
      }
      for (double& v : video.text_embedding) v /= static_cast<double>(video.chunks.size());
    }
    video.validate();
    videos.push_back(std::move(video));
  }
  if (videos.empty()) throw DatasetError("dataset file " + path + " has no records");
  return videos;
}

void save_dataset(const std::string& path, std::span<const VideoRecord> videos,
                  bool include_embeddings) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write dataset file " + path);
  out.precision(17);

  const int embed_cols =
      include_embeddings && !videos.empty() && !videos.front().chunks.empty()
          ? static_cast<int>(videos.front().chunks.front().embedding.size())
          : 0;
  out << "video_id,chunk_index,gt_saliency";
  for (int e = 0; e < embed_cols; ++e) out << ",emb_" << e;
  out << '\n';
  for (const VideoRecord& video : videos) {
    for (const ChunkRecord& c : video.chunks) {
      out << video.video_id << ',' << c.index << ',' << c.gt_saliency;
      for (int e = 0; e < embed_cols; ++e) out << ',' << c.embedding[e];
      out << '\n';
    }
  }
}

VideoRecord make_synthetic_video(const std::string& video_id, int total_chunks, int embed_dim,
                                 std::uint64_t seed, double chunk_duration_s) {
  if (total_chunks < 1) throw DatasetError("synthetic video needs at least 1 chunk");
  Rng rng(mix_seed(seed, 0x73796e7468));

  const double freq = rng.uniform(1.5, 4.5);      // cycles over the video
  const double phase = rng.uniform(0.0, kTau);
  const double amp = rng.uniform(0.25, 0.4);
  const double base = rng.uniform(0.45, 0.55);
  const double amp2 = amp * rng.uniform(0.1, 0.3);
  const double phase2 = rng.uniform(0.0, kTau);

  VideoRecord video;
  video.video_id = video_id;
  video.title_info = "synthetic clip " + video_id;
  video.chunks.resize(total_chunks);
  for (int t = 0; t < total_chunks; ++t) {
    const double pos = static_cast<double>(t) / std::max(1, total_chunks);
    const double theta = kTau * freq * pos + phase;
    double g = base + amp * std::sin(theta) + amp2 * std::sin(2.0 * theta + phase2);
    video.chunks[t].index = t;
    video.chunks[t].duration_s = chunk_duration_s;
    video.chunks[t].gt_saliency = std::clamp(g, 0.02, 0.98);
  }
  synthesize_embeddings(video, embed_dim, mix_seed(seed, 0x656d62));

  // video-level content signature carried by the text feature
  if (embed_dim >= 1) video.text_embedding[0] = freq / 5.0;
  if (embed_dim >= 2) video.text_embedding[1] = std::sin(phase);
  if (embed_dim >= 3) video.text_embedding[2] = std::cos(phase);
  if (embed_dim >= 4) video.text_embedding[3] = base;
  return video;
}

void synthesize_embeddings(VideoRecord& video, int embed_dim, std::uint64_t seed) {
  if (embed_dim < 1) throw DatasetError("embedding dimension must be >= 1");
  Rng rng(mix_seed(seed, 0x66656174));
  const int total = static_cast<int>(video.chunks.size());

  // Per-chunk phase reconstructed from local saliency slope, so the first
  // channels tell the forecaster not only where the curve is but which way
  // it is heading; the remaining channels are smooth nuisance signals.
  std::vector<double> channel_freq(std::max(0, embed_dim - 3));
  std::vector<double> channel_phase(channel_freq.size());
  for (std::size_t j = 0; j < channel_freq.size(); ++j) {
    channel_freq[j] = rng.uniform(0.5, 6.0);
    channel_phase[j] = rng.uniform(0.0, kTau);
  }

  const double noise = 0.05;
  for (int t = 0; t < total; ++t) {
    ChunkRecord& c = video.chunks[t];
    const double here = c.gt_saliency;
    const double next = video.chunks[std::min(t + 1, total - 1)].gt_saliency;
    const double slope = next - video.chunks[std::max(t - 1, 0)].gt_saliency;

    c.embedding.assign(embed_dim, 0.0);
    if (embed_dim >= 1) c.embedding[0] = here + rng.normal(0.0, noise);
    if (embed_dim >= 2) c.embedding[1] = 8.0 * slope + rng.normal(0.0, noise);
    if (embed_dim >= 3) c.embedding[2] = next + rng.normal(0.0, noise);
    for (std::size_t j = 0; j < channel_freq.size(); ++j) {
      const double pos = static_cast<double>(t) / std::max(1, total);
      c.embedding[3 + j] =
          0.5 * std::sin(kTau * channel_freq[j] * pos + channel_phase[j]);
    }
  }

  video.text_embedding.assign(embed_dim, 0.0);
  for (const ChunkRecord& c : video.chunks) {
    for (int e = 0; e < embed_dim; ++e) video.text_embedding[e] += c.embedding[e];
  }
  for (double& v : video.text_embedding) v /= static_cast<double>(total);
}

std::vector<ForecastSample> make_forecast_dataset(std::span<const VideoRecord> videos, int l_in,
                                                  int l_out, int stride) {
  if (l_in < 1 || l_out < 1 || stride < 1) {
    throw DatasetError("make_forecast_dataset: l_in, l_out, stride must be >= 1");
  }
  std::vector<ForecastSample> samples;
  for (const VideoRecord& video : videos) {
    const int total = static_cast<int>(video.chunk_count());
    for (int end = l_in - 1; end + l_out < total; end += stride) {
      ForecastSample s;
      s.input.series.reserve(l_in);
      s.input.frame_embeddings.reserve(l_in);
      for (int t = end - l_in + 1; t <= end; ++t) {
        s.input.series.push_back(video.chunks[t].gt_saliency);
        s.input.frame_embeddings.push_back(video.chunks[t].embedding);
      }
      s.input.text_embedding = video.text_embedding;
      s.target.reserve(l_out);
      for (int t = end + 1; t <= end + l_out; ++t) {
        s.target.push_back(video.chunks[t].gt_saliency);
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

DatasetSplit split_dataset(std::span<const VideoRecord> videos, std::uint64_t seed) {
  std::vector<std::size_t> order(videos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x73706c6974));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }

  const std::size_t n = videos.size();
  std::size_t n_train = static_cast<std::size_t>(std::round(0.7 * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(std::round(0.15 * static_cast<double>(n)));
  if (n >= 3) {
    n_train = std::max<std::size_t>(1, std::min(n_train, n - 2));
    n_val = std::max<std::size_t>(1, std::min(n_val, n - n_train - 1));
  } else {
    n_train = n;
    n_val = 0;
  }

  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const VideoRecord& v = videos[order[i]];
    if (i < n_train) {
      split.train.push_back(v);
    } else if (i < n_train + n_val) {
      split.validation.push_back(v);
    } else {
      split.test.push_back(v);
    }
  }
  return split;
}

}  // namespace castream

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "castream/forecast.hpp"
#include "castream/types.hpp"

namespace castream {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV schema: video_id,chunk_index,gt_saliency[,emb_0..emb_{E-1}].
// chunk_index must run 0..D-1 per video; saliency outside [0,1] or a broken
// schema is reported with its line number. Videos missing embedding columns
// get seeded synthetic embeddings of width embed_dim.
std::vector<VideoRecord> load_dataset(const std::string& path, int embed_dim,
                                      std::uint64_t seed, double chunk_duration_s = 1.0);

void save_dataset(const std::string& path, std::span<const VideoRecord> videos,
                  bool include_embeddings);

// Smooth random saliency curve (mixed harmonics) with embeddings derived
// from the curve's phase, frequency and level plus nuisance channels, so
// content carries signal about how the weights evolve.
VideoRecord make_synthetic_video(const std::string& video_id, int total_chunks, int embed_dim,
                                 std::uint64_t seed, double chunk_duration_s = 1.0);

// Fills in embeddings for records loaded without embedding columns.
void synthesize_embeddings(VideoRecord& video, int embed_dim, std::uint64_t seed);

// Sliding windows over ground-truth weights: series/embeddings from L_in
// consecutive chunks, target the following L_out.
std::vector<ForecastSample> make_forecast_dataset(std::span<const VideoRecord> videos, int l_in,
                                                  int l_out, int stride = 1);

struct DatasetSplit {
  std::vector<VideoRecord> train;
  std::vector<VideoRecord> validation;
  std::vector<VideoRecord> test;
};

// Seeded shuffle split over videos, 7:1.5:1.5.
DatasetSplit split_dataset(std::span<const VideoRecord> videos, std::uint64_t seed);

}  // namespace castream

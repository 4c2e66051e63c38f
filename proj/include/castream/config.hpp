#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "castream/abr.hpp"
#include "castream/oracle.hpp"
#include "castream/types.hpp"

namespace castream {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { Vod, Live, Train, Metrics };

struct ExperimentConfig {
  RunMode mode = RunMode::Vod;

  // [experiment]
  std::string dataset_path;
  std::string predictions_path;  // metrics mode input
  std::string output_dir = "out";
  std::uint64_t rng_seed = 0;
  int workers = 1;

  // [oracle]
  bool oracle_http = false;
  MockOracleConfig mock;
  HttpOracleConfig http;

  // [pipeline]
  int window_length = 10;      // m
  double sigma = 5.0;
  int kernel_size = 0;         // 0 = D taps
  int embed_dim = 64;          // E

  // [live]
  double chunk_duration_s = 1.0;  // d
  int horizon = 5;                // N
  std::vector<int> pretrained_louts;  // empty = {1,2,3} * m
  double forecast_latency_est_s = 1.35;
  double forecast_latency_actual_s = -1.0;
  std::string model_dir;  // defaults to output_dir

  // [forecast]
  int d_model = 32;
  int heads = 4;
  double lambda = 1.0;
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 8;
  std::string variant = "multi_modal";  // multi_modal | uni_modal

  // [abr]
  BitrateLadder ladder;
  QoeParams qoe;
  std::vector<std::string> trace_paths;

  std::vector<int> effective_louts() const;
  void validate() const;
};

// Flat key-value sections:
//   [experiment]
//   mode = vod
//   dataset = data/videos.csv
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

struct ConfigOverrides {
  int window_length = -1;
  long long rng_seed = -1;
  std::string output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides);

}  // namespace castream

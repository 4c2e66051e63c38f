#include "castream/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace castream {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

using KeyMap = std::map<std::string, std::string>;

double to_double(const KeyMap& keys, const std::string& key, double fallback) {
  const auto it = keys.find(key);
  if (it == keys.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + it->second);
  }
}

long long to_int(const KeyMap& keys, const std::string& key, long long fallback) {
  const auto it = keys.find(key);
  if (it == keys.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
  }
}

std::string to_string(const KeyMap& keys, const std::string& key, const std::string& fallback) {
  const auto it = keys.find(key);
  return it == keys.end() ? fallback : it->second;
}

bool to_bool(const KeyMap& keys, const std::string& key, bool fallback) {
  const auto it = keys.find(key);
  if (it == keys.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

template <typename T>
std::vector<T> to_list(const KeyMap& keys, const std::string& key) {
  std::vector<T> out;
  const auto it = keys.find(key);
  if (it == keys.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      if constexpr (std::is_same_v<T, int>) {
        out.push_back(std::stoi(item));
      } else if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item));
      } else {
        out.push_back(item);
      }
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has a bad list element: " + item);
    }
  }
  return out;
}

}  // namespace

std::vector<int> ExperimentConfig::effective_louts() const {
  if (!pretrained_louts.empty()) return pretrained_louts;
  return {window_length, 2 * window_length, 3 * window_length};
}

void ExperimentConfig::validate() const {
  if (mode != RunMode::Metrics || !dataset_path.empty()) {
    if (dataset_path.empty()) throw ConfigError("dataset path is required");
    if (!std::filesystem::exists(dataset_path)) {
      throw ConfigError("dataset path does not exist: " + dataset_path);
    }
  }
  if (mode == RunMode::Metrics) {
    if (predictions_path.empty()) throw ConfigError("metrics mode requires predictions path");
    if (!std::filesystem::exists(predictions_path)) {
      throw ConfigError("predictions path does not exist: " + predictions_path);
    }
  }
  if (mode == RunMode::Live) {
    if (trace_paths.empty()) throw ConfigError("live mode requires at least one trace");
  }
  for (const std::string& t : trace_paths) {
    if (!std::filesystem::exists(t)) throw ConfigError("trace path does not exist: " + t);
  }
  if (window_length < 1) throw ConfigError("m must be >= 1");
  if (sigma <= 0.0) throw ConfigError("sigma must be > 0");
  if (kernel_size < 0) throw ConfigError("kernel_size must be >= 0");
  if (embed_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (chunk_duration_s <= 0.0) throw ConfigError("d must be > 0");
  if (horizon < 1) throw ConfigError("N must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw ConfigError("d_model must be a positive multiple of heads");
  }
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (variant != "multi_modal" && variant != "uni_modal") {
    throw ConfigError("variant must be multi_modal or uni_modal");
  }
  const std::vector<int> louts = effective_louts();
  if (!std::is_sorted(louts.begin(), louts.end()) || louts.front() < 1) {
    throw ConfigError("pretrained_louts must be ascending positive integers");
  }
  try {
    mock.validate();
    ladder.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (qoe.rebuffer_penalty < 0.0 || qoe.smoothness_penalty < 0.0) {
    throw ConfigError("QoE penalties must be >= 0");
  }
  if (oracle_http && http.endpoint.empty()) {
    throw ConfigError("HTTP oracle requires an endpoint");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, KeyMap> sections;
  std::string section = "experiment";
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + " line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": expected key = value");
    }
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ExperimentConfig cfg;
  const KeyMap& exp = sections["experiment"];
  const std::string mode = to_string(exp, "mode", "vod");
  if (mode == "vod") {
    cfg.mode = RunMode::Vod;
  } else if (mode == "live") {
    cfg.mode = RunMode::Live;
  } else if (mode == "train") {
    cfg.mode = RunMode::Train;
  } else if (mode == "metrics") {
    cfg.mode = RunMode::Metrics;
  } else {
    throw ConfigError("unknown mode: " + mode);
  }
  cfg.dataset_path = to_string(exp, "dataset", "");
  cfg.predictions_path = to_string(exp, "predictions", "");
  cfg.output_dir = to_string(exp, "output_dir", "out");
  cfg.rng_seed = static_cast<std::uint64_t>(to_int(exp, "seed", 0));
  cfg.workers = static_cast<int>(to_int(exp, "workers", 1));

  const KeyMap& oracle = sections["oracle"];
  cfg.oracle_http = to_string(oracle, "kind", "mock") == "http";
  cfg.mock.window_bias_amplitude = to_double(oracle, "window_bias_amplitude", 0.0);
  cfg.mock.rating_noise_std = to_double(oracle, "rating_noise_std", 0.0);
  cfg.mock.comparator_swap_prob = to_double(oracle, "comparator_swap_prob", 0.0);
  cfg.mock.latency_mean_s = to_double(oracle, "latency_mean_s", 1.0);
  cfg.mock.latency_std_s = to_double(oracle, "latency_std_s", 0.0);
  cfg.http.endpoint = to_string(oracle, "endpoint", "");
  cfg.http.model = to_string(oracle, "model", "");
  cfg.http.api_key_env = to_string(oracle, "api_key_env", "");
  cfg.http.timeout_s = static_cast<int>(to_int(oracle, "timeout_s", 60));

  const KeyMap& pipeline = sections["pipeline"];
  cfg.window_length = static_cast<int>(to_int(pipeline, "m", 10));
  cfg.sigma = to_double(pipeline, "sigma", 5.0);
  cfg.kernel_size = static_cast<int>(to_int(pipeline, "kernel_size", 0));
  cfg.embed_dim = static_cast<int>(to_int(pipeline, "embedding_dim", 64));

  const KeyMap& live = sections["live"];
  cfg.chunk_duration_s = to_double(live, "d", 1.0);
  cfg.horizon = static_cast<int>(to_int(live, "N", 5));
  cfg.pretrained_louts = to_list<int>(live, "pretrained_louts");
  cfg.forecast_latency_est_s = to_double(live, "forecast_latency_est_s", 1.35);
  cfg.forecast_latency_actual_s = to_double(live, "forecast_latency_actual_s", -1.0);
  cfg.model_dir = to_string(live, "model_dir", "");

  const KeyMap& forecast = sections["forecast"];
  cfg.d_model = static_cast<int>(to_int(forecast, "d_model", 32));
  cfg.heads = static_cast<int>(to_int(forecast, "heads", 4));
  cfg.lambda = to_double(forecast, "lambda", 1.0);
  cfg.learning_rate = to_double(forecast, "learning_rate", 0.05);
  cfg.epochs = static_cast<int>(to_int(forecast, "epochs", 200));
  cfg.batch_size = static_cast<int>(to_int(forecast, "batch_size", 8));
  cfg.variant = to_string(forecast, "variant", "multi_modal");

  const KeyMap& abr = sections["abr"];
  const std::vector<double> ladder = to_list<double>(abr, "ladder");
  if (!ladder.empty()) cfg.ladder.kbps = ladder;
  cfg.qoe.rebuffer_penalty = to_double(abr, "rebuffer_penalty", 4.3);
  cfg.qoe.smoothness_penalty = to_double(abr, "smoothness_penalty", 1.0);
  const std::string qmap = to_string(abr, "quality_map", "linear");
  if (qmap == "linear") {
    cfg.qoe.quality_map = QualityMap::Linear;
  } else if (qmap == "log") {
    cfg.qoe.quality_map = QualityMap::Log;
  } else {
    throw ConfigError("quality_map must be linear or log");
  }
  cfg.qoe.weight_quality_only = to_bool(abr, "weight_quality_only", false);
  cfg.qoe.buffer_cap_s = to_double(abr, "buffer_cap_s", 60.0);
  cfg.trace_paths = to_list<std::string>(abr, "trace");

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path);
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides) {
  if (overrides.window_length > 0) cfg.window_length = overrides.window_length;
  if (overrides.rng_seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(overrides.rng_seed);
  if (!overrides.output_dir.empty()) cfg.output_dir = overrides.output_dir;
}

}  // namespace castream

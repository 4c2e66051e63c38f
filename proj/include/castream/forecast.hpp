#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "castream/types.hpp"

namespace castream {

struct ForecastHyper {
  int l_in = 10;
  int l_out = 10;
  int d_model = 32;
  int heads = 4;
  int embed_dim = 64;
  double lambda = 1.0;  // weight of the correlation loss term

  void validate() const;
};

struct ForecastInput {
  std::vector<double> series;                        // length L_in, values in [0,1]
  std::vector<std::vector<double>> frame_embeddings; // L_in rows of length E
  std::vector<double> text_embedding;                // length E
};

struct ForecastSample {
  ForecastInput input;
  std::vector<double> target;  // length L_out
};

enum class ForecastVariant {
  MultiModal,  // content-aware attention over frame + text tokens
  UniModal,    // series-only MLP baseline
};

struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct ForecastModel {
  ForecastVariant variant = ForecastVariant::MultiModal;
  ForecastHyper hyper;
  std::vector<Tensor> params;

  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;

  std::string to_json() const;
  static ForecastModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static ForecastModel load(const std::string& path);
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ForecastModel init_model(ForecastVariant variant, const ForecastHyper& hyper,
                         std::uint64_t seed);

// Inference clamps to [0,1]; training leaves outputs unclamped so gradients
// survive at the boundaries.
std::vector<double> forward(const ForecastModel& model, const ForecastInput& input,
                            bool clamp_output);

// MSE(pred, gt) + lambda * (1 - PLCC(pred, gt)). A constant gt contributes
// lambda with zero gradient; flat_targets counts such events.
double loss_value(std::span<const double> pred, std::span<const double> gt, double lambda,
                  long* flat_targets = nullptr);

struct Gradients {
  std::vector<Tensor> tensors;  // aligned with ForecastModel::params
  double loss = 0.0;
  long flat_targets = 0;
};

Gradients backward(const ForecastModel& model, std::span<const ForecastSample> batch);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 8;
  std::uint64_t rng_seed = 0;
  double lambda = 1.0;
};

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_plcc = 0.0;
};

// Plain mini-batch gradient descent; returns the parameters with the best
// validation loss. Deterministic for a fixed seed.
ForecastModel train(ForecastVariant variant, ForecastHyper hyper,
                    std::span<const ForecastSample> train_set,
                    std::span<const ForecastSample> val_set, const TrainConfig& cfg,
                    std::vector<TrainLogEntry>* curve = nullptr);

// Mean per-sample PLCC of model predictions on a dataset (undefined samples
// are skipped).
double validation_plcc(const ForecastModel& model, std::span<const ForecastSample> samples);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  bool passed = false;
};

// Analytic gradients vs central finite differences (h = 1e-5) over every
// parameter, on `num_inputs` seeded random inputs.
GradCheckReport gradient_check(ForecastVariant variant, const ForecastHyper& hyper,
                               int num_inputs, std::uint64_t seed, double tolerance = 1e-4);

// JSON-lines dataset exchange: {series, frame_embeddings, text_embedding, target}.
void save_forecast_dataset(const std::string& path, std::span<const ForecastSample> samples);
std::vector<ForecastSample> load_forecast_dataset(const std::string& path);

}  // namespace castream

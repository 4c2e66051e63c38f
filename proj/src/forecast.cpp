#include "castream/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "castream/rng.hpp"

namespace castream {

namespace {

constexpr const char* kFormatVersion = "castream-forecast-1";

void check_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw TrainingError("non-finite value in " + what);
  }
}

Tensor make_tensor(const std::string& name, int rows, int cols) {
  Tensor t;
  t.name = name;
  t.rows = rows;
  t.cols = cols;
  t.data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  return t;
}

void fill_uniform(Tensor& t, Rng& rng, double scale) {
  for (double& x : t.data) x = rng.uniform(-scale, scale);
}

std::size_t param_index(const ForecastModel& m, const std::string& name) {
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (m.params[i].name == name) return i;
  }
  throw DomainError("unknown model parameter " + name);
}

// Cached forward activations of the multi-modal model, reused by backward.
struct AttentionTrace {
  std::vector<std::vector<double>> tokens;  // S x E, frame rows then text row
  std::vector<double> q, k, v;              // L x d, S x d, S x d (row-major)
  std::vector<double> attn;                 // H x L x S softmax weights
  std::vector<double> z;                    // L x d concatenated head outputs
  std::vector<double> y;                    // L_out
};

void validate_input(const ForecastHyper& h, const ForecastInput& in) {
  if (static_cast<int>(in.series.size()) != h.l_in) {
    throw DomainError("forecast input series length != L_in");
  }
  if (static_cast<int>(in.frame_embeddings.size()) != h.l_in) {
    throw DomainError("forecast input frame embedding count != L_in");
  }
  for (const auto& row : in.frame_embeddings) {
    if (static_cast<int>(row.size()) != h.embed_dim) {
      throw DomainError("forecast frame embedding width != E");
    }
  }
  if (static_cast<int>(in.text_embedding.size()) != h.embed_dim) {
    throw DomainError("forecast text embedding width != E");
  }
}

AttentionTrace run_attention(const ForecastModel& model, const ForecastInput& in) {
  const ForecastHyper& h = model.hyper;
  validate_input(h, in);

  const int L = h.l_in;
  const int S = L + 1;
  const int d = h.d_model;
  const int dh = d / h.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  const Tensor& qw = model.param("q_weight");
  const Tensor& qb = model.param("q_bias");
  const Tensor& kw = model.param("k_weight");
  const Tensor& kb = model.param("k_bias");
  const Tensor& vw = model.param("v_weight");
  const Tensor& vb = model.param("v_bias");
  const Tensor& ow = model.param("out_weight");
  const Tensor& ob = model.param("out_bias");

  AttentionTrace tr;
  tr.tokens = in.frame_embeddings;
  tr.tokens.push_back(in.text_embedding);

  tr.q.assign(static_cast<std::size_t>(L) * d, 0.0);
  for (int t = 0; t < L; ++t) {
    for (int j = 0; j < d; ++j) {
      tr.q[t * d + j] = in.series[t] * qw.data[j] + qb.data[j];
    }
  }
  tr.k.assign(static_cast<std::size_t>(S) * d, 0.0);
  tr.v.assign(static_cast<std::size_t>(S) * d, 0.0);
  for (int s = 0; s < S; ++s) {
    const std::vector<double>& tok = tr.tokens[s];
    for (int j = 0; j < d; ++j) {
      double ka = kb.data[j], va = vb.data[j];
      for (int e = 0; e < h.embed_dim; ++e) {
        ka += kw.at(j, e) * tok[e];
        va += vw.at(j, e) * tok[e];
      }
      tr.k[s * d + j] = ka;
      tr.v[s * d + j] = va;
    }
  }

  tr.attn.assign(static_cast<std::size_t>(h.heads) * L * S, 0.0);
  tr.z.assign(static_cast<std::size_t>(L) * d, 0.0);
  std::vector<double> logits(S);
  for (int head = 0; head < h.heads; ++head) {
    const int j0 = head * dh;
    for (int t = 0; t < L; ++t) {
      double max_logit = -1e300;
      for (int s = 0; s < S; ++s) {
        double dot = 0.0;
        for (int j = j0; j < j0 + dh; ++j) dot += tr.q[t * d + j] * tr.k[s * d + j];
        logits[s] = dot * inv_sqrt;
        max_logit = std::max(max_logit, logits[s]);
      }
      double denom = 0.0;
      for (int s = 0; s < S; ++s) {
        logits[s] = std::exp(logits[s] - max_logit);
        denom += logits[s];
      }
      double* alpha = &tr.attn[(static_cast<std::size_t>(head) * L + t) * S];
      for (int s = 0; s < S; ++s) {
        alpha[s] = logits[s] / denom;
        for (int j = j0; j < j0 + dh; ++j) tr.z[t * d + j] += alpha[s] * tr.v[s * d + j];
      }
    }
  }

  tr.y.assign(h.l_out, 0.0);
  const int flat = L * d;
  for (int o = 0; o < h.l_out; ++o) {
    double acc = ob.data[o];
    for (int kf = 0; kf < flat; ++kf) acc += ow.at(o, kf) * tr.z[kf];
    tr.y[o] = acc;
  }
  return tr;
}

// Cached activations of the uni-modal MLP.
struct MlpTrace {
  std::vector<double> pre, act, y;
};

MlpTrace run_mlp(const ForecastModel& model, const ForecastInput& in) {
  const ForecastHyper& h = model.hyper;
  if (static_cast<int>(in.series.size()) != h.l_in) {
    throw DomainError("forecast input series length != L_in");
  }
  const Tensor& w1 = model.param("hidden_weight");
  const Tensor& b1 = model.param("hidden_bias");
  const Tensor& w2 = model.param("out_weight");
  const Tensor& b2 = model.param("out_bias");

  MlpTrace tr;
  tr.pre.assign(h.d_model, 0.0);
  tr.act.assign(h.d_model, 0.0);
  for (int j = 0; j < h.d_model; ++j) {
    double acc = b1.data[j];
    for (int t = 0; t < h.l_in; ++t) acc += w1.at(j, t) * in.series[t];
    tr.pre[j] = acc;
    tr.act[j] = std::tanh(acc);
  }
  tr.y.assign(h.l_out, 0.0);
  for (int o = 0; o < h.l_out; ++o) {
    double acc = b2.data[o];
    for (int j = 0; j < h.d_model; ++j) acc += w2.at(o, j) * tr.act[j];
    tr.y[o] = acc;
  }
  return tr;
}

// dl/dpred of loss_value. Constant series on either side contribute the
// constant lambda term with a zero (sub)gradient.
std::vector<double> loss_gradient(std::span<const double> pred, std::span<const double> gt,
                                  double lambda, double* loss_out, long* flat_targets) {
  const std::size_t n = pred.size();
  const double dn = static_cast<double>(n);
  std::vector<double> grad(n, 0.0);

  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred[i] - gt[i];
    mse += diff * diff;
    grad[i] = 2.0 * diff / dn;
  }
  mse /= dn;

  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / dn;
  const double mg = std::accumulate(gt.begin(), gt.end(), 0.0) / dn;
  double spp = 0.0, sgg = 0.0, spg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    sgg += (gt[i] - mg) * (gt[i] - mg);
    spg += (pred[i] - mp) * (gt[i] - mg);
  }

  double loss = mse;
  if (sgg <= 0.0 || spp <= 0.0) {
    loss += lambda;
    if (flat_targets) ++(*flat_targets);
  } else {
    const double sp = std::sqrt(spp);
    const double sg = std::sqrt(sgg);
    const double r = spg / (sp * sg);
    loss += lambda * (1.0 - r);
    for (std::size_t i = 0; i < n; ++i) {
      const double dr = (gt[i] - mg) / (sp * sg) - r * (pred[i] - mp) / spp;
      grad[i] -= lambda * dr;
    }
  }
  if (loss_out) *loss_out = loss;
  return grad;
}

void backward_attention(const ForecastModel& model, const ForecastInput& in,
                        const AttentionTrace& tr, std::span<const double> dy,
                        Gradients& grads) {
  const ForecastHyper& h = model.hyper;
  const int L = h.l_in;
  const int S = L + 1;
  const int d = h.d_model;
  const int dh = d / h.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const int flat = L * d;

  const Tensor& ow = model.param("out_weight");
  Tensor& d_ow = grads.tensors[param_index(model, "out_weight")];
  Tensor& d_ob = grads.tensors[param_index(model, "out_bias")];
  Tensor& d_qw = grads.tensors[param_index(model, "q_weight")];
  Tensor& d_qb = grads.tensors[param_index(model, "q_bias")];
  Tensor& d_kw = grads.tensors[param_index(model, "k_weight")];
  Tensor& d_kb = grads.tensors[param_index(model, "k_bias")];
  Tensor& d_vw = grads.tensors[param_index(model, "v_weight")];
  Tensor& d_vb = grads.tensors[param_index(model, "v_bias")];

  std::vector<double> dz(flat, 0.0);
  for (int o = 0; o < h.l_out; ++o) {
    d_ob.data[o] += dy[o];
    for (int kf = 0; kf < flat; ++kf) {
      d_ow.at(o, kf) += dy[o] * tr.z[kf];
      dz[kf] += ow.at(o, kf) * dy[o];
    }
  }

  std::vector<double> dq(static_cast<std::size_t>(L) * d, 0.0);
  std::vector<double> dk(static_cast<std::size_t>(S) * d, 0.0);
  std::vector<double> dv(static_cast<std::size_t>(S) * d, 0.0);
  std::vector<double> dalpha(S), dlogit(S);

  for (int head = 0; head < h.heads; ++head) {
    const int j0 = head * dh;
    for (int t = 0; t < L; ++t) {
      const double* alpha = &tr.attn[(static_cast<std::size_t>(head) * L + t) * S];
      for (int s = 0; s < S; ++s) {
        double acc = 0.0;
        for (int j = j0; j < j0 + dh; ++j) {
          acc += dz[t * d + j] * tr.v[s * d + j];
          dv[s * d + j] += alpha[s] * dz[t * d + j];
        }
        dalpha[s] = acc;
      }
      double dot = 0.0;
      for (int s = 0; s < S; ++s) dot += alpha[s] * dalpha[s];
      for (int s = 0; s < S; ++s) dlogit[s] = alpha[s] * (dalpha[s] - dot);
      for (int s = 0; s < S; ++s) {
        for (int j = j0; j < j0 + dh; ++j) {
          dq[t * d + j] += dlogit[s] * tr.k[s * d + j] * inv_sqrt;
          dk[s * d + j] += dlogit[s] * tr.q[t * d + j] * inv_sqrt;
        }
      }
    }
  }

  for (int t = 0; t < L; ++t) {
    for (int j = 0; j < d; ++j) {
      d_qw.data[j] += in.series[t] * dq[t * d + j];
      d_qb.data[j] += dq[t * d + j];
    }
  }
  for (int s = 0; s < S; ++s) {
    const std::vector<double>& tok = tr.tokens[s];
    for (int j = 0; j < d; ++j) {
      d_kb.data[j] += dk[s * d + j];
      d_vb.data[j] += dv[s * d + j];
      for (int e = 0; e < h.embed_dim; ++e) {
        d_kw.at(j, e) += dk[s * d + j] * tok[e];
        d_vw.at(j, e) += dv[s * d + j] * tok[e];
      }
    }
  }
}

void backward_mlp(const ForecastModel& model, const ForecastInput& in, const MlpTrace& tr,
                  std::span<const double> dy, Gradients& grads) {
  const ForecastHyper& h = model.hyper;
  const Tensor& w2 = model.param("out_weight");
  Tensor& d_w1 = grads.tensors[param_index(model, "hidden_weight")];
  Tensor& d_b1 = grads.tensors[param_index(model, "hidden_bias")];
  Tensor& d_w2 = grads.tensors[param_index(model, "out_weight")];
  Tensor& d_b2 = grads.tensors[param_index(model, "out_bias")];

  std::vector<double> dact(h.d_model, 0.0);
  for (int o = 0; o < h.l_out; ++o) {
    d_b2.data[o] += dy[o];
    for (int j = 0; j < h.d_model; ++j) {
      d_w2.at(o, j) += dy[o] * tr.act[j];
      dact[j] += w2.at(o, j) * dy[o];
    }
  }
  for (int j = 0; j < h.d_model; ++j) {
    const double dpre = dact[j] * (1.0 - tr.act[j] * tr.act[j]);
    d_b1.data[j] += dpre;
    for (int t = 0; t < h.l_in; ++t) d_w1.at(j, t) += dpre * in.series[t];
  }
}

}  // namespace

void ForecastHyper::validate() const {
  if (l_in < 1 || l_out < 1) throw DomainError("forecast: L_in and L_out must be >= 1");
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw DomainError("forecast: d_model must be a positive multiple of heads");
  }
  if (embed_dim < 1) throw DomainError("forecast: embed_dim must be >= 1");
  if (lambda < 0.0) throw DomainError("forecast: lambda must be >= 0");
}

Tensor& ForecastModel::param(const std::string& name) {
  for (Tensor& t : params) {
    if (t.name == name) return t;
  }
  throw DomainError("unknown model parameter " + name);
}

const Tensor& ForecastModel::param(const std::string& name) const {
  for (const Tensor& t : params) {
    if (t.name == name) return t;
  }
  throw DomainError("unknown model parameter " + name);
}

ForecastModel init_model(ForecastVariant variant, const ForecastHyper& hyper,
                         std::uint64_t seed) {
  hyper.validate();
  ForecastModel m;
  m.variant = variant;
  m.hyper = hyper;

  Rng rng(mix_seed(seed, 0x6d6f64656c));
  if (variant == ForecastVariant::MultiModal) {
    m.params.push_back(make_tensor("q_weight", hyper.d_model, 1));
    m.params.push_back(make_tensor("q_bias", hyper.d_model, 1));
    m.params.push_back(make_tensor("k_weight", hyper.d_model, hyper.embed_dim));
    m.params.push_back(make_tensor("k_bias", hyper.d_model, 1));
    m.params.push_back(make_tensor("v_weight", hyper.d_model, hyper.embed_dim));
    m.params.push_back(make_tensor("v_bias", hyper.d_model, 1));
    m.params.push_back(make_tensor("out_weight", hyper.l_out, hyper.l_in * hyper.d_model));
    m.params.push_back(make_tensor("out_bias", hyper.l_out, 1));
    fill_uniform(m.param("q_weight"), rng, 1.0);
    fill_uniform(m.param("q_bias"), rng, 0.2);
    fill_uniform(m.param("k_weight"), rng, 1.0 / std::sqrt(double(hyper.embed_dim)));
    fill_uniform(m.param("k_bias"), rng, 0.1);
    fill_uniform(m.param("v_weight"), rng, 1.0 / std::sqrt(double(hyper.embed_dim)));
    fill_uniform(m.param("v_bias"), rng, 0.1);
    fill_uniform(m.param("out_weight"), rng, 1.0 / std::sqrt(double(hyper.l_in * hyper.d_model)));
  } else {
    m.params.push_back(make_tensor("hidden_weight", hyper.d_model, hyper.l_in));
    m.params.push_back(make_tensor("hidden_bias", hyper.d_model, 1));
    m.params.push_back(make_tensor("out_weight", hyper.l_out, hyper.d_model));
    m.params.push_back(make_tensor("out_bias", hyper.l_out, 1));
    fill_uniform(m.param("hidden_weight"), rng, 1.0 / std::sqrt(double(hyper.l_in)));
    fill_uniform(m.param("hidden_bias"), rng, 0.1);
    fill_uniform(m.param("out_weight"), rng, 1.0 / std::sqrt(double(hyper.d_model)));
  }
  return m;
}

std::vector<double> forward(const ForecastModel& model, const ForecastInput& input,
                            bool clamp_output) {
  std::vector<double> y = model.variant == ForecastVariant::MultiModal
                              ? run_attention(model, input).y
                              : run_mlp(model, input).y;
  if (clamp_output) {
    for (double& v : y) v = std::clamp(v, 0.0, 1.0);
  }
  return y;
}

double loss_value(std::span<const double> pred, std::span<const double> gt, double lambda,
                  long* flat_targets) {
  if (pred.size() != gt.size()) throw DomainError("loss: length mismatch");
  if (pred.size() < 2) throw DomainError("loss: needs at least 2 values");
  double loss = 0.0;
  loss_gradient(pred, gt, lambda, &loss, flat_targets);
  return loss;
}

Gradients backward(const ForecastModel& model, std::span<const ForecastSample> batch) {
  if (batch.empty()) throw DomainError("backward: empty batch");

  Gradients grads;
  grads.tensors.reserve(model.params.size());
  for (const Tensor& p : model.params) grads.tensors.push_back(make_tensor(p.name, p.rows, p.cols));

  double total_loss = 0.0;
  for (const ForecastSample& sample : batch) {
    if (static_cast<int>(sample.target.size()) != model.hyper.l_out) {
      throw DomainError("backward: target length != L_out");
    }
    double sample_loss = 0.0;
    if (model.variant == ForecastVariant::MultiModal) {
      const AttentionTrace tr = run_attention(model, sample.input);
      const std::vector<double> dy = loss_gradient(tr.y, sample.target, model.hyper.lambda,
                                                   &sample_loss, &grads.flat_targets);
      backward_attention(model, sample.input, tr, dy, grads);
    } else {
      const MlpTrace tr = run_mlp(model, sample.input);
      const std::vector<double> dy = loss_gradient(tr.y, sample.target, model.hyper.lambda,
                                                   &sample_loss, &grads.flat_targets);
      backward_mlp(model, sample.input, tr, dy, grads);
    }
    total_loss += sample_loss;
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (Tensor& g : grads.tensors) {
    for (double& x : g.data) x *= inv;
    for (double x : g.data) {
      if (!std::isfinite(x)) {
        throw TrainingError("non-finite gradient in parameter " + g.name);
      }
    }
  }
  grads.loss = total_loss * inv;
  return grads;
}

ForecastModel train(ForecastVariant variant, ForecastHyper hyper,
                    std::span<const ForecastSample> train_set,
                    std::span<const ForecastSample> val_set, const TrainConfig& cfg,
                    std::vector<TrainLogEntry>* curve) {
  if (train_set.empty()) throw TrainingError("empty training set");
  hyper.lambda = cfg.lambda;
  ForecastModel model = init_model(variant, hyper, cfg.rng_seed);

  auto mean_val_loss = [&](const ForecastModel& m) {
    if (val_set.empty()) return 0.0;
    double acc = 0.0;
    long flats = 0;
    for (const ForecastSample& s : val_set) {
      const std::vector<double> y = forward(m, s.input, false);
      acc += loss_value(y, s.target, cfg.lambda, &flats);
    }
    return acc / static_cast<double>(val_set.size());
  };

  ForecastModel best = model;
  double best_val = mean_val_loss(model);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  Rng shuffle_rng(mix_seed(cfg.rng_seed, 0x736875666c65));
  std::vector<ForecastSample> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the project generator keeps epochs reproducible.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);

      const Gradients grads = backward(model, batch);
      if (!std::isfinite(grads.loss)) throw TrainingError("training diverged: non-finite loss");
      epoch_loss += grads.loss;
      ++batches;

      for (std::size_t p = 0; p < model.params.size(); ++p) {
        double* w = model.params[p].data.data();
        const double* g = grads.tensors[p].data.data();
        for (std::size_t i = 0; i < model.params[p].data.size(); ++i) {
          w[i] -= cfg.learning_rate * g[i];
        }
      }
    }

    const double val_loss = mean_val_loss(model);
    if (val_set.empty() || val_loss < best_val) {
      best_val = val_loss;
      best = model;
    }
    if (curve) {
      curve->push_back({epoch, epoch_loss / static_cast<double>(std::max<std::size_t>(1, batches)),
                        val_loss, validation_plcc(model, val_set)});
    }
  }
  return best;
}

double validation_plcc(const ForecastModel& model, std::span<const ForecastSample> samples) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const ForecastSample& s : samples) {
    const std::vector<double> y = forward(model, s.input, false);
    const double mp = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    const double mg =
        std::accumulate(s.target.begin(), s.target.end(), 0.0) / s.target.size();
    double spp = 0.0, sgg = 0.0, spg = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      spp += (y[i] - mp) * (y[i] - mp);
      sgg += (s.target[i] - mg) * (s.target[i] - mg);
      spg += (y[i] - mp) * (s.target[i] - mg);
    }
    if (spp <= 0.0 || sgg <= 0.0) continue;
    acc += spg / std::sqrt(spp * sgg);
    ++count;
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

GradCheckReport gradient_check(ForecastVariant variant, const ForecastHyper& hyper,
                               int num_inputs, std::uint64_t seed, double tolerance) {
  const double h_step = 1e-5;
  ForecastModel model = init_model(variant, hyper, seed);
  Rng rng(mix_seed(seed, 0x67726164));

  GradCheckReport report;
  for (int trial = 0; trial < num_inputs; ++trial) {
    ForecastSample sample;
    sample.input.series.resize(hyper.l_in);
    for (double& v : sample.input.series) v = rng.next_double();
    sample.input.frame_embeddings.assign(hyper.l_in, std::vector<double>(hyper.embed_dim));
    for (auto& row : sample.input.frame_embeddings) {
      for (double& v : row) v = rng.uniform(-1.0, 1.0);
    }
    sample.input.text_embedding.resize(hyper.embed_dim);
    for (double& v : sample.input.text_embedding) v = rng.uniform(-1.0, 1.0);
    sample.target.resize(hyper.l_out);
    for (double& v : sample.target) v = rng.next_double();

    const std::span<const ForecastSample> batch(&sample, 1);
    const Gradients grads = backward(model, batch);

    for (std::size_t p = 0; p < model.params.size(); ++p) {
      Tensor& tensor = model.params[p];
      for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        const double saved = tensor.data[i];
        tensor.data[i] = saved + h_step;
        const double up = loss_value(forward(model, sample.input, false), sample.target,
                                     hyper.lambda);
        tensor.data[i] = saved - h_step;
        const double down = loss_value(forward(model, sample.input, false), sample.target,
                                       hyper.lambda);
        tensor.data[i] = saved;

        const double numeric = (up - down) / (2.0 * h_step);
        const double analytic = grads.tensors[p].data[i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
        const double rel = std::abs(numeric - analytic) / scale;
        if (rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = tensor.name;
        }
      }
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

std::string ForecastModel::to_json() const {
  nlohmann::json j;
  j["format"] = kFormatVersion;
  j["variant"] = variant == ForecastVariant::MultiModal ? "multi_modal" : "uni_modal";
  j["hyper"] = {{"l_in", hyper.l_in},     {"l_out", hyper.l_out},
                {"d_model", hyper.d_model}, {"heads", hyper.heads},
                {"embed_dim", hyper.embed_dim}, {"lambda", hyper.lambda}};
  j["params"] = nlohmann::json::array();
  for (const Tensor& t : params) {
    j["params"].push_back(
        {{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"data", t.data}});
  }
  return j.dump();
}

ForecastModel ForecastModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("format") || j["format"] != kFormatVersion) {
    throw DomainError("unrecognized model file format");
  }
  ForecastModel m;
  m.variant = j.at("variant").get<std::string>() == "multi_modal" ? ForecastVariant::MultiModal
                                                                  : ForecastVariant::UniModal;
  const nlohmann::json& h = j.at("hyper");
  m.hyper.l_in = h.at("l_in").get<int>();
  m.hyper.l_out = h.at("l_out").get<int>();
  m.hyper.d_model = h.at("d_model").get<int>();
  m.hyper.heads = h.at("heads").get<int>();
  m.hyper.embed_dim = h.at("embed_dim").get<int>();
  m.hyper.lambda = h.at("lambda").get<double>();
  m.hyper.validate();
  for (const nlohmann::json& pj : j.at("params")) {
    Tensor t;
    t.name = pj.at("name").get<std::string>();
    t.rows = pj.at("rows").get<int>();
    t.cols = pj.at("cols").get<int>();
    t.data = pj.at("data").get<std::vector<double>>();
    if (t.data.size() != static_cast<std::size_t>(t.rows) * t.cols) {
      throw DomainError("model tensor " + t.name + " has inconsistent shape");
    }
    check_finite(t.data, "model tensor " + t.name);
    m.params.push_back(std::move(t));
  }
  return m;
}

void ForecastModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write model file " + path);
  out << to_json() << '\n';
}

ForecastModel ForecastModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read model file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

void save_forecast_dataset(const std::string& path, std::span<const ForecastSample> samples) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write dataset file " + path);
  for (const ForecastSample& s : samples) {
    nlohmann::json j{{"series", s.input.series},
                     {"frame_embeddings", s.input.frame_embeddings},
                     {"text_embedding", s.input.text_embedding},
                     {"target", s.target}};
    out << j.dump() << '\n';
  }
}

std::vector<ForecastSample> load_forecast_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read dataset file " + path);
  std::vector<ForecastSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DomainError("dataset " + path + ": invalid JSON on line " + std::to_string(line_no));
    }
    ForecastSample s;
    s.input.series = j.at("series").get<std::vector<double>>();
    s.input.frame_embeddings = j.at("frame_embeddings").get<std::vector<std::vector<double>>>();
    s.input.text_embedding = j.at("text_embedding").get<std::vector<double>>();
    s.target = j.at("target").get<std::vector<double>>();
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace castream

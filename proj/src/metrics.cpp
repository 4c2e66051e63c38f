#include "castream/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace castream {

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DomainError("metric inputs have mismatched lengths: " + std::to_string(x.size()) +
                      " vs " + std::to_string(y.size()));
  }
}

}  // namespace

void VideoRecord::validate() const {
  if (chunks.empty()) throw DomainError("video " + video_id + " has no chunks");
  const double d0 = chunks.front().duration_s;
  const std::size_t e0 = chunks.front().embedding.size();
  for (const ChunkRecord& c : chunks) {
    if (c.duration_s <= 0.0) throw DomainError("video " + video_id + ": nonpositive chunk duration");
    if (c.duration_s != d0) throw DomainError("video " + video_id + ": unequal chunk durations");
    if (c.gt_saliency < 0.0 || c.gt_saliency > 1.0) {
      throw DomainError("video " + video_id + ": gt_saliency outside [0,1]");
    }
    if (c.embedding.size() != e0) {
      throw DomainError("video " + video_id + ": inconsistent embedding width");
    }
  }
}

void WeightSeries::validate() const {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DomainError("weight outside [0,1]");
    }
  }
}

std::optional<double> plcc(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("plcc needs at least 2 samples");

  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // tied block spans 1-based ranks i+1 .. j+1
    const double mean_rank = static_cast<double>(i + 1 + j + 1) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> srcc(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  if (x.size() < 2) throw DomainError("srcc needs at least 2 samples");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return plcc(rx, ry);
}

double mean_ap(const WeightSeries& pred, const WeightSeries& gt, double top_fraction) {
  if (pred.size() != gt.size()) throw DomainError("mean_ap: length mismatch");
  const std::size_t n = gt.size();
  if (n == 0) throw DomainError("mean_ap: empty series");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw DomainError("mean_ap: top_fraction outside (0,1]");
  }

  const std::size_t num_pos =
      static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n)));

  auto rank_desc = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (v[a] != v[b]) return v[a] > v[b];
      return a < b;
    });
    return order;
  };

  const std::vector<std::size_t> gt_order = rank_desc(gt.values);
  std::vector<char> is_positive(n, 0);
  for (std::size_t i = 0; i < num_pos; ++i) is_positive[gt_order[i]] = 1;

  const std::vector<std::size_t> pred_order = rank_desc(pred.values);
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (is_positive[pred_order[r]]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return ap / static_cast<double>(num_pos);
}

std::pair<double, double> mae_rmse(std::span<const double> pred, std::span<const double> gt) {
  require_same_length(pred, gt);
  const std::size_t n = pred.size();
  if (n == 0) throw DomainError("mae_rmse: empty input");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - gt[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double dn = static_cast<double>(n);
  return {abs_sum / dn, std::sqrt(sq_sum / dn)};
}

MetricReport make_report(const WeightSeries& pred, const WeightSeries& gt) {
  MetricReport r;
  const auto p = plcc(pred.values, gt.values);
  const auto s = srcc(pred.values, gt.values);
  r.plcc_defined = p.has_value();
  r.srcc_defined = s.has_value();
  r.plcc = p.value_or(0.0);
  r.srcc = s.value_or(0.0);
  r.map50 = mean_ap(pred, gt, 0.50);
  r.map15 = mean_ap(pred, gt, 0.15);
  std::tie(r.mae, r.rmse) = mae_rmse(pred.values, gt.values);
  return r;
}

}  // namespace castream

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "castream/types.hpp"

namespace castream {

// Pearson linear correlation. Returns nullopt when either input is constant
// (undefined correlation). Throws DomainError on length mismatch or n < 2.
std::optional<double> plcc(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation: Pearson on average ranks, ties receiving the
// mean of their rank span. nullopt when either rank series is constant.
std::optional<double> srcc(std::span<const double> x, std::span<const double> y);

// Average ranks with tie handling (1-based ranks).
std::vector<double> average_ranks(std::span<const double> x);

// Average precision with positives = the ceil(top_fraction * D) chunks of
// highest gt value (ties to lower index) and candidates ranked by pred
// descending (ties to lower index).
double mean_ap(const WeightSeries& pred, const WeightSeries& gt, double top_fraction);

// (mean absolute error, root mean square error)
std::pair<double, double> mae_rmse(std::span<const double> pred, std::span<const double> gt);

MetricReport make_report(const WeightSeries& pred, const WeightSeries& gt);

}  // namespace castream

#include "castream/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace castream {

namespace {

// One round of Eq.-style merging: draw the top ceil(m/2) of the first group
// and floor(m/2) of the second (fewer if short), sort the union through the
// oracle, commit the first half, and return the rest to the front of their
// source group in the oracle's order. When everything left fits in one
// window, a single call commits it all.
void merge_loop(MergeState& st, const std::string& summary, int window_length,
                RatingOracle& oracle, long& calls) {
  const std::size_t take_a = static_cast<std::size_t>((window_length + 1) / 2);
  const std::size_t take_b = static_cast<std::size_t>(window_length / 2);

  while (!st.a.empty() || !st.b.empty()) {
    if (st.a.empty()) {
      st.committed.insert(st.committed.end(), st.b.begin(), st.b.end());
      st.b.clear();
      break;
    }
    if (st.b.empty()) {
      st.committed.insert(st.committed.end(), st.a.begin(), st.a.end());
      st.a.clear();
      break;
    }

    const std::size_t total = st.a.size() + st.b.size();
    const bool final_window = total <= static_cast<std::size_t>(window_length);
    const std::size_t da = final_window ? st.a.size() : std::min(take_a, st.a.size());
    const std::size_t db = final_window ? st.b.size() : std::min(take_b, st.b.size());

    SortRequest req;
    req.global_summary = summary;
    req.candidate_indices.assign(st.a.begin(), st.a.begin() + da);
    req.candidate_indices.insert(req.candidate_indices.end(), st.b.begin(), st.b.begin() + db);

    std::vector<int> sorted = oracle.sort_window(req);
    ++calls;

    st.a.erase(st.a.begin(), st.a.begin() + da);
    st.b.erase(st.b.begin(), st.b.begin() + db);

    if (final_window) {
      st.committed.insert(st.committed.end(), sorted.begin(), sorted.end());
      break;
    }

    const std::set<int> from_a(req.candidate_indices.begin(),
                               req.candidate_indices.begin() + da);
    const std::size_t commit = (sorted.size() + 1) / 2;
    st.committed.insert(st.committed.end(), sorted.begin(), sorted.begin() + commit);

    std::vector<int> back_a, back_b;
    for (std::size_t i = commit; i < sorted.size(); ++i) {
      (from_a.count(sorted[i]) ? back_a : back_b).push_back(sorted[i]);
    }
    st.a.insert(st.a.begin(), back_a.begin(), back_a.end());
    st.b.insert(st.b.begin(), back_b.begin(), back_b.end());
  }
}

struct SortContext {
  const std::string& summary;
  int window_length;
  RatingOracle& oracle;
  long calls = 0;
  std::vector<std::vector<int>> done;  // completed merges, post-order
  const RankingSnapshot* resume = nullptr;
  bool resume_state_used = false;
};

std::vector<int> sort_range(const std::vector<SortedGroup>& groups, std::size_t lo,
                            std::size_t hi, SortContext& ctx) {
  if (hi - lo == 1) return groups[lo].indices;  // a single group is already sorted

  const std::size_t mid = lo + (hi - lo + 1) / 2;
  std::vector<int> left = sort_range(groups, lo, mid, ctx);
  std::vector<int> right = sort_range(groups, mid, hi, ctx);

  if (ctx.resume && ctx.done.size() < ctx.resume->completed_merges.size()) {
    ctx.done.push_back(ctx.resume->completed_merges[ctx.done.size()]);
    return ctx.done.back();
  }

  MergeState st;
  if (ctx.resume && ctx.resume->current_valid && !ctx.resume_state_used &&
      ctx.done.size() == ctx.resume->completed_merges.size()) {
    st = ctx.resume->current;
    ctx.resume_state_used = true;
  } else {
    st.a.assign(left.begin(), left.end());
    st.b.assign(right.begin(), right.end());
  }

  try {
    merge_loop(st, ctx.summary, ctx.window_length, ctx.oracle, ctx.calls);
  } catch (const OracleError& e) {
    RankingSnapshot snap;
    snap.completed_merges = ctx.done;
    snap.current = st;
    snap.current_valid = true;
    snap.sort_calls = ctx.calls;
    throw RankingError(e.what(), std::move(snap));
  }

  ctx.done.push_back(st.committed);
  return ctx.done.back();
}

}  // namespace

std::vector<SortedGroup> seed_groups(const PerceptionResult& p) {
  const int total = static_cast<int>(p.raw_ratings.size());
  const int m = p.window_length;
  std::vector<SortedGroup> groups;
  for (int begin = 0; begin < total; begin += m) {
    const int end = std::min(begin + m, total);
    SortedGroup g;
    g.indices.resize(end - begin);
    std::iota(g.indices.begin(), g.indices.end(), begin);
    std::sort(g.indices.begin(), g.indices.end(), [&](int x, int y) {
      if (p.raw_ratings[x] != p.raw_ratings[y]) return p.raw_ratings[x] > p.raw_ratings[y];
      return x < y;
    });
    groups.push_back(std::move(g));
  }
  return groups;
}

SortedGroup merge_two(const SortedGroup& a, const SortedGroup& b, const std::string& summary,
                      int window_length, RatingOracle& oracle) {
  if (window_length < 2) throw DomainError("merge window length must be >= 2");
  MergeState st;
  st.a.assign(a.indices.begin(), a.indices.end());
  st.b.assign(b.indices.begin(), b.indices.end());
  long calls = 0;
  merge_loop(st, summary, window_length, oracle, calls);
  return SortedGroup{std::move(st.committed)};
}

std::vector<int> global_sort(const std::vector<SortedGroup>& groups, const std::string& summary,
                             int window_length, RatingOracle& oracle,
                             const RankingSnapshot* resume, long* sort_calls_used) {
  if (groups.empty()) {
    if (sort_calls_used) *sort_calls_used = 0;
    return {};
  }
  if (window_length < 2) throw DomainError("merge window length must be >= 2");

  SortContext ctx{summary, window_length, oracle};
  ctx.resume = resume;
  if (resume) ctx.calls = resume->sort_calls;

  std::vector<int> order = sort_range(groups, 0, groups.size(), ctx);
  if (sort_calls_used) *sort_calls_used = ctx.calls;
  return order;
}

long long recurrence_calls(long long k) {
  if (k < 1) throw DomainError("recurrence_calls requires k >= 1");
  static thread_local std::unordered_map<long long, long long> memo;
  if (k == 1) return 1;
  const auto it = memo.find(k);
  if (it != memo.end()) return it->second;
  const long long value = recurrence_calls(k / 2) + recurrence_calls((k + 1) / 2) + 2 * k - 1;
  memo.emplace(k, value);
  return value;
}

WeightSeries rank_to_weights(const std::vector<int>& order, int total_chunks) {
  if (static_cast<int>(order.size()) != total_chunks) {
    throw DomainError("rank_to_weights: order length does not match chunk count");
  }
  std::vector<char> seen(total_chunks, 0);
  for (int idx : order) {
    if (idx < 0 || idx >= total_chunks || seen[idx]) {
      throw DomainError("rank_to_weights: order is not a permutation");
    }
    seen[idx] = 1;
  }

  WeightSeries w;
  w.values.assign(total_chunks, 1.0);
  if (total_chunks == 1) return w;
  for (int p = 0; p < total_chunks; ++p) {
    w.values[order[p]] =
        static_cast<double>(total_chunks - 1 - p) / static_cast<double>(total_chunks - 1);
  }
  return w;
}

WeightSeries gaussian_smooth(const WeightSeries& w, double sigma, int kernel_size) {
  if (sigma <= 0.0) throw DomainError("gaussian_smooth: sigma must be > 0");
  if (kernel_size < 1) throw DomainError("gaussian_smooth: kernel_size must be >= 1");

  const int n = static_cast<int>(w.size());
  const int lo = -((kernel_size - 1) / 2);
  const int hi = kernel_size / 2;

  std::vector<double> taps(kernel_size);
  double mass = 0.0;
  for (int o = lo; o <= hi; ++o) {
    const double t = std::exp(-(static_cast<double>(o) * o) / (2.0 * sigma * sigma));
    taps[o - lo] = t;
    mass += t;
  }
  for (double& t : taps) t /= mass;

  WeightSeries out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0, norm = 0.0;
    for (int o = lo; o <= hi; ++o) {
      const int j = i + o;
      if (j < 0 || j >= n) continue;
      acc += taps[o - lo] * w.values[j];
      norm += taps[o - lo];
    }
    out.values[i] = std::clamp(norm > 0.0 ? acc / norm : 0.0, 0.0, 1.0);
  }
  return out;
}

RankingResult run_ranking(const PerceptionResult& p, RatingOracle& oracle, double sigma,
                          int kernel_size) {
  const int total = static_cast<int>(p.raw_ratings.size());
  RankingResult result;
  const std::vector<SortedGroup> groups = seed_groups(p);
  result.global_order =
      global_sort(groups, p.global_summary(), p.window_length, oracle, nullptr,
                  &result.sort_calls_used);
  result.normalized_weights = rank_to_weights(result.global_order, total);
  result.smoothed_weights =
      gaussian_smooth(result.normalized_weights, sigma, kernel_size > 0 ? kernel_size : total);
  return result;
}

std::string RankingSnapshot::to_json() const {
  nlohmann::json j{{"completed_merges", completed_merges},
                   {"current_a", std::vector<int>(current.a.begin(), current.a.end())},
                   {"current_b", std::vector<int>(current.b.begin(), current.b.end())},
                   {"current_committed", current.committed},
                   {"current_valid", current_valid},
                   {"sort_calls", sort_calls}};
  return j.dump();
}

RankingSnapshot RankingSnapshot::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DomainError("corrupt ranking snapshot");
  RankingSnapshot snap;
  snap.completed_merges = j.at("completed_merges").get<std::vector<std::vector<int>>>();
  const auto a = j.at("current_a").get<std::vector<int>>();
  const auto b = j.at("current_b").get<std::vector<int>>();
  snap.current.a.assign(a.begin(), a.end());
  snap.current.b.assign(b.begin(), b.end());
  snap.current.committed = j.at("current_committed").get<std::vector<int>>();
  snap.current_valid = j.at("current_valid").get<bool>();
  snap.sort_calls = j.at("sort_calls").get<long>();
  return snap;
}

}  // namespace castream

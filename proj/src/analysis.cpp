#include "relaxmia/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

namespace relaxmia {

std::size_t MembershipScoreSet::member_count() const {
  return static_cast<std::size_t>(std::count(truths.begin(), truths.end(), 1));
}

std::size_t MembershipScoreSet::non_member_count() const { return truths.size() - member_count(); }

void MembershipScoreSet::validate() const {
  if (scores.size() != truths.size()) throw DimensionError("scores and truths differ in length");
  if (!class_labels.empty() && class_labels.size() != scores.size()) {
    throw DimensionError("class labels and scores differ in length");
  }
  for (int t : truths) {
    if (t != 0 && t != 1) throw DimensionError("membership truths must be 0 or 1");
  }
}

}  // namespace relaxmia

namespace relaxmia::analysis {

double compute_auc(std::span<const double> member_scores, std::span<const double> non_member_scores) {
  if (member_scores.empty() || non_member_scores.empty()) {
    throw UndefinedMetricError("AUC needs both members and non-members");
  }
  struct Entry {
    double score;
    bool member;
  };
  std::vector<Entry> pooled;
  pooled.reserve(member_scores.size() + non_member_scores.size());
  for (double s : member_scores) pooled.push_back({s, true});
  for (double s : non_member_scores) pooled.push_back({s, false});
  std::sort(pooled.begin(), pooled.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Twice the Mann-Whitney U statistic, kept integral so the result is exact.
  std::uint64_t twice_u = 0;
  std::uint64_t non_members_below = 0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    std::uint64_t members_here = 0;
    std::uint64_t non_members_here = 0;
    while (j < pooled.size() && pooled[j].score == pooled[i].score) {
      (pooled[j].member ? members_here : non_members_here) += 1;
      ++j;
    }
    twice_u += members_here * (2 * non_members_below + non_members_here);
    non_members_below += non_members_here;
    i = j;
  }
  const double pairs = static_cast<double>(member_scores.size()) *
                       static_cast<double>(non_member_scores.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

double compute_auc(const MembershipScoreSet& set) {
  set.validate();
  std::vector<double> members;
  std::vector<double> non_members;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    (set.truths[i] == 1 ? members : non_members).push_back(set.scores[i]);
  }
  return compute_auc(members, non_members);
}

double threshold_accuracy(const MembershipScoreSet& set, double threshold) {
  set.validate();
  if (set.scores.empty()) throw UndefinedMetricError("accuracy of an empty score set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    const int predicted = set.scores[i] > threshold ? 1 : 0;
    if (predicted == set.truths[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.scores.size());
}

LossStats loss_stats(std::span<const double> losses) {
  if (losses.empty()) throw UndefinedMetricError("loss statistics of an empty sample");
  LossStats stats;
  stats.count = losses.size();
  const double n = static_cast<double>(losses.size());
  stats.mean = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : losses) sq += (v - stats.mean) * (v - stats.mean);
  stats.variance = sq / n;
  return stats;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
  const LossStats stats = loss_stats(samples);
  return {stats.mean, std::max(std::sqrt(stats.variance), kMinSigma)};
}

VarianceDecomposition variance_decomposition(std::span<const double> losses,
                                             std::span<const double> deltas) {
  if (losses.size() != deltas.size()) throw DimensionError("losses and deltas differ in length");
  if (losses.size() < 2) throw UndefinedMetricError("variance decomposition needs at least 2 samples");
  const double n = static_cast<double>(losses.size());
  const double mean_l = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
  const double mean_d = std::accumulate(deltas.begin(), deltas.end(), 0.0) / n;
  std::vector<double> sums(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) sums[i] = losses[i] + deltas[i];
  const double mean_s = std::accumulate(sums.begin(), sums.end(), 0.0) / n;

  VarianceDecomposition out;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double a = losses[i] - mean_l;
    const double b = deltas[i] - mean_d;
    const double s = sums[i] - mean_s;
    out.var_l += a * a;
    out.var_dl += b * b;
    out.cov += a * b;
    out.var_sum += s * s;
  }
  out.var_l /= n;
  out.var_dl /= n;
  out.cov /= n;
  out.var_sum /= n;
  out.identity_residual = std::abs(out.var_sum - (out.var_l + out.var_dl + 2.0 * out.cov));
  out.cov_positive = out.cov > 0.0;
  out.variance_increased = out.var_sum > out.var_l;
  return out;
}

double hellinger_gaussian(const GaussianFit& p, const GaussianFit& q) {
  if (!(p.sigma > 0.0) || !(q.sigma > 0.0)) throw ConfigError("Gaussian sigma must be positive");
  const double var_sum = p.sigma * p.sigma + q.sigma * q.sigma;
  const double diff = p.mu - q.mu;
  const double affinity =
      std::sqrt(2.0 * p.sigma * q.sigma / var_sum) * std::exp(-0.25 * diff * diff / var_sum);
  return std::sqrt(std::clamp(1.0 - affinity, 0.0, 1.0));
}

double tv_upper_bound(double d_hellinger) {
  if (!(d_hellinger >= 0.0 && d_hellinger <= 1.0)) {
    throw ConfigError("Hellinger distance must lie in [0, 1]");
  }
  return std::min(1.0, std::numbers::sqrt2 * d_hellinger);
}

double auc_upper_bound(double d_tv) {
  if (!(d_tv >= 0.0 && d_tv <= 1.0)) throw ConfigError("total variation must lie in [0, 1]");
  return -0.5 * d_tv * d_tv + d_tv + 0.5;
}

BoundTerms bound_terms(double mu1, double mu2, double sigma1, double c_ratio) {
  if (!(sigma1 > 0.0) || !(c_ratio > 0.0)) throw ConfigError("sigma1 and c must be positive");
  const double one_plus_c2 = 1.0 + c_ratio * c_ratio;
  const double diff = mu1 - mu2;
  return {std::sqrt(2.0 * c_ratio / one_plus_c2),
          std::exp(-0.25 * diff * diff / (one_plus_c2 * sigma1 * sigma1))};
}

BoundReport bound_report(const GaussianFit& members, const GaussianFit& non_members) {
  BoundReport r;
  r.c_ratio = non_members.sigma / members.sigma;
  r.d_hellinger = hellinger_gaussian(members, non_members);
  r.d_tv_upper = tv_upper_bound(r.d_hellinger);
  r.auc_upper = auc_upper_bound(r.d_tv_upper);
  const BoundTerms terms = bound_terms(members.mu, non_members.mu, members.sigma, r.c_ratio);
  r.term_star = terms.term_star;
  r.term_dstar = terms.term_dstar;
  return r;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimensionError("correlation inputs differ in length");
  if (xs.size() < 2) throw UndefinedMetricError("correlation needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("correlation with a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::size_t Histogram::in_range() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram loss_histogram(std::span<const double> losses, std::size_t bin_count, double lo, double hi) {
  if (bin_count == 0) throw ConfigError("histogram needs at least one bin");
  if (!(hi > lo)) throw ConfigError("histogram range is inverted or empty");
  Histogram h{lo, hi, std::vector<std::size_t>(bin_count, 0), 0, 0};
  const double width = (hi - lo) / static_cast<double>(bin_count);
  for (double v : losses) {
    if (v < lo) {
      ++h.underflow;
    } else if (v > hi) {
      ++h.overflow;
    } else {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      h.counts[std::min(bin, bin_count - 1)] += 1;
    }
  }
  return h;
}

double generalization_gap(const TrainTrace& trace) {
  if (trace.epochs.empty()) throw UndefinedMetricError("generalization gap of an empty trace");
  return trace.epochs.back().train_acc1 - trace.epochs.back().test_acc1;
}

}  // namespace relaxmia::analysis

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relaxmia/common.hpp"
#include "relaxmia/trace.hpp"

namespace relaxmia {

/// Per-sample membership scores; higher means more member-like.
struct MembershipScoreSet {
  std::vector<double> scores;
  std::vector<int> truths;  // 1 = member, 0 = non-member
  std::string attack_name;
  std::vector<int> class_labels;  // optional, for per-class analysis

  std::size_t member_count() const;
  std::size_t non_member_count() const;
  bool balanced() const { return member_count() == non_member_count(); }
  void validate() const;
};

}  // namespace relaxmia

namespace relaxmia::analysis {

struct LossStats {
  double mean = 0.0;
  double variance = 0.0;  // population convention
  std::size_t count = 0;
};

struct GaussianFit {
  double mu = 0.0;
  double sigma = 1.0;
};

struct BoundReport {
  double d_hellinger = 0.0;
  double d_tv_upper = 0.0;
  double auc_upper = 0.5;
  double term_star = 1.0;
  double term_dstar = 1.0;
  double c_ratio = 1.0;
};

struct VarianceDecomposition {
  double var_l = 0.0;
  double var_dl = 0.0;
  double cov = 0.0;
  double var_sum = 0.0;
  double identity_residual = 0.0;
  bool cov_positive = false;
  bool variance_increased = false;
};

struct BoundTerms {
  double term_star = 1.0;
  double term_dstar = 1.0;
};

/// Rank-based (Mann-Whitney) AUC with half credit for ties; members positive.
/// Throws UndefinedMetricError unless both classes are present.
double compute_auc(const MembershipScoreSet& set);
double compute_auc(std::span<const double> member_scores, std::span<const double> non_member_scores);

/// Fraction of correct predictions under "member iff score > threshold".
double threshold_accuracy(const MembershipScoreSet& set, double threshold);

LossStats loss_stats(std::span<const double> losses);

/// Method-of-moments fit (population sigma). Sigma is floored at kMinSigma so
/// a degenerate (constant) sample still yields a valid fit.
GaussianFit fit_gaussian(std::span<const double> samples);
inline constexpr double kMinSigma = 1e-12;

VarianceDecomposition variance_decomposition(std::span<const double> losses,
                                             std::span<const double> deltas);

/// Closed-form Hellinger distance between two univariate Gaussians.
double hellinger_gaussian(const GaussianFit& p, const GaussianFit& q);

/// min(1, sqrt(2) * d_h).
double tv_upper_bound(double d_hellinger);

/// -d^2/2 + d + 1/2.
double auc_upper_bound(double d_tv);

/// The two factors of the Gaussian Hellinger affinity parameterised by
/// c = sigma2 / sigma1: sqrt(2c / (1 + c^2)) and exp(-(mu1-mu2)^2 / (4 (1+c^2) sigma1^2)).
BoundTerms bound_terms(double mu1, double mu2, double sigma1, double c_ratio);

/// Full chain from member (1) / non-member (2) Gaussian fits.
BoundReport bound_report(const GaussianFit& members, const GaussianFit& non_members);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;

  std::size_t in_range() const;
};

/// Equal-width bins over [lo, hi]; the upper edge belongs to the last bin.
Histogram loss_histogram(std::span<const double> losses, std::size_t bin_count, double lo, double hi);

/// Final-epoch top-1 train accuracy minus top-1 test accuracy (percentage points).
double generalization_gap(const TrainTrace& trace);

}  // namespace relaxmia::analysis

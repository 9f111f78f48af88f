#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "relaxmia/analysis.hpp"

using namespace relaxmia;
using namespace relaxmia::analysis;

namespace {

MembershipScoreSet make_set(std::vector<double> members, std::vector<double> non_members) {
  MembershipScoreSet s;
  for (double v : members) {
    s.scores.push_back(v);
    s.truths.push_back(1);
  }
  for (double v : non_members) {
    s.scores.push_back(v);
    s.truths.push_back(0);
  }
  return s;
}

}  // namespace

TEST_CASE("compute_auc examples") {
  CHECK(compute_auc(make_set({2, 3}, {0, 1})) == 1.0);
  CHECK(compute_auc(make_set({1, 2, 2}, {2, 1, 2})) == 0.5);
  CHECK(compute_auc(make_set({2, 0}, {1})) == 0.5);
  CHECK_THROWS_AS(compute_auc(make_set({1, 2}, {})), UndefinedMetricError);
  MembershipScoreSet bad;
  bad.scores = {1.0};
  CHECK_THROWS(compute_auc(bad));
}

TEST_CASE("compute_auc equals the threshold-sweep oracle exactly") {
  Rng rng(99);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t total = 2 + rng.below(49);
    const std::size_t members = 1 + rng.below(total - 1);
    const int levels = 1 + static_cast<int>(rng.below(trial % 3 == 0 ? 4 : 40));
    std::vector<double> m, n;
    for (std::size_t i = 0; i < total; ++i) {
      const double s = static_cast<double>(rng.below(static_cast<std::size_t>(levels))) / 3.0;
      (i < members ? m : n).push_back(s);
    }
    CHECK(compute_auc(m, n) == oracle::sweep_auc(m, n));
  }
}

TEST_CASE("threshold_accuracy") {
  const auto set = make_set({2, 0}, {1, -1});
  CHECK(threshold_accuracy(set, 0.5) == 0.5);
  CHECK(threshold_accuracy(set, 1.5) == 0.75);
  CHECK(threshold_accuracy(set, 2.0) == 0.5);
}

TEST_CASE("loss_stats examples") {
  const std::vector<double> ones{1, 1, 1}, ramp{1, 2, 3}, single{5};
  CHECK(loss_stats(ones).mean == 1.0);
  CHECK(loss_stats(ones).variance == 0.0);
  CHECK(loss_stats(ramp).mean == 2.0);
  CHECK(loss_stats(ramp).variance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(loss_stats(single).mean == 5.0);
  CHECK(loss_stats(single).variance == 0.0);
  CHECK(loss_stats(single).count == 1);
  CHECK_THROWS(loss_stats(std::vector<double>{}));
}

TEST_CASE("fit_gaussian floors sigma") {
  const std::vector<double> same{2, 2, 2};
  const auto fit = fit_gaussian(same);
  CHECK(fit.mu == 2.0);
  CHECK(fit.sigma == kMinSigma);
  const std::vector<double> ramp{1, 2, 3};
  CHECK(fit_gaussian(ramp).sigma == doctest::Approx(std::sqrt(2.0 / 3.0)));
}

TEST_CASE("variance_decomposition examples") {
  const std::vector<double> l{1, 2, 3};
  const auto d = variance_decomposition(l, l);
  CHECK(d.var_l == doctest::Approx(2.0 / 3.0));
  CHECK(d.cov == doctest::Approx(2.0 / 3.0));
  CHECK(d.var_sum == doctest::Approx(8.0 / 3.0));
  CHECK(d.identity_residual < 1e-12);

  const std::vector<double> constant{4, 4, 4};
  const auto c = variance_decomposition(l, constant);
  CHECK(c.cov == 0.0);
  CHECK(c.var_sum == doctest::Approx(c.var_l));

  const std::vector<double> neg{-1, -2, -3};
  const auto a = variance_decomposition(l, neg);
  CHECK(a.var_sum == 0.0);
  CHECK(a.cov < 0.0);
  CHECK_FALSE(a.cov_positive);

  CHECK_THROWS_AS(variance_decomposition(l, std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("variance_decomposition identity holds on random data") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(100);
    std::vector<double> l(n), dl(n);
    const double rho = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = rng.normal();
      dl[i] = rho * l[i] + 0.3 * rng.normal();
    }
    const auto d = variance_decomposition(l, dl);
    CHECK(d.identity_residual < 1e-10);
    if (d.cov > 0.0) CHECK(d.variance_increased);
  }
}

TEST_CASE("hellinger_gaussian") {
  CHECK(hellinger_gaussian({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  const double a = hellinger_gaussian({0.0, 1.0}, {2.0, 1.0});
  CHECK(a * a == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
  CHECK(std::abs(a - 0.62727) < 1e-4);
  const double b = hellinger_gaussian({0.0, 1.0}, {0.0, 3.0});
  CHECK(b * b == doctest::Approx(1.0 - std::sqrt(0.6)).epsilon(1e-12));
  CHECK(std::abs(b - 0.47476) < 1e-4);
  CHECK_THROWS_AS(hellinger_gaussian({0.0, 0.0}, {0.0, 1.0}), ConfigError);

  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const GaussianFit p{rng.normal(), 0.2 + 2.0 * rng.uniform()};
    const GaussianFit q{rng.normal(), 0.2 + 2.0 * rng.uniform()};
    const double d = hellinger_gaussian(p, q);
    CHECK(d == hellinger_gaussian(q, p));
    CHECK(d > 0.0);
    CHECK(d == doctest::Approx(oracle::numeric_hellinger(p.mu, p.sigma, q.mu, q.sigma)).epsilon(1e-6));
    const auto t = bound_terms(p.mu, q.mu, p.sigma, q.sigma / p.sigma);
    CHECK(std::abs(d - std::sqrt(1.0 - t.term_star * t.term_dstar)) < 1e-12);
  }
}

TEST_CASE("tv and AUC bounds") {
  CHECK(tv_upper_bound(0.0) == 0.0);
  CHECK(tv_upper_bound(0.5) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(tv_upper_bound(0.9) == 1.0);
  CHECK_THROWS_AS(tv_upper_bound(1.5), ConfigError);
  CHECK(auc_upper_bound(0.0) == 0.5);
  CHECK(auc_upper_bound(1.0) == 1.0);
  CHECK(auc_upper_bound(0.4) == doctest::Approx(0.82).epsilon(1e-15));
  CHECK_THROWS_AS(auc_upper_bound(-0.1), ConfigError);
  double prev = auc_upper_bound(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double v = auc_upper_bound(i * 1e-3);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("bound_terms") {
  CHECK(bound_terms(0.0, 1.0, 1.0, 1.0).term_star == 1.0);
  CHECK(bound_terms(0.0, 1.0, 1.0, 2.0).term_star > bound_terms(0.0, 1.0, 1.0, 3.0).term_star);
  for (double c : {0.5, 1.0, 3.0, 10.0}) CHECK(bound_terms(2.0, 2.0, 0.7, c).term_dstar == 1.0);
}

TEST_CASE("bound_report invariants") {
  const auto r = bound_report({0.1, 0.2}, {1.5, 0.9});
  CHECK(r.c_ratio == doctest::Approx(4.5));
  CHECK(r.d_tv_upper == std::min(1.0, std::sqrt(2.0) * r.d_hellinger));
  CHECK(r.auc_upper == -0.5 * r.d_tv_upper * r.d_tv_upper + r.d_tv_upper + 0.5);
  CHECK(r.auc_upper >= 0.5);
  CHECK(r.auc_upper <= 1.0);
}

TEST_CASE("pearson_correlation") {
  const std::vector<double> xs{0, 1, 2, 5};
  std::vector<double> lin, neg;
  for (double x : xs) {
    lin.push_back(2 * x + 1);
    neg.push_back(-x);
  }
  CHECK(pearson_correlation(xs, lin) == doctest::Approx(1.0));
  CHECK(pearson_correlation(xs, neg) == doctest::Approx(-1.0));
  CHECK(pearson_correlation(std::vector<double>{0, 1, 2}, std::vector<double>{0, 0, 1}) ==
        doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK_THROWS_AS(pearson_correlation(xs, std::vector<double>{1, 1, 1, 1}), UndefinedMetricError);
}

TEST_CASE("loss_histogram") {
  const std::vector<double> pair{0.1, 0.9};
  CHECK(loss_histogram(pair, 2, 0.0, 1.0).counts == std::vector<std::size_t>{1, 1});
  const std::vector<double> clump{0.31, 0.32, 0.33};
  const auto h = loss_histogram(clump, 10, 0.0, 1.0);
  CHECK(h.counts[3] == 3);
  CHECK(h.in_range() == 3);
  std::vector<double> grid;
  for (int i = 0; i < 40; ++i) grid.push_back((i + 0.5) / 40.0);
  for (auto c : loss_histogram(grid, 4, 0.0, 1.0).counts) CHECK(c == 10);
  const std::vector<double> edges{-1.0, 0.0, 1.0, 2.0};
  const auto e = loss_histogram(edges, 2, 0.0, 1.0);
  CHECK(e.underflow == 1);
  CHECK(e.overflow == 1);
  CHECK(e.counts == std::vector<std::size_t>{1, 1});
  CHECK_THROWS_AS(loss_histogram(pair, 2, 1.0, 0.0), ConfigError);
}

TEST_CASE("generalization_gap") {
  TrainTrace t;
  EpochRecord r;
  r.train_acc1 = 100.0;
  r.test_acc1 = 70.5;
  t.epochs.push_back(r);
  CHECK(generalization_gap(t) == doctest::Approx(29.5));
  t.epochs.back().test_acc1 = 100.0;
  CHECK(generalization_gap(t) == 0.0);
  CHECK_THROWS(generalization_gap(TrainTrace{}));
}

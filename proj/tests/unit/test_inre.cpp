#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "wcv/error.hpp"
#include "wcv/inre.hpp"

using namespace wcv;
using namespace wcv::testing;

namespace {

// Direct kernel sum over (center, mass) pairs, independent of Histogram/KdeConfig.
double brute_force_kde(double l, const std::vector<std::pair<double, double>>& bins, double h) {
  double total = 0.0;
  for (auto [c, f] : bins)
    total += f * std::exp(-(l - c) * (l - c) / (2 * h * h)) / (h * std::sqrt(2 * std::numbers::pi));
  return total;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("log ratios of clamped posteriors") {
  CHECK(log_ratio({0.5, 0.5}) == 0.0);
  CHECK(log_ratio({0.8, 0.2}) == doctest::Approx(1.3862943611198906).epsilon(1e-12));
  CHECK(log_ratio({1.0, 0.0}) == doctest::Approx(16.118095550958316).epsilon(1e-12));
  CHECK(log_ratio({0.0, 1.0}) == doctest::Approx(-16.118095550958316).epsilon(1e-12));

  const auto d = make_blobs(2, 1, 1.0, 0.1, 1);
  ScoreTable t;
  t.add(d[0].id, {0.8, 0.2});
  CHECK_THROWS_AS(log_ratios(t, d), ConfigError);
}

TEST_CASE("histogram bins are anchored at multiples of the bin width") {
  const KdeConfig cfg;
  const auto h = build_histogram(std::vector<double>{-1.0, 1.0, 3.0}, cfg);
  REQUIRE(h.centers.size() == 3);
  CHECK(h.centers == std::vector<double>{-1.0, 1.0, 3.0});
  for (double f : h.frequencies) CHECK(f == doctest::Approx(1.0 / 3.0));

  const auto one = build_histogram(std::vector<double>{0.5}, cfg);
  REQUIRE(one.centers.size() == 1);
  CHECK(one.centers[0] == 1.0);
  CHECK(one.frequencies[0] == 1.0);

  // Empty interior bins are kept.
  const auto gap = build_histogram(std::vector<double>{-3.0, 5.5}, cfg);
  CHECK(gap.centers.size() == 5);
  CHECK(gap.frequencies[1] == 0.0);
  CHECK(gap.frequencies[2] == 0.0);

  CHECK_THROWS_AS(build_histogram(std::vector<double>{}, cfg), ConfigError);
}

TEST_CASE("histogram frequencies sum to one with increasing centers") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_real_distribution<double> w(0.3, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + trial % 37);
    for (auto& x : r) x = n(rng);
    KdeConfig cfg;
    cfg.bin_width = w(rng);
    const auto h = build_histogram(r, cfg);
    double total = 0.0;
    for (double f : h.frequencies) {
      CHECK(f >= 0.0);
      total += f;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
    CHECK(std::adjacent_find(h.centers.begin(), h.centers.end(), std::greater_equal<>()) == h.centers.end());
  }
}

TEST_CASE("kde worked examples match a brute-force kernel sum") {
  KdeConfig cfg;
  const Histogram single{{0.0}, {1.0}};
  CHECK(kde_density(std::vector<double>{0.0}, single, cfg)[0] ==
        doctest::Approx(0.19947114020071635).epsilon(1e-12));

  const Histogram three{{-1.0, 1.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  const double at1 = kde_density(std::vector<double>{1.0}, three, cfg)[0];
  CHECK(at1 == doctest::Approx(0.14714728823995324).epsilon(1e-12));
  CHECK(std::abs(at1 - brute_force_kde(1.0, {{-1, 1.0 / 3}, {1, 1.0 / 3}, {3, 1.0 / 3}}, 2.0)) < 1e-12);
}

TEST_CASE("single-bin density at its center is the kernel normalization") {
  for (double h : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    KdeConfig cfg;
    cfg.bandwidth = h;
    const Histogram single{{3.0}, {1.0}};
    CHECK(std::abs(kde_density(std::vector<double>{3.0}, single, cfg)[0] - 1.0 / (h * std::sqrt(2 * std::numbers::pi))) <
          1e-12);
  }
}

TEST_CASE("kde is symmetric for mirror-symmetric histograms") {
  KdeConfig cfg;
  const Histogram mirror{{-3.0, -1.0, 1.0, 3.0}, {0.1, 0.4, 0.4, 0.1}};
  for (double l : {0.3, 1.7, 4.2, 9.0}) {
    const auto d = kde_density(std::vector<double>{l, -l}, mirror, cfg);
    CHECK(d[0] == doctest::Approx(d[1]).epsilon(1e-14));
  }
}

TEST_CASE("log-space density agrees with the direct sum and stays positive") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 4.0);
  std::vector<double> r(60);
  for (auto& x : r) x = n(rng);
  for (double h : {0.05, 0.5, 2.0, 64.0}) {
    KdeConfig cfg;
    cfg.bandwidth = h;
    const auto hist = build_histogram(r, cfg);
    const auto direct = kde_density(r, hist, cfg);
    const auto logd = kde_log_density(r, hist, cfg);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(std::isfinite(logd[i]));
      if (direct[i] > 1e-300) CHECK(std::exp(logd[i]) == doctest::Approx(direct[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("inre weights worked examples") {
  const auto eq = inre_weights(std::vector<double>{0.3, 0.3});
  CHECK(eq.weights == std::vector<double>{1.0, 1.0});

  const auto w = inre_weights(std::vector<double>{0.4, 0.1});
  CHECK(w.weights[0] == doctest::Approx(0.24352920263396993).epsilon(1e-12));
  CHECK(w.weights[1] == doctest::Approx(1.75647079736603).epsilon(1e-12));

  CHECK_THROWS_AS(inre_weights(std::vector<double>{0.4}), ConfigError);
  CHECK_THROWS_AS(inre_weights(std::vector<double>{0.4, 0.0}), ConfigError);
}

TEST_CASE("weights are positive, mean one and reverse the density order") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-4, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> dens(2 + trial % 50);
    for (auto& x : dens) x = u(rng);
    dens.push_back(dens.front());  // one tie
    const auto w = inre_weights(dens).weights;
    CHECK(std::abs(mean(w) - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] > 0.0);
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (dens[i] < dens[j]) CHECK(w[i] > w[j]);
        if (dens[i] == dens[j]) CHECK(w[i] == w[j]);
      }
    }
  }
}

TEST_CASE("weights stay positive when one density dominates") {
  const auto w = inre_weights_from_log(std::vector<double>{0.0, -30.0, -40.0});
  for (double x : w) CHECK(x > 0.0);
}

TEST_CASE("weights flatten as the bandwidth grows") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  std::vector<double> r(80);
  for (auto& x : r) x = n(rng);
  KdeConfig cfg;
  cfg.bandwidth = 1e6;
  const auto w = inre_weights(kde_density(r, build_histogram(r, cfg), cfg)).weights;
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  CHECK(*hi / *lo < 1.01);
}

TEST_CASE("uniform-density control gives unit weights") {
  const auto d = make_blobs(10, 2, 1.0, 0.5, 1);
  ScoreTable t;
  std::mt19937_64 rng(5);
  for (const auto& s : d) t.add(s.id, random_posterior(rng));
  KdeConfig cfg;
  cfg.uniform_density = true;
  for (double w : compute_inre_weights(t, d, cfg).weights.weights) CHECK(w == 1.0);
}

TEST_CASE("uniform weights reproduce the unweighted model bit for bit") {
  const auto d = make_blobs(30, 3, 0.5, 1.0, 6);
  ScoreTable t;
  std::mt19937_64 rng(6);
  for (const auto& s : d) t.add(s.id, random_posterior(rng));
  KdeConfig kde;
  kde.uniform_density = true;
  TrainConfig tc;
  tc.seed = 9;
  const MlpConfig mlp{3, {8, 4}};
  CHECK(inre_train(d, t, kde, tc, mlp) == train(init_model(mlp, 9), d, tc, WeightedBce{}));
}

TEST_CASE("kde config validation") {
  KdeConfig cfg;
  cfg.bandwidth = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.bandwidth = 2.0;
  cfg.bin_width = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("rare severe positives receive larger weights than common moderate ones") {
  SyntheticConfig sc;
  sc.seed = 3;
  const auto d = generate_synthetic(sc);
  EnsembleConfig ec;
  ec.mlp = MlpConfig{d.dim(), {32, 16}};
  const auto scores = estimate_scores(train_ensemble(d, ec), d);
  const auto detail = compute_inre_weights(scores, d, KdeConfig{});
  std::vector<double> severe, moderate;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].label != Label::positive) continue;
    (*d[i].cognitive_score < 14.0 ? severe : moderate).push_back(detail.weights.weights[i]);
  }
  REQUIRE(!severe.empty());
  CHECK(mean(severe) > mean(moderate));

  const auto text = format_weight_export(d, detail);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(d.size()));
  CHECK(text.find("\"l_x\"") != std::string::npos);
  CHECK(format_weight_export(d, detail, 2).find("\"fold\":2") != std::string::npos);
}

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Runtime limits are part of each criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wcv/dataset.hpp"
#include "wcv/ensemble.hpp"
#include "wcv/error.hpp"
#include "wcv/harness.hpp"
#include "wcv/inre.hpp"
#include "wcv/nn.hpp"
#include "wcv/sotd.hpp"

#ifndef WCV_CLI_PATH
#error "WCV_CLI_PATH must name the wcv-cli binary"
#endif

using namespace wcv;
namespace fs = std::filesystem;

namespace {

// Synthetic protocol shared by the directional experiments.
constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kMasterSeed = 11;

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << x;
  return os.str();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << x;
  return os.str();
}

const Dataset& protocol_dataset() {
  static const Dataset d = [] {
    SyntheticConfig sc;
    sc.seed = kDataSeed;
    return generate_synthetic(sc);
  }();
  return d;
}

RunConfig protocol_config(Method m) {
  RunConfig c;
  c.method = m;
  c.master_seed = kMasterSeed;
  c.jobs = jobs();
  return c;
}

const CvReport& baseline_report() {
  static const CvReport r = run_cv(protocol_dataset(), protocol_config(Method::baseline));
  return r;
}

// ---------------------------------------------------------------------------

double fd_loss(const MlpModel& m, const Dataset& d, const Objective& obj) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) total += sample_loss(forward(m, d[i].features), d, i, obj);
  return total / static_cast<double>(d.size());
}

double max_fd_error(MlpModel model, const Dataset& d, const Objective& obj) {
  std::vector<std::size_t> batch(d.size());
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  Gradients g;
  loss_and_gradient(model, d, batch, obj, g);
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = fd_loss(model, d, obj);
    param = saved - h;
    const double down = fd_loss(model, d, obj);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (std::size_t i = 0; i < model.layers[l].weights.size(); ++i)
      probe(model.layers[l].weights[i], g.layers[l].weights[i]);
    for (std::size_t i = 0; i < model.layers[l].bias.size(); ++i) probe(model.layers[l].bias[i], g.layers[l].bias[i]);
  }
  return worst;
}

Outcome loss_correctness() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t nonzero = 0, unnormalized = 0;
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng);
    const Posterior a{p, 1.0 - p};
    if (kl_loss(a, a) != 0.0) ++nonzero;
    std::normal_distribution<double> z(0.0, 10.0);
    const auto s = softmax2(z(rng), z(rng));
    if (std::abs(s.p_pos + s.p_neg - 1.0) > 1e-9) ++unnormalized;
  }

  std::uniform_int_distribution<std::size_t> dim(1, 6), h1(1, 8), h2(1, 4), n(2, 6);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    const std::size_t d = dim(rng), count = n(rng);
    std::normal_distribution<double> feat(0.0, 1.0);
    std::vector<Sample> samples;
    std::vector<double> weights;
    SoftTargets kl;
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<double> x(d);
      for (auto& v : x) v = feat(rng);
      samples.push_back({"s" + std::to_string(i), u(rng) < 0.5 ? Label::positive : Label::negative, x, {}});
      weights.push_back(0.1 + 2.0 * u(rng));
      const double p = 0.02 + 0.96 * u(rng);
      kl.targets.push_back({p, 1.0 - p});
    }
    const Dataset ds(std::move(samples));
    auto model = init_model(MlpConfig{d, {h1(rng), h2(rng)}}, trial);
    for (auto& l : model.layers)
      for (auto& b : l.bias) b = 0.1 * feat(rng);
    worst = std::max(worst, max_fd_error(model, ds, WeightedBce{weights}));
    worst = std::max(worst, max_fd_error(model, ds, kl));
  }
  const bool pass = nonzero == 0 && unnormalized == 0 && worst < 1e-4;
  return {pass, "kl(a,a)!=0: " + std::to_string(nonzero) + "/1000, softmax off by >1e-9: " +
                    std::to_string(unnormalized) + ", worst FD rel err " + sci(worst)};
}

Outcome kde_oracle() {
  double worst = 0.0;
  for (double h : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    KdeConfig cfg;
    cfg.bandwidth = h;
    const double got = kde_density(std::vector<double>{5.0}, Histogram{{5.0}, {1.0}}, cfg)[0];
    worst = std::max(worst, std::abs(got - 1.0 / (h * std::sqrt(2 * std::numbers::pi))));
  }
  // Worked example: ratios {-1, 1, 3}, bins of width 2, h = 2, evaluated at l = 1.
  KdeConfig cfg;
  const std::vector<double> ratios{-1.0, 1.0, 3.0};
  const auto hist = build_histogram(ratios, cfg);
  const double got = kde_density(std::vector<double>{1.0}, hist, cfg)[0];
  double oracle = 0.0;
  for (double c : ratios) oracle += (1.0 / 3.0) * std::exp(-(1.0 - c) * (1.0 - c) / 8.0) / (2.0 * std::sqrt(2 * std::numbers::pi));
  const double err3 = std::abs(got - oracle);
  return {worst <= 1e-12 && err3 <= 1e-12,
          "single-bin max err " + sci(worst) + ", three-point err " + sci(err3)};
}

Outcome weight_properties() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  std::normal_distribution<double> ratio(0.0, 6.0);
  std::size_t bad = 0;
  double worst_mean = 0.0, worst_flat = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> dens(2 + trial);
    for (auto& x : dens) x = u(rng);
    const auto w = inre_weights(dens).weights;
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    worst_mean = std::max(worst_mean, std::abs(mean - 1.0));
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0)) ++bad;
      for (std::size_t j = 0; j < w.size(); ++j)
        if (dens[i] < dens[j] && !(w[i] > w[j])) ++bad;
    }

    std::vector<double> l(2 + trial);
    for (auto& x : l) x = ratio(rng);
    KdeConfig cfg;
    cfg.bandwidth = 1e6;
    const auto flat = inre_weights(kde_density(l, build_histogram(l, cfg), cfg)).weights;
    const auto [lo, hi] = std::minmax_element(flat.begin(), flat.end());
    worst_flat = std::max(worst_flat, *hi / *lo - 1.0);
  }
  return {bad == 0 && worst_mean <= 1e-9 && worst_flat <= 0.01,
          "violations " + std::to_string(bad) + ", worst |mean-1| " + sci(worst_mean) +
              ", worst max/min-1 at h=1e6 " + sci(worst_flat)};
}

bool same_results(const CvReport& a, const CvReport& b) {
  return a.cells == b.cells && a.per_repeat == b.per_repeat && a.overall == b.overall;
}

Outcome equivalence() {
  SyntheticConfig sc;
  sc.n_neg = 120;
  sc.n_pos = 80;
  sc.seed = 21;
  const auto d = generate_synthetic(sc);
  auto base = protocol_config(Method::baseline);
  auto ens = protocol_config(Method::ensemble);
  ens.n_components = 1;
  auto inre = protocol_config(Method::inre);
  inre.kde.uniform_density = true;
  const auto rb = run_cv(d, base), re = run_cv(d, ens), ri = run_cv(d, inre);
  const bool a = same_results(rb, re), b = same_results(rb, ri);
  return {a && b, std::string("baseline==ensemble(n=1): ") + (a ? "yes" : "no") +
                      ", baseline==inre(uniform): " + (b ? "yes" : "no") + " over " +
                      std::to_string(rb.cells.size()) + " cells"};
}

Outcome no_leakage() {
  SyntheticConfig sc;
  sc.n_neg = 60;
  sc.n_pos = 40;
  sc.seed = 31;
  const auto d = generate_synthetic(sc);
  std::size_t checked = 0, differing = 0;
  for (auto m : {Method::baseline, Method::resample, Method::ensemble, Method::sotd, Method::inre}) {
    for (auto mode : {ScoreMode::in_sample, ScoreMode::cross_fitted}) {
      if (mode == ScoreMode::cross_fitted && m != Method::sotd && m != Method::inre) continue;
      auto c = protocol_config(m);
      c.folds = 5;
      c.score_mode = mode;
      for (std::size_t r : {0u, 3u}) {
        const std::size_t f = (r + 1) % c.folds;
        const auto plan = stratified_folds(d, c.folds, plan_seed(c.master_seed, r));
        auto samples = d.samples();
        for (auto i : plan.test_folds[f]) {
          for (auto& x : samples[i].features) x = -2.0 * x + 5.0;
          samples[i].cognitive_score = 0.0;
        }
        ++checked;
        if (!(fit_cell(d, c, r, f).models == fit_cell(Dataset(std::move(samples)), c, r, f).models)) ++differing;
      }
    }
  }

  // Label blindness on the full protocol dataset with both KL directions.
  const auto& full = protocol_dataset();
  EnsembleConfig ec;
  ec.mlp = MlpConfig{full.dim(), {32, 16}};
  ec.base_seed = 5;
  const auto scores = estimate_scores(train_ensemble(full, ec, jobs()), full);
  auto flipped = full.samples();
  for (auto& s : flipped) s.label = s.label == Label::positive ? Label::negative : Label::positive;
  const Dataset flipped_ds(std::move(flipped));
  std::size_t blind_fail = 0;
  for (auto dir : {KlDirection::as_written, KlDirection::reverse}) {
    SotdConfig cfg{ec.mlp, TrainConfig{}, dir};
    cfg.train.seed = 9;
    if (!(sotd_train(full, scores, cfg) == sotd_train(flipped_ds, scores, cfg))) ++blind_fail;
  }
  return {differing == 0 && blind_fail == 0,
          std::to_string(differing) + "/" + std::to_string(checked) + " perturbed cells changed, " +
              std::to_string(blind_fail) + "/2 students changed under label flip"};
}

Outcome alignment() {
  std::size_t ok = 0;
  double min_abs = 1.0;
  std::size_t kl_not_decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticConfig sc;
    sc.seed = seed;
    const auto d = generate_synthetic(sc);
    EnsembleConfig ec;
    ec.mlp = MlpConfig{d.dim(), {32, 16}};
    ec.base_seed = seed;
    const auto scores = estimate_scores(train_ensemble(d, ec, jobs()), d);
    const double r = std::abs(score_alignment(scores, d));
    min_abs = std::min(min_abs, r);
    ok += r >= 0.5;

    // The student fitted to these scores must not end above its starting KL.
    SotdConfig cfg{ec.mlp, TrainConfig{}, KlDirection::as_written};
    cfg.train.seed = seed;
    const SoftTargets obj{scores.aligned(d), KlDirection::as_written};
    if (mean_loss(sotd_train(d, scores, cfg), d, obj) > mean_loss(init_model(cfg.mlp, seed), d, obj))
      ++kl_not_decreasing;
  }
  return {ok >= 18 && kl_not_decreasing == 0,
          std::to_string(ok) + "/20 seeds with |r| >= 0.5 (min |r| " + fmt(min_abs) + "), student KL rose in " +
              std::to_string(kl_not_decreasing) + "/20"};
}

Outcome inre_gain() {
  const auto& base = baseline_report();
  const auto inre = run_cv(protocol_dataset(), protocol_config(Method::inre));
  const double b = base.overall.recall.mean, i = inre.overall.recall.mean;
  return {i > b, "recall inre " + fmt(i) + " vs baseline " + fmt(b)};
}

Outcome sotd_gain() {
  const auto& base = baseline_report();
  const auto sotd = run_cv(protocol_dataset(), protocol_config(Method::sotd));
  const double bb = base.overall.balanced_accuracy.mean, sb = sotd.overall.balanced_accuracy.mean;
  std::size_t wins = 0;
  for (std::size_t r = 0; r < base.per_repeat.size(); ++r)
    wins += sotd.per_repeat[r].f1.mean > base.per_repeat[r].f1.mean;
  const bool pass = sb >= bb - 0.005 && wins * 2 > base.per_repeat.size();
  return {pass, "B-Acc sotd " + fmt(sb) + " vs baseline " + fmt(bb) + ", F1 wins " + std::to_string(wins) + "/" +
                    std::to_string(base.per_repeat.size()) + " repeats"};
}

Outcome bandwidth_sweep() {
  const auto& d = protocol_dataset();
  const auto cfg = protocol_config(Method::inre);
  const std::vector<double> hs{1, 2, 4, 8, 16, 64};
  const auto sweep = sweep_bandwidth(d, cfg, hs);
  bool paired = sweep.rows.size() == hs.size();
  for (const auto& row : sweep.rows)
    for (std::size_t c = 0; paired && c < row.report.cells.size(); ++c)
      paired = row.report.cells[c].seed == sweep.rows[0].report.cells[c].seed &&
               row.report.cells[c].fold == sweep.rows[0].report.cells[c].fold;

  const std::vector<double> control{1e6};
  const auto far = sweep_bandwidth(d, cfg, control).rows.at(0).report.overall;
  const auto& base = baseline_report().overall;
  std::string detail = std::to_string(sweep.rows.size()) + " rows" + (paired ? " (paired)" : " (unpaired)");
  bool within = true;
  auto compare = [&](const char* name, const MetricSummary& a, const MetricSummary& b) {
    const double pooled = std::sqrt((a.std * a.std + b.std * b.std) / 2.0);
    const double gap = std::abs(a.mean - b.mean);
    within = within && gap <= pooled;
    detail += std::string(", ") + name + " |diff| " + fmt(gap) + " <= " + fmt(pooled);
  };
  compare("B-Acc", far.balanced_accuracy, base.balanced_accuracy);
  compare("F1", far.f1, base.f1);
  compare("recall", far.recall, base.recall);
  compare("precision", far.precision, base.precision);
  return {paired && within, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path work = fs::temp_directory_path() / "wcv_acceptance_cli";
  fs::remove_all(work);
  const std::string cli = WCV_CLI_PATH;
  const std::string many = std::to_string(std::max<std::size_t>(jobs(), 4));
  const std::string data = (work / "data.jsonl").string();

  struct Command {
    std::string name;
    std::string args;  // {out} is replaced by the run directory
    std::vector<std::string> outputs;
  };
  const std::vector<Command> commands{
      {"gen-synth", "gen-synth --seed 3 --out {out}/data.jsonl", {"data.jsonl"}},
      {"train-baseline", "train --data " + data + " --method baseline --out {out}/m.json", {"m.json"}},
      {"train-ensemble", "train --data " + data + " --method ensemble --out {out}/m.json", {"m.json"}},
      {"train-sotd", "train --data " + data + " --method sotd --out {out}/m.json", {"m.json"}},
      {"train-inre", "train --data " + data + " --method inre --out {out}/m.json", {"m.json"}},
      {"scores", "scores --data " + data + " --out {out}/s.jsonl", {"s.jsonl"}},
      {"weights", "weights --data " + data + " --out {out}/w.jsonl --per-fold-out {out}/wf.jsonl",
       {"w.jsonl", "wf.jsonl"}},
      {"cv-baseline", "cv --data " + data + " --method baseline --repeats 2 --out {out}/cv.json", {"cv.json", "cv.csv"}},
      {"cv-resample", "cv --data " + data + " --method resample --repeats 2 --out {out}/cv.json", {"cv.json", "cv.csv"}},
      {"cv-ensemble", "cv --data " + data + " --method ensemble --repeats 1 --out {out}/cv.json", {"cv.json", "cv.csv"}},
      {"cv-sotd", "cv --data " + data + " --method sotd --repeats 1 --out {out}/cv.json", {"cv.json", "cv.csv"}},
      {"cv-inre-crossfit",
       "cv --data " + data + " --method inre --repeats 1 --score-mode cross-fitted --score-folds 3 --out {out}/cv.json",
       {"cv.json", "cv.csv"}},
      {"sweep-bandwidth", "sweep-bandwidth --data " + data + " --repeats 1 --out {out}/sw.json", {"sw.json", "sw.csv"}},
  };

  // Each run of a command uses the same directory and flags; outputs are
  // snapshotted and removed in between so nothing carries over.
  auto run_once = [&](const Command& c, const std::string& jobs_flag) {
    const fs::path dir = work / c.name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string args = c.args;
    for (std::size_t at; (at = args.find("{out}")) != std::string::npos;) args.replace(at, 5, dir.string());
    const std::string cmd = "\"" + cli + "\" " + args + (c.name == "gen-synth" ? "" : " --jobs " + jobs_flag) +
                            " > \"" + (dir / "stdout.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    std::vector<std::string> out{slurp(dir / "stdout.txt")};
    for (const auto& o : c.outputs) out.push_back(slurp(dir / o));
    return std::make_pair(rc, out);
  };

  fs::create_directories(work);
  // The shared input for every other command.
  if (std::system(("\"" + cli + "\" gen-synth --seed 3 --out \"" + data + "\" > /dev/null").c_str()) != 0)
    return {false, "could not generate the input dataset"};

  std::size_t mismatches = 0, failures = 0;
  std::string which;
  for (const auto& c : commands) {
    const auto a = run_once(c, "1");
    const auto b = run_once(c, "1");
    const auto p = run_once(c, many);
    if (a.first != 0 || b.first != 0 || p.first != 0) {
      ++failures;
      which += " " + c.name + "(exit)";
      continue;
    }
    if (a.second != b.second || a.second != p.second) {
      ++mismatches;
      which += " " + c.name;
    }
  }
  return {mismatches == 0 && failures == 0,
          std::to_string(commands.size()) + " commands x 3 runs (jobs 1, 1, " + many + "), mismatches " +
              std::to_string(mismatches) + ", failures " + std::to_string(failures) + which};
}

struct Criterion {
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"loss correctness", 10, loss_correctness},
      {"kde oracle", 1, kde_oracle},
      {"weight properties", 1, weight_properties},
      {"equivalence suite", 120, equivalence},
      {"no-leakage and label blindness", 120, no_leakage},
      {"score-severity alignment", 300, alignment},
      {"inre sensitivity gain", 900, inre_gain},
      {"sotd gain", 900, sotd_gain},
      {"bandwidth sweep", 1800, bandwidth_sweep},
      {"cli determinism", 0, cli_determinism},
  };

  std::cout << "acceptance: data seed " << kDataSeed << ", master seed " << kMasterSeed << ", jobs " << jobs()
            << std::endl;
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; exceeded " + fmt(c.limit_seconds, 0) + " s limit";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << " [" << fmt(secs, 2) << " s]"
              << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}

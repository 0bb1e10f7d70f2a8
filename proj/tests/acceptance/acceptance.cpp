// Acceptance checks: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/dtw_oracle.hpp"
#include "oracles/gradient_suite.hpp"
#include "oracles/metrics_oracle.hpp"
#include "oracles/wae_oracle.hpp"
#include "userboost/userboost.hpp"

using namespace userboost;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> random_series(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

// 1. DTW equals brute-force enumeration; LB_Keogh never exceeds banded DTW.
Outcome dtw_oracle() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(101);
  int mismatches = 0, violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto x = random_series(rng, 1 + uniform_index(rng, 8), -2, 2);
    const auto y = random_series(rng, 1 + uniform_index(rng, 8), -2, 2);
    if (dtw(x, y) != oracle::dtw_brute(x, y)) ++mismatches;
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + uniform_index(rng, 32);
    const auto x = random_series(rng, n, -2, 2), y = random_series(rng, n, -2, 2);
    for (std::size_t w : kKlbModWidths) {
      if (keogh_lb(x, y, w).value > dtw(x, y, w)) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && violations == 0 && secs < 60.0,
          fmt("exact mismatches %d/1000, lower-bound violations %d/5000, %.2f s (limit 60 s)", mismatches, violations,
              secs)};
}

// 2. Soft-DTW approaches DTW from below as gamma -> 0.
Outcome soft_dtw_limit() {
  Rng rng = make_rng(202);
  double worst = 0, excess = 0;
  int above = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = random_series(rng, 1 + uniform_index(rng, 16), -2, 2);
    const auto y = random_series(rng, 1 + uniform_index(rng, 16), -2, 2);
    const double s = soft_dtw_series<double>(x, y, 1e-4), d = dtw(x, y);
    worst = std::max(worst, std::abs(s - d));
    // Rounding allowance: the two recurrences may round the cost sum differently.
    if (s > d * (1 + 1e-12)) ++above;
    excess = std::max(excess, s - d);
  }
  return {worst <= 1e-2 && above == 0,
          fmt("max |soft - dtw| = %.3g (limit 1e-2), soft > dtw beyond rounding in %d/200 (max excess %.2g)", worst,
              above, excess)};
}

// 3. Central finite differences for every differentiable loss.
Outcome gradient_suite() {
  const auto reports = oracle::run_gradient_suite(60, 303);
  bool ok = reports.size() == 7;
  std::ostringstream os;
  for (const auto& r : reports) {
    ok = ok && r.instances >= 50 && r.worst <= 1e-4;
    os << r.name << " " << fmt("%.1e", r.worst) << " (" << r.instances << ", " << r.redraws << " redrawn); ";
  }
  return {ok, "worst rel. err (limit 1e-4): " + os.str()};
}

// 4. Metrics equal exhaustive threshold oracles.
Outcome metric_oracle() {
  Rng rng = make_rng(404);
  int bad = 0;
  double worst_trap = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    ScoreSet s;
    const std::size_t np = 1 + uniform_index(rng, 10), nn = 1 + uniform_index(rng, 10);
    const std::uint64_t levels = 1 + uniform_index(rng, rep % 5 == 0 ? 1 : 12);  // some all-equal sets
    for (std::size_t i = 0; i < np; ++i) s.positive.push_back(static_cast<double>(uniform_index(rng, levels)) / levels);
    for (std::size_t i = 0; i < nn; ++i) s.negative.push_back(static_cast<double>(uniform_index(rng, levels)) / levels);
    const auto r = sweep(s);
    const auto [lo, hi] = oracle::eer(s.positive, s.negative);
    if (r.far_at_zero != oracle::far_at_zero(s.positive, s.negative) || r.eer_low != lo || r.eer_high != hi ||
        std::abs(r.auroc - oracle::auroc_pairs(s.positive, s.negative)) > 1e-15) {
      ++bad;
    }
    worst_trap = std::max(worst_trap, std::abs(r.auroc - trapezoid_auroc(r)));
  }
  return {bad == 0 && worst_trap <= 1e-12,
          fmt("oracle mismatches %d/1000, max |MW - trapezoid| = %.2g (limit 1e-12)", bad, worst_trap)};
}

// 5. WAE penalty against the triple-loop oracle.
Outcome wae_oracle() {
  Rng rng = make_rng(505);
  double worst = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 15);
    Matrix<double> m(n, 10), z(n, 10);
    for (auto& v : m.data()) v = standard_normal(rng);
    for (auto& v : z.data()) v = standard_normal(rng);
    oracle::Points pm, pz;
    for (std::size_t i = 0; i < n; ++i) {
      pm.emplace_back(m.row(i).begin(), m.row(i).end());
      pz.emplace_back(z.row(i).begin(), z.row(i).end());
    }
    worst = std::max(worst, std::abs(wae_loss(m, z).value - oracle::wae(pm, pz)));
  }
  Matrix<double> ab(2, 10);
  for (auto& v : ab.data()) v = standard_normal(rng);
  double d2 = 0;
  for (std::size_t k = 0; k < 10; ++k) d2 += (ab(0, k) - ab(1, k)) * (ab(0, k) - ab(1, k));
  const double hand = std::abs(wae_loss(ab, ab).value - d2);
  return {worst <= 1e-10 && hand <= 1e-12,
          fmt("max oracle diff %.2g over 500 batches (limit 1e-10), n=2 hand case diff %.2g", worst, hand)};
}

struct MiniTraining {
  TrainResult result;
  double seconds = 0;
};

MiniTraining train_mini(double alpha) {
  const Dataset ds = generate_mini_dataset(MiniDatasetOptions{});
  TrainConfig cfg;
  LossWeights w;
  w.alpha = alpha;
  const auto t0 = Clock::now();
  MiniTraining out{train(ds, cfg, w), 0};
  out.seconds = seconds_since(t0);
  return out;
}

std::map<double, MiniTraining>& training_cache() {
  static std::map<double, MiniTraining> cache;
  return cache;
}

const MiniTraining& cached_training(double alpha) {
  auto& cache = training_cache();
  if (!cache.count(alpha)) cache.emplace(alpha, train_mini(alpha));
  return cache.at(alpha);
}

const EpochRecord& best_record(const TrainResult& r) { return r.curve.at(static_cast<std::size_t>(r.best_epoch - 1)); }

// 6. The autoencoder learns, is fast enough and is reproducible.
Outcome training_smoke() {
  const auto& a = cached_training(1e-2);
  const auto b = train_mini(1e-2);
  const double first = a.result.curve.front().val_reconstruction;
  double lowest = first;
  for (const auto& e : a.result.curve) lowest = std::min(lowest, e.val_reconstruction);
  const bool identical = a.result.curve == b.result.curve && a.result.params == b.result.params;
  const bool pass = lowest <= 0.5 * first && a.seconds < 900 && b.seconds < 900 && identical;
  return {pass, fmt("val recon epoch 1 %.1f -> best %.1f (ratio %.3f, limit 0.5); stopped at epoch %d (best %d); "
                    "%.0f s and %.0f s (limit 900 s); curves %s",
                    first, lowest, lowest / first, a.result.stopped_epoch, a.result.best_epoch, a.seconds, b.seconds,
                    identical ? "identical" : "DIFFER")};
}

// 7. The latent authentication loss raises validation MRR.
Outcome latent_auth_effect() {
  const auto& with = cached_training(1e-2);
  const auto& without = cached_training(0.0);
  const double m1 = best_record(with.result).val_approx_mrr, m0 = best_record(without.result).val_approx_mrr;
  const double h1 = best_record(with.result).val_hard_mrr, h0 = best_record(without.result).val_hard_mrr;
  return {m1 > m0, fmt("validation approx MRR alpha=1e-2: %.4f vs alpha=0: %.4f (hard MRR %.4f vs %.4f)", m1, m0, h1, h0)};
}

// 8. LOUO TSTR authentication with adversarial sampling on 8 users.
Outcome tstr_sanity() {
  MiniDatasetOptions o;
  o.n_users = 8;
  o.gestures_per_user = 40;
  o.separation = 1.0;
  o.variability = 3.0;
  const Dataset ds = generate_mini_dataset(o);
  LouoConfig cfg;
  cfg.train.max_epochs = 150;
  cfg.experiment.seed = 3;
  cfg.experiment.real_gestures_per_terminal = 2;
  cfg.experiment.strategy = SamplingStrategy::adversarial;
  cfg.experiment.negative_mode = NegativeMode::reconstructions_plus_real;

  std::map<int, ModelParams> models;
  std::mutex mu;
  const auto train_once = training_provider(cfg);
  const ModelProvider caching = [&](int user, const SplitResult& split, std::uint64_t seed) {
    {
      std::lock_guard lock(mu);
      if (auto it = models.find(user); it != models.end()) return it->second;
    }
    auto m = train_once(user, split, seed);
    std::lock_guard lock(mu);
    models.emplace(user, m);
    return m;
  };

  const auto t0 = Clock::now();
  const auto r = run_louo(ds, cfg, caching);
  const double secs = seconds_since(t0);
  std::size_t reports = 0;
  for (const auto& u : r.users) {
    if (u.baseline.report && u.synthetic.report) ++reports;
    std::printf("  user %d: FAR@0 baseline %.3f synthetic %.3f, AUROC %.3f / %.3f\n", u.user,
                u.baseline.report ? u.baseline.report->far_at_zero : NAN,
                u.synthetic.report ? u.synthetic.report->far_at_zero : NAN,
                u.baseline.report ? u.baseline.report->auroc : NAN, u.synthetic.report ? u.synthetic.report->auroc : NAN);
  }

  LouoConfig recon_only = cfg;
  recon_only.experiment.negative_mode = NegativeMode::reconstructions;
  const auto ro = run_louo(ds, recon_only, caching);
  std::printf("  INFO reconstructions-only negatives: FAR@0 synthetic %.4f vs baseline %.4f\n", ro.synthetic.far_at_zero,
              ro.baseline.far_at_zero);

  const bool pass = reports == 8 && r.synthetic.far_at_zero <= r.baseline.far_at_zero && secs < 1800;
  return {pass, fmt("aggregate FAR@0 synthetic %.4f vs baseline %.4f (must be <=), AUROC %.3f vs %.3f, "
                    "%zu/8 user reports, %.0f s (limit 1800 s)",
                    r.synthetic.far_at_zero, r.baseline.far_at_zero, r.synthetic.auroc, r.baseline.auroc, reports,
                    secs)};
}

// 9. Sampling strategy contracts over 10^4 samples each.
Outcome sampling_contracts() {
  constexpr std::size_t n = 10000;
  Rng rng = make_rng(909);
  auto make_user = [&](int id, std::size_t entries) {
    UserEmbeddings u;
    u.user_id = id;
    for (std::size_t i = 0; i < entries; ++i) {
      LatentDistribution d;
      for (int k = 0; k < 10; ++k) {
        d.mean.push_back(uniform(rng, -2, 2) + id);
        d.log_variance.push_back(uniform(rng, -3, 0));
      }
      u.entries.push_back(d);
      u.terminals.emplace_back(1 + static_cast<int>(i % 7));
    }
    return u;
  };
  const auto target = make_user(0, 14);
  const std::vector<UserEmbeddings> others{make_user(1, 20), make_user(2, 9), make_user(3, 14)};
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // Neighbourhood: per-coordinate variance of one entry within 10%.
  UserEmbeddings single;
  single.entries.push_back(target.entries[0]);
  const auto nb = sample_neighbourhood(single, n, 1);
  for (std::size_t k = 0; k < 10; ++k) {
    double m = 0, v = 0;
    for (const auto& z : nb) m += z[k] / n;
    for (const auto& z : nb) v += (z[k] - m) * (z[k] - m) / (n - 1);
    const double want = std::exp(single.entries[0].log_variance[k]);
    check(std::abs(v - want) <= 0.1 * want, "neighbourhood variance");
  }

  // Box of all input means, for the convex-hull checks.
  std::vector<double> lo(10, INFINITY), hi(10, -INFINITY);
  auto widen = [&](const UserEmbeddings& u) {
    for (const auto& e : u.entries) {
      for (std::size_t k = 0; k < 10; ++k) {
        lo[k] = std::min(lo[k], e.mean[k]);
        hi[k] = std::max(hi[k], e.mean[k]);
      }
    }
  };
  auto inside = [&](const std::vector<std::vector<double>>& zs) {
    for (const auto& z : zs) {
      for (std::size_t k = 0; k < 10; ++k) {
        if (z[k] < lo[k] - 1e-12 || z[k] > hi[k] + 1e-12) return false;
      }
    }
    return true;
  };

  // Self-mixed: k=2 stays on the segment with mean at its midpoint.
  UserEmbeddings pair;
  pair.entries = {target.entries[0], target.entries[1]};
  const auto& a = pair.entries[0].mean;
  const auto& b = pair.entries[1].mean;
  const auto sm = sample_self_mixed(pair, n, 2, 2);
  std::vector<double> mean(10, 0.0);
  for (const auto& z : sm) {
    const double t = (z[0] - a[0]) / (b[0] - a[0]);
    check(t >= -1e-12 && t <= 1 + 1e-12, "self-mixed segment");
    for (std::size_t k = 0; k < 10; ++k) {
      check(std::abs(z[k] - (a[k] + t * (b[k] - a[k]))) < 1e-9, "self-mixed collinear");
      mean[k] += z[k] / n;
    }
  }
  for (std::size_t k = 0; k < 10; ++k) {
    const double mid = 0.5 * (a[k] + b[k]);
    check(std::abs(mean[k] - mid) <= 0.02 * std::max(1.0, std::abs(mid)), "self-mixed mean");
  }
  widen(target);
  check(inside(sample_self_mixed(target, n, 3, 3)), "self-mixed hull");

  // Adversarial: 0.85/0.15 combinations inside the joint hull.
  for (const auto& o : others) widen(o);
  check(inside(sample_adversarial(target, others, n, 4)), "adversarial hull");
  UserEmbeddings zero, one;
  zero.entries.push_back({std::vector<double>(10, 0.0), std::vector<double>(10, 0.0)});
  one.entries.push_back({std::vector<double>(10, 1.0), std::vector<double>(10, 0.0)});
  const std::vector<UserEmbeddings> ones{one};
  for (const auto& z : sample_adversarial(zero, ones, n, 5)) {
    for (double v : z) check(std::abs(v - 0.15) < 1e-15, "adversarial 0.15 example");
  }

  // Same-user: first five coordinates from the target, last five from another user.
  std::set<std::vector<double>> heads, tails;
  for (const auto& e : target.entries) heads.emplace(e.mean.begin(), e.mean.begin() + 5);
  for (const auto& o : others) {
    for (const auto& e : o.entries) tails.emplace(e.mean.begin() + 5, e.mean.end());
  }
  for (const auto& z : sample_same_user(target, others, n, 6)) {
    check(heads.count(std::vector<double>(z.begin(), z.begin() + 5)) == 1, "same-user head");
    check(tails.count(std::vector<double>(z.begin() + 5, z.end())) == 1, "same-user tail");
  }

  for (auto s : {SamplingStrategy::neighbourhood, SamplingStrategy::self_mixed, SamplingStrategy::adversarial,
                 SamplingStrategy::same_user}) {
    check(sample_latents(s, target, others, n, 7) == sample_latents(s, target, others, n, 7), "determinism");
  }

  std::set<std::string> uniq(failures.begin(), failures.end());
  std::string what;
  for (const auto& f : uniq) what += f + "; ";
  return {failures.empty(), failures.empty() ? "all properties hold over 10^4 samples per strategy"
                                             : fmt("%zu violations: ", failures.size()) + what};
}

// 10. Dataset-gated reproduction on the real wrist-gesture corpus.
Outcome watchauth() {
  const char* dir = std::getenv("USERBOOST_WATCHAUTH_DIR");
  if (!dir || !*dir) return {false, "USERBOOST_WATCHAUTH_DIR not set", true};
  Dataset ds;
  if (std::filesystem::exists(io::dataset_manifest_path(dir))) {
    ds = io::load_dataset_dir(dir);
  } else {
    const auto raw = (std::filesystem::path(dir) / "raw.csv").string();
    if (!std::filesystem::exists(raw)) return {false, "expected a dataset directory or raw.csv in " + std::string(dir)};
    std::ifstream in(raw);
    const auto rows = read_raw_csv(in);
    ds = ingest(rows);
  }
  for (auto& w : ds.windows) w = lowpass_filter(w, FilterSpec{});

  LouoConfig cfg;
  cfg.experiment.strategy = SamplingStrategy::adversarial;
  const std::vector<std::size_t> grid{1, 2, 3, 4, 6, 9, 12, 16};
  const auto r = enrolment_burden_sweep(ds, cfg, grid, training_provider(cfg));
  auto cell = [&](std::size_t k, const char* arm) -> const BurdenCell* {
    for (const auto& c : r.cells) {
      if (c.count == k && c.arm == arm && c.available) return &c;
    }
    return nullptr;
  };
  const auto* base2 = cell(2, "baseline");
  const auto* syn2 = cell(2, "synthetic");
  if (!base2 || !syn2) return {false, "k=2 cells unavailable"};
  auto first_below = [&](const char* arm) {
    for (auto k : grid) {
      const auto* c = cell(k, arm);
      if (c && c->summary.far_at_zero <= 0.70) return static_cast<long>(k);
    }
    return -1L;
  };
  const long ks = first_below("synthetic"), kb = first_below("baseline");
  const bool burden_ok = ks > 0 && (kb < 0 || ks <= kb);
  const bool pass = base2->summary.far_at_zero >= 0.995 && syn2->summary.far_at_zero <= 0.85 &&
                    syn2->summary.auroc >= 0.80 && burden_ok;
  return {pass, fmt("k=2 FAR@0 baseline %.2f (want 1.00), adversarial %.2f (limit 0.85), AUROC %.2f (min 0.80); "
                    "FAR@0 <= 0.70 first at k=%ld with synthetic vs k=%ld without",
                    base2->summary.far_at_zero, syn2->summary.far_at_zero, syn2->summary.auroc, ks, kb)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"dissimilarity oracle equivalence", dtw_oracle},
      {"soft-DTW limit", soft_dtw_limit},
      {"gradient suite", gradient_suite},
      {"metric oracle equivalence", metric_oracle},
      {"WAE estimator", wae_oracle},
      {"training smoke and determinism", training_smoke},
      {"latent-auth effect", latent_auth_effect},
      {"end-to-end TSTR sanity", tstr_sanity},
      {"sampling strategy contracts", sampling_contracts},
      {"WatchAuth reproduction", watchauth},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* tag = o.skipped ? "SKIPPED" : o.pass ? "PASS" : "FAIL";
    if (!o.skipped && !o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", tag, id, criteria[i].first, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "userboost/auth/random_forest.hpp"
#include "userboost/features/extract.hpp"
#include "userboost/genmodel/classifier.hpp"
#include "userboost/genmodel/trainer.hpp"
#include "userboost/harness/split.hpp"
#include "userboost/metrics/evaluation.hpp"
#include "userboost/sampling/latent_sampling.hpp"

namespace userboost {

enum class NegativeMode { reconstructions, reconstructions_plus_real };

inline std::string_view to_string(NegativeMode m) {
  return m == NegativeMode::reconstructions ? "reconstructions" : "reconstructions_plus_real";
}

inline NegativeMode parse_negative_mode(std::string_view s) {
  if (s == "reconstructions") return NegativeMode::reconstructions;
  if (s == "reconstructions_plus_real") return NegativeMode::reconstructions_plus_real;
  throw UsageError("unknown negative class mode '" + std::string(s) + "'");
}

struct ExperimentConfig {
  int held_out_user = 0;
  std::size_t real_gestures_per_terminal = 2;
  std::size_t synthetic_count = 500;
  SamplingStrategy strategy = SamplingStrategy::adversarial;
  NegativeMode negative_mode = NegativeMode::reconstructions_plus_real;
  std::uint64_t seed = 1;
  SamplingOptions sampling;
  ForestConfig forest;

  void validate() const {
    if (real_gestures_per_terminal < 1) throw UsageError("real_gestures_per_terminal must be >= 1");
  }
};

inline Matrix<double> feature_matrix(std::span<const GestureWindow* const> windows) {
  Matrix<double> out(windows.size(), kFeatureCount);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto f = extract(*windows[i]);
    std::copy(f.values.begin(), f.values.end(), out.row(i).begin());
  }
  return out;
}

inline Matrix<double> stack_rows(std::initializer_list<const Matrix<double>*> parts) {
  std::size_t rows = 0, cols = 0;
  for (const auto* p : parts) {
    rows += p->rows();
    if (p->rows() > 0) cols = p->cols();
  }
  Matrix<double> out(rows, cols);
  std::size_t r = 0;
  for (const auto* p : parts) {
    for (std::size_t i = 0; i < p->rows(); ++i, ++r) std::copy(p->row(i).begin(), p->row(i).end(), out.row(r).begin());
  }
  return out;
}

// Earliest `k` train-pool gestures per terminal, or nothing when any terminal
// has fewer than `k`.
inline std::optional<std::vector<const GestureWindow*>> select_enrolment(
    std::span<const GestureWindow* const> user_pool, std::size_t k) {
  std::map<int, std::vector<const GestureWindow*>> by_terminal;  // -1: no terminal
  for (const auto* w : user_pool) by_terminal[w->terminal_id.value_or(-1)].push_back(w);
  if (by_terminal.empty()) return std::nullopt;
  std::vector<const GestureWindow*> out;
  for (auto& [terminal, ws] : by_terminal) {
    if (ws.size() < k) return std::nullopt;
    std::sort(ws.begin(), ws.end(), [](const auto* a, const auto* b) { return a->order_index < b->order_index; });
    out.insert(out.end(), ws.begin(), ws.begin() + static_cast<long>(k));
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->order_index < b->order_index; });
  return out;
}

struct AuthOutcome {
  int user = 0;
  std::string arm;  // "baseline" or "synthetic"
  std::size_t real_per_terminal = 0;
  bool available = false;
  std::size_t enrolment_count = 0;
  std::size_t synthetic_count = 0;
  std::size_t negative_train_count = 0;
  std::optional<EvalReport> report;
};

// Everything about one held-out user that does not depend on the enrolment
// count. Model-dependent parts are filled only when a model is supplied.
class AuthFold {
 public:
  AuthFold(const SplitResult& split, int user, const ModelParams* model) : user_(user), model_(model) {
    for (const auto* w : split.pool(Label::gesture)) (w->user_id == user ? target_pool_ : other_pool_).push_back(w);
    if (target_pool_.empty()) throw DataError("tstr: held-out user " + std::to_string(user) + " has no training gestures");
    if (other_pool_.empty()) throw DataError("tstr: no other users in the training data");
    std::vector<const GestureWindow*> test_pos, test_neg;
    for (const auto& w : split.test.windows) {
      if (w.label != Label::gesture) continue;
      (w.user_id == user ? test_pos : test_neg).push_back(&w);
    }
    if (test_pos.empty() || test_neg.empty()) throw DataError("tstr: user " + std::to_string(user) + " lacks test data");
    test_pos_ = feature_matrix(test_pos);
    test_neg_ = feature_matrix(test_neg);
    other_real_ = feature_matrix(other_pool_);
    if (model_) {
      if (!model_->trained) throw DataError("tstr: model checkpoint is untrained");
      if (std::find(model_->roster.begin(), model_->roster.end(), user) != model_->roster.end()) {
        throw DataError("tstr: model was trained with held-out user " + std::to_string(user));
      }
      std::map<int, std::vector<const GestureWindow*>> by_user;
      for (const auto* w : other_pool_) by_user[w->user_id].push_back(w);
      for (const auto& [id, ws] : by_user) others_.push_back(embed_user(id, ws, *model_));
      std::vector<std::vector<double>> means;
      for (const auto& e : others_) {
        for (const auto& d : e.entries) means.push_back(d.mean);
      }
      const auto recon = decode_synthetic(means, *model_, 0);
      std::vector<const GestureWindow*> ptrs;
      for (const auto& w : recon) ptrs.push_back(&w);
      other_recon_ = feature_matrix(ptrs);
    }
  }

  int user() const { return user_; }

  // synthetic_count == 0 is the real-data baseline: real other-user gestures
  // as negatives and no use of the generative model.
  AuthOutcome run(const ExperimentConfig& cfg, std::size_t k, std::size_t synthetic_count) const {
    cfg.validate();
    AuthOutcome out;
    out.user = user_;
    out.arm = synthetic_count == 0 ? "baseline" : "synthetic";
    out.real_per_terminal = k;
    const auto enrol = select_enrolment(target_pool_, k);
    if (!enrol) return out;
    out.available = true;
    out.enrolment_count = enrol->size();
    const Matrix<double> real_pos = feature_matrix(*enrol);
    Matrix<double> synth_pos(0, kFeatureCount);
    if (synthetic_count > 0) {
      if (!model_) throw UsageError("tstr: synthetic arm requires a generative model");
      if (needs_other_users(cfg.strategy) && others_.empty()) {
        throw DataError("tstr: strategy " + std::string(to_string(cfg.strategy)) + " needs other-user embeddings");
      }
      const UserEmbeddings target = embed_user(user_, *enrol, *model_);
      const auto synth = generate(cfg.strategy, *model_, target, others_, synthetic_count, child_seed(cfg.seed, 2),
                                  cfg.sampling);
      std::vector<const GestureWindow*> ptrs;
      for (const auto& w : synth) ptrs.push_back(&w);
      synth_pos = feature_matrix(ptrs);
    }
    out.synthetic_count = synth_pos.rows();
    Matrix<double> neg;
    if (synthetic_count == 0) {
      neg = other_real_;
    } else if (cfg.negative_mode == NegativeMode::reconstructions) {
      neg = other_recon_;
    } else {
      neg = stack_rows({&other_recon_, &other_real_});
    }
    out.negative_train_count = neg.rows();
    const Matrix<double> x = stack_rows({&real_pos, &synth_pos, &neg});
    std::vector<bool> y(x.rows(), false);
    std::fill(y.begin(), y.begin() + static_cast<long>(real_pos.rows() + synth_pos.rows()), true);
    const Forest forest = fit_forest(x, y, child_seed(cfg.seed, 3), cfg.forest);
    ScoreSet scores{predict_proba_all(forest, test_pos_), predict_proba_all(forest, test_neg_)};
    out.report = sweep(scores);
    return out;
  }

 private:
  int user_;
  const ModelParams* model_;
  std::vector<const GestureWindow*> target_pool_, other_pool_;
  Matrix<double> test_pos_, test_neg_, other_real_, other_recon_;
  std::vector<UserEmbeddings> others_;
};

// One held-out user: enrol with the earliest gestures per terminal, add
// synthetic gestures, fit RF100 and evaluate on the real test split.
inline AuthOutcome tstr_authentication(const ExperimentConfig& cfg, const SplitResult& split, const ModelParams* model) {
  cfg.validate();
  const AuthFold fold(split, cfg.held_out_user, cfg.synthetic_count > 0 ? model : nullptr);
  return fold.run(cfg, cfg.real_gestures_per_terminal, cfg.synthetic_count);
}

struct MetricSummary {
  std::size_t n_users = 0;
  double far_at_zero = 0, eer_low = 0, eer_high = 0, auroc = 0;
};

// Unweighted mean over available outcomes.
inline MetricSummary aggregate(std::span<const AuthOutcome* const> outcomes) {
  MetricSummary s;
  for (const auto* o : outcomes) {
    if (!o->available || !o->report) continue;
    ++s.n_users;
    s.far_at_zero += o->report->far_at_zero;
    s.eer_low += o->report->eer_low;
    s.eer_high += o->report->eer_high;
    s.auroc += o->report->auroc;
  }
  if (s.n_users > 0) {
    const double n = static_cast<double>(s.n_users);
    s.far_at_zero /= n;
    s.eer_low /= n;
    s.eer_high /= n;
    s.auroc /= n;
  }
  return s;
}

struct LouoConfig {
  ExperimentConfig experiment;  // held_out_user is set per fold
  SplitSpec split;
  TrainConfig train;
  LossWeights weights;
  ArchSpec arch;
  unsigned jobs = 1;
};

inline std::uint64_t fold_seed(std::uint64_t root, int user) { return child_seed(root, static_cast<std::uint64_t>(user)); }

// Supplies the generative model for a fold (trained without `user`).
using ModelProvider = std::function<ModelParams(int user, const SplitResult& split, std::uint64_t seed)>;

inline TrainResult train_fold_model(const SplitResult& split, int user, const LouoConfig& cfg, std::uint64_t seed) {
  std::vector<const GestureWindow*> tr, val;
  for (const auto& w : split.train.windows) {
    if (w.label == Label::gesture && w.user_id != user) tr.push_back(&w);
  }
  for (const auto& w : split.validation.windows) {
    if (w.user_id != user) val.push_back(&w);
  }
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  return train_partitioned(tr, val, tc, cfg.weights, cfg.arch);
}

inline ModelProvider training_provider(const LouoConfig& cfg) {
  return [cfg](int user, const SplitResult& split, std::uint64_t seed) {
    return train_fold_model(split, user, cfg, seed).params;
  };
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

struct UserAuthResult {
  int user = 0;
  AuthOutcome baseline, synthetic;
};

struct LouoResult {
  std::vector<UserAuthResult> users;  // ordered by user id
  MetricSummary baseline, synthetic;
};

// Leave-one-user-out TSTR authentication with both arms per user.
inline LouoResult run_louo(const Dataset& dataset, const LouoConfig& cfg, const ModelProvider& provider) {
  cfg.experiment.validate();
  const SplitResult split = temporal_split(dataset, cfg.split);
  assert_disjoint(split);
  const std::vector<int> users = split.user_ids();
  if (users.size() < 2) throw DataError("tstr: need at least 2 users");
  LouoResult out;
  out.users.resize(users.size());
  parallel_for(users.size(), cfg.jobs, [&](std::size_t i) {
    const int user = users[i];
    ExperimentConfig ec = cfg.experiment;
    ec.held_out_user = user;
    ec.seed = fold_seed(cfg.experiment.seed, user);
    std::optional<ModelParams> model;
    if (ec.synthetic_count > 0) model = provider(user, split, child_seed(ec.seed, 1));
    const AuthFold fold(split, user, model ? &*model : nullptr);
    out.users[i].user = user;
    out.users[i].baseline = fold.run(ec, ec.real_gestures_per_terminal, 0);
    out.users[i].synthetic = ec.synthetic_count > 0 ? fold.run(ec, ec.real_gestures_per_terminal, ec.synthetic_count)
                                                    : out.users[i].baseline;
  });
  std::vector<const AuthOutcome*> b, s;
  for (const auto& u : out.users) {
    b.push_back(&u.baseline);
    s.push_back(&u.synthetic);
  }
  out.baseline = aggregate(b);
  out.synthetic = aggregate(s);
  return out;
}

struct BurdenCell {
  std::size_t count = 0;
  std::string arm;
  bool available = false;  // every user could enrol with `count` per terminal
  MetricSummary summary;
};

struct BurdenResult {
  std::vector<AuthOutcome> per_user;  // ordered by user, count, arm
  std::vector<BurdenCell> cells;      // ordered by count, arm
};

inline BurdenResult enrolment_burden_sweep(const Dataset& dataset, const LouoConfig& cfg,
                                           const std::vector<std::size_t>& grid, const ModelProvider& provider) {
  cfg.experiment.validate();
  if (grid.empty()) throw UsageError("burden sweep: empty grid");
  for (auto k : grid) {
    if (k < 1) throw UsageError("burden sweep: grid values must be >= 1");
  }
  const SplitResult split = temporal_split(dataset, cfg.split);
  assert_disjoint(split);
  const std::vector<int> users = split.user_ids();
  if (users.size() < 2) throw DataError("burden sweep: need at least 2 users");
  const std::size_t synth = cfg.experiment.synthetic_count;
  std::vector<std::vector<AuthOutcome>> rows(users.size());
  parallel_for(users.size(), cfg.jobs, [&](std::size_t i) {
    const int user = users[i];
    ExperimentConfig ec = cfg.experiment;
    ec.held_out_user = user;
    ec.seed = fold_seed(cfg.experiment.seed, user);
    std::optional<ModelParams> model;
    if (synth > 0) model = provider(user, split, child_seed(ec.seed, 1));
    const AuthFold fold(split, user, model ? &*model : nullptr);
    for (auto k : grid) {
      if (synth > 0) rows[i].push_back(fold.run(ec, k, synth));
      rows[i].push_back(fold.run(ec, k, 0));
    }
  });
  BurdenResult out;
  for (auto& r : rows) out.per_user.insert(out.per_user.end(), r.begin(), r.end());
  for (auto k : grid) {
    for (const std::string arm : {"synthetic", "baseline"}) {
      if (synth == 0 && arm == "synthetic") continue;
      BurdenCell cell;
      cell.count = k;
      cell.arm = arm;
      std::vector<const AuthOutcome*> sel;
      cell.available = true;
      for (const auto& o : out.per_user) {
        if (o.real_per_terminal != k || o.arm != arm) continue;
        sel.push_back(&o);
        cell.available = cell.available && o.available;
      }
      cell.available = cell.available && !sel.empty();
      if (cell.available) cell.summary = aggregate(sel);
      out.cells.push_back(cell);
    }
  }
  return out;
}

enum class RecognitionClassifier { rf100, conv_gru };

inline std::string_view to_string(RecognitionClassifier c) { return c == RecognitionClassifier::rf100 ? "rf100" : "conv_gru"; }

inline RecognitionClassifier parse_classifier(std::string_view s) {
  if (s == "rf100") return RecognitionClassifier::rf100;
  if (s == "conv_gru" || s == "conv-gru") return RecognitionClassifier::conv_gru;
  throw UsageError("unknown classifier '" + std::string(s) + "'");
}

struct RecognitionConfig {
  RecognitionClassifier classifier = RecognitionClassifier::rf100;
  std::size_t per_class = 240;
  std::uint64_t seed = 1;
  ForestConfig forest;
  ConvGruConfig conv_gru;
  ArchSpec classifier_arch;
};

namespace detail {

inline std::vector<const GestureWindow*> random_subset(std::vector<const GestureWindow*> v, std::size_t n, Rng& rng) {
  if (v.size() <= n) return v;
  for (std::size_t i = 0; i < n; ++i) std::swap(v[i], v[i + uniform_index(rng, v.size() - i)]);
  v.resize(n);
  return v;
}

}  // namespace detail

// Positive class: reconstructions (decoded embedding means) of randomly chosen
// train-pool gestures; negative class: train-pool non-gesture windows. The
// classifier is evaluated on the real test gestures versus test non-gestures.
inline EvalReport tstr_gesture_recognition(const ModelParams& model, const SplitResult& split,
                                           const RecognitionConfig& cfg) {
  if (!model.trained) throw DataError("tstr recognition: model checkpoint is untrained");
  Rng rng = make_rng(child_seed(cfg.seed, 1));
  const auto gestures = detail::random_subset(split.pool(Label::gesture), cfg.per_class, rng);
  const auto negatives = detail::random_subset(split.pool(Label::non_gesture), cfg.per_class, rng);
  if (gestures.empty()) throw DataError("tstr recognition: no training gestures");
  if (negatives.empty()) throw DataError("tstr recognition: insufficient non-gesture data in the training split");
  std::vector<const GestureWindow*> test_pos, test_neg;
  for (const auto& w : split.test.windows) (w.label == Label::gesture ? test_pos : test_neg).push_back(&w);
  if (test_pos.empty() || test_neg.empty()) throw DataError("tstr recognition: insufficient non-gesture test data");

  std::vector<Matrix<double>> norm;
  for (const auto* w : gestures) norm.push_back(normalize_values(w->values, model.stats));
  std::vector<const Matrix<double>*> ptrs;
  for (const auto& m : norm) ptrs.push_back(&m);
  std::vector<std::vector<double>> means;
  for (const auto& d : encode_all(ptrs, model)) means.push_back(d.mean);
  const auto recon = decode_synthetic(means, model, 0);
  std::vector<const GestureWindow*> pos;
  for (const auto& w : recon) pos.push_back(&w);

  ScoreSet scores;
  if (cfg.classifier == RecognitionClassifier::rf100) {
    const Matrix<double> xp = feature_matrix(pos), xn = feature_matrix(negatives);
    const Matrix<double> x = stack_rows({&xp, &xn});
    std::vector<bool> y(x.rows(), false);
    std::fill(y.begin(), y.begin() + static_cast<long>(xp.rows()), true);
    const Forest forest = fit_forest(x, y, child_seed(cfg.seed, 2), cfg.forest);
    scores.positive = predict_proba_all(forest, feature_matrix(test_pos));
    scores.negative = predict_proba_all(forest, feature_matrix(test_neg));
  } else {
    ConvGruClassifier clf(cfg.classifier_arch);
    ConvGruConfig cc = cfg.conv_gru;
    cc.seed = child_seed(cfg.seed, 2);
    clf.fit(pos, negatives, cc);
    scores.positive = clf.predict_proba(test_pos);
    scores.negative = clf.predict_proba(test_neg);
  }
  return sweep(scores);
}

}  // namespace userboost

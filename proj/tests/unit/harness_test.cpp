#include <gtest/gtest.h>

#include <set>

#include "userboost/data/mini_dataset.hpp"
#include "userboost/harness/tstr.hpp"

using namespace userboost;

namespace {

Dataset mini(int users, int gestures, int non_gestures = 6) {
  MiniDatasetOptions o;
  o.n_users = users;
  o.gestures_per_user = gestures;
  o.non_gestures_per_user = non_gestures;
  return generate_mini_dataset(o);
}

ArchSpec small_arch() {
  ArchSpec a;
  a.conv_blocks = 2;
  a.branch_filters = 2;
  a.merge_channels = 4;
  a.gru_layers = 1;
  a.gru_hidden = 4;
  a.decoder_channels = 4;
  a.auth_hidden = 4;
  return a;
}

// Untrained weights marked trained: enough to exercise the plumbing.
ModelParams stub_model(std::vector<int> roster) {
  ArchSpec a = small_arch();
  a.n_users = roster.size();
  auto m = initialise_model(a, 17);
  m.roster = std::move(roster);
  m.trained = true;
  return m;
}

std::size_t count_user(const Dataset& d, int user, Label label) {
  return static_cast<std::size_t>(std::count_if(d.windows.begin(), d.windows.end(), [&](const GestureWindow& w) {
    return w.user_id == user && w.label == label;
  }));
}

}  // namespace

TEST(TemporalSplit, TrainCount) {
  EXPECT_EQ(train_count(30, 2.0 / 3.0), 20u);
  EXPECT_EQ(train_count(3, 2.0 / 3.0), 2u);
  EXPECT_EQ(train_count(10, 2.0 / 3.0), 6u);
}

TEST(TemporalSplit, ThirtyGesturesGiveTwentyAndTen) {
  const auto s = temporal_split(mini(3, 30), SplitSpec{});
  for (int u = 1; u <= 3; ++u) {
    EXPECT_EQ(count_user(s.train, u, Label::gesture) + count_user(s.validation, u, Label::gesture), 20u);
    EXPECT_EQ(count_user(s.test, u, Label::gesture), 10u);
    EXPECT_EQ(count_user(s.train, u, Label::non_gesture), 4u);
    EXPECT_EQ(count_user(s.test, u, Label::non_gesture), 2u);
  }
  EXPECT_EQ(s.validation.windows.size(), 12u);  // 20% of the 60 pooled gestures
  for (const auto& w : s.validation.windows) EXPECT_EQ(w.label, Label::gesture);
  EXPECT_NO_THROW(assert_disjoint(s));
}

TEST(TemporalSplit, TestComesAfterTrainPool) {
  const auto s = temporal_split(mini(4, 17, 5), SplitSpec{});
  for (auto label : {Label::gesture, Label::non_gesture}) {
    std::map<int, int> last_pool;
    for (const auto* w : s.pool(label)) last_pool[w->user_id] = std::max(last_pool[w->user_id], w->order_index);
    for (const auto& w : s.test.windows) {
      if (w.label == label) EXPECT_GT(w.order_index, last_pool[w.user_id]);
    }
  }
}

TEST(TemporalSplit, ValidationDependsOnlyOnSeed) {
  const auto ds = mini(3, 30);
  SplitSpec a;
  a.seed = 4;
  EXPECT_EQ(temporal_split(ds, a).validation.windows, temporal_split(ds, a).validation.windows);
  SplitSpec b = a;
  b.seed = 5;
  EXPECT_NE(temporal_split(ds, a).validation.windows, temporal_split(ds, b).validation.windows);
}

TEST(TemporalSplit, Errors) {
  EXPECT_THROW(temporal_split(mini(2, 2), SplitSpec{}), DataError);
  auto ds = mini(2, 6);
  ds.windows[1].order_index = ds.windows[0].order_index;
  EXPECT_THROW(temporal_split(ds, SplitSpec{}), DataError);
  ds = mini(2, 6);
  ds.windows[0].synthetic = true;
  EXPECT_THROW(temporal_split(ds, SplitSpec{}), DataError);
  SplitResult leak;
  leak.train.windows.push_back(ds.windows[2]);
  leak.test.windows.push_back(ds.windows[2]);
  EXPECT_THROW(assert_disjoint(leak), DataError);
  SplitSpec bad;
  bad.train_fraction = 1.0;
  EXPECT_THROW(temporal_split(ds, bad), UsageError);
}

TEST(Enrolment, EarliestPerTerminal) {
  const auto s = temporal_split(mini(3, 30), SplitSpec{});
  std::vector<const GestureWindow*> pool;
  for (const auto* w : s.pool(Label::gesture)) {
    if (w->user_id == 2) pool.push_back(w);
  }
  const auto e = select_enrolment(pool, 2);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->size(), 14u);
  std::map<int, int> per_terminal;
  for (const auto* w : *e) {
    ++per_terminal[*w->terminal_id];
    EXPECT_LT(w->order_index, 14);  // the first two visits of each of the 7 terminals
  }
  for (const auto& [t, n] : per_terminal) EXPECT_EQ(n, 2);
  EXPECT_FALSE(select_enrolment(pool, 3));  // terminal 7 has only two pool gestures
}

TEST(Tstr, BaselineDoesNotUseTheModel) {
  const auto s = temporal_split(mini(3, 30), SplitSpec{});
  ExperimentConfig cfg;
  cfg.held_out_user = 1;
  cfg.synthetic_count = 0;
  cfg.forest.n_trees = 20;
  const auto plain = tstr_authentication(cfg, s, nullptr);
  ModelParams model = stub_model({2, 3});
  const auto with_model = tstr_authentication(cfg, s, &model);
  ASSERT_TRUE(plain.available);
  EXPECT_EQ(plain.arm, "baseline");
  EXPECT_EQ(plain.enrolment_count, 14u);
  EXPECT_EQ(plain.negative_train_count, 40u);
  EXPECT_EQ(plain.report, with_model.report);

  const AuthFold fold(s, 1, &model);
  EXPECT_EQ(fold.run(cfg, 2, 0).report, plain.report);
}

TEST(Tstr, SyntheticArmShapes) {
  const auto s = temporal_split(mini(3, 30), SplitSpec{});
  ExperimentConfig cfg;
  cfg.held_out_user = 3;
  cfg.synthetic_count = 25;
  cfg.forest.n_trees = 10;
  const ModelParams model = stub_model({1, 2});
  const auto out = tstr_authentication(cfg, s, &model);
  ASSERT_TRUE(out.available);
  EXPECT_EQ(out.arm, "synthetic");
  EXPECT_EQ(out.synthetic_count, 25u);
  EXPECT_EQ(out.negative_train_count, 80u);  // 40 reconstructions + 40 real
  cfg.negative_mode = NegativeMode::reconstructions;
  EXPECT_EQ(tstr_authentication(cfg, s, &model).negative_train_count, 40u);
  EXPECT_EQ(tstr_authentication(cfg, s, &model).report, tstr_authentication(cfg, s, &model).report);
}

TEST(Tstr, RejectsLeakyOrUntrainedModels) {
  const auto s = temporal_split(mini(3, 30), SplitSpec{});
  ExperimentConfig cfg;
  cfg.held_out_user = 2;
  cfg.synthetic_count = 5;
  const ModelParams leaky = stub_model({1, 2, 3});
  EXPECT_THROW(tstr_authentication(cfg, s, &leaky), DataError);
  ModelParams untrained = stub_model({1, 3});
  untrained.trained = false;
  EXPECT_THROW(tstr_authentication(cfg, s, &untrained), DataError);
  EXPECT_THROW(tstr_authentication(cfg, s, nullptr), UsageError);
  cfg.held_out_user = 9;
  EXPECT_THROW(tstr_authentication(cfg, s, nullptr), DataError);
}

TEST(Louo, ReportsEveryUserAndAggregates) {
  const auto ds = mini(3, 30);
  LouoConfig cfg;
  cfg.experiment.synthetic_count = 10;
  cfg.experiment.forest.n_trees = 10;
  std::set<int> asked;
  const ModelProvider provider = [&](int user, const SplitResult&, std::uint64_t) {
    asked.insert(user);
    std::vector<int> roster;
    for (int u = 1; u <= 3; ++u) {
      if (u != user) roster.push_back(u);
    }
    return stub_model(roster);
  };
  const auto r = run_louo(ds, cfg, provider);
  ASSERT_EQ(r.users.size(), 3u);
  EXPECT_EQ(asked, (std::set<int>{1, 2, 3}));
  double far = 0;
  for (const auto& u : r.users) {
    EXPECT_TRUE(u.baseline.available);
    EXPECT_TRUE(u.synthetic.available);
    far += u.baseline.report->far_at_zero;
  }
  EXPECT_EQ(r.baseline.n_users, 3u);
  EXPECT_NEAR(r.baseline.far_at_zero, far / 3.0, 1e-15);
}

TEST(Burden, UnavailableWhenAnyUserCannotEnrol) {
  const auto ds = mini(3, 30);
  LouoConfig cfg;
  cfg.experiment.synthetic_count = 0;
  cfg.experiment.forest.n_trees = 10;
  const ModelProvider never = [](int, const SplitResult&, std::uint64_t) -> ModelParams {
    throw std::logic_error("baseline-only sweep must not train");
  };
  const auto r = enrolment_burden_sweep(ds, cfg, {1, 2, 3}, never);
  ASSERT_EQ(r.cells.size(), 3u);  // baseline arm only
  EXPECT_TRUE(r.cells[0].available);
  EXPECT_TRUE(r.cells[1].available);
  EXPECT_FALSE(r.cells[2].available);  // terminal 7 has two pool gestures
  EXPECT_EQ(r.cells[1].count, 2u);
  EXPECT_EQ(r.cells[1].arm, "baseline");
  EXPECT_EQ(r.cells[1].summary.n_users, 3u);
  EXPECT_EQ(r.per_user.size(), 9u);
  EXPECT_THROW(enrolment_burden_sweep(ds, cfg, {}, never), UsageError);
  EXPECT_THROW(enrolment_burden_sweep(ds, cfg, {0}, never), UsageError);
}

TEST(Recognition, ReconstructionsVersusNonGestures) {
  const auto s = temporal_split(mini(3, 30, 12), SplitSpec{});
  ModelParams model = stub_model({1, 2, 3});
  RecognitionConfig cfg;
  cfg.per_class = 20;
  cfg.forest.n_trees = 10;
  const auto r = tstr_gesture_recognition(model, s, cfg);
  EXPECT_GE(r.auroc, 0.0);
  EXPECT_LE(r.auroc, 1.0);
  EXPECT_EQ(r, tstr_gesture_recognition(model, s, cfg));
  model.trained = false;
  EXPECT_THROW(tstr_gesture_recognition(model, s, cfg), DataError);
}

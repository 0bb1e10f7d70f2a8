#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "userboost/harness/tstr.hpp"
#include "userboost/io/svg.hpp"

namespace userboost {

inline constexpr std::string_view kOutcomeHeader =
    "user_id,arm,strategy,negative_mode,real_per_terminal,available,enrolment,synthetic,negatives_train,far_at_zero,"
    "eer_low,eer_high,auroc";

inline void write_outcome_row(std::ostream& os, const AuthOutcome& o, const ExperimentConfig& cfg) {
  os << o.user << ',' << o.arm << ',' << (o.arm == "baseline" ? "none" : std::string(to_string(cfg.strategy))) << ','
     << (o.arm == "baseline" ? "real" : std::string(to_string(cfg.negative_mode))) << ',' << o.real_per_terminal << ','
     << (o.available ? 1 : 0) << ',' << o.enrolment_count << ',' << o.synthetic_count << ',' << o.negative_train_count;
  if (o.report) {
    os << ',' << csv::format_double(o.report->far_at_zero) << ',' << csv::format_double(o.report->eer_low) << ','
       << csv::format_double(o.report->eer_high) << ',' << csv::format_double(o.report->auroc);
  } else {
    os << ",,,,";
  }
  os << '\n';
}

inline nlohmann::json to_json(const MetricSummary& s) {
  return {{"n_users", s.n_users},
          {"far_at_zero", s.far_at_zero},
          {"eer_low", s.eer_low},
          {"eer_high", s.eer_high},
          {"auroc", s.auroc}};
}

inline nlohmann::json experiment_json(const ExperimentConfig& c) {
  return {{"real_per_terminal", c.real_gestures_per_terminal},
          {"synthetic_count", c.synthetic_count},
          {"strategy", to_string(c.strategy)},
          {"negative_mode", to_string(c.negative_mode)},
          {"seed", c.seed},
          {"self_mixed_k", c.sampling.self_mixed_k},
          {"trees", c.forest.n_trees}};
}

inline void write_louo_csv(std::ostream& os, const LouoResult& r, const ExperimentConfig& cfg) {
  os << kOutcomeHeader << '\n';
  for (const auto& u : r.users) {
    write_outcome_row(os, u.baseline, cfg);
    write_outcome_row(os, u.synthetic, cfg);
  }
}

inline nlohmann::json louo_json(const LouoResult& r, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = experiment_json(cfg);
  j["aggregate"] = {{"baseline", to_json(r.baseline)}, {"synthetic", to_json(r.synthetic)}};
  auto& users = j["users"] = nlohmann::json::array();
  for (const auto& u : r.users) {
    nlohmann::json row{{"user_id", u.user}};
    for (const auto* o : {&u.baseline, &u.synthetic}) {
      row[o->arm] = o->report ? nlohmann::json{{"far_at_zero", o->report->far_at_zero},
                                               {"eer_low", o->report->eer_low},
                                               {"eer_high", o->report->eer_high},
                                               {"auroc", o->report->auroc}}
                              : nlohmann::json(nullptr);
    }
    users.push_back(row);
  }
  return j;
}

inline std::string louo_far0_svg(const LouoResult& r) {
  std::vector<std::string> cats;
  svg::Series base{"original data only", {}, {}}, syn{"with synthetic", {}, {}};
  for (const auto& u : r.users) {
    cats.push_back("user " + std::to_string(u.user));
    base.y.push_back(u.baseline.report ? u.baseline.report->far_at_zero : std::nan(""));
    syn.y.push_back(u.synthetic.report ? u.synthetic.report->far_at_zero : std::nan(""));
  }
  return svg::bar_chart("FAR@0 per held-out user", "FAR@0", cats, {base, syn});
}

inline constexpr std::string_view kBurdenHeader = "real_per_terminal,arm,available,n_users,far_at_zero,eer_low,eer_high,auroc";

inline void write_burden_csv(std::ostream& os, const BurdenResult& r) {
  os << kBurdenHeader << '\n';
  for (const auto& c : r.cells) {
    os << c.count << ',' << c.arm << ',' << (c.available ? 1 : 0) << ',' << c.summary.n_users;
    if (c.available) {
      os << ',' << csv::format_double(c.summary.far_at_zero) << ',' << csv::format_double(c.summary.eer_low) << ','
         << csv::format_double(c.summary.eer_high) << ',' << csv::format_double(c.summary.auroc);
    } else {
      os << ",,,,";
    }
    os << '\n';
  }
}

inline void write_burden_users_csv(std::ostream& os, const BurdenResult& r, const ExperimentConfig& cfg) {
  os << kOutcomeHeader << '\n';
  for (const auto& o : r.per_user) write_outcome_row(os, o, cfg);
}

inline nlohmann::json burden_json(const BurdenResult& r, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = experiment_json(cfg);
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json row{{"real_per_terminal", c.count}, {"arm", c.arm}, {"available", c.available}};
    if (c.available) row["metrics"] = to_json(c.summary);
    cells.push_back(row);
  }
  return j;
}

inline std::string burden_svg(const BurdenResult& r, const std::string& metric) {
  svg::Series with{"with synthetic", {}, {}}, without{"original data only", {}, {}};
  for (const auto& c : r.cells) {
    if (!c.available) continue;
    double v = c.summary.far_at_zero;
    if (metric == "auroc") v = c.summary.auroc;
    if (metric == "eer_low") v = c.summary.eer_low;
    if (metric == "eer_high") v = c.summary.eer_high;
    auto& s = c.arm == "synthetic" ? with : without;
    s.x.push_back(static_cast<double>(c.count));
    s.y.push_back(v);
  }
  return svg::line_chart(metric + " vs real gestures per terminal", "real gestures per terminal", metric, {with, without});
}

inline std::string far_frr_svg(const EvalReport& r, const std::string& title = "FAR and FRR against threshold") {
  svg::Series far{"FAR", {}, {}}, frr{"FRR", {}, {}};
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    if (!std::isfinite(r.thresholds[i])) continue;
    far.x.push_back(r.thresholds[i]);
    far.y.push_back(r.far[i]);
    frr.x.push_back(r.thresholds[i]);
    frr.y.push_back(r.frr[i]);
  }
  return svg::line_chart(title, "threshold T", "rate", {far, frr});
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

}  // namespace userboost

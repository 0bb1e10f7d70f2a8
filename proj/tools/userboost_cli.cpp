// userboost command-line tool.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "userboost/userboost.hpp"

namespace fs = std::filesystem;
namespace ub = userboost;
using json = nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration: flat dotted keys with typed defaults.

const json& defaults() {
  static const json d = {
      {"seed", 1},
      {"data.users", 4},
      {"data.gestures", 40},
      {"data.non_gestures", -1},
      {"data.separation", 1.0},
      {"data.noise", 0.05},
      {"data.variability", 1.0},
      {"filter.order", 4},
      {"filter.cutoff_hz", 10.0},
      {"split.train_fraction", 2.0 / 3.0},
      {"split.validation_fraction", 0.2},
      {"train.learning_rate", 1e-4},
      {"train.patience", 150},
      {"train.max_epochs", 2000},
      {"train.batch_size", 64},
      {"train.validation_fraction", 0.2},
      {"loss.beta", 1e-4},
      {"loss.alpha", 1e-2},
      {"loss.gamma", 0.1},
      {"loss.feature_mix", 0.01},
      {"loss.tau", 1.0},
      {"loss.regularizer", "kl"},
      {"loss.reconstruction", "klbmod_feature"},
      {"arch.latent_dim", 10},
      {"arch.conv_blocks", 4},
      {"arch.branch_filters", 16},
      {"arch.merge_channels", 32},
      {"arch.gru_layers", 3},
      {"arch.gru_hidden", 64},
      {"arch.mlp_hidden1", 25},
      {"arch.mlp_hidden2", 10},
      {"arch.decoder_channels", 32},
      {"arch.decoder_kernel", 5},
      {"arch.auth_dims", 5},
      {"arch.auth_hidden", 16},
      {"sampling.strategy", "adversarial"},
      {"sampling.count", 500},
      {"sampling.k", 3},
      {"experiment.real_per_terminal", 2},
      {"experiment.synthetic_count", 500},
      {"experiment.negative_mode", "reconstructions_plus_real"},
      {"experiment.grid", "2,4,9,16"},
      {"forest.trees", 100},
      {"forest.positive_weight", 4.0},
      {"recognition.classifier", "rf100"},
      {"recognition.per_class", 240},
      {"recognition.epochs", 40},
      {"recognition.learning_rate", 1e-3},
  };
  return d;
}

std::string env_name(const std::string& key) {
  std::string out = "USERBOOST_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

json coerce(const std::string& key, const std::string& text) {
  const json& def = defaults().at(key);
  try {
    std::size_t used = 0;
    if (def.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (def.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
  } catch (const std::exception&) {
    throw ub::UsageError("invalid value '" + text + "' for " + key);
  }
  return text;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out[key] = *it;
    }
  }
}

class Settings {
 public:
  void load_defaults() {
    for (auto it = defaults().begin(); it != defaults().end(); ++it) values_[it.key()] = *it;
  }

  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ub::UsageError("cannot open config " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ub::UsageError("config " + path + ": " + e.what());
    }
    if (j.contains("config") && j.contains("command")) j = j.at("config");  // a run manifest
    if (!j.is_object()) throw ub::UsageError("config " + path + " must be a JSON object");
    std::map<std::string, json> flat;
    flatten(j, "", flat);
    for (const auto& [k, v] : flat) set_json(k, v, "config " + path);
  }

  void apply_env() {
    for (auto it = defaults().begin(); it != defaults().end(); ++it) {
      if (const char* v = std::getenv(env_name(it.key()).c_str())) values_[it.key()] = coerce(it.key(), v);
    }
  }

  void set_text(const std::string& key, const std::string& text) {
    if (!defaults().contains(key)) throw ub::UsageError("unknown config key '" + key + "'");
    values_[key] = coerce(key, text);
  }

  void set_json(const std::string& key, const json& v, const std::string& where) {
    if (!defaults().contains(key)) throw ub::UsageError(where + ": unknown config key '" + key + "'");
    const json& def = defaults().at(key);
    const bool ok = (def.is_number() && v.is_number()) || (def.is_string() && v.is_string());
    if (!ok) throw ub::UsageError(where + ": wrong type for '" + key + "'");
    values_[key] = def.is_number_integer() && v.is_number_float() ? json(static_cast<long long>(v.get<double>())) : v;
  }

  template <typename T>
  T get(const std::string& key) const {
    return values_.at(key).get<T>();
  }
  std::string str(const std::string& key) const { return values_.at(key).get<std::string>(); }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, json> values_;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex(fnv1a(bytes));
}

json describe_path(const std::string& path) {
  json j{{"path", path}};
  if (fs::is_regular_file(path)) {
    j["fnv1a"] = file_hash(path);
  } else if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), path).generic_string());
    }
    std::sort(files.begin(), files.end());
    json listing = json::object();
    for (const auto& f : files) listing[f] = file_hash(fs::path(path) / f);
    j["files"] = listing;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Per-run context shared by subcommands.

struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;  // key -> text
  bool dry_run = false;
  std::string manifest_path;
  Settings settings;
  std::vector<std::string> inputs, outputs;
  json seeds = json::object();
  std::mutex mu;

  void resolve() {
    settings.load_defaults();
    if (!config_path.empty()) settings.apply_file(config_path);
    settings.apply_env();
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ub::UsageError("--set expects key=value, got '" + s + "'");
      settings.set_text(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : flag_values) settings.set_text(k, v);
  }

  std::string config_hash() const { return hex(fnv1a(command + "\n" + settings.to_json().dump())); }

  void input(const std::string& p) {
    if (!fs::exists(p)) throw ub::DataError("input not found: " + p);
    inputs.push_back(p);
  }
  void output(const std::string& p) {
    std::lock_guard lock(mu);
    outputs.push_back(p);
  }

  void write_manifest(const std::string& default_path) {
    const std::string path = manifest_path.empty() ? default_path : manifest_path;
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = settings.to_json();
    j["config_hash"] = config_hash();
    j["seeds"] = seeds;
    j["seeds"]["root"] = settings.get<std::uint64_t>("seed");
    j["inputs"] = json::array();
    for (const auto& p : inputs) j["inputs"].push_back(describe_path(p));
    std::vector<std::string> outs = outputs;
    std::sort(outs.begin(), outs.end());
    j["outputs"] = json::array();
    for (const auto& p : outs) j["outputs"].push_back(describe_path(p));
    j["versions"] = {{"userboost", kToolVersion},
                     {"model_format", ub::kModelFormatVersion},
                     {"forest_format", ub::kForestFormatVersion},
                     {"dataset_manifest", 1}};
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw ub::DataError("cannot write " + path);
    out << j.dump(2) << '\n';
  }
};

// ---------------------------------------------------------------------------
// Settings -> library structs.

ub::ArchSpec arch_from(const Settings& s) {
  ub::ArchSpec a;
  a.latent_dim = s.get<std::size_t>("arch.latent_dim");
  a.conv_blocks = s.get<std::size_t>("arch.conv_blocks");
  a.branch_filters = s.get<std::size_t>("arch.branch_filters");
  a.merge_channels = s.get<std::size_t>("arch.merge_channels");
  a.gru_layers = s.get<std::size_t>("arch.gru_layers");
  a.gru_hidden = s.get<std::size_t>("arch.gru_hidden");
  a.mlp_hidden1 = s.get<std::size_t>("arch.mlp_hidden1");
  a.mlp_hidden2 = s.get<std::size_t>("arch.mlp_hidden2");
  a.decoder_channels = s.get<std::size_t>("arch.decoder_channels");
  a.decoder_kernel = s.get<std::size_t>("arch.decoder_kernel");
  a.auth_dims = s.get<std::size_t>("arch.auth_dims");
  a.auth_hidden = s.get<std::size_t>("arch.auth_hidden");
  a.validate();
  return a;
}

ub::TrainConfig train_from(const Settings& s) {
  ub::TrainConfig c;
  c.learning_rate = s.get<double>("train.learning_rate");
  c.patience = s.get<int>("train.patience");
  c.max_epochs = s.get<int>("train.max_epochs");
  c.batch_size = s.get<int>("train.batch_size");
  c.validation_fraction = s.get<double>("train.validation_fraction");
  c.seed = s.get<std::uint64_t>("seed");
  c.validate();
  return c;
}

ub::LossWeights loss_from(const Settings& s) {
  ub::LossWeights w;
  w.beta = s.get<double>("loss.beta");
  w.alpha = s.get<double>("loss.alpha");
  w.gamma = s.get<double>("loss.gamma");
  w.feature_mix = s.get<double>("loss.feature_mix");
  w.tau = s.get<double>("loss.tau");
  w.regularizer = ub::parse_regularizer(s.str("loss.regularizer"));
  w.reconstruction = ub::parse_reconstruction_loss(s.str("loss.reconstruction"));
  w.validate();
  return w;
}

ub::SplitSpec split_from(const Settings& s) {
  ub::SplitSpec sp;
  sp.train_fraction = s.get<double>("split.train_fraction");
  sp.validation_fraction = s.get<double>("split.validation_fraction");
  sp.seed = s.get<std::uint64_t>("seed");
  sp.validate();
  return sp;
}

ub::ForestConfig forest_from(const Settings& s) {
  ub::ForestConfig f;
  const long long trees = s.get<long long>("forest.trees");
  if (trees < 1) throw ub::UsageError("forest.trees must be >= 1");
  f.n_trees = static_cast<std::size_t>(trees);
  f.positive_weight = s.get<double>("forest.positive_weight");
  if (!(f.positive_weight > 0)) throw ub::UsageError("forest.positive_weight must be > 0");
  return f;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument("bad");
      grid.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ub::UsageError("invalid grid value '" + item + "'");
    }
  }
  if (grid.empty()) throw ub::UsageError("empty grid");
  return grid;
}

ub::ExperimentConfig experiment_from(const Settings& s) {
  ub::ExperimentConfig e;
  const long long k = s.get<long long>("experiment.real_per_terminal");
  const long long n = s.get<long long>("experiment.synthetic_count");
  if (k < 1) throw ub::UsageError("experiment.real_per_terminal must be >= 1");
  if (n < 0) throw ub::UsageError("experiment.synthetic_count must be >= 0");
  e.real_gestures_per_terminal = static_cast<std::size_t>(k);
  e.synthetic_count = static_cast<std::size_t>(n);
  e.strategy = ub::parse_strategy(s.str("sampling.strategy"));
  e.negative_mode = ub::parse_negative_mode(s.str("experiment.negative_mode"));
  e.seed = s.get<std::uint64_t>("seed");
  e.sampling.self_mixed_k = s.get<std::size_t>("sampling.k");
  e.forest = forest_from(s);
  return e;
}

// Loads any dataset location: a canonical CSV, a dataset directory, or a split
// directory (all parts concatenated).
ub::Dataset load_any(const std::string& path) {
  if (ub::io::is_split_dir(path)) {
    auto s = ub::io::load_split_dir(path);
    ub::Dataset ds;
    for (auto* part : {&s.train, &s.validation, &s.test}) {
      ds.windows.insert(ds.windows.end(), part->windows.begin(), part->windows.end());
    }
    ds.stats = s.train.stats;
    return ds;
  }
  return ub::io::load_dataset_dir(path);
}

// Split directories keep their stored partition; anything else is split
// temporally with the configured spec.
ub::SplitResult load_split(const std::string& path, const Settings& s) {
  if (ub::io::is_split_dir(path)) return ub::io::load_split_dir(path);
  return ub::temporal_split(ub::io::load_dataset_dir(path), split_from(s));
}

std::vector<const ub::GestureWindow*> gestures_of(const ub::Dataset& ds, std::optional<int> user, bool exclude) {
  std::vector<const ub::GestureWindow*> out;
  for (const auto& w : ds.windows) {
    if (w.label != ub::Label::gesture) continue;
    if (user && ((w.user_id == *user) == exclude)) continue;
    out.push_back(&w);
  }
  return out;
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_json(Run& run, const std::string& path, const json& j) {
  ensure_parent(path);
  ub::write_text_file(path, j.dump(2) + "\n");
  run.output(path);
}

void write_text(Run& run, const std::string& path, const std::string& text) {
  ensure_parent(path);
  ub::write_text_file(path, text);
  run.output(path);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// ---------------------------------------------------------------------------
// Subcommands. Each returns the default manifest path.

using Handler = std::function<std::string(Run&)>;

struct Args {
  std::string data, out, raw, model, forest, input, synthetic, models, kind, dims = "0,1", metric = "far_at_zero";
  std::optional<int> user, exclude_user;
  unsigned jobs = 1;
  bool verbose = false;
};

std::string cmd_ingest(Run& run, const Args& a) {
  run.input(a.raw);
  if (run.dry_run) return "";
  std::ifstream in(a.raw);
  const auto rows = ub::read_raw_csv(in);
  const ub::Dataset ds = ub::ingest(rows);
  ub::io::save_dataset_dir(a.out, ds);
  run.output(path_in(a.out, "windows.csv"));
  run.output(path_in(a.out, ub::io::kManifestName));
  std::cout << json{{"windows", ds.windows.size()}, {"out", a.out}}.dump() << '\n';
  return path_in(a.out, "run_manifest.json");
}

ub::FilterSpec filter_from(const Settings& s) {
  ub::FilterSpec f;
  f.order = s.get<int>("filter.order");
  f.cutoff_hz = s.get<double>("filter.cutoff_hz");
  f.validate();
  return f;
}

std::string cmd_preprocess(Run& run, const Args& a) {
  run.input(a.data);
  const ub::FilterSpec spec = filter_from(run.settings);
  if (run.dry_run) return "";
  auto filter_all = [&](ub::Dataset& ds) {
    for (auto& w : ds.windows) w = ub::lowpass_filter(w, spec);
  };
  if (ub::io::is_split_dir(a.data)) {
    auto s = ub::io::load_split_dir(a.data);
    for (auto* part : {&s.train, &s.validation, &s.test}) filter_all(*part);
    auto pool = s.pool(ub::Label::gesture);
    const auto stats = ub::compute_channel_stats(pool);
    ub::check_stats(stats);
    ub::io::save_split_dir(a.out, s, stats);
    for (const char* f : {"train.csv", "validation.csv", "test.csv", ub::io::kManifestName}) run.output(path_in(a.out, f));
  } else {
    auto ds = ub::io::load_dataset_dir(a.data);
    filter_all(ds);
    ds.stats.reset();
    ub::io::save_dataset_dir(a.out, ds);
    run.output(path_in(a.out, "windows.csv"));
    run.output(path_in(a.out, ub::io::kManifestName));
  }
  return path_in(a.out, "run_manifest.json");
}

std::string cmd_synth(Run& run, const Args& a) {
  const Settings& s = run.settings;
  ub::MiniDatasetOptions o;
  o.n_users = s.get<int>("data.users");
  o.gestures_per_user = s.get<int>("data.gestures");
  o.non_gestures_per_user = s.get<int>("data.non_gestures");
  o.separation = s.get<double>("data.separation");
  o.noise_std = s.get<double>("data.noise");
  o.variability = s.get<double>("data.variability");
  o.seed = s.get<std::uint64_t>("seed");
  if (o.n_users < 2) throw ub::UsageError("--users must be >= 2");
  if (o.gestures_per_user < 1) throw ub::UsageError("--gestures must be >= 1");
  run.seeds["dataset"] = o.seed;
  if (run.dry_run) return "";
  const ub::Dataset ds = ub::generate_mini_dataset(o);
  ub::io::save_dataset_dir(a.out, ds);
  run.output(path_in(a.out, "windows.csv"));
  run.output(path_in(a.out, ub::io::kManifestName));
  std::cout << json{{"windows", ds.windows.size()}, {"users", o.n_users}, {"out", a.out}}.dump() << '\n';
  return path_in(a.out, "run_manifest.json");
}

std::string cmd_split(Run& run, const Args& a) {
  run.input(a.data);
  const ub::SplitSpec spec = split_from(run.settings);
  run.seeds["split"] = spec.seed;
  if (run.dry_run) return "";
  const ub::Dataset ds = ub::io::load_dataset_dir(a.data);
  const ub::SplitResult s = ub::temporal_split(ds, spec);
  ub::assert_disjoint(s);
  const auto pool = s.pool(ub::Label::gesture);
  const auto stats = ub::compute_channel_stats(pool);
  ub::check_stats(stats);
  ub::io::save_split_dir(a.out, s, stats,
                         {{"seed", spec.seed},
                          {"train_fraction", spec.train_fraction},
                          {"validation_fraction", spec.validation_fraction}});
  for (const char* f : {"train.csv", "validation.csv", "test.csv", ub::io::kManifestName}) run.output(path_in(a.out, f));
  std::cout << json{{"train", s.train.windows.size()}, {"validation", s.validation.windows.size()},
                    {"test", s.test.windows.size()}}
                   .dump()
            << '\n';
  return path_in(a.out, "run_manifest.json");
}

std::string cmd_train_ae(Run& run, const Args& a) {
  run.input(a.data);
  const auto cfg = train_from(run.settings);
  const auto weights = loss_from(run.settings);
  const auto arch = arch_from(run.settings);
  run.seeds["train"] = cfg.seed;
  if (run.dry_run) return "";
  std::function<void(const ub::EpochRecord&)> progress;
  if (a.verbose) {
    progress = [](const ub::EpochRecord& e) {
      std::cerr << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << " val_recon "
                << e.val_reconstruction << " val_approx_mrr " << e.val_approx_mrr << '\n';
    };
  }
  ub::TrainResult result;
  if (ub::io::is_split_dir(a.data)) {
    const auto s = ub::io::load_split_dir(a.data);
    std::vector<const ub::GestureWindow*> tr, val;
    for (const auto* w : gestures_of(s.train, a.exclude_user, true)) tr.push_back(w);
    for (const auto* w : gestures_of(s.validation, a.exclude_user, true)) val.push_back(w);
    result = ub::train_partitioned(tr, val, cfg, weights, arch, progress);
  } else {
    ub::Dataset ds = ub::io::load_dataset_dir(a.data);
    if (a.exclude_user) {
      std::erase_if(ds.windows, [&](const ub::GestureWindow& w) { return w.user_id == *a.exclude_user; });
    }
    result = ub::train(ds, cfg, weights, arch, progress);
  }
  ensure_parent(a.out);
  ub::save_model(result.params, a.out);
  run.output(a.out);
  write_json(run, a.out + ".curves.json", ub::curves_to_json(result));
  std::cout << json{{"best_epoch", result.best_epoch},
                    {"stopped_epoch", result.stopped_epoch},
                    {"best_val_loss", result.curve.at(static_cast<std::size_t>(result.best_epoch - 1)).val_loss},
                    {"out", a.out}}
                   .dump()
            << '\n';
  return a.out + ".manifest.json";
}

std::string cmd_embed(Run& run, const Args& a) {
  run.input(a.model);
  run.input(a.data);
  if (run.dry_run) return "";
  const auto model = ub::load_model(a.model);
  const ub::Dataset ds = load_any(a.data);
  std::vector<ub::Matrix<double>> norm;
  for (const auto& w : ds.windows) norm.push_back(ub::normalize_values(w.values, model.stats));
  std::vector<const ub::Matrix<double>*> ptrs;
  for (const auto& m : norm) ptrs.push_back(&m);
  const auto enc = ub::encode_all(ptrs, model);
  std::ostringstream os;
  os << "user_id,terminal_id,label,order_index,synthetic";
  for (std::size_t k = 0; k < model.arch.latent_dim; ++k) os << ",mu_" << k;
  for (std::size_t k = 0; k < model.arch.latent_dim; ++k) os << ",logvar_" << k;
  os << '\n';
  for (std::size_t i = 0; i < ds.windows.size(); ++i) {
    const auto& w = ds.windows[i];
    os << w.user_id << ',' << (w.terminal_id ? std::to_string(*w.terminal_id) : "") << ',' << ub::to_string(w.label)
       << ',' << w.order_index << ',' << (w.synthetic ? 1 : 0);
    for (double v : enc[i].mean) os << ',' << ub::csv::format_double(v);
    for (double v : enc[i].log_variance) os << ',' << ub::csv::format_double(v);
    os << '\n';
  }
  write_text(run, a.out, os.str());
  return a.out + ".manifest.json";
}

std::string cmd_generate(Run& run, const Args& a) {
  run.input(a.model);
  run.input(a.data);
  if (!a.user) throw ub::UsageError("--user is required");
  const auto strategy = ub::parse_strategy(run.settings.str("sampling.strategy"));
  const long long count = run.settings.get<long long>("sampling.count");
  if (count < 1) throw ub::UsageError("sampling.count must be >= 1");
  const auto seed = run.settings.get<std::uint64_t>("seed");
  run.seeds["sampling"] = seed;
  if (run.dry_run) return "";
  const auto model = ub::load_model(a.model);
  const auto split = load_split(a.data, run.settings);
  const auto pool = split.pool(ub::Label::gesture);
  std::vector<const ub::GestureWindow*> target;
  std::map<int, std::vector<const ub::GestureWindow*>> others;
  for (const auto* w : pool) (w->user_id == *a.user ? target : others[w->user_id]).push_back(w);
  if (target.empty()) throw ub::DataError("generate: user " + std::to_string(*a.user) + " has no gestures");
  const long long k = run.settings.get<long long>("experiment.real_per_terminal");
  if (k > 0) {
    auto enrol = ub::select_enrolment(target, static_cast<std::size_t>(k));
    if (!enrol) throw ub::DataError("generate: user lacks " + std::to_string(k) + " gestures at some terminal");
    target = *enrol;
  }
  const auto target_emb = ub::embed_user(*a.user, target, model);
  std::vector<ub::UserEmbeddings> other_emb;
  for (const auto& [id, ws] : others) other_emb.push_back(ub::embed_user(id, ws, model));
  ub::SamplingOptions opt;
  opt.self_mixed_k = run.settings.get<std::size_t>("sampling.k");
  const auto synth =
      ub::generate(strategy, model, target_emb, other_emb, static_cast<std::size_t>(count), seed, opt);
  ensure_parent(a.out);
  ub::save_canonical_csv(a.out, synth, true);
  run.output(a.out);
  std::cout << json{{"synthetic", synth.size()}, {"user", *a.user}, {"strategy", ub::to_string(strategy)}}.dump()
            << '\n';
  return a.out + ".manifest.json";
}

std::string cmd_train_auth(Run& run, const Args& a) {
  run.input(a.data);
  if (!a.synthetic.empty()) run.input(a.synthetic);
  if (!a.user) throw ub::UsageError("--user is required");
  const auto fc = forest_from(run.settings);
  const auto seed = run.settings.get<std::uint64_t>("seed");
  run.seeds["forest"] = seed;
  if (run.dry_run) return "";
  const auto split = load_split(a.data, run.settings);
  std::vector<const ub::GestureWindow*> pos, neg;
  for (const auto* w : split.pool(ub::Label::gesture)) (w->user_id == *a.user ? pos : neg).push_back(w);
  std::vector<ub::GestureWindow> synth;
  if (!a.synthetic.empty()) synth = ub::load_canonical_csv(a.synthetic);
  for (const auto& w : synth) {
    if (w.user_id == *a.user) pos.push_back(&w);
  }
  const auto xp = ub::feature_matrix(pos), xn = ub::feature_matrix(neg);
  const auto x = ub::stack_rows({&xp, &xn});
  std::vector<bool> y(x.rows(), false);
  std::fill(y.begin(), y.begin() + static_cast<long>(xp.rows()), true);
  const auto forest = ub::fit_forest(x, y, seed, fc);
  ensure_parent(a.out);
  ub::save_forest(forest, a.out);
  run.output(a.out);
  write_json(run, a.out + ".summary.json", ub::forest_summary(forest));
  std::cout << json{{"positives", xp.rows()}, {"negatives", xn.rows()}, {"out", a.out}}.dump() << '\n';
  return a.out + ".manifest.json";
}

std::string cmd_eval(Run& run, const Args& a) {
  run.input(a.forest);
  run.input(a.data);
  if (!a.user) throw ub::UsageError("--user is required");
  if (run.dry_run) return "";
  const auto forest = ub::load_forest(a.forest);
  std::vector<ub::GestureWindow> test;
  if (ub::io::is_split_dir(a.data)) {
    test = ub::io::load_split_dir(a.data).test.windows;
  } else {
    test = ub::io::load_dataset_dir(a.data).windows;
  }
  std::vector<const ub::GestureWindow*> pos, neg;
  for (const auto& w : test) {
    if (w.label == ub::Label::gesture) (w.user_id == *a.user ? pos : neg).push_back(&w);
  }
  if (pos.empty() || neg.empty()) throw ub::DataError("eval: need genuine and impostor gestures");
  const ub::ScoreSet scores{ub::predict_proba_all(forest, ub::feature_matrix(pos)),
                            ub::predict_proba_all(forest, ub::feature_matrix(neg))};
  const auto report = ub::sweep(scores);
  fs::create_directories(a.out);
  write_json(run, path_in(a.out, "report.json"), ub::report_to_json(report));
  std::ostringstream csv;
  ub::write_report_csv(csv, report);
  write_text(run, path_in(a.out, "report.csv"), csv.str());
  write_text(run, path_in(a.out, "far_frr.svg"), ub::far_frr_svg(report));
  std::cout << json{{"far_at_zero", report.far_at_zero}, {"eer_low", report.eer_low}, {"eer_high", report.eer_high},
                    {"auroc", report.auroc}}
                   .dump()
            << '\n';
  return path_in(a.out, "run_manifest.json");
}

std::string cmd_tstr_recognition(Run& run, const Args& a) {
  run.input(a.model);
  run.input(a.data);
  ub::RecognitionConfig rc;
  rc.classifier = ub::parse_classifier(run.settings.str("recognition.classifier"));
  rc.per_class = run.settings.get<std::size_t>("recognition.per_class");
  rc.seed = run.settings.get<std::uint64_t>("seed");
  rc.forest = forest_from(run.settings);
  rc.conv_gru.epochs = run.settings.get<int>("recognition.epochs");
  rc.conv_gru.learning_rate = run.settings.get<double>("recognition.learning_rate");
  rc.classifier_arch = arch_from(run.settings);
  run.seeds["recognition"] = rc.seed;
  if (run.dry_run) return "";
  const auto model = ub::load_model(a.model);
  const auto split = load_split(a.data, run.settings);
  const auto report = ub::tstr_gesture_recognition(model, split, rc);
  fs::create_directories(a.out);
  json j = ub::report_to_json(report);
  j["classifier"] = ub::to_string(rc.classifier);
  write_json(run, path_in(a.out, "report.json"), j);
  std::ostringstream csv;
  ub::write_report_csv(csv, report);
  write_text(run, path_in(a.out, "report.csv"), csv.str());
  std::cout << json{{"classifier", ub::to_string(rc.classifier)}, {"auroc", report.auroc},
                    {"eer_low", report.eer_low}, {"eer_high", report.eer_high}}
                   .dump()
            << '\n';
  return path_in(a.out, "run_manifest.json");
}

ub::LouoConfig louo_from(Run& run, const Args& a) {
  ub::LouoConfig c;
  c.experiment = experiment_from(run.settings);
  c.split = split_from(run.settings);
  c.train = train_from(run.settings);
  c.weights = loss_from(run.settings);
  c.arch = arch_from(run.settings);
  c.jobs = std::max(1u, a.jobs);
  return c;
}

// Loads user_<id>.ckpt from the models directory, training and saving it when
// missing.
ub::ModelProvider provider_for(Run& run, const ub::LouoConfig& cfg, const std::string& models_dir, bool verbose) {
  return [&run, cfg, models_dir, verbose](int user, const ub::SplitResult& split, std::uint64_t seed) {
    const std::string path = path_in(models_dir, "user_" + std::to_string(user) + ".ckpt");
    if (fs::exists(path)) {
      auto m = ub::load_model(path);
      if (verbose) std::cerr << "fold " << user << ": loaded " << path << '\n';
      return m;
    }
    const auto result = ub::train_fold_model(split, user, cfg, seed);
    fs::create_directories(models_dir);
    ub::save_model(result.params, path);
    ub::write_text_file(path + ".curves.json", ub::curves_to_json(result).dump(2) + "\n");
    run.output(path);
    run.output(path + ".curves.json");
    if (verbose) {
      std::cerr << "fold " << user << ": trained (best epoch " << result.best_epoch << ", stopped "
                << result.stopped_epoch << ")\n";
    }
    return result.params;
  };
}

std::string cmd_tstr_auth(Run& run, const Args& a) {
  run.input(a.data);
  const auto cfg = louo_from(run, a);
  run.seeds["experiment"] = cfg.experiment.seed;
  if (run.dry_run) return "";
  const ub::Dataset ds = load_any(a.data);
  const std::string models = a.models.empty() ? path_in(a.out, "models") : a.models;
  const auto result = ub::run_louo(ds, cfg, provider_for(run, cfg, models, a.verbose));
  fs::create_directories(a.out);
  std::ostringstream csv;
  ub::write_louo_csv(csv, result, cfg.experiment);
  write_text(run, path_in(a.out, "results.csv"), csv.str());
  write_json(run, path_in(a.out, "aggregate.json"), ub::louo_json(result, cfg.experiment));
  write_text(run, path_in(a.out, "far0_per_user.svg"), ub::louo_far0_svg(result));
  std::cout << json{{"baseline", ub::to_json(result.baseline)}, {"synthetic", ub::to_json(result.synthetic)}}.dump()
            << '\n';
  return path_in(a.out, "run_manifest.json");
}

std::string cmd_burden(Run& run, const Args& a) {
  run.input(a.data);
  const auto cfg = louo_from(run, a);
  const auto grid = parse_grid(run.settings.str("experiment.grid"));
  run.seeds["experiment"] = cfg.experiment.seed;
  if (run.dry_run) return "";
  const ub::Dataset ds = load_any(a.data);
  const std::string models = a.models.empty() ? path_in(a.out, "models") : a.models;
  const auto result = ub::enrolment_burden_sweep(ds, cfg, grid, provider_for(run, cfg, models, a.verbose));
  fs::create_directories(a.out);
  std::ostringstream cells, users;
  ub::write_burden_csv(cells, result);
  ub::write_burden_users_csv(users, result, cfg.experiment);
  write_text(run, path_in(a.out, "results.csv"), cells.str());
  write_text(run, path_in(a.out, "users.csv"), users.str());
  write_json(run, path_in(a.out, "aggregate.json"), ub::burden_json(result, cfg.experiment));
  write_text(run, path_in(a.out, "far_at_zero.svg"), ub::burden_svg(result, "far_at_zero"));
  write_text(run, path_in(a.out, "auroc.svg"), ub::burden_svg(result, "auroc"));
  std::cout << ub::burden_json(result, cfg.experiment).at("cells").dump() << '\n';
  return path_in(a.out, "run_manifest.json");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ub::DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ub::DataError(path + ": " + e.what());
  }
}

std::string cmd_plot(Run& run, const Args& a) {
  run.input(a.input);
  static const std::set<std::string> kinds = {"far-frr", "far0-bars", "burden", "embedding", "curves"};
  if (!kinds.count(a.kind)) throw ub::UsageError("--kind must be one of far-frr, far0-bars, burden, embedding, curves");
  if (run.dry_run) return "";
  std::string svg;
  if (a.kind == "far-frr") {
    svg = ub::far_frr_svg(ub::report_from_json(read_json_file(a.input)));
  } else if (a.kind == "far0-bars") {
    const json j = read_json_file(a.input);
    std::vector<std::string> cats;
    ub::svg::Series base{"original data only", {}, {}}, syn{"with synthetic", {}, {}};
    for (const auto& u : j.at("users")) {
      cats.push_back("user " + std::to_string(u.at("user_id").get<int>()));
      auto value = [](const json& arm) { return arm.is_null() ? std::nan("") : arm.at("far_at_zero").get<double>(); };
      base.y.push_back(value(u.at("baseline")));
      syn.y.push_back(value(u.at("synthetic")));
    }
    svg = ub::svg::bar_chart("FAR@0 per held-out user", "FAR@0", cats, {base, syn});
  } else if (a.kind == "burden") {
    const json j = read_json_file(a.input);
    ub::svg::Series with{"with synthetic", {}, {}}, without{"original data only", {}, {}};
    for (const auto& c : j.at("cells")) {
      if (!c.at("available").get<bool>()) continue;
      auto& s = c.at("arm").get<std::string>() == "synthetic" ? with : without;
      s.x.push_back(c.at("real_per_terminal").get<double>());
      s.y.push_back(c.at("metrics").at(a.metric).get<double>());
    }
    svg = ub::svg::line_chart(a.metric + " vs real gestures per terminal", "real gestures per terminal", a.metric,
                              {with, without});
  } else if (a.kind == "embedding") {
    const auto dims = parse_grid([&] {
      std::string d = a.dims;
      std::string shifted;
      std::stringstream ss(d);
      std::string item;
      while (std::getline(ss, item, ',')) shifted += (shifted.empty() ? "" : ",") + std::to_string(std::stoll(item) + 1);
      return shifted;
    }());
    if (dims.size() != 2) throw ub::UsageError("--dims expects two latent indices, e.g. 0,1");
    std::ifstream in(a.input);
    std::string line;
    if (!std::getline(in, line)) throw ub::DataError(a.input + ": empty");
    const auto header = ub::csv::split(line);
    auto column = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
      }
      throw ub::DataError(a.input + ": missing column " + name);
    };
    const std::size_t cx = column("mu_" + std::to_string(dims[0] - 1)), cy = column("mu_" + std::to_string(dims[1] - 1));
    std::map<std::string, ub::svg::Series> groups;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      line = ub::csv::strip_cr(line);
      if (line.empty()) continue;
      const auto f = ub::csv::split(line);
      if (f.size() != header.size()) throw ub::DataError(a.input + ": ragged row " + std::to_string(line_no));
      const std::string key = "user " + std::string(f[0]) + (f[2] == "gesture" ? "" : " (" + std::string(f[2]) + ")") +
                              (f[4] == "1" ? " synthetic" : "");
      auto& g = groups[key];
      g.name = key;
      g.x.push_back(ub::csv::to_double(f[cx], line_no));
      g.y.push_back(ub::csv::to_double(f[cy], line_no));
    }
    std::vector<ub::svg::Series> series;
    for (auto& [k, g] : groups) series.push_back(std::move(g));
    svg = ub::svg::scatter("latent embedding", "mu_" + std::to_string(dims[0] - 1), "mu_" + std::to_string(dims[1] - 1),
                           series);
  } else {
    const auto curves = ub::curves_from_json(read_json_file(a.input));
    ub::svg::Series tr{"train loss", {}, {}}, val{"validation loss", {}, {}};
    for (const auto& e : curves) {
      tr.x.push_back(e.epoch);
      tr.y.push_back(e.train_loss);
      val.x.push_back(e.epoch);
      val.y.push_back(e.val_loss);
    }
    svg = ub::svg::line_chart("training curves", "epoch", "loss", {tr, val}, false);
  }
  write_text(run, a.out, svg);
  return a.out + ".manifest.json";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"userboost: synthetic gesture generation and enrolment-burden experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Run run;
  Args args;
  for (int i = 1; i < argc; ++i) run.argv.emplace_back(argv[i]);

  std::vector<std::pair<CLI::App*, std::function<std::string(Run&, const Args&)>>> commands;
  auto add = [&](const std::string& name, const std::string& help, auto handler) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", run.config_path, "JSON config file (or a run manifest to replay)");
    sub->add_option("--set", run.sets, "Override a config key, key=value (repeatable)");
    sub->add_flag("--dry-run", run.dry_run, "Validate the configuration without writing anything");
    sub->add_option("--manifest", run.manifest_path, "Where to write the run manifest");
    sub->add_option("--seed", run.flag_values["seed"], "Root random seed")->default_str("");
    commands.emplace_back(sub, handler);
    return sub;
  };
  // Flag bound to a config key; only applied when given.
  auto key_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&run, key](const std::string& v) { run.flag_values[key] = v; }, help);
  };

  auto* ingest = add("ingest", "Window raw sensor rows into canonical gestures", cmd_ingest);
  ingest->add_option("--raw", args.raw, "Raw CSV (user_id,terminal_id,label,gesture_id,t,sensor,x,y,z)")->required();
  ingest->add_option("--out", args.out, "Output dataset directory")->required();

  auto* pre = add("preprocess", "Low-pass filter every window", cmd_preprocess);
  pre->add_option("--data", args.data, "Dataset or split directory")->required();
  pre->add_option("--out", args.out, "Output directory")->required();
  key_flag(pre, "--order", "filter.order", "Butterworth order");
  key_flag(pre, "--cutoff", "filter.cutoff_hz", "Cut-off frequency in Hz");

  auto* synth = add("synth-dataset", "Generate the parametric mini-dataset", cmd_synth);
  synth->add_option("--out", args.out, "Output dataset directory")->required();
  key_flag(synth, "--users", "data.users", "Number of users");
  key_flag(synth, "--gestures", "data.gestures", "Gestures per user");
  key_flag(synth, "--non-gestures", "data.non_gestures", "Non-gesture windows per user (-1: half)");
  key_flag(synth, "--separation", "data.separation", "Scale of the user-specific signal");
  key_flag(synth, "--noise", "data.noise", "I.i.d. noise level");
  key_flag(synth, "--variability", "data.variability", "Scale of per-gesture variation");

  auto* split = add("split", "Temporal train/validation/test split", cmd_split);
  split->add_option("--data", args.data, "Dataset directory")->required();
  split->add_option("--out", args.out, "Output split directory")->required();
  key_flag(split, "--train-fraction", "split.train_fraction", "Chronological train share");
  key_flag(split, "--validation-fraction", "split.validation_fraction", "Validation share of the train pool");

  auto add_train_flags = [&](CLI::App* sub) {
    key_flag(sub, "--beta", "loss.beta", "Regularizer weight");
    key_flag(sub, "--alpha", "loss.alpha", "Latent authentication weight");
    key_flag(sub, "--gamma", "loss.gamma", "Soft-DTW smoothing");
    key_flag(sub, "--regularizer", "loss.regularizer", "kl or wae");
    key_flag(sub, "--reconstruction", "loss.reconstruction",
             "mse, soft_dtw, klb_mod, mse_feature or klbmod_feature");
    key_flag(sub, "--lr", "train.learning_rate", "Adam learning rate");
    key_flag(sub, "--max-epochs", "train.max_epochs", "Epoch cap");
    key_flag(sub, "--patience", "train.patience", "Early-stopping patience");
    key_flag(sub, "--batch-size", "train.batch_size", "Mini-batch size");
  };

  auto* train = add("train-ae", "Train the regularised autoencoder", cmd_train_ae);
  train->add_option("--data", args.data, "Dataset or split directory")->required();
  train->add_option("--out", args.out, "Checkpoint path")->required();
  train->add_option("--exclude-user", args.exclude_user, "Leave this user out");
  train->add_flag("--verbose", args.verbose, "Print per-epoch progress");
  add_train_flags(train);

  auto* embed = add("embed", "Export latent embeddings as CSV", cmd_embed);
  embed->add_option("--model", args.model, "Checkpoint")->required();
  embed->add_option("--data", args.data, "Dataset, split directory or canonical CSV")->required();
  embed->add_option("--out", args.out, "Output CSV")->required();

  auto* gen = add("generate", "Generate synthetic gestures for one user", cmd_generate);
  gen->add_option("--model", args.model, "Checkpoint")->required();
  gen->add_option("--data", args.data, "Dataset or split directory")->required();
  gen->add_option("--user", args.user, "Target user id")->required();
  gen->add_option("--out", args.out, "Output canonical CSV")->required();
  key_flag(gen, "--strategy", "sampling.strategy", "neighbourhood, self_mixed, adversarial or same_user");
  key_flag(gen, "--count", "sampling.count", "Number of synthetic gestures");
  key_flag(gen, "--k", "sampling.k", "Self-mixed: embeddings per combination");
  key_flag(gen, "--real-per-terminal", "experiment.real_per_terminal", "Enrolment gestures per terminal (0: all)");

  auto* tauth = add("train-auth", "Fit the RF100 authenticator for one user", cmd_train_auth);
  tauth->add_option("--data", args.data, "Dataset or split directory")->required();
  tauth->add_option("--user", args.user, "Genuine user id")->required();
  tauth->add_option("--synthetic", args.synthetic, "Synthetic gestures CSV added to the positive class");
  tauth->add_option("--out", args.out, "Forest checkpoint path")->required();
  key_flag(tauth, "--trees", "forest.trees", "Number of trees");

  auto* eval = add("eval", "Evaluate a forest on test gestures", cmd_eval);
  eval->add_option("--forest", args.forest, "Forest checkpoint")->required();
  eval->add_option("--data", args.data, "Split directory (test part) or dataset")->required();
  eval->add_option("--user", args.user, "Genuine user id")->required();
  eval->add_option("--out", args.out, "Output directory")->required();

  auto* rec = add("tstr-recognition", "Train-synthetic test-real gesture recognition", cmd_tstr_recognition);
  rec->add_option("--model", args.model, "Checkpoint")->required();
  rec->add_option("--data", args.data, "Dataset or split directory")->required();
  rec->add_option("--out", args.out, "Output directory")->required();
  key_flag(rec, "--classifier", "recognition.classifier", "rf100 or conv_gru");

  auto add_experiment_flags = [&](CLI::App* sub) {
    sub->add_option("--data", args.data, "Dataset directory")->required();
    sub->add_option("--out", args.out, "Output directory")->required();
    sub->add_option("--models", args.models, "Directory of per-fold checkpoints user_<id>.ckpt");
    sub->add_option("--jobs", args.jobs, "Parallel folds")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", args.verbose, "Print fold progress");
    key_flag(sub, "--strategy", "sampling.strategy", "Sampling strategy");
    key_flag(sub, "--synthetic-count", "experiment.synthetic_count", "Synthetic gestures per user");
    key_flag(sub, "--real-per-terminal", "experiment.real_per_terminal", "Enrolment gestures per terminal");
    key_flag(sub, "--negative-mode", "experiment.negative_mode", "reconstructions or reconstructions_plus_real");
    add_train_flags(sub);
  };
  auto* tstr = add("tstr-auth", "Leave-one-user-out TSTR authentication", cmd_tstr_auth);
  add_experiment_flags(tstr);
  auto* burden = add("burden-sweep", "Enrolment-burden sweep with and without synthetic data", cmd_burden);
  add_experiment_flags(burden);
  key_flag(burden, "--grid", "experiment.grid", "Comma-separated real gestures per terminal");

  auto* plot = add("plot", "Render an SVG from an emitted artifact", cmd_plot);
  plot->add_option("--kind", args.kind, "far-frr, far0-bars, burden, embedding or curves")->required();
  plot->add_option("--input", args.input, "Input artifact")->required();
  plot->add_option("--out", args.out, "Output SVG")->required();
  plot->add_option("--dims", args.dims, "Embedding: two latent indices");
  plot->add_option("--metric", args.metric, "Burden: far_at_zero, eer_low, eer_high or auroc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // --seed is registered on every subcommand; drop it when not given.
  if (run.flag_values["seed"].empty()) run.flag_values.erase("seed");

  for (auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    run.command = sub->get_name();
    try {
      run.resolve();
      const std::string manifest = handler(run, args);
      if (run.dry_run) {
        std::cout << json{{"command", run.command}, {"dry_run", true}, {"config", run.settings.to_json()},
                          {"config_hash", run.config_hash()}}
                         .dump(2)
                  << '\n';
      } else {
        run.write_manifest(manifest);
      }
      return 0;
    } catch (const ub::UsageError& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return 1;
    } catch (const ub::DataError& e) {
      std::cerr << "data error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}

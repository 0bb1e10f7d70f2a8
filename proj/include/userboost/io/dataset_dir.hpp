#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "userboost/data/csv_io.hpp"
#include "userboost/data/manifest.hpp"
#include "userboost/harness/split.hpp"

namespace userboost::io {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";

// A dataset directory holds manifest.json and the canonical CSV files it
// lists. Split directories also name their train/validation/test files under
// "split".
inline std::string dataset_manifest_path(const std::string& dir) { return (fs::path(dir) / kManifestName).string(); }

inline void save_dataset_dir(const std::string& dir, const Dataset& ds, const std::string& file = "windows.csv") {
  fs::create_directories(dir);
  save_canonical_csv((fs::path(dir) / file).string(), ds.windows);
  DatasetManifest m;
  m.files = {file};
  m.stats = ds.stats;
  save_manifest(dataset_manifest_path(dir), m);
}

inline Dataset load_dataset_dir(const std::string& dir) {
  const fs::path p(dir);
  if (fs::is_regular_file(p)) {
    Dataset ds;
    ds.windows = load_canonical_csv(p.string());
    return ds;
  }
  const auto m = load_manifest(dataset_manifest_path(dir));
  Dataset ds;
  ds.stats = m.stats;
  for (const auto& f : m.files) {
    auto part = load_canonical_csv((p / f).string());
    ds.windows.insert(ds.windows.end(), part.begin(), part.end());
  }
  return ds;
}

inline bool is_split_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) return false;
  const auto m = load_manifest(dataset_manifest_path(dir));
  return m.split.contains("train") && m.split.contains("test");
}

inline void save_split_dir(const std::string& dir, const SplitResult& s, const ChannelStats& stats,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  fs::create_directories(dir);
  save_canonical_csv((fs::path(dir) / "train.csv").string(), s.train.windows);
  save_canonical_csv((fs::path(dir) / "validation.csv").string(), s.validation.windows);
  save_canonical_csv((fs::path(dir) / "test.csv").string(), s.test.windows);
  DatasetManifest m;
  m.files = {"train.csv", "validation.csv", "test.csv"};
  m.stats = stats;
  m.split = extra;
  m.split["train"] = "train.csv";
  m.split["validation"] = "validation.csv";
  m.split["test"] = "test.csv";
  save_manifest(dataset_manifest_path(dir), m);
}

inline SplitResult load_split_dir(const std::string& dir) {
  const auto m = load_manifest(dataset_manifest_path(dir));
  if (!m.split.contains("train") || !m.split.contains("test")) throw DataError(dir + " is not a split directory");
  SplitResult s;
  const fs::path p(dir);
  s.train.windows = load_canonical_csv((p / m.split.at("train").get<std::string>()).string());
  if (m.split.contains("validation")) {
    s.validation.windows = load_canonical_csv((p / m.split.at("validation").get<std::string>()).string());
  }
  s.test.windows = load_canonical_csv((p / m.split.at("test").get<std::string>()).string());
  s.train.stats = s.validation.stats = s.test.stats = m.stats;
  assert_disjoint(s);
  return s;
}

}  // namespace userboost::io

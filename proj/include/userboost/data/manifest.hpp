#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "userboost/data/gesture.hpp"

namespace userboost {

// Dataset manifest: canonical CSV paths (relative to the manifest), channel
// statistics and split boundaries.
struct DatasetManifest {
  int version = 1;
  std::vector<std::string> files;
  std::optional<ChannelStats> stats;
  nlohmann::json split = nlohmann::json::object();
};

inline nlohmann::json to_json(const ChannelStats& s) {
  return {{"channel_means", s.mean}, {"channel_stds", s.stddev}};
}

inline ChannelStats channel_stats_from_json(const nlohmann::json& j) {
  ChannelStats s;
  s.mean = j.at("channel_means").get<std::array<double, kChannels>>();
  s.stddev = j.at("channel_stds").get<std::array<double, kChannels>>();
  return s;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["files"] = m.files;
  if (m.stats) {
    j["channel_means"] = m.stats->mean;
    j["channel_stds"] = m.stats->stddev;
  }
  j["split"] = m.split;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.version = j.value("version", 1);
  m.files = j.at("files").get<std::vector<std::string>>();
  if (j.contains("channel_means")) m.stats = channel_stats_from_json(j);
  if (j.contains("split")) m.split = j.at("split");
  return m;
}

inline void save_manifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json(m).dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace userboost

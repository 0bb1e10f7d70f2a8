#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "userboost/genmodel/model.hpp"
#include "userboost/genmodel/trainer.hpp"
#include "userboost/io/binary.hpp"

namespace userboost {

inline constexpr char kModelMagic[4] = {'U', 'B', 'A', 'E'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

inline void write_arch(io::BinaryWriter& w, const ArchSpec& a) {
  for (std::size_t v : {a.window_length, a.channels, a.latent_dim, a.conv_blocks, a.branch_filters, a.merge_channels,
                        a.gru_layers, a.gru_hidden, a.mlp_hidden1, a.mlp_hidden2, a.decoder_channels,
                        a.decoder_kernel, a.auth_dims, a.auth_hidden, a.n_users}) {
    w.u64(v);
  }
}

inline ArchSpec read_arch(io::BinaryReader& r) {
  ArchSpec a;
  for (std::size_t* v : {&a.window_length, &a.channels, &a.latent_dim, &a.conv_blocks, &a.branch_filters,
                         &a.merge_channels, &a.gru_layers, &a.gru_hidden, &a.mlp_hidden1, &a.mlp_hidden2,
                         &a.decoder_channels, &a.decoder_kernel, &a.auth_dims, &a.auth_hidden, &a.n_users}) {
    *v = static_cast<std::size_t>(r.u64());
  }
  return a;
}

inline std::vector<unsigned char> serialize_model(const ModelParams& m) {
  io::BinaryWriter w;
  w.bytes(kModelMagic, 4);
  w.u32(kModelFormatVersion);
  write_arch(w, m.arch);
  w.u64(m.seed);
  w.u8(m.trained ? 1 : 0);
  const LossWeights& lw = m.loss_weights;
  for (double v : {lw.beta, lw.alpha, lw.gamma, lw.feature_mix, lw.tau}) w.f64(v);
  w.u8(static_cast<std::uint8_t>(lw.regularizer));
  w.u8(static_cast<std::uint8_t>(lw.reconstruction));
  for (double v : m.stats.mean) w.f64(v);
  for (double v : m.stats.stddev) w.f64(v);
  w.u64(m.roster.size());
  for (int u : m.roster) w.i32(u);
  w.u64(m.weights.size());
  for (float v : m.weights) w.f32(v);
  return w.buffer();
}

inline ModelParams deserialize_model(std::vector<unsigned char> bytes, const std::string& what = "model") {
  io::BinaryReader r(std::move(bytes), what);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kModelMagic, 4)) r.fail("not a model checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  ModelParams m;
  m.arch = read_arch(r);
  m.seed = r.u64();
  m.trained = r.u8() != 0;
  LossWeights& lw = m.loss_weights;
  for (double* v : {&lw.beta, &lw.alpha, &lw.gamma, &lw.feature_mix, &lw.tau}) *v = r.f64();
  const auto reg = r.u8(), rec = r.u8();
  if (reg > 1 || rec > 4) r.fail("bad loss descriptor");
  lw.regularizer = static_cast<Regularizer>(reg);
  lw.reconstruction = static_cast<ReconstructionLoss>(rec);
  for (double& v : m.stats.mean) v = r.f64();
  for (double& v : m.stats.stddev) v = r.f64();
  m.roster.resize(r.count(4));
  for (int& u : m.roster) u = r.i32();
  m.weights.resize(r.count(4));
  for (float& v : m.weights) v = r.f32();
  if (!r.at_end()) r.fail("trailing bytes");
  try {
    m.arch.validate();
  } catch (const UsageError& e) {
    r.fail(e.what());
  }
  if (m.weights.size() != VaeNetwork<float>(m.arch).parameter_count()) r.fail("weight count does not match architecture");
  if (m.roster.size() != m.arch.n_users) r.fail("roster size does not match architecture");
  return m;
}

inline void save_model(const ModelParams& m, const std::string& path) {
  io::BinaryWriter w;
  const auto bytes = serialize_model(m);
  w.bytes(bytes.data(), bytes.size());
  w.save(path);
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(std::move(buf), path);
}

inline nlohmann::json curves_to_json(const TrainResult& r) {
  nlohmann::json j;
  j["best_epoch"] = r.best_epoch;
  j["stopped_epoch"] = r.stopped_epoch;
  j["seed"] = r.params.seed;
  auto& rows = j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.curve) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"val_reconstruction", e.val_reconstruction},
                    {"val_regularizer", e.val_regularizer},
                    {"val_auth", e.val_auth},
                    {"val_approx_mrr", e.val_approx_mrr},
                    {"val_hard_mrr", e.val_hard_mrr}});
  }
  return j;
}

inline std::vector<EpochRecord> curves_from_json(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at("epoch").get<int>();
    r.train_loss = e.at("train_loss").get<double>();
    r.val_loss = e.at("val_loss").get<double>();
    r.val_reconstruction = e.at("val_reconstruction").get<double>();
    r.val_regularizer = e.at("val_regularizer").get<double>();
    r.val_auth = e.at("val_auth").get<double>();
    r.val_approx_mrr = e.at("val_approx_mrr").get<double>();
    r.val_hard_mrr = e.at("val_hard_mrr").get<double>();
    out.push_back(r);
  }
  return out;
}

}  // namespace userboost

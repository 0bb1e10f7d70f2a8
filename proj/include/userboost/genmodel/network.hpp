#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "userboost/genmodel/nn.hpp"

namespace userboost {

// Architecture descriptor. Defaults: four multi-scale blocks (kernels 3/5/7,
// 16 filters each, merged to 32 by a width-1 convolution, stride 2),
// three GRUs of 64 units, a 25-10 ReLU perceptron and a 10-d latent space.
struct ArchSpec {
  std::size_t window_length = 200;
  std::size_t channels = 6;
  std::size_t latent_dim = 10;
  std::size_t conv_blocks = 4;
  std::size_t branch_filters = 16;
  std::size_t merge_channels = 32;
  std::size_t gru_layers = 3;
  std::size_t gru_hidden = 64;
  std::size_t mlp_hidden1 = 25;
  std::size_t mlp_hidden2 = 10;
  std::size_t decoder_channels = 32;
  std::size_t decoder_kernel = 5;
  std::size_t auth_dims = 5;
  std::size_t auth_hidden = 16;
  std::size_t n_users = 0;  // auth-head outputs; 0 disables the head

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;

  // Temporal length after the strided blocks (200 -> 100 -> 50 -> 25 -> 13).
  std::size_t encoded_length() const {
    std::size_t len = window_length;
    for (std::size_t b = 0; b < conv_blocks; ++b) len = (len + 1) / 2;
    return len;
  }

  std::size_t decoded_length() const { return encoded_length() << conv_blocks; }

  void validate() const {
    if (window_length == 0 || channels == 0 || latent_dim == 0 || conv_blocks == 0 ||
        gru_layers == 0 || gru_hidden == 0 || branch_filters == 0 || merge_channels == 0 ||
        mlp_hidden1 == 0 || mlp_hidden2 == 0 || decoder_channels == 0 || decoder_kernel == 0) {
      throw UsageError("ArchSpec: all sizes must be positive");
    }
    if (decoded_length() < window_length) throw UsageError("ArchSpec: decoder too short");
    if (n_users > 0 && (auth_dims == 0 || auth_dims > latent_dim || auth_hidden == 0)) {
      throw UsageError("ArchSpec: invalid auth head");
    }
  }
};

inline constexpr std::array<std::size_t, 3> kBranchKernels = {3, 5, 7};

// Conv+GRU encoder with a linear head of `head_out` outputs.
template <typename T>
class Encoder {
 public:
  struct BlockCache {
    std::array<typename nn::Conv1d<T>::Cache, 3> branch;
    typename nn::Conv1d<T>::Cache merge;
    nn::Mat<T> concat, merged;  // post-ReLU
  };
  struct Cache {
    std::size_t batch = 0;
    std::vector<BlockCache> blocks;
    std::vector<typename nn::Gru<T>::Cache> grus;
    std::vector<nn::Mat<T>> gru_out;
    nn::Mat<T> last, h1, h2;
  };

  Encoder() = default;
  Encoder(nn::ParamLayout& layout, const ArchSpec& arch, std::size_t head_out) : arch_(arch) {
    std::size_t ch = arch.channels;
    for (std::size_t b = 0; b < arch.conv_blocks; ++b) {
      Block block;
      for (std::size_t k = 0; k < 3; ++k) {
        block.branch[k] = nn::Conv1d<T>(layout, ch, arch.branch_filters, kBranchKernels[k], 2);
      }
      block.merge = nn::Conv1d<T>(layout, 3 * arch.branch_filters, arch.merge_channels, 1, 1);
      blocks_.push_back(block);
      ch = arch.merge_channels;
    }
    for (std::size_t l = 0; l < arch.gru_layers; ++l) {
      grus_.emplace_back(layout, l == 0 ? ch : arch.gru_hidden, arch.gru_hidden);
    }
    d1_ = nn::Dense<T>(layout, arch.gru_hidden, arch.mlp_hidden1);
    d2_ = nn::Dense<T>(layout, arch.mlp_hidden1, arch.mlp_hidden2);
    d3_ = nn::Dense<T>(layout, arch.mlp_hidden2, head_out);
  }

  // x: (batch * window_length) x channels.
  nn::Mat<T> forward(const T* p, const nn::Mat<T>& x, std::size_t batch, Cache& cache) const {
    cache.batch = batch;
    cache.blocks.resize(blocks_.size());
    const nn::Mat<T>* in = &x;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const Block& block = blocks_[b];
      BlockCache& bc = cache.blocks[b];
      const std::size_t f = arch_.branch_filters;
      for (std::size_t k = 0; k < 3; ++k) {
        nn::Mat<T> y = block.branch[k].forward(p, *in, batch, bc.branch[k]);
        if (k == 0) bc.concat.resize(y.rows(), static_cast<Eigen::Index>(3 * f));
        bc.concat.middleCols(static_cast<Eigen::Index>(k * f), static_cast<Eigen::Index>(f)) = y;
      }
      nn::relu_inplace(bc.concat);
      bc.merged = block.merge.forward(p, bc.concat, batch, bc.merge);
      nn::relu_inplace(bc.merged);
      in = &bc.merged;
    }
    cache.grus.resize(grus_.size());
    cache.gru_out.resize(grus_.size());
    for (std::size_t l = 0; l < grus_.size(); ++l) {
      cache.gru_out[l] = grus_[l].forward(p, *in, batch, cache.grus[l]);
      in = &cache.gru_out[l];
    }
    cache.last = nn::last_step(*in, batch);
    cache.h1 = d1_.forward(p, cache.last);
    nn::relu_inplace(cache.h1);
    cache.h2 = d2_.forward(p, cache.h1);
    nn::relu_inplace(cache.h2);
    return d3_.forward(p, cache.h2);
  }

  void backward(const T* p, T* g, const Cache& cache, const nn::Mat<T>& d_out) const {
    nn::Mat<T> d = d3_.backward(p, g, cache.h2, d_out);
    nn::relu_backward(cache.h2, d);
    d = d2_.backward(p, g, cache.h1, d);
    nn::relu_backward(cache.h1, d);
    d = d1_.backward(p, g, cache.last, d);
    d = nn::scatter_last_step(d, cache.batch, arch_.encoded_length());
    for (std::size_t l = grus_.size(); l-- > 0;) d = grus_[l].backward(p, g, cache.grus[l], d);
    const std::size_t f = arch_.branch_filters;
    for (std::size_t b = blocks_.size(); b-- > 0;) {
      const Block& block = blocks_[b];
      const BlockCache& bc = cache.blocks[b];
      nn::relu_backward(bc.merged, d);
      nn::Mat<T> dcat = block.merge.backward(p, g, bc.merge, d);
      nn::relu_backward(bc.concat, dcat);
      nn::Mat<T> din;
      for (std::size_t k = 0; k < 3; ++k) {
        const nn::Mat<T> dk = dcat.middleCols(static_cast<Eigen::Index>(k * f), static_cast<Eigen::Index>(f));
        nn::Mat<T> di = block.branch[k].backward(p, g, bc.branch[k], dk);
        if (k == 0) {
          din = std::move(di);
        } else {
          din += di;
        }
      }
      d = std::move(din);
    }
  }

 private:
  struct Block {
    std::array<nn::Conv1d<T>, 3> branch;
    nn::Conv1d<T> merge;
  };
  ArchSpec arch_;
  std::vector<Block> blocks_;
  std::vector<nn::Gru<T>> grus_;
  nn::Dense<T> d1_, d2_, d3_;
};

// Mirror of the encoder: stacked GRUs unroll the latent vector over the
// encoded length, then x2 upsampling + convolution stages restore the time
// axis, a width-1 convolution maps to the output channels and the result is
// centre-cropped to window_length.
template <typename T>
class Decoder {
 public:
  struct Cache {
    std::size_t batch = 0;
    nn::Mat<T> repeated;
    std::vector<typename nn::Gru<T>::Cache> grus;
    std::vector<nn::Mat<T>> gru_out;
    std::vector<typename nn::Conv1d<T>::Cache> convs;
    std::vector<nn::Mat<T>> conv_out;  // post-ReLU
    typename nn::Conv1d<T>::Cache head;
  };

  Decoder() = default;
  Decoder(nn::ParamLayout& layout, const ArchSpec& arch) : arch_(arch) {
    for (std::size_t l = 0; l < arch.gru_layers; ++l) {
      grus_.emplace_back(layout, l == 0 ? arch.latent_dim : arch.gru_hidden, arch.gru_hidden);
    }
    std::size_t ch = arch.gru_hidden;
    for (std::size_t s = 0; s < arch.conv_blocks; ++s) {
      convs_.emplace_back(layout, ch, arch.decoder_channels, arch.decoder_kernel, 1);
      ch = arch.decoder_channels;
    }
    head_ = nn::Conv1d<T>(layout, ch, arch.channels, 1, 1);
  }

  std::size_t crop_offset() const { return (arch_.decoded_length() - arch_.window_length) / 2; }

  // z: batch x latent_dim. Returns (batch * window_length) x channels.
  nn::Mat<T> forward(const T* p, const nn::Mat<T>& z, Cache& cache) const {
    const std::size_t batch = static_cast<std::size_t>(z.rows());
    const std::size_t len = arch_.encoded_length();
    cache.batch = batch;
    cache.repeated.resize(static_cast<Eigen::Index>(batch * len), z.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < len; ++t) cache.repeated.row(static_cast<Eigen::Index>(b * len + t)) = z.row(static_cast<Eigen::Index>(b));
    }
    cache.grus.resize(grus_.size());
    cache.gru_out.resize(grus_.size());
    const nn::Mat<T>* in = &cache.repeated;
    for (std::size_t l = 0; l < grus_.size(); ++l) {
      cache.gru_out[l] = grus_[l].forward(p, *in, batch, cache.grus[l]);
      in = &cache.gru_out[l];
    }
    cache.convs.resize(convs_.size());
    cache.conv_out.resize(convs_.size());
    for (std::size_t s = 0; s < convs_.size(); ++s) {
      const nn::Mat<T> up = nn::upsample2(*in, batch);
      cache.conv_out[s] = convs_[s].forward(p, up, batch, cache.convs[s]);
      nn::relu_inplace(cache.conv_out[s]);
      in = &cache.conv_out[s];
    }
    const nn::Mat<T> full = head_.forward(p, *in, batch, cache.head);
    const std::size_t dlen = arch_.decoded_length(), wlen = arch_.window_length, off = crop_offset();
    nn::Mat<T> out(static_cast<Eigen::Index>(batch * wlen), full.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      out.middleRows(static_cast<Eigen::Index>(b * wlen), static_cast<Eigen::Index>(wlen)) =
          full.middleRows(static_cast<Eigen::Index>(b * dlen + off), static_cast<Eigen::Index>(wlen));
    }
    return out;
  }

  // Returns the gradient with respect to z.
  nn::Mat<T> backward(const T* p, T* g, const Cache& cache, const nn::Mat<T>& d_out) const {
    const std::size_t batch = cache.batch;
    const std::size_t dlen = arch_.decoded_length(), wlen = arch_.window_length, off = crop_offset();
    nn::Mat<T> d = nn::Mat<T>::Zero(static_cast<Eigen::Index>(batch * dlen), d_out.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      d.middleRows(static_cast<Eigen::Index>(b * dlen + off), static_cast<Eigen::Index>(wlen)) =
          d_out.middleRows(static_cast<Eigen::Index>(b * wlen), static_cast<Eigen::Index>(wlen));
    }
    d = head_.backward(p, g, cache.head, d);
    for (std::size_t s = convs_.size(); s-- > 0;) {
      nn::relu_backward(cache.conv_out[s], d);
      d = nn::upsample2_backward(convs_[s].backward(p, g, cache.convs[s], d));
    }
    for (std::size_t l = grus_.size(); l-- > 0;) d = grus_[l].backward(p, g, cache.grus[l], d);
    const std::size_t len = arch_.encoded_length();
    nn::Mat<T> dz = nn::Mat<T>::Zero(static_cast<Eigen::Index>(batch), d.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < len; ++t) dz.row(static_cast<Eigen::Index>(b)) += d.row(static_cast<Eigen::Index>(b * len + t));
    }
    return dz;
  }

 private:
  ArchSpec arch_;
  std::vector<nn::Gru<T>> grus_;
  std::vector<nn::Conv1d<T>> convs_;
  nn::Conv1d<T> head_;
};

// Low-capacity user classifier on the first auth_dims latent coordinates.
template <typename T>
class AuthHead {
 public:
  struct Cache {
    nn::Mat<T> in, hidden;
  };

  AuthHead() = default;
  AuthHead(nn::ParamLayout& layout, const ArchSpec& arch)
      : dims_(arch.auth_dims),
        hidden_(layout, arch.auth_dims, arch.auth_hidden),
        out_(layout, arch.auth_hidden, arch.n_users) {}

  std::size_t dims() const { return dims_; }

  nn::Mat<T> forward(const T* p, const nn::Mat<T>& latent, Cache& cache) const {
    cache.in = latent.leftCols(static_cast<Eigen::Index>(dims_));
    cache.hidden = hidden_.forward(p, cache.in);
    nn::relu_inplace(cache.hidden);
    return out_.forward(p, cache.hidden);
  }

  // Returns the gradient with respect to the full latent input.
  nn::Mat<T> backward(const T* p, T* g, const Cache& cache, const nn::Mat<T>& d_scores,
                      std::size_t latent_dim) const {
    nn::Mat<T> d = out_.backward(p, g, cache.hidden, d_scores);
    nn::relu_backward(cache.hidden, d);
    d = hidden_.backward(p, g, cache.in, d);
    nn::Mat<T> full = nn::Mat<T>::Zero(d.rows(), static_cast<Eigen::Index>(latent_dim));
    full.leftCols(static_cast<Eigen::Index>(dims_)) = d;
    return full;
  }

 private:
  std::size_t dims_ = 0;
  nn::Dense<T> hidden_, out_;
};

// Encoder (emitting mean and log-variance), decoder and optional auth head
// laid out in one parameter vector.
template <typename T>
class VaeNetwork {
 public:
  explicit VaeNetwork(const ArchSpec& arch) : arch_(arch) {
    arch.validate();
    encoder_ = Encoder<T>(layout_, arch, 2 * arch.latent_dim);
    decoder_ = Decoder<T>(layout_, arch);
    if (arch.n_users > 0) auth_ = AuthHead<T>(layout_, arch);
  }

  const ArchSpec& arch() const { return arch_; }
  const nn::ParamLayout& layout() const { return layout_; }
  std::size_t parameter_count() const { return layout_.total(); }
  const Encoder<T>& encoder() const { return encoder_; }
  const Decoder<T>& decoder() const { return decoder_; }
  const AuthHead<T>& auth() const { return auth_; }
  bool has_auth() const { return arch_.n_users > 0; }

 private:
  ArchSpec arch_;
  nn::ParamLayout layout_;
  Encoder<T> encoder_;
  Decoder<T> decoder_;
  AuthHead<T> auth_;
};

}  // namespace userboost

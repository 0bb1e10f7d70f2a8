#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "userboost/core/error.hpp"
#include "userboost/core/random.hpp"

// Minimal batched layers with explicit backward passes. Activations of a
// batch of sequences are stored as (batch * length) x channels row-major
// matrices, sample-major (row = b * length + t). All weights live in one flat
// parameter vector; layers only hold offsets into it.
namespace userboost::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using CVecMap = Eigen::Map<const Vec<T>>;
template <typename T>
using MVecMap = Eigen::Map<Vec<T>>;
template <typename T>
using StridedMap = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedMap = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

// Flat parameter storage. Eigen's vectorised kernels peel a different number
// of leading elements depending on the buffer address, so the base and every
// tensor offset are kept aligned to make results independent of the heap.
template <typename T>
using ParamVec = std::vector<T, Eigen::aligned_allocator<T>>;
inline constexpr std::size_t kParamAlign = 16;

// Offsets of every tensor in the flat parameter vector, with the fan-in and
// fan-out used for initialisation.
class ParamLayout {
 public:
  struct Entry {
    std::size_t offset, size, fan_in, fan_out;
    bool bias;
  };

  std::size_t add(std::size_t size, std::size_t fan_in, std::size_t fan_out, bool bias) {
    const std::size_t offset = (total_ + kParamAlign - 1) / kParamAlign * kParamAlign;
    entries_.push_back({offset, size, fan_in, fan_out, bias});
    total_ = offset + size;
    return offset;
  }

  std::size_t total() const { return total_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Glorot-uniform weights, zero biases.
  template <typename T>
  ParamVec<T> initialise(std::uint64_t seed) const {
    ParamVec<T> params(total_, T(0));
    Rng rng = make_rng(seed);
    for (const auto& e : entries_) {
      if (e.bias) continue;
      const double limit = std::sqrt(6.0 / static_cast<double>(e.fan_in + e.fan_out));
      for (std::size_t i = 0; i < e.size; ++i) {
        params[e.offset + i] = static_cast<T>(uniform(rng, -limit, limit));
      }
    }
    return params;
  }

 private:
  std::size_t total_ = 0;
  std::vector<Entry> entries_;
};

template <typename T>
void relu_inplace(Mat<T>& m) {
  m = m.cwiseMax(T(0));
}

// Gradient through a ReLU given its output.
template <typename T>
void relu_backward(const Mat<T>& out, Mat<T>& grad) {
  grad = (out.array() > T(0)).select(grad, T(0));
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Fully connected layer: out = in * W + b, W is in x out.
template <typename T>
struct Dense {
  std::size_t in = 0, out = 0;
  std::size_t w_off = 0, b_off = 0;

  Dense() = default;
  Dense(ParamLayout& layout, std::size_t in_dim, std::size_t out_dim) : in(in_dim), out(out_dim) {
    w_off = layout.add(in * out, in, out, false);
    b_off = layout.add(out, in, out, true);
  }

  Mat<T> forward(const T* p, const Mat<T>& x) const {
    if (static_cast<std::size_t>(x.cols()) != in) throw UsageError("Dense: input width mismatch");
    Mat<T> y = x * CMap<T>(p + w_off, in, out);
    y.rowwise() += CVecMap<T>(p + b_off, out);
    return y;
  }

  // Accumulates parameter gradients; returns the input gradient.
  Mat<T> backward(const T* p, T* g, const Mat<T>& x, const Mat<T>& dy) const {
    MMap<T>(g + w_off, in, out).noalias() += x.transpose() * dy;
    MVecMap<T>(g + b_off, out) += dy.colwise().sum();
    return dy * CMap<T>(p + w_off, in, out).transpose();
  }
};

// 1-D convolution with 'same' padding: out_len = ceil(in_len / stride).
// Weights are cout x (kernel * cin), tap-major within a row.
template <typename T>
struct Conv1d {
  std::size_t cin = 0, cout = 0, kernel = 1, stride = 1;
  std::size_t w_off = 0, b_off = 0;

  struct Cache {
    Mat<T> cols;
    std::size_t batch = 0, in_len = 0, out_len = 0;
  };

  Conv1d() = default;
  Conv1d(ParamLayout& layout, std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s)
      : cin(in_ch), cout(out_ch), kernel(k), stride(s) {
    w_off = layout.add(cout * kernel * cin, kernel * cin, kernel * cout, false);
    b_off = layout.add(cout, kernel * cin, kernel * cout, true);
  }

  std::size_t out_len(std::size_t in_len) const { return (in_len + stride - 1) / stride; }

  std::size_t pad_left(std::size_t in_len) const {
    const std::size_t lout = out_len(in_len);
    const std::size_t need = (lout - 1) * stride + kernel;
    return need > in_len ? (need - in_len) / 2 : 0;
  }

  Mat<T> forward(const T* p, const Mat<T>& x, std::size_t batch, Cache& cache) const {
    const std::size_t lin = static_cast<std::size_t>(x.rows()) / batch;
    if (static_cast<std::size_t>(x.cols()) != cin || lin * batch != static_cast<std::size_t>(x.rows())) {
      throw UsageError("Conv1d: input shape mismatch");
    }
    const std::size_t lout = out_len(lin);
    const std::size_t pad = pad_left(lin);
    cache.batch = batch;
    cache.in_len = lin;
    cache.out_len = lout;
    cache.cols.setZero(static_cast<Eigen::Index>(batch * lout), static_cast<Eigen::Index>(kernel * cin));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < lout; ++t) {
        T* dst = cache.cols.data() + (b * lout + t) * kernel * cin;
        for (std::size_t j = 0; j < kernel; ++j) {
          const long src = static_cast<long>(t * stride + j) - static_cast<long>(pad);
          if (src < 0 || src >= static_cast<long>(lin)) continue;
          const T* row = x.data() + (b * lin + static_cast<std::size_t>(src)) * cin;
          std::copy(row, row + cin, dst + j * cin);
        }
      }
    }
    Mat<T> y = cache.cols * CMap<T>(p + w_off, cout, kernel * cin).transpose();
    y.rowwise() += CVecMap<T>(p + b_off, cout);
    return y;
  }

  Mat<T> backward(const T* p, T* g, const Cache& cache, const Mat<T>& dy) const {
    MMap<T>(g + w_off, cout, kernel * cin).noalias() += dy.transpose() * cache.cols;
    MVecMap<T>(g + b_off, cout) += dy.colwise().sum();
    const Mat<T> dcols = dy * CMap<T>(p + w_off, cout, kernel * cin);
    const std::size_t lin = cache.in_len, lout = cache.out_len;
    const std::size_t pad = pad_left(lin);
    Mat<T> dx = Mat<T>::Zero(static_cast<Eigen::Index>(cache.batch * lin), static_cast<Eigen::Index>(cin));
    for (std::size_t b = 0; b < cache.batch; ++b) {
      for (std::size_t t = 0; t < lout; ++t) {
        const T* src = dcols.data() + (b * lout + t) * kernel * cin;
        for (std::size_t j = 0; j < kernel; ++j) {
          const long pos = static_cast<long>(t * stride + j) - static_cast<long>(pad);
          if (pos < 0 || pos >= static_cast<long>(lin)) continue;
          T* row = dx.data() + (b * lin + static_cast<std::size_t>(pos)) * cin;
          for (std::size_t c = 0; c < cin; ++c) row[c] += src[j * cin + c];
        }
      }
    }
    return dx;
  }
};

// Gated recurrent unit over sample-major sequences:
//   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
//   c = tanh(x Wc + (r * h) Uc + bc), h' = (1 - z) * h + z * c
template <typename T>
struct Gru {
  std::size_t in = 0, hidden = 0;
  std::size_t wx_off = 0, wh_off = 0, b_off = 0;

  struct Cache {
    std::size_t batch = 0, len = 0;
    Mat<T> x;                       // (batch * len) x in
    std::vector<Mat<T>> h_prev, z, r, c;  // per step, batch x hidden
  };

  Gru() = default;
  Gru(ParamLayout& layout, std::size_t in_dim, std::size_t hidden_dim) : in(in_dim), hidden(hidden_dim) {
    wx_off = layout.add(in * 3 * hidden, in, hidden, false);
    wh_off = layout.add(hidden * 3 * hidden, hidden, hidden, false);
    b_off = layout.add(3 * hidden, in, hidden, true);
  }

  // Returns the full hidden sequence, (batch * len) x hidden.
  Mat<T> forward(const T* p, const Mat<T>& x, std::size_t batch, Cache& cache) const {
    const std::size_t len = static_cast<std::size_t>(x.rows()) / batch;
    if (static_cast<std::size_t>(x.cols()) != in) throw UsageError("Gru: input width mismatch");
    const std::size_t H = hidden;
    cache.batch = batch;
    cache.len = len;
    cache.x = x;
    cache.h_prev.assign(len, Mat<T>());
    cache.z.assign(len, Mat<T>());
    cache.r.assign(len, Mat<T>());
    cache.c.assign(len, Mat<T>());

    Mat<T> xw = x * CMap<T>(p + wx_off, in, 3 * H);
    xw.rowwise() += CVecMap<T>(p + b_off, 3 * H);
    const CMap<T> u(p + wh_off, H, 3 * H);

    Mat<T> out(static_cast<Eigen::Index>(batch * len), static_cast<Eigen::Index>(H));
    Mat<T> h = Mat<T>::Zero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(H));
    const auto Hi = static_cast<Eigen::Index>(H);
    for (std::size_t t = 0; t < len; ++t) {
      CStridedMap<T> xw_t(xw.data() + t * 3 * H, static_cast<Eigen::Index>(batch), 3 * Hi,
                          Eigen::OuterStride<>(static_cast<Eigen::Index>(len * 3 * H)));
      const Mat<T> hu = h * u.leftCols(2 * Hi);
      Mat<T> z = (xw_t.leftCols(Hi) + hu.leftCols(Hi)).unaryExpr([](T v) { return sigmoid(v); });
      Mat<T> r = (xw_t.middleCols(Hi, Hi) + hu.rightCols(Hi)).unaryExpr([](T v) { return sigmoid(v); });
      const Mat<T> rh = r.cwiseProduct(h);
      Mat<T> c = (xw_t.rightCols(Hi) + rh * u.rightCols(Hi)).array().tanh().matrix();
      Mat<T> hn = h + z.cwiseProduct(c - h);
      cache.h_prev[t] = std::move(h);
      cache.z[t] = std::move(z);
      cache.r[t] = std::move(r);
      cache.c[t] = std::move(c);
      StridedMap<T>(out.data() + t * H, static_cast<Eigen::Index>(batch), Hi,
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(len * H))) = hn;
      h = std::move(hn);
    }
    return out;
  }

  // dy is the gradient of the full output sequence.
  Mat<T> backward(const T* p, T* g, const Cache& cache, const Mat<T>& dy) const {
    const std::size_t H = hidden, len = cache.len, batch = cache.batch;
    const auto Hi = static_cast<Eigen::Index>(H);
    const auto Bi = static_cast<Eigen::Index>(batch);
    const CMap<T> u(p + wh_off, H, 3 * H);
    MMap<T> gu(g + wh_off, H, 3 * H);
    Mat<T> dxw(static_cast<Eigen::Index>(batch * len), 3 * Hi);
    Mat<T> dh = Mat<T>::Zero(Bi, Hi);
    for (std::size_t t = len; t-- > 0;) {
      dh += CStridedMap<T>(dy.data() + t * H, Bi, Hi, Eigen::OuterStride<>(static_cast<Eigen::Index>(len * H)));
      const Mat<T>& hp = cache.h_prev[t];
      const Mat<T>& z = cache.z[t];
      const Mat<T>& r = cache.r[t];
      const Mat<T>& c = cache.c[t];
      const Mat<T> dc_a = dh.cwiseProduct(z).cwiseProduct((T(1) - c.array().square()).matrix());
      const Mat<T> dz_a = dh.cwiseProduct(c - hp).cwiseProduct(z.cwiseProduct((T(1) - z.array()).matrix()));
      Mat<T> dh_prev = dh - dh.cwiseProduct(z);
      const Mat<T> drh = dc_a * u.rightCols(Hi).transpose();
      gu.rightCols(Hi).noalias() += r.cwiseProduct(hp).transpose() * dc_a;
      const Mat<T> dr_a = drh.cwiseProduct(hp).cwiseProduct(r.cwiseProduct((T(1) - r.array()).matrix()));
      dh_prev += drh.cwiseProduct(r);
      Mat<T> dzr(Bi, 2 * Hi);
      dzr.leftCols(Hi) = dz_a;
      dzr.rightCols(Hi) = dr_a;
      gu.leftCols(2 * Hi).noalias() += hp.transpose() * dzr;
      dh_prev.noalias() += dzr * u.leftCols(2 * Hi).transpose();
      StridedMap<T> dxw_t(dxw.data() + t * 3 * H, Bi, 3 * Hi,
                          Eigen::OuterStride<>(static_cast<Eigen::Index>(len * 3 * H)));
      dxw_t.leftCols(2 * Hi) = dzr;
      dxw_t.rightCols(Hi) = dc_a;
      dh = std::move(dh_prev);
    }
    MMap<T>(g + wx_off, in, 3 * H).noalias() += cache.x.transpose() * dxw;
    MVecMap<T>(g + b_off, 3 * H) += dxw.colwise().sum();
    return dxw * CMap<T>(p + wx_off, in, 3 * H).transpose();
  }
};

// Rows b * len + len - 1 of a sequence, i.e. the final step of every sample.
template <typename T>
Mat<T> last_step(const Mat<T>& seq, std::size_t batch) {
  const std::size_t len = static_cast<std::size_t>(seq.rows()) / batch;
  Mat<T> out(static_cast<Eigen::Index>(batch), seq.cols());
  for (std::size_t b = 0; b < batch; ++b) out.row(static_cast<Eigen::Index>(b)) = seq.row(static_cast<Eigen::Index>(b * len + len - 1));
  return out;
}

template <typename T>
Mat<T> scatter_last_step(const Mat<T>& d_last, std::size_t batch, std::size_t len) {
  Mat<T> out = Mat<T>::Zero(static_cast<Eigen::Index>(batch * len), d_last.cols());
  for (std::size_t b = 0; b < batch; ++b) out.row(static_cast<Eigen::Index>(b * len + len - 1)) = d_last.row(static_cast<Eigen::Index>(b));
  return out;
}

// Nearest-neighbour x2 upsampling along time.
template <typename T>
Mat<T> upsample2(const Mat<T>& x, std::size_t batch) {
  const std::size_t len = static_cast<std::size_t>(x.rows()) / batch;
  Mat<T> out(static_cast<Eigen::Index>(2 * batch * len), x.cols());
  for (std::size_t i = 0; i < batch * len; ++i) {
    out.row(static_cast<Eigen::Index>(2 * i)) = x.row(static_cast<Eigen::Index>(i));
    out.row(static_cast<Eigen::Index>(2 * i + 1)) = x.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

template <typename T>
Mat<T> upsample2_backward(const Mat<T>& dy) {
  const auto rows = dy.rows() / 2;
  Mat<T> dx(rows, dy.cols());
  for (Eigen::Index i = 0; i < rows; ++i) dx.row(i) = dy.row(2 * i) + dy.row(2 * i + 1);
  return dx;
}

}  // namespace userboost::nn

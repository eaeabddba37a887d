#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "paqe/common.hpp"
#include "paqe/tensor.hpp"

namespace paqe {

enum class NetMode { TRAIN, INFER };

// 3x3 convolution, stride 1, zero padding 1 (cross-correlation), optional ReLU.
struct ConvLayer {
  int in_ch = 0;
  int out_ch = 0;
  bool relu = false;
  std::vector<float> weights;  // out_ch * in_ch * 3 * 3
  std::vector<float> bias;     // out_ch

  std::vector<float> dweights;
  std::vector<float> dbias;

  Tensor input_cache;
  Tensor output_cache;
  bool has_cache = false;

  ConvLayer() = default;
  ConvLayer(int in, int out, bool relu_)
      : in_ch(in), out_ch(out), relu(relu_),
        weights(static_cast<std::size_t>(out) * in * 9, 0.0f),
        bias(static_cast<std::size_t>(out), 0.0f),
        dweights(weights.size(), 0.0f),
        dbias(bias.size(), 0.0f) {}

  float& w(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx];
  }
  float wv(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx];
  }

  Tensor forward(const Tensor& in, bool cache) {
    if (in.c != in_ch)
      throw contract_error("conv: input has " + std::to_string(in.c) +
                           " channels, layer expects " + std::to_string(in_ch));
    Tensor out(in.n, out_ch, in.h, in.w);
    const int H = in.h, W = in.w;
    const std::size_t ps = in.plane_size();
    parallel_for(static_cast<std::int64_t>(in.n) * out_ch,
                 [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t idx = lo; idx < hi; ++idx) {
        const int b = static_cast<int>(idx / out_ch);
        const int o = static_cast<int>(idx % out_ch);
        float* outp = out.data.data() + out.index(b, o, 0, 0);
        std::fill(outp, outp + ps, bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < in_ch; ++i) {
          const float* inp = in.data.data() + in.index(b, i, 0, 0);
          for (int k = 0; k < 9; ++k) {
            const int ky = k / 3 - 1, kx = k % 3 - 1;
            const float wk = wv(o, i, k / 3, k % 3);
            if (wk == 0.0f) continue;
            const int y0 = std::max(0, -ky), y1 = std::min(H, H - ky);
            const int x0 = std::max(0, -kx), x1 = std::min(W, W - kx);
            for (int y = y0; y < y1; ++y) {
              const float* src = inp + static_cast<std::size_t>(y + ky) * W + kx;
              float* dst = outp + static_cast<std::size_t>(y) * W;
              for (int x = x0; x < x1; ++x) dst[x] += wk * src[x];
            }
          }
        }
        if (relu)
          for (std::size_t p = 0; p < ps; ++p)
            if (outp[p] < 0.0f) outp[p] = 0.0f;
      }
    });
    if (cache) {
      input_cache = in;
      output_cache = out;
      has_cache = true;
    }
    return out;
  }

  // Returns the gradient w.r.t. the input; accumulates nothing (overwrites
  // dweights/dbias).
  Tensor backward(const Tensor& dout) {
    if (!has_cache) throw contract_error("conv backward without cached forward");
    const Tensor& in = input_cache;
    if (!dout.same_shape(output_cache))
      throw contract_error("conv backward: gradient shape mismatch");
    const int H = in.h, W = in.w;
    const std::size_t ps = in.plane_size();

    Tensor dpre = dout;
    if (relu) {
      for (std::size_t p = 0; p < dpre.data.size(); ++p)
        if (output_cache.data[p] <= 0.0f) dpre.data[p] = 0.0f;
    }

    std::fill(dweights.begin(), dweights.end(), 0.0f);
    std::fill(dbias.begin(), dbias.end(), 0.0f);
    parallel_for(out_ch, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t o = lo; o < hi; ++o) {
        double db = 0.0;
        for (int b = 0; b < in.n; ++b) {
          const float* dp = dpre.data.data() + dpre.index(b, static_cast<int>(o), 0, 0);
          for (std::size_t p = 0; p < ps; ++p) db += dp[p];
          for (int i = 0; i < in_ch; ++i) {
            const float* inp = in.data.data() + in.index(b, i, 0, 0);
            for (int k = 0; k < 9; ++k) {
              const int ky = k / 3 - 1, kx = k % 3 - 1;
              const int y0 = std::max(0, -ky), y1 = std::min(H, H - ky);
              const int x0 = std::max(0, -kx), x1 = std::min(W, W - kx);
              double acc = 0.0;
              for (int y = y0; y < y1; ++y) {
                const float* src = inp + static_cast<std::size_t>(y + ky) * W + kx;
                const float* g = dp + static_cast<std::size_t>(y) * W;
                float facc = 0.0f;
                for (int x = x0; x < x1; ++x) facc += g[x] * src[x];
                acc += facc;
              }
              dweights[((static_cast<std::size_t>(o) * in_ch + i) * 3 + k / 3) * 3 +
                       k % 3] += static_cast<float>(acc);
            }
          }
        }
        dbias[static_cast<std::size_t>(o)] = static_cast<float>(db);
      }
    });

    Tensor din(in.n, in_ch, H, W);
    parallel_for(static_cast<std::int64_t>(in.n) * in_ch,
                 [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t idx = lo; idx < hi; ++idx) {
        const int b = static_cast<int>(idx / in_ch);
        const int i = static_cast<int>(idx % in_ch);
        float* dst0 = din.data.data() + din.index(b, i, 0, 0);
        for (int o = 0; o < out_ch; ++o) {
          const float* dp = dpre.data.data() + dpre.index(b, o, 0, 0);
          for (int k = 0; k < 9; ++k) {
            // din(y,x) += dpre(y - ky, x - kx) * w; same loop shape as the
            // forward pass with the kernel offsets negated.
            const int ky = -(k / 3 - 1), kx = -(k % 3 - 1);
            const float wk = wv(o, i, k / 3, k % 3);
            if (wk == 0.0f) continue;
            const int y0 = std::max(0, -ky), y1 = std::min(H, H - ky);
            const int x0 = std::max(0, -kx), x1 = std::min(W, W - kx);
            for (int y = y0; y < y1; ++y) {
              const float* src = dp + static_cast<std::size_t>(y + ky) * W + kx;
              float* dst = dst0 + static_cast<std::size_t>(y) * W;
              for (int x = x0; x < x1; ++x) dst[x] += wk * src[x];
            }
          }
        }
      }
    });
    return din;
  }
};

inline Tensor conv2d_forward(const Tensor& input, ConvLayer& layer) {
  return layer.forward(input, false);
}

struct BatchNormLayer {
  int channels = 0;
  float eps = 1e-5f;
  float momentum = 0.9f;
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;

  std::vector<float> dgamma;
  std::vector<float> dbeta;

  Tensor xhat_cache;
  std::vector<float> invstd_cache;
  NetMode mode_cache = NetMode::INFER;
  bool has_cache = false;

  BatchNormLayer() = default;
  explicit BatchNormLayer(int ch)
      : channels(ch),
        gamma(static_cast<std::size_t>(ch), 1.0f),
        beta(static_cast<std::size_t>(ch), 0.0f),
        running_mean(static_cast<std::size_t>(ch), 0.0f),
        running_var(static_cast<std::size_t>(ch), 1.0f),
        dgamma(static_cast<std::size_t>(ch), 0.0f),
        dbeta(static_cast<std::size_t>(ch), 0.0f) {}

  Tensor forward(const Tensor& in, NetMode mode, bool cache) {
    if (in.c != channels) throw contract_error("batchnorm: channel mismatch");
    if (mode == NetMode::TRAIN && in.n < 2)
      throw contract_error("batchnorm: train mode requires batch size >= 2");
    Tensor out(in.n, in.c, in.h, in.w);
    Tensor xhat(in.n, in.c, in.h, in.w);
    std::vector<float> invstd(static_cast<std::size_t>(channels));
    const std::size_t ps = in.plane_size();
    const std::size_t m = static_cast<std::size_t>(in.n) * ps;
    for (int ch = 0; ch < channels; ++ch) {
      float mean, var;
      if (mode == NetMode::TRAIN) {
        double sum = 0.0, sq = 0.0;
        for (int b = 0; b < in.n; ++b) {
          const float* p = in.data.data() + in.index(b, ch, 0, 0);
          for (std::size_t i = 0; i < ps; ++i) {
            sum += p[i];
            sq += static_cast<double>(p[i]) * p[i];
          }
        }
        mean = static_cast<float>(sum / static_cast<double>(m));
        var = static_cast<float>(sq / static_cast<double>(m) -
                                 static_cast<double>(mean) * mean);
        if (var < 0.0f) var = 0.0f;
        running_mean[ch] = momentum * running_mean[ch] + (1.0f - momentum) * mean;
        running_var[ch] = momentum * running_var[ch] + (1.0f - momentum) * var;
      } else {
        mean = running_mean[ch];
        var = running_var[ch];
      }
      const float is = 1.0f / std::sqrt(var + eps);
      invstd[static_cast<std::size_t>(ch)] = is;
      const float g = gamma[static_cast<std::size_t>(ch)];
      const float bt = beta[static_cast<std::size_t>(ch)];
      for (int b = 0; b < in.n; ++b) {
        const float* p = in.data.data() + in.index(b, ch, 0, 0);
        float* xh = xhat.data.data() + xhat.index(b, ch, 0, 0);
        float* o = out.data.data() + out.index(b, ch, 0, 0);
        for (std::size_t i = 0; i < ps; ++i) {
          xh[i] = (p[i] - mean) * is;
          o[i] = g * xh[i] + bt;
        }
      }
    }
    if (cache) {
      xhat_cache = std::move(xhat);
      invstd_cache = std::move(invstd);
      mode_cache = mode;
      has_cache = true;
    }
    return out;
  }

  Tensor backward(const Tensor& dout) {
    if (!has_cache) throw contract_error("batchnorm backward without forward");
    const Tensor& xhat = xhat_cache;
    if (!dout.same_shape(xhat))
      throw contract_error("batchnorm backward: gradient shape mismatch");
    Tensor din(dout.n, dout.c, dout.h, dout.w);
    const std::size_t ps = dout.plane_size();
    const double m = static_cast<double>(dout.n) * ps;
    for (int ch = 0; ch < channels; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int b = 0; b < dout.n; ++b) {
        const float* dy = dout.data.data() + dout.index(b, ch, 0, 0);
        const float* xh = xhat.data.data() + xhat.index(b, ch, 0, 0);
        for (std::size_t i = 0; i < ps; ++i) {
          sum_dy += dy[i];
          sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
        }
      }
      dbeta[ch] = static_cast<float>(sum_dy);
      dgamma[ch] = static_cast<float>(sum_dy_xhat);
      const float g = gamma[static_cast<std::size_t>(ch)];
      const float is = invstd_cache[static_cast<std::size_t>(ch)];
      if (mode_cache == NetMode::TRAIN) {
        const float c1 = static_cast<float>(sum_dy / m);
        const float c2 = static_cast<float>(sum_dy_xhat / m);
        for (int b = 0; b < dout.n; ++b) {
          const float* dy = dout.data.data() + dout.index(b, ch, 0, 0);
          const float* xh = xhat.data.data() + xhat.index(b, ch, 0, 0);
          float* dx = din.data.data() + din.index(b, ch, 0, 0);
          for (std::size_t i = 0; i < ps; ++i)
            dx[i] = g * is * (dy[i] - c1 - xh[i] * c2);
        }
      } else {
        for (int b = 0; b < dout.n; ++b) {
          const float* dy = dout.data.data() + dout.index(b, ch, 0, 0);
          float* dx = din.data.data() + din.index(b, ch, 0, 0);
          for (std::size_t i = 0; i < ps; ++i) dx[i] = g * is * dy[i];
        }
      }
    }
    return din;
  }
};

// conv+ReLU -> conv, plus the identity skip (EDSR style, no normalization).
struct ResidualBlock {
  ConvLayer conv_a;
  ConvLayer conv_b;

  ResidualBlock() = default;
  explicit ResidualBlock(int channels)
      : conv_a(channels, channels, true), conv_b(channels, channels, false) {}

  Tensor forward(const Tensor& in, bool cache) {
    Tensor t = conv_a.forward(in, cache);
    Tensor out = conv_b.forward(t, cache);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += in.data[i];
    return out;
  }

  Tensor backward(const Tensor& dout) {
    Tensor din = conv_a.backward(conv_b.backward(dout));
    for (std::size_t i = 0; i < din.data.size(); ++i) din.data[i] += dout.data[i];
    return din;
  }
};

// The quality-enhancement network:
//   head conv+ReLU -> N residual blocks -> conv -> batchnorm
//   -> add head output -> two conv+ReLU -> 1-channel conv+ReLU.
struct QENetwork {
  int in_channels = 3;
  int channels = 256;
  int num_blocks = 16;

  ConvLayer head;
  std::vector<ResidualBlock> blocks;
  ConvLayer fuse;  // conv before the batchnorm, no activation
  BatchNormLayer bn;
  ConvLayer post_a;
  ConvLayer post_b;
  ConvLayer out_conv;

  Tensor head_out_cache;
  bool has_cache = false;

  QENetwork() = default;
  QENetwork(int in_ch, int ch, int n_blocks)
      : in_channels(in_ch), channels(ch), num_blocks(n_blocks),
        head(in_ch, ch, true),
        fuse(ch, ch, false),
        bn(ch),
        post_a(ch, ch, true),
        post_b(ch, ch, true),
        out_conv(ch, 1, true) {
    if (in_ch != 2 && in_ch != 3)
      throw contract_error("QENetwork: in_channels must be 2 or 3");
    if (n_blocks < 1) throw contract_error("QENetwork: need at least one block");
    blocks.reserve(static_cast<std::size_t>(n_blocks));
    for (int i = 0; i < n_blocks; ++i) blocks.emplace_back(ch);
  }

  int conv_layer_count() const { return 2 * num_blocks + 5; }
  // One pixel of padding per 3x3 conv; Chebyshev radius of influence.
  int receptive_field_radius() const { return conv_layer_count(); }

  void init_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto he_init = [&rng](ConvLayer& conv) {
      const float stddev =
          std::sqrt(2.0f / (static_cast<float>(conv.in_ch) * 9.0f));
      std::normal_distribution<float> dist(0.0f, stddev);
      for (auto& v : conv.weights) v = dist(rng);
      std::fill(conv.bias.begin(), conv.bias.end(), 0.0f);
    };
    he_init(head);
    for (auto& blk : blocks) {
      he_init(blk.conv_a);
      he_init(blk.conv_b);
    }
    he_init(fuse);
    he_init(post_a);
    he_init(post_b);
    he_init(out_conv);
  }

  // Random init scaled down and biased toward the identity map on the
  // reconstruction channel: the network starts out approximately returning
  // its input, so short training runs refine the reconstruction instead of
  // having to rediscover it from scratch. `scale` shrinks every random
  // weight and the batch-norm gain (batch norm renormalizes its input to
  // unit variance, so its gain must shrink too or the normalized branch
  // would swamp the identity path).
  void init_weights_near_identity(std::uint64_t seed, float scale = 0.02f) {
    init_weights(seed);
    auto shrink = [scale](ConvLayer& conv) {
      for (auto& v : conv.weights) v *= scale;
    };
    shrink(head);
    for (auto& blk : blocks) {
      shrink(blk.conv_a);
      shrink(blk.conv_b);
    }
    shrink(fuse);
    shrink(post_a);
    shrink(post_b);
    shrink(out_conv);
    for (auto& g : bn.gamma) g = scale;
    // identity chain: recon channel -> feature 0 -> output
    const int recon_channel = in_channels - 2;  // [P,C,Q] or [C,Q]
    head.w(0, recon_channel, 1, 1) += 1.0f;
    post_a.w(0, 0, 1, 1) += 1.0f;
    post_b.w(0, 0, 1, 1) += 1.0f;
    out_conv.w(0, 0, 1, 1) += 1.0f;
  }

  Tensor forward(const Tensor& input, NetMode mode, bool cache = false) {
    if (input.c != in_channels)
      throw contract_error("network forward: expected " +
                           std::to_string(in_channels) + " channels, got " +
                           std::to_string(input.c));
    Tensor feat = head.forward(input, cache);
    if (cache) head_out_cache = feat;
    Tensor t = feat;
    for (auto& blk : blocks) t = blk.forward(t, cache);
    t = fuse.forward(t, cache);
    t = bn.forward(t, mode, cache);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += feat.data[i];
    t = post_a.forward(t, cache);
    t = post_b.forward(t, cache);
    t = out_conv.forward(t, cache);
    has_cache = cache;
    return t;
  }

  // Fills per-layer parameter gradients from the loss gradient w.r.t. the
  // network output. Requires a cached forward pass.
  void backward(const Tensor& dout) {
    if (!has_cache) throw contract_error("network backward without forward");
    Tensor g = out_conv.backward(dout);
    g = post_b.backward(g);
    g = post_a.backward(g);
    // The skip addition feeds the gradient to both the batchnorm path and the
    // head output.
    Tensor dskip = g;
    g = bn.backward(g);
    g = fuse.backward(g);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
      g = it->backward(g);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += dskip.data[i];
    head.backward(g);
    has_cache = false;
  }

  // Visits parameters (and their gradients) in declaration order.
  template <typename F>
  void for_each_param(F&& fn) {
    auto visit_conv = [&fn](ConvLayer& conv) {
      fn(conv.weights, conv.dweights);
      fn(conv.bias, conv.dbias);
    };
    visit_conv(head);
    for (auto& blk : blocks) {
      visit_conv(blk.conv_a);
      visit_conv(blk.conv_b);
    }
    visit_conv(fuse);
    fn(bn.gamma, bn.dgamma);
    fn(bn.beta, bn.dbeta);
    visit_conv(post_a);
    visit_conv(post_b);
    visit_conv(out_conv);
  }
};

inline Tensor network_forward(const Tensor& input, QENetwork& net, NetMode mode) {
  return net.forward(input, mode, false);
}

struct L1Result {
  double loss = 0.0;
  Tensor grad;
};

// Mean absolute difference plus its subgradient (sign(0) taken as 0).
inline L1Result l1_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw contract_error("l1_loss: shape mismatch " + pred.shape_str() + " vs " +
                         target.shape_str());
  L1Result r;
  r.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
  double sum = 0.0;
  const float scale = 1.0f / static_cast<float>(pred.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const float d = pred.data[i] - target.data[i];
    sum += std::fabs(static_cast<double>(d));
    r.grad.data[i] = d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
  }
  r.loss = sum / static_cast<double>(pred.size());
  return r;
}

struct AdamState {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  long step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

// One bias-corrected Adam update over every network parameter.
inline void adam_step(QENetwork& net, AdamState& state, float lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), state.step);
  const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), state.step);
  std::size_t slot = 0;
  net.for_each_param([&](std::vector<float>& p, std::vector<float>& g) {
    if (state.m.size() <= slot) {
      state.m.emplace_back(p.size(), 0.0f);
      state.v.emplace_back(p.size(), 0.0f);
    }
    auto& m = state.m[slot];
    auto& v = state.v[slot];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0f - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0f - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + state.eps));
    }
    ++slot;
  });
}

// ---- Weight container: "PAQE", version, geometry, layers in order ----

namespace detail {

constexpr std::uint32_t kWeightsVersion = 1;
constexpr std::uint32_t kKindConv = 1;
constexpr std::uint32_t kKindBatchNorm = 2;

inline void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw format_error("weight file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_floats(std::ofstream& out, const std::vector<float>& v) {
  for (float f : v) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
  }
}

inline void get_floats(std::ifstream& in, std::vector<float>& v) {
  for (auto& f : v) {
    const std::uint32_t u = get_u32(in);
    std::memcpy(&f, &u, 4);
  }
}

}  // namespace detail

inline void save_weights(QENetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("save_weights: cannot open " + path);
  out.write("PAQE", 4);
  detail::put_u32(out, detail::kWeightsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(net.in_channels));
  detail::put_u32(out, static_cast<std::uint32_t>(net.channels));
  detail::put_u32(out, static_cast<std::uint32_t>(net.num_blocks));
  auto put_conv = [&out](const ConvLayer& conv) {
    detail::put_u32(out, detail::kKindConv);
    detail::put_u32(out, static_cast<std::uint32_t>(conv.out_ch));
    detail::put_u32(out, static_cast<std::uint32_t>(conv.in_ch));
    detail::put_u32(out, 3);
    detail::put_u32(out, 3);
    detail::put_floats(out, conv.weights);
    detail::put_floats(out, conv.bias);
  };
  put_conv(net.head);
  for (const auto& blk : net.blocks) {
    put_conv(blk.conv_a);
    put_conv(blk.conv_b);
  }
  put_conv(net.fuse);
  detail::put_u32(out, detail::kKindBatchNorm);
  detail::put_u32(out, static_cast<std::uint32_t>(net.bn.channels));
  detail::put_floats(out, net.bn.gamma);
  detail::put_floats(out, net.bn.beta);
  detail::put_floats(out, net.bn.running_mean);
  detail::put_floats(out, net.bn.running_var);
  put_conv(net.post_a);
  put_conv(net.post_b);
  put_conv(net.out_conv);
  if (!out) throw io_error("save_weights: write failed on " + path);
}

inline QENetwork load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_weights: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PAQE", 4) != 0)
    throw format_error("load_weights: bad magic in " + path);
  if (detail::get_u32(in) != detail::kWeightsVersion)
    throw format_error("load_weights: unsupported version in " + path);
  const int in_ch = static_cast<int>(detail::get_u32(in));
  const int ch = static_cast<int>(detail::get_u32(in));
  const int n_blocks = static_cast<int>(detail::get_u32(in));
  QENetwork net(in_ch, ch, n_blocks);
  auto get_conv = [&in, &path](ConvLayer& conv) {
    if (detail::get_u32(in) != detail::kKindConv)
      throw format_error("load_weights: expected conv layer in " + path);
    const int out_c = static_cast<int>(detail::get_u32(in));
    const int in_c = static_cast<int>(detail::get_u32(in));
    const int kh = static_cast<int>(detail::get_u32(in));
    const int kw = static_cast<int>(detail::get_u32(in));
    if (out_c != conv.out_ch || in_c != conv.in_ch || kh != 3 || kw != 3)
      throw format_error("load_weights: conv shape mismatch in " + path);
    detail::get_floats(in, conv.weights);
    detail::get_floats(in, conv.bias);
  };
  get_conv(net.head);
  for (auto& blk : net.blocks) {
    get_conv(blk.conv_a);
    get_conv(blk.conv_b);
  }
  get_conv(net.fuse);
  if (detail::get_u32(in) != detail::kKindBatchNorm)
    throw format_error("load_weights: expected batchnorm layer in " + path);
  if (static_cast<int>(detail::get_u32(in)) != net.bn.channels)
    throw format_error("load_weights: batchnorm shape mismatch in " + path);
  detail::get_floats(in, net.bn.gamma);
  detail::get_floats(in, net.bn.beta);
  detail::get_floats(in, net.bn.running_mean);
  detail::get_floats(in, net.bn.running_var);
  get_conv(net.post_a);
  get_conv(net.post_b);
  get_conv(net.out_conv);
  in.peek();
  if (!in.eof())
    throw format_error("load_weights: trailing bytes in " + path);
  return net;
}

}  // namespace paqe

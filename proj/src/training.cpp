#include "sra/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "sra/resample.hpp"

namespace sra {

void TrainConfig::validate() const {
  if (!(lambda_dsnet >= 0.0) || !(omega >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in (0,1)");
  if (batch_size < 1 || epochs < 1) throw ConfigError("batch size and epochs must be >= 1");
  if (lr_decay_epochs < 1) throw ConfigError("lr_decay_epochs must be >= 1");
  if (msssim_scales < 1 || msssim_scales > 5) throw ConfigError("msssim_scales must be in 1..5");
}

namespace {

double mse(const TensorD& a, const TensorD& b) {
  if (!a.same_shape(b)) throw ShapeError("MSE inputs must share shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

TensorD lrelu_backward(const TensorD& pre, const TensorD& g, double slope) {
  TensorD out(g.channels, g.height, g.width);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    out.data[i] = pre.data[i] >= 0.0 ? g.data[i] : slope * g.data[i];
  return out;
}

// Backward of conv2d_concat. Weight/bias gradients are accumulated into
// `gp`; input gradients are accumulated into the non-null entries of
// `gparts` (callers pre-zero them).
void conv_backward(std::span<const TensorD* const> parts, const ConvLayerT<double>& p,
                   const TensorD& gout, std::span<TensorD* const> gparts,
                   ConvLayerT<double>& gp) {
  const int in_h = parts[0]->height;
  const int in_w = parts[0]->width;
  const int s = p.stride;
  const int out_h = gout.height;
  const int out_w = gout.width;
  const int pad_y = (p.kernel_h - 1) / 2;
  const int pad_x = (p.kernel_w - 1) / 2;

  for (int oc = 0; oc < p.out_channels; ++oc) {
    double db = 0.0;
    for (int oy = 0; oy < out_h; ++oy) {
      const double* grow = gout.channel(oc) + static_cast<std::size_t>(oy) * out_w;
      for (int ox = 0; ox < out_w; ++ox) db += grow[ox];
      int ic0 = 0;
      for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const TensorD* part = parts[pi];
        TensorD* gpart = gparts[pi];
        for (int pc = 0; pc < part->channels; ++pc) {
          const int ic = ic0 + pc;
          for (int ky = 0; ky < p.kernel_h; ++ky) {
            const int iy = oy * s - pad_y + ky;
            if (iy < 0 || iy >= in_h) continue;
            const double* in_row = part->channel(pc) + static_cast<std::size_t>(iy) * in_w;
            double* gin_row =
                gpart ? gpart->channel(pc) + static_cast<std::size_t>(iy) * in_w : nullptr;
            for (int kx = 0; kx < p.kernel_w; ++kx) {
              const int off = kx - pad_x;
              int ox_lo = 0;
              while (ox_lo < out_w && ox_lo * s + off < 0) ++ox_lo;
              int ox_hi = out_w - 1;
              while (ox_hi >= 0 && ox_hi * s + off >= in_w) --ox_hi;
              double dw = 0.0;
              const double wv = p.w(oc, ic, ky, kx);
              if (gin_row) {
                for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                  const double go = grow[ox];
                  dw += go * in_row[ox * s + off];
                  gin_row[ox * s + off] += wv * go;
                }
              } else {
                for (int ox = ox_lo; ox <= ox_hi; ++ox) dw += grow[ox] * in_row[ox * s + off];
              }
              gp.w(oc, ic, ky, kx) += dw;
            }
          }
        }
        ic0 += part->channels;
      }
    }
    gp.bias[static_cast<std::size_t>(oc)] += db;
  }
}

void conv_backward_single(const TensorD& x, const ConvLayerT<double>& p, const TensorD& gout,
                          TensorD* gx, ConvLayerT<double>& gp) {
  const TensorD* parts[1] = {&x};
  TensorD* gparts[1] = {gx};
  conv_backward(parts, p, gout, gparts, gp);
}

ModelWeightsD zero_grads(const ModelWeightsD& like) {
  ModelWeightsD g = like;
  for (auto& l : g.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return g;
}

// Reverse pass over one recorded forward evaluation; returns the gradient
// for every layer. The input image itself needs no gradient.
ModelWeightsD dsnet_backward(const DsnetTape<double>& tape, const ModelWeightsD& w,
                             const DSNetConfig& cfg, const TensorD& gy) {
  const double slope = cfg.lrelu_slope;
  const int n_rdb = cfg.num_rdb;
  ModelWeightsD grads = zero_grads(w);

  // final (linear) conv
  TensorD g_rl2_post(tape.rl2.channels, tape.rl2.height, tape.rl2.width, 0.0);
  conv_backward_single(tape.rl2, w.layer("final"), gy, &g_rl2_post, grads.layer("final"));

  // rl2
  TensorD g_skip(tape.skip.channels, tape.skip.height, tape.skip.width, 0.0);
  {
    TensorD g_pre = lrelu_backward(tape.rl2_pre, g_rl2_post, slope);
    conv_backward_single(tape.skip, w.layer("rl2"), g_pre, &g_skip, grads.layer("rl2"));
  }

  // skip = rl1 + f0
  TensorD g_f0 = g_skip;
  const TensorD& g_rl1_post = g_skip;

  // rl1 over concat(d0, G_1..G_N)
  TensorD g_d0(tape.d0.channels, tape.d0.height, tape.d0.width, 0.0);
  std::vector<TensorD> g_g(static_cast<std::size_t>(n_rdb));
  std::vector<TensorD> g_out(static_cast<std::size_t>(n_rdb));  // RDB outputs for reuse
  for (int i = 0; i < n_rdb; ++i) {
    const auto& r = tape.rdbs[static_cast<std::size_t>(i)];
    g_g[static_cast<std::size_t>(i)] = TensorD(r.in.channels, r.in.height, r.in.width, 0.0);
    TensorD out(r.in.channels, r.in.height, r.in.width);
    for (std::size_t k = 0; k < out.data.size(); ++k)
      out.data[k] = r.fuse_out.data[k] + r.in.data[k];
    g_out[static_cast<std::size_t>(i)] = std::move(out);
  }
  {
    TensorD g_pre = lrelu_backward(tape.rl1_pre, g_rl1_post, slope);
    std::vector<const TensorD*> parts;
    std::vector<TensorD*> gparts;
    parts.push_back(&tape.d0);
    gparts.push_back(&g_d0);
    for (int i = 0; i < n_rdb; ++i) {
      parts.push_back(&g_out[static_cast<std::size_t>(i)]);
      gparts.push_back(&g_g[static_cast<std::size_t>(i)]);
    }
    conv_backward(parts, w.layer("rl1"), g_pre, gparts, grads.layer("rl1"));
  }

  // RDB chain, last to first, so each block's gradient is complete before
  // its own backward runs.
  for (int i = n_rdb; i >= 1; --i) {
    const auto& r = tape.rdbs[static_cast<std::size_t>(i - 1)];
    const std::string rdb = "rdb" + std::to_string(i);
    TensorD g_in = g_g[static_cast<std::size_t>(i - 1)];  // local skip path
    const int n_stage = static_cast<int>(r.s.size());
    std::vector<TensorD> g_s(static_cast<std::size_t>(n_stage));
    for (int k = 0; k < n_stage; ++k)
      g_s[static_cast<std::size_t>(k)] =
          TensorD(r.s[static_cast<std::size_t>(k)].channels, r.in.height, r.in.width, 0.0);

    {  // local fusion (linear)
      std::vector<const TensorD*> parts{&r.in};
      std::vector<TensorD*> gparts{&g_in};
      for (int k = 0; k < n_stage; ++k) {
        parts.push_back(&r.s[static_cast<std::size_t>(k)]);
        gparts.push_back(&g_s[static_cast<std::size_t>(k)]);
      }
      conv_backward(parts, w.layer(rdb + ".fuse"), g_g[static_cast<std::size_t>(i - 1)], gparts,
                    grads.layer(rdb + ".fuse"));
    }
    for (int k = n_stage; k >= 1; --k) {
      TensorD g_pre = lrelu_backward(r.s_pre[static_cast<std::size_t>(k - 1)],
                                     g_s[static_cast<std::size_t>(k - 1)], slope);
      std::vector<const TensorD*> parts{&r.in};
      std::vector<TensorD*> gparts{&g_in};
      for (int j = 0; j < k - 1; ++j) {
        parts.push_back(&r.s[static_cast<std::size_t>(j)]);
        gparts.push_back(&g_s[static_cast<std::size_t>(j)]);
      }
      conv_backward(parts, w.layer(rdb + ".conv" + std::to_string(k)), g_pre, gparts,
                    grads.layer(rdb + ".conv" + std::to_string(k)));
    }

    if (i == 1) {
      for (std::size_t k = 0; k < g_f0.data.size(); ++k) g_f0.data[k] += g_in.data[k];
    } else {
      TensorD g_pre = lrelu_backward(tape.cascade_pre[static_cast<std::size_t>(i - 2)], g_in, slope);
      std::vector<const TensorD*> parts{&tape.d0};
      std::vector<TensorD*> gparts{&g_d0};
      for (int j = 0; j < i - 1; ++j) {
        parts.push_back(&g_out[static_cast<std::size_t>(j)]);
        gparts.push_back(&g_g[static_cast<std::size_t>(j)]);
      }
      conv_backward(parts, w.layer("cascade" + std::to_string(i)), g_pre, gparts,
                    grads.layer("cascade" + std::to_string(i)));
    }
  }

  // feat
  {
    TensorD g_pre = lrelu_backward(tape.f0_pre, g_f0, slope);
    conv_backward_single(tape.d0, w.layer("feat"), g_pre, &g_d0, grads.layer("feat"));
  }
  // down (no input gradient needed)
  {
    TensorD g_pre = lrelu_backward(tape.d0_pre, g_d0, slope);
    conv_backward_single(tape.input, w.layer("down"), g_pre, nullptr, grads.layer("down"));
  }
  return grads;
}

}  // namespace

LossTerms loss_forward_d(const TensorD& x_orig, const TensorD& y_cnn, const TrainConfig& cfg,
                         const TensorD* y_l3, LossTape* tape) {
  cfg.validate();
  if (x_orig.channels != 3 || y_cnn.channels != 3)
    throw ShapeError("loss expects 3-channel tensors");
  if (y_cnn.height * 2 != x_orig.height || y_cnn.width * 2 != x_orig.width)
    throw ShapeError("network output must be half the original size");

  TensorD up = upsample2x(y_cnn, FilterKind::Bicubic);
  TensorD l3 = y_l3 ? *y_l3 : downsample2x(x_orig, FilterKind::Lanczos3);

  LossTerms t;
  t.distortion = mse(x_orig, up);
  t.rate_mse = mse(l3, y_cnn);

  std::vector<MsSsimTape> ms(3);
  double ms_sum = 0.0;
  for (int c = 0; c < 3; ++c)
    ms_sum += ms_ssim(l3.plane(c), y_cnn.plane(c), cfg.msssim_scales, tape ? &ms[c] : nullptr);
  t.rate_msssim = 1.0 - ms_sum / 3.0;
  t.total = t.distortion + cfg.lambda_dsnet * (t.rate_mse + cfg.omega * t.rate_msssim);

  if (tape) {
    tape->x = x_orig;
    tape->y = y_cnn;
    tape->y_l3 = std::move(l3);
    tape->y_up = std::move(up);
    tape->ms = std::move(ms);
    tape->terms = t;
  }
  return t;
}

TensorD loss_backward_d(const LossTape& tape, const TrainConfig& cfg) {
  const TensorD& y = tape.y;
  const double n_hi = static_cast<double>(tape.x.data.size());
  const double n_lo = static_cast<double>(y.data.size());

  // distortion through the (linear) bicubic up-sampling
  TensorD g_up(tape.y_up.channels, tape.y_up.height, tape.y_up.width);
  for (std::size_t i = 0; i < g_up.data.size(); ++i)
    g_up.data[i] = 2.0 * (tape.y_up.data[i] - tape.x.data[i]) / n_hi;
  TensorD g = upsample2x_adjoint(g_up, y.height, y.width, FilterKind::Bicubic);

  // rate MSE, direct
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] += cfg.lambda_dsnet * 2.0 * (y.data[i] - tape.y_l3.data[i]) / n_lo;

  // MS-SSIM term: total += lambda*omega*(1 - mean_c Q_c)
  const double upstream = -cfg.lambda_dsnet * cfg.omega / 3.0;
  for (int c = 0; c < 3; ++c) {
    PlaneD gp = ms_ssim_backward(tape.ms[static_cast<std::size_t>(c)], upstream);
    double* dst = g.channel(c);
    for (std::size_t i = 0; i < gp.size(); ++i) dst[i] += gp.data[i];
  }
  return g;
}

LossTerms loss_dsnet(const Tensor3& x_orig, const Tensor3& y_cnn, const TrainConfig& cfg) {
  return loss_forward_d(x_orig.cast<double>(), y_cnn.cast<double>(), cfg, nullptr, nullptr);
}

namespace {

struct GradWorkItem {
  const TensorD* x = nullptr;
  const TensorD* y_l3 = nullptr;  // optional precomputed rate target
};

// Shared batch-gradient core: mean over items, reduced in index order so
// results do not depend on the thread count.
ModelWeightsD grad_batch(const ModelWeightsD& params, std::span<const GradWorkItem> items,
                         const TrainConfig& cfg, const DSNetConfig& model_cfg,
                         LossTerms* mean_terms, int threads) {
  if (items.empty()) throw InputError("gradient needs a nonempty batch");
  std::vector<ModelWeightsD> item_grads(items.size());
  std::vector<LossTerms> item_terms(items.size());

  auto run_item = [&](std::size_t i) {
    DsnetTape<double> tape;
    TensorD y = dsnet_forward<double>(*items[i].x, params, model_cfg, &tape);
    LossTape lt;
    item_terms[i] = loss_forward_d(*items[i].x, y, cfg, items[i].y_l3, &lt);
    TensorD gy = loss_backward_d(lt, cfg);
    item_grads[i] = dsnet_backward(tape, params, model_cfg, gy);
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(items.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) run_item(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t]() {
        for (std::size_t i = static_cast<std::size_t>(t); i < items.size();
             i += static_cast<std::size_t>(n_threads))
          run_item(i);
      });
    for (auto& th : pool) th.join();
  }

  const double inv = 1.0 / static_cast<double>(items.size());
  ModelWeightsD sum = std::move(item_grads[0]);
  for (std::size_t i = 1; i < item_grads.size(); ++i)
    for (std::size_t l = 0; l < sum.layers.size(); ++l) {
      auto& dst = sum.layers[l];
      const auto& src = item_grads[i].layers[l];
      for (std::size_t k = 0; k < dst.weights.size(); ++k) dst.weights[k] += src.weights[k];
      for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] += src.bias[k];
    }
  for (auto& l : sum.layers) {
    for (auto& v : l.weights) v *= inv;
    for (auto& v : l.bias) v *= inv;
  }
  if (mean_terms) {
    LossTerms m;
    for (const auto& t : item_terms) {
      m.distortion += t.distortion * inv;
      m.rate_mse += t.rate_mse * inv;
      m.rate_msssim += t.rate_msssim * inv;
      m.total += t.total * inv;
    }
    *mean_terms = m;
  }
  return sum;
}

}  // namespace

ModelWeightsD grad_loss_d(const ModelWeightsD& params, std::span<const TensorD> batch,
                          const TrainConfig& cfg, const DSNetConfig& model_cfg,
                          LossTerms* mean_terms, int threads) {
  std::vector<GradWorkItem> items(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) items[i].x = &batch[i];
  return grad_batch(params, items, cfg, model_cfg, mean_terms, threads);
}

ModelWeightsD grad_loss(const ModelWeights& params, std::span<const Tensor3> batch,
                        const TrainConfig& cfg, const DSNetConfig& model_cfg,
                        LossTerms* mean_terms, int threads) {
  const ModelWeightsD pd = params.cast<double>();
  std::vector<TensorD> xs;
  xs.reserve(batch.size());
  for (const Tensor3& b : batch) xs.push_back(b.cast<double>());
  return grad_loss_d(pd, xs, cfg, model_cfg, mean_terms, threads);
}

double loss_value_d(const ModelWeightsD& params, std::span<const TensorD> batch,
                    const TrainConfig& cfg, const DSNetConfig& model_cfg) {
  if (batch.empty()) throw InputError("loss needs a nonempty batch");
  double total = 0.0;
  for (const TensorD& x : batch) {
    TensorD y = dsnet_forward<double>(x, params, model_cfg, nullptr);
    total += loss_forward_d(x, y, cfg, nullptr, nullptr).total;
  }
  return total / static_cast<double>(batch.size());
}

OptimizerState OptimizerState::make(const ModelWeights& w) {
  OptimizerState st;
  st.layers.resize(w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    st.layers[i].m_w.assign(w.layers[i].weights.size(), 0.0);
    st.layers[i].v_w.assign(w.layers[i].weights.size(), 0.0);
    st.layers[i].m_b.assign(w.layers[i].bias.size(), 0.0);
    st.layers[i].v_b.assign(w.layers[i].bias.size(), 0.0);
  }
  return st;
}

void adam_step(ModelWeights& params, const ModelWeightsD& grads, OptimizerState& state,
               const TrainConfig& cfg) {
  cfg.validate();
  if (params.layers.size() != grads.layers.size() || params.layers.size() != state.layers.size())
    throw ShapeError("optimizer state does not mirror the parameter layers");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double lr = cfg.learning_rate *
                    std::pow(cfg.lr_decay_factor, state.epoch / cfg.lr_decay_epochs);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](std::vector<float>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.l2 * static_cast<double>(p[i]);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] = static_cast<float>(static_cast<double>(p[i]) -
                                lr * mhat / (std::sqrt(vhat) + cfg.adam_epsilon));
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights, state.layers[l].m_w,
           state.layers[l].v_w);
    update(params.layers[l].bias, grads.layers[l].bias, state.layers[l].m_b, state.layers[l].v_b);
  }
}

TrainResult train(std::span<const Tensor3> blocks, const TrainConfig& cfg,
                  const DSNetConfig& model_cfg, const ModelWeights* initial, int threads) {
  cfg.validate();
  model_cfg.validate();
  if (static_cast<int>(blocks.size()) < cfg.batch_size)
    throw InputError("need at least batch_size training blocks");

  TrainResult result;
  result.weights = initial ? *initial : random_weights(model_cfg, cfg.seed);
  OptimizerState state = OptimizerState::make(result.weights);

  // Cast once; precompute each block's Lanczos3 rate target.
  std::vector<TensorD> xs;
  std::vector<TensorD> l3s;
  xs.reserve(blocks.size());
  l3s.reserve(blocks.size());
  for (const Tensor3& b : blocks) {
    xs.push_back(b.cast<double>());
    l3s.push_back(downsample2x(xs.back(), FilterKind::Lanczos3));
  }

  std::vector<std::size_t> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed ^ 0x8badf00d5eedULL);
  const std::size_t steps_per_epoch = blocks.size() / static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with modulo draws, deterministic across platforms.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
    state.epoch = epoch;
    LossTerms epoch_sum;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const ModelWeightsD pd = result.weights.cast<double>();
      std::vector<GradWorkItem> items(static_cast<std::size_t>(cfg.batch_size));
      for (int k = 0; k < cfg.batch_size; ++k) {
        const std::size_t idx = order[s * static_cast<std::size_t>(cfg.batch_size) +
                                      static_cast<std::size_t>(k)];
        items[static_cast<std::size_t>(k)].x = &xs[idx];
        items[static_cast<std::size_t>(k)].y_l3 = &l3s[idx];
      }
      LossTerms terms;
      ModelWeightsD grads = grad_batch(pd, items, cfg, model_cfg, &terms, threads);
      adam_step(result.weights, grads, state, cfg);
      result.step_loss.push_back(terms);
      epoch_sum.distortion += terms.distortion;
      epoch_sum.rate_mse += terms.rate_mse;
      epoch_sum.rate_msssim += terms.rate_msssim;
      epoch_sum.total += terms.total;
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    result.epoch_mean.push_back({epoch_sum.distortion * inv, epoch_sum.rate_mse * inv,
                                 epoch_sum.rate_msssim * inv, epoch_sum.total * inv});
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& weights_path,
                     const std::filesystem::path& optim_path, const ModelWeights& w,
                     const OptimizerState& st) {
  save_weights(w, weights_path);
  std::vector<RawTensorEntry> entries;
  auto push = [&entries](const std::string& name, const std::vector<double>& v) {
    RawTensorEntry e;
    e.name = name;
    e.dims = {static_cast<std::uint32_t>(v.size())};
    e.values.assign(v.begin(), v.end());
    entries.push_back(std::move(e));
  };
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const std::string& n = w.layers[i].name;
    push("adam.m." + n, st.layers[i].m_w);
    push("adam.v." + n, st.layers[i].v_w);
    push("adam.m." + n + ".bias", st.layers[i].m_b);
    push("adam.v." + n + ".bias", st.layers[i].v_b);
  }
  RawTensorEntry sc;
  sc.name = "adam.state";
  sc.dims = {2};
  sc.values = {static_cast<float>(st.step), static_cast<float>(st.epoch)};
  entries.push_back(std::move(sc));
  save_raw_entries(optim_path, entries);
}

std::pair<ModelWeights, OptimizerState> load_checkpoint(const std::filesystem::path& weights_path,
                                                        const std::filesystem::path& optim_path,
                                                        const DSNetConfig& cfg) {
  ModelWeights w = load_weights(weights_path, cfg);
  OptimizerState st = OptimizerState::make(w);
  const std::vector<RawTensorEntry> entries = load_raw_entries(optim_path);
  auto find = [&entries](const std::string& name) -> const RawTensorEntry& {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw FormatError("optimizer sidecar misses entry " + name);
  };
  auto pull = [&find](const std::string& name, std::vector<double>& dst) {
    const RawTensorEntry& e = find(name);
    if (e.values.size() != dst.size())
      throw FormatError("optimizer entry " + name + " has mismatched size");
    dst.assign(e.values.begin(), e.values.end());
  };
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const std::string& n = w.layers[i].name;
    pull("adam.m." + n, st.layers[i].m_w);
    pull("adam.v." + n, st.layers[i].v_w);
    pull("adam.m." + n + ".bias", st.layers[i].m_b);
    pull("adam.v." + n + ".bias", st.layers[i].v_b);
  }
  const RawTensorEntry& sc = find("adam.state");
  if (sc.values.size() != 2) throw FormatError("optimizer state entry has wrong size");
  st.step = static_cast<std::int64_t>(sc.values[0]);
  st.epoch = static_cast<int>(sc.values[1]);
  return {std::move(w), std::move(st)};
}

}  // namespace sra

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sra/dsnet.hpp"
#include "sra/msssim.hpp"
#include "sra/tensor.hpp"

namespace sra {

struct TrainConfig {
  double lambda_dsnet = 30.0;
  double omega = 1.0 / 6.0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 16;
  int epochs = 200;
  double lr_decay_factor = 0.1;  // applied once per lr_decay_epochs
  int lr_decay_epochs = 100;
  double l2 = 0.0;  // optional L2 coefficient, off by default
  int msssim_scales = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Decomposed rate-distortion surrogate:
//   total = distortion + lambda * (rate_mse + omega * rate_msssim)
// where distortion compares the original block against the bicubic
// up-sampled network output, and the rate terms compare the network
// output against the Lanczos3 down-sampled original.
struct LossTerms {
  double distortion = 0.0;
  double rate_mse = 0.0;
  double rate_msssim = 0.0;
  double total = 0.0;
};

LossTerms loss_dsnet(const Tensor3& x_orig, const Tensor3& y_cnn, const TrainConfig& cfg);

// Double-precision internals, shared by training and the gradient tests.
struct LossTape {
  TensorD x, y, y_l3, y_up;
  std::vector<MsSsimTape> ms;  // one per channel
  LossTerms terms;
};

// y_l3 may be passed in when precomputed (it only depends on x).
LossTerms loss_forward_d(const TensorD& x_orig, const TensorD& y_cnn, const TrainConfig& cfg,
                         const TensorD* y_l3, LossTape* tape);
// d(total)/d(y_cnn).
TensorD loss_backward_d(const LossTape& tape, const TrainConfig& cfg);

// Mean gradient of the full loss over a batch, backpropagated through the
// network. Gradients are ModelWeights-shaped, in doubles.
ModelWeightsD grad_loss(const ModelWeights& params, std::span<const Tensor3> batch,
                        const TrainConfig& cfg, const DSNetConfig& model_cfg,
                        LossTerms* mean_terms = nullptr, int threads = 1);

// Same, on double-precision parameters (finite-difference harness entry).
ModelWeightsD grad_loss_d(const ModelWeightsD& params, std::span<const TensorD> batch,
                          const TrainConfig& cfg, const DSNetConfig& model_cfg,
                          LossTerms* mean_terms = nullptr, int threads = 1);

// Batch-mean loss without gradients, for finite differencing.
double loss_value_d(const ModelWeightsD& params, std::span<const TensorD> batch,
                    const TrainConfig& cfg, const DSNetConfig& model_cfg);

// Per-parameter Adam accumulators; shapes mirror the weight layers.
struct OptimizerState {
  struct LayerState {
    std::vector<double> m_w, v_w, m_b, v_b;
  };
  std::vector<LayerState> layers;
  std::int64_t step = 0;
  int epoch = 0;  // maintained by the training loop for lr decay

  static OptimizerState make(const ModelWeights& w);
};

// Bias-corrected Adam step on float parameters with double accumulators.
// The effective learning rate is cfg.learning_rate decayed by
// cfg.lr_decay_factor for each completed lr_decay_epochs in state.epoch.
void adam_step(ModelWeights& params, const ModelWeightsD& grads, OptimizerState& state,
               const TrainConfig& cfg);

struct TrainResult {
  ModelWeights weights;
  std::vector<LossTerms> epoch_mean;  // per-epoch mean of batch losses
  std::vector<LossTerms> step_loss;   // per-step batch loss
};

// Seeded, deterministic mini-batch loop over pre-extracted blocks.
TrainResult train(std::span<const Tensor3> blocks, const TrainConfig& cfg,
                  const DSNetConfig& model_cfg, const ModelWeights* initial = nullptr,
                  int threads = 0);

// Checkpoint = weight file + sidecar with Adam moments in the same
// container format (entries "adam.m.<layer>", "adam.v.<layer>", ... and a
// scalar entry "adam.state" = [step, epoch]).
void save_checkpoint(const std::filesystem::path& weights_path,
                     const std::filesystem::path& optim_path, const ModelWeights& w,
                     const OptimizerState& st);
std::pair<ModelWeights, OptimizerState> load_checkpoint(const std::filesystem::path& weights_path,
                                                        const std::filesystem::path& optim_path,
                                                        const DSNetConfig& cfg);

}  // namespace sra

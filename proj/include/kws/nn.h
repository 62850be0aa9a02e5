// Copyright 2026 The kws-dtw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KWS_NN_H_
#define KWS_NN_H_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kws {

// Activations are time-major: one row per frame, one column per channel.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Predictions and the loss are clamped to [kProbEpsilon, 1 - kProbEpsilon].
inline constexpr double kProbEpsilon = 1e-7;

enum class LayerKind : uint8_t {
  kConv1d = 1,
  kLeakyRelu = 2,
  kGlobalMaxPoolTime = 3,
  kDense = 4,
  kDropout = 5,
  kGaussianNoise = 6,
  kSigmoid = 7,
};

std::string_view LayerKindName(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kSigmoid;
  int filters = 0;       // conv1d
  int kernel_width = 1;  // conv1d
  int stride = 1;        // conv1d
  int units = 0;         // dense
  double drop_prob = 0.0;
  double noise_stddev = 0.0;
  double leak = 1.0 / 3.0;

  static LayerSpec Conv1d(int filters, int kernel_width, int stride = 1);
  static LayerSpec LeakyRelu(double leak = 1.0 / 3.0);
  static LayerSpec GlobalMaxPoolTime();
  static LayerSpec Dense(int units);
  static LayerSpec Dropout(double drop_prob);
  static LayerSpec GaussianNoise(double stddev);
  static LayerSpec Sigmoid();

  bool operator==(const LayerSpec&) const = default;
};

// Weight and bias of one layer; both empty for parameter-free layers.
// conv1d: weight is filters x (kernel_width * in_channels), laid out so that
// weight(f, k * C + c) multiplies input frame (t + k), channel c.
// dense: weight is units x in_features.
struct LayerParams {
  Matrix weight;
  Vector bias;

  bool empty() const { return weight.size() == 0 && bias.size() == 0; }
};

// Architecture knobs for the standard conv -> pool -> dense stack.
struct ArchitectureConfig {
  std::vector<int> conv_filters = {80, 80, 96, 96, 128, 128, 256, 256, 512, 512};
  int kernel_width = 5;
  int stride = 1;
  std::vector<int> dense_units = {3000, 3000};
  double dropout = 0.5;
  bool use_gaussian_noise = true;
  double noise_stddev = 0.1;
  double leak = 1.0 / 3.0;
};

// [noise] (conv, leaky)* pool (dense, leaky, [dropout])* dense(L) sigmoid
std::vector<LayerSpec> BuildLayerSpecs(const ArchitectureConfig& config, int num_outputs);

class CnnModel {
 public:
  CnnModel() = default;
  // Validates the layer chain and draws fan-in scaled uniform weights from
  // `seed`. Biases start at zero.
  CnnModel(int input_dim, std::vector<LayerSpec> layers, uint64_t seed);

  // Rebuilds a model from stored parts, checking every parameter shape.
  static CnnModel FromParts(int input_dim, std::vector<LayerSpec> layers, uint64_t seed,
                            std::vector<LayerParams> params);

  int input_dim() const { return input_dim_; }
  int num_outputs() const { return num_outputs_; }
  uint64_t seed() const { return seed_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<LayerParams>& params() const { return params_; }
  // Bumps the generation, invalidating outstanding forward caches.
  std::vector<LayerParams>& mutable_params() {
    ++generation_;
    return params_;
  }
  uint64_t generation() const { return generation_; }

  // Shortest input the conv stack accepts (its receptive field).
  int MinInputFrames() const { return min_input_frames_; }
  size_t NumParameters() const;

 private:
  void Validate();
  std::vector<int> InputWidths() const;

  int input_dim_ = 0;
  int num_outputs_ = 0;
  int min_input_frames_ = 1;
  uint64_t seed_ = 0;
  uint64_t generation_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<LayerParams> params_;
};

enum class Mode { kTrain, kEval };

// Everything backward needs from a train-mode forward pass, including the
// dropout masks and noise draws so the pass can be differentiated exactly.
struct ForwardCache {
  std::vector<Matrix> inputs;            // input of each layer
  std::vector<Matrix> draws;             // dropout mask / additive noise
  std::vector<std::vector<int>> argmax;  // pooled frame per channel
  Vector raw_output;                     // unclamped sigmoid output
  const CnnModel* model = nullptr;
  uint64_t generation = 0;
  Mode mode = Mode::kEval;
};

// Runs the network on a T x D input. Eval mode is deterministic and ignores
// `rng`; train mode needs `rng` when the model has dropout or noise layers.
// Throws InputTooShort / DimensionMismatch.
Vector Forward(const CnnModel& model, const Matrix& input, Mode mode, Rng* rng = nullptr,
               ForwardCache* cache = nullptr);

// Summed binary cross-entropy with predictions clamped to [eps, 1 - eps].
double BceLoss(std::span<const double> targets, std::span<const double> predictions);

struct Gradients {
  std::vector<LayerParams> layers;
  double loss = 0.0;

  static Gradients ZerosLike(const CnnModel& model);
  // this += scale * other
  void Add(const Gradients& other, double scale);
  bool AllZero() const;
};

// Gradient of BceLoss(targets, Forward(...)) for every parameter, from a
// train-mode cache of the current model generation. Optionally also returns
// the gradient with respect to the input. Throws StaleActivations.
Gradients Backward(const CnnModel& model, const ForwardCache& cache,
                   std::span<const double> targets, Matrix* input_grad = nullptr);

// Linear interpolation from lr_start to lr_end over total_steps, then flat.
struct LrSchedule {
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  int64_t total_steps = 1;

  double At(int64_t step) const;
};

struct AdamState {
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LrSchedule schedule;
  std::vector<LayerParams> first_moment;
  std::vector<LayerParams> second_moment;

  static AdamState For(const CnnModel& model, const LrSchedule& schedule);
};

// One bias-corrected Adam update at learning rate schedule.At(step).
void AdamStep(AdamState& state, CnnModel& model, const Gradients& grads);

// "KWMD" | u32 version | u64 config_tag | u32 input_dim | u64 seed |
// u32 num_layers | per layer: u8 kind, 4 * u32, 3 * f64 | per layer tensors |
// u8 has_optimizer [| optimizer state] | u64 CRC-64
// Tensors are (u32 rows, u32 cols, f64 data) and (u32 n, f64 data).
void SaveModel(const CnnModel& model, const AdamState* optimizer, const std::string& path,
               uint64_t config_tag = 0);

struct LoadedModel {
  CnnModel model;
  std::optional<AdamState> optimizer;
  uint64_t config_tag = 0;
};

// Throws VersionError / CorruptModel.
LoadedModel LoadModel(const std::string& path);

}  // namespace kws

#endif  // KWS_NN_H_

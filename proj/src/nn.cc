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

#include "kws/nn.h"

#include <algorithm>
#include <cmath>

#include "kws/binary_io.h"
#include "kws/error.h"

namespace kws {

namespace {

constexpr char kModelMagic[] = "KWMD";
constexpr uint32_t kModelVersion = 1;

using ConstWindowMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

bool IsTimeLayer(LayerKind k) {
  return k == LayerKind::kConv1d || k == LayerKind::kLeakyRelu || k == LayerKind::kDropout ||
         k == LayerKind::kGaussianNoise;
}

bool IsVectorLayer(LayerKind k) {
  return k == LayerKind::kDense || k == LayerKind::kLeakyRelu || k == LayerKind::kDropout ||
         k == LayerKind::kGaussianNoise || k == LayerKind::kSigmoid;
}

// Sliding windows of a row-major T x C input as a (T_out x K*C) view.
ConstWindowMap Windows(const Matrix& x, const LayerSpec& spec) {
  const Eigen::Index channels = x.cols();
  const Eigen::Index out_len = (x.rows() - spec.kernel_width) / spec.stride + 1;
  return ConstWindowMap(x.data(), out_len, spec.kernel_width * channels,
                        Eigen::OuterStride<>(spec.stride * channels));
}

double Sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void PutMatrix(ByteWriter& w, const Matrix& m) {
  w.PutU32(static_cast<uint32_t>(m.rows()));
  w.PutU32(static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) w.PutF64(m.data()[i]);
}

void PutVector(ByteWriter& w, const Vector& v) {
  w.PutU32(static_cast<uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.PutF64(v(i));
}

Matrix GetMatrix(ByteReader& r) {
  const uint32_t rows = r.GetU32();
  const uint32_t cols = r.GetU32();
  if (static_cast<uint64_t>(rows) * cols * 8 > r.remaining()) r.Corrupt("tensor overruns file");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.GetF64();
  return m;
}

Vector GetVector(ByteReader& r) {
  const uint32_t n = r.GetU32();
  if (static_cast<uint64_t>(n) * 8 > r.remaining()) r.Corrupt("tensor overruns file");
  Vector v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.GetF64();
  return v;
}

void PutParamList(ByteWriter& w, const std::vector<LayerParams>& params) {
  for (const auto& p : params) {
    PutMatrix(w, p.weight);
    PutVector(w, p.bias);
  }
}

std::vector<LayerParams> GetParamList(ByteReader& r, size_t n) {
  std::vector<LayerParams> params(n);
  for (auto& p : params) {
    p.weight = GetMatrix(r);
    p.bias = GetVector(r);
  }
  return params;
}

bool SameShapes(const std::vector<LayerParams>& a, const std::vector<LayerParams>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].weight.rows() != b[i].weight.rows() || a[i].weight.cols() != b[i].weight.cols() ||
        a[i].bias.size() != b[i].bias.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kLeakyRelu: return "leaky_relu";
    case LayerKind::kGlobalMaxPoolTime: return "global_max_pool_time";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kGaussianNoise: return "gaussian_noise";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerSpec LayerSpec::Conv1d(int filters, int kernel_width, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kConv1d;
  s.filters = filters;
  s.kernel_width = kernel_width;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::LeakyRelu(double leak) {
  LayerSpec s;
  s.kind = LayerKind::kLeakyRelu;
  s.leak = leak;
  return s;
}

LayerSpec LayerSpec::GlobalMaxPoolTime() {
  LayerSpec s;
  s.kind = LayerKind::kGlobalMaxPoolTime;
  return s;
}

LayerSpec LayerSpec::Dense(int units) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::Dropout(double drop_prob) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.drop_prob = drop_prob;
  return s;
}

LayerSpec LayerSpec::GaussianNoise(double stddev) {
  LayerSpec s;
  s.kind = LayerKind::kGaussianNoise;
  s.noise_stddev = stddev;
  return s;
}

LayerSpec LayerSpec::Sigmoid() { return LayerSpec{}; }

std::vector<LayerSpec> BuildLayerSpecs(const ArchitectureConfig& config, int num_outputs) {
  std::vector<LayerSpec> layers;
  if (config.use_gaussian_noise && config.noise_stddev > 0) {
    layers.push_back(LayerSpec::GaussianNoise(config.noise_stddev));
  }
  for (int filters : config.conv_filters) {
    layers.push_back(LayerSpec::Conv1d(filters, config.kernel_width, config.stride));
    layers.push_back(LayerSpec::LeakyRelu(config.leak));
  }
  layers.push_back(LayerSpec::GlobalMaxPoolTime());
  for (int units : config.dense_units) {
    layers.push_back(LayerSpec::Dense(units));
    layers.push_back(LayerSpec::LeakyRelu(config.leak));
    if (config.dropout > 0) layers.push_back(LayerSpec::Dropout(config.dropout));
  }
  layers.push_back(LayerSpec::Dense(num_outputs));
  layers.push_back(LayerSpec::Sigmoid());
  return layers;
}

CnnModel::CnnModel(int input_dim, std::vector<LayerSpec> layers, uint64_t seed)
    : input_dim_(input_dim), seed_(seed), layers_(std::move(layers)) {
  Validate();
  const std::vector<int> widths = InputWidths();
  Rng rng(seed);
  params_.resize(layers_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = layers_[l];
    int fan_in = 0, fan_out = 0;
    if (spec.kind == LayerKind::kConv1d) {
      fan_in = spec.kernel_width * widths[l];
      fan_out = spec.filters;
    } else if (spec.kind == LayerKind::kDense) {
      fan_in = widths[l];
      fan_out = spec.units;
    } else {
      continue;
    }
    const double leak = 1.0 / 3.0;
    const double limit = std::sqrt(6.0 / ((1.0 + leak * leak) * fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    params_[l].weight = std::move(w);
    params_[l].bias = Vector::Zero(fan_out);
  }
}

CnnModel CnnModel::FromParts(int input_dim, std::vector<LayerSpec> layers, uint64_t seed,
                             std::vector<LayerParams> params) {
  CnnModel model;
  model.input_dim_ = input_dim;
  model.seed_ = seed;
  model.layers_ = std::move(layers);
  model.Validate();
  const std::vector<int> widths = model.InputWidths();
  if (params.size() != model.layers_.size()) {
    Fail(ErrorCode::kCorruptModel, "parameter list does not match layer count");
  }
  for (size_t l = 0; l < model.layers_.size(); ++l) {
    const LayerSpec& spec = model.layers_[l];
    Eigen::Index rows = 0, cols = 0;
    if (spec.kind == LayerKind::kConv1d) {
      rows = spec.filters;
      cols = static_cast<Eigen::Index>(spec.kernel_width) * widths[l];
    } else if (spec.kind == LayerKind::kDense) {
      rows = spec.units;
      cols = widths[l];
    }
    if (params[l].weight.rows() != rows || params[l].weight.cols() != cols ||
        params[l].bias.size() != rows) {
      Fail(ErrorCode::kCorruptModel, "parameter shape mismatch at layer " + std::to_string(l));
    }
  }
  model.params_ = std::move(params);
  return model;
}

std::vector<int> CnnModel::InputWidths() const {
  std::vector<int> widths;
  int width = input_dim_;
  for (const auto& spec : layers_) {
    widths.push_back(width);
    if (spec.kind == LayerKind::kConv1d) width = spec.filters;
    if (spec.kind == LayerKind::kDense) width = spec.units;
  }
  widths.push_back(width);
  return widths;
}

void CnnModel::Validate() {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kConfigError, "model: " + what); };
  if (input_dim_ < 1) bad("input dimension must be positive");
  if (layers_.empty() || layers_.back().kind != LayerKind::kSigmoid) {
    bad("final layer must be sigmoid");
  }
  size_t pool_index = layers_.size();
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& s = layers_[l];
    if (s.kind == LayerKind::kGlobalMaxPoolTime) {
      if (pool_index != layers_.size()) bad("more than one global_max_pool_time layer");
      pool_index = l;
      continue;
    }
    if (s.kind == LayerKind::kSigmoid && l + 1 != layers_.size()) bad("sigmoid must be last");
    const bool before_pool = pool_index == layers_.size();
    if (before_pool && !IsTimeLayer(s.kind)) {
      bad(std::string(LayerKindName(s.kind)) + " before the global pool");
    }
    if (!before_pool && !IsVectorLayer(s.kind)) {
      bad(std::string(LayerKindName(s.kind)) + " after the global pool");
    }
    switch (s.kind) {
      case LayerKind::kConv1d:
        if (s.filters < 1 || s.kernel_width < 1 || s.stride < 1) bad("bad conv1d shape");
        break;
      case LayerKind::kDense:
        if (s.units < 1) bad("dense units must be positive");
        break;
      case LayerKind::kDropout:
        if (!(s.drop_prob >= 0 && s.drop_prob < 1)) bad("dropout p must be in [0, 1)");
        break;
      case LayerKind::kGaussianNoise:
        if (!(s.noise_stddev >= 0)) bad("noise stddev must be >= 0");
        break;
      case LayerKind::kLeakyRelu:
        if (!std::isfinite(s.leak)) bad("leak must be finite");
        break;
      default: break;
    }
  }
  if (pool_index == layers_.size()) bad("missing global_max_pool_time layer");
  num_outputs_ = InputWidths().back();
  int frames = 1;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (it->kind == LayerKind::kConv1d) frames = (frames - 1) * it->stride + it->kernel_width;
  }
  min_input_frames_ = frames;
}

size_t CnnModel::NumParameters() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.weight.size() + p.bias.size());
  return n;
}

Vector Forward(const CnnModel& model, const Matrix& input, Mode mode, Rng* rng,
               ForwardCache* cache) {
  if (input.cols() != model.input_dim()) {
    Fail(ErrorCode::kDimensionMismatch, "input has D=" + std::to_string(input.cols()) +
                                            ", model expects " + std::to_string(model.input_dim()));
  }
  if (input.rows() < model.MinInputFrames()) {
    Fail(ErrorCode::kInputTooShort, "input of " + std::to_string(input.rows()) +
                                        " frames; minimum length is " +
                                        std::to_string(model.MinInputFrames()));
  }
  const auto& layers = model.layers();
  const auto& params = model.params();
  if (cache != nullptr) {
    cache->inputs.assign(layers.size(), Matrix());
    cache->draws.assign(layers.size(), Matrix());
    cache->argmax.assign(layers.size(), {});
    cache->model = &model;
    cache->generation = model.generation();
    cache->mode = mode;
  }
  const bool train = mode == Mode::kTrain;

  Matrix x = input;
  Vector out;
  for (size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    if (cache != nullptr) cache->inputs[l] = x;
    switch (spec.kind) {
      case LayerKind::kConv1d: {
        Matrix y = Windows(x, spec) * params[l].weight.transpose();
        y.rowwise() += params[l].bias.transpose();
        x = std::move(y);
        break;
      }
      case LayerKind::kLeakyRelu:
        x = x.unaryExpr([a = spec.leak](double v) { return v > 0 ? v : a * v; });
        break;
      case LayerKind::kGlobalMaxPoolTime: {
        Matrix y(1, x.cols());
        std::vector<int> arg(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          Eigen::Index r = 0;
          y(0, c) = x.col(c).maxCoeff(&r);
          arg[c] = static_cast<int>(r);
        }
        if (cache != nullptr) cache->argmax[l] = std::move(arg);
        x = std::move(y);
        break;
      }
      case LayerKind::kDense: {
        Matrix y = x * params[l].weight.transpose();
        y.rowwise() += params[l].bias.transpose();
        x = std::move(y);
        break;
      }
      case LayerKind::kDropout: {
        if (!train || spec.drop_prob == 0) break;
        if (rng == nullptr) Fail(ErrorCode::kConfigError, "train-mode dropout needs an rng");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double keep_scale = 1.0 / (1.0 - spec.drop_prob);
        Matrix mask(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i) {
          mask.data()[i] = u(*rng) < spec.drop_prob ? 0.0 : keep_scale;
        }
        x = x.cwiseProduct(mask);
        if (cache != nullptr) cache->draws[l] = std::move(mask);
        break;
      }
      case LayerKind::kGaussianNoise: {
        if (!train || spec.noise_stddev == 0) break;
        if (rng == nullptr) Fail(ErrorCode::kConfigError, "train-mode noise needs an rng");
        std::normal_distribution<double> n(0.0, spec.noise_stddev);
        Matrix noise(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = n(*rng);
        x += noise;
        if (cache != nullptr) cache->draws[l] = std::move(noise);
        break;
      }
      case LayerKind::kSigmoid: {
        out.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) out(j) = Sigmoid(x(0, j));
        if (cache != nullptr) cache->raw_output = out;
        for (Eigen::Index j = 0; j < out.size(); ++j) {
          out(j) = std::clamp(out(j), kProbEpsilon, 1.0 - kProbEpsilon);
        }
        break;
      }
    }
  }
  return out;
}

double BceLoss(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    Fail(ErrorCode::kDimensionMismatch, "BCE of " + std::to_string(targets.size()) +
                                            " targets vs " + std::to_string(predictions.size()) +
                                            " predictions");
  }
  double loss = 0.0;
  for (size_t j = 0; j < targets.size(); ++j) {
    const double p = std::clamp(predictions[j], kProbEpsilon, 1.0 - kProbEpsilon);
    loss -= targets[j] * std::log(p) + (1.0 - targets[j]) * std::log(1.0 - p);
  }
  return loss;
}

Gradients Gradients::ZerosLike(const CnnModel& model) {
  Gradients g;
  for (const auto& p : model.params()) {
    g.layers.push_back(
        {Matrix::Zero(p.weight.rows(), p.weight.cols()), Vector::Zero(p.bias.size())});
  }
  return g;
}

void Gradients::Add(const Gradients& other, double scale) {
  for (size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].empty()) continue;
    layers[l].weight += scale * other.layers[l].weight;
    layers[l].bias += scale * other.layers[l].bias;
  }
  loss += scale * other.loss;
}

bool Gradients::AllZero() const {
  for (const auto& g : layers) {
    if (!g.weight.isZero(0.0) || !g.bias.isZero(0.0)) return false;
  }
  return true;
}

Gradients Backward(const CnnModel& model, const ForwardCache& cache,
                   std::span<const double> targets, Matrix* input_grad) {
  if (cache.model != &model || cache.generation != model.generation() ||
      cache.mode != Mode::kTrain || cache.inputs.size() != model.layers().size()) {
    Fail(ErrorCode::kStaleActivations,
         "forward cache does not belong to the current model parameters in train mode");
  }
  if (targets.size() != static_cast<size_t>(model.num_outputs())) {
    Fail(ErrorCode::kDimensionMismatch, "expected " + std::to_string(model.num_outputs()) +
                                            " targets, got " + std::to_string(targets.size()));
  }
  const auto& layers = model.layers();
  const auto& params = model.params();
  Gradients grads = Gradients::ZerosLike(model);
  {
    std::vector<double> clamped(cache.raw_output.size());
    for (size_t j = 0; j < clamped.size(); ++j) {
      clamped[j] = std::clamp(cache.raw_output(j), kProbEpsilon, 1.0 - kProbEpsilon);
    }
    grads.loss = BceLoss(targets, clamped);
  }

  // Sigmoid + BCE: d loss / d z = y_hat - y.
  Matrix delta(1, cache.raw_output.size());
  for (Eigen::Index j = 0; j < delta.cols(); ++j) delta(0, j) = cache.raw_output(j) - targets[j];

  for (size_t l = layers.size() - 1; l-- > 0;) {
    const LayerSpec& spec = layers[l];
    const Matrix& x = cache.inputs[l];
    switch (spec.kind) {
      case LayerKind::kConv1d: {
        const ConstWindowMap win = Windows(x, spec);
        grads.layers[l].weight.noalias() = delta.transpose() * win;
        grads.layers[l].bias = delta.colwise().sum().transpose();
        const Matrix dwin = delta * params[l].weight;
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        const Eigen::Index span = dwin.cols();
        for (Eigen::Index t = 0; t < dwin.rows(); ++t) {
          Eigen::Map<Eigen::VectorXd>(dx.data() + t * spec.stride * x.cols(), span) +=
              dwin.row(t).transpose();
        }
        delta = std::move(dx);
        break;
      }
      case LayerKind::kLeakyRelu:
        delta =
            delta.cwiseProduct(x.unaryExpr([a = spec.leak](double v) { return v > 0 ? 1.0 : a; }));
        break;
      case LayerKind::kGlobalMaxPoolTime: {
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) dx(cache.argmax[l][c], c) = delta(0, c);
        delta = std::move(dx);
        break;
      }
      case LayerKind::kDense:
        grads.layers[l].weight.noalias() = delta.transpose() * x;
        grads.layers[l].bias = delta.transpose();
        delta = delta * params[l].weight;
        break;
      case LayerKind::kDropout:
        if (cache.draws[l].size() != 0) delta = delta.cwiseProduct(cache.draws[l]);
        break;
      case LayerKind::kGaussianNoise:
      case LayerKind::kSigmoid: break;
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return grads;
}

double LrSchedule::At(int64_t step) const {
  if (total_steps <= 0) return lr_end;
  const double frac = std::min(static_cast<double>(step) / static_cast<double>(total_steps), 1.0);
  if (frac >= 1.0) return lr_end;
  return lr_start + (lr_end - lr_start) * frac;
}

AdamState AdamState::For(const CnnModel& model, const LrSchedule& schedule) {
  AdamState state;
  state.schedule = schedule;
  state.first_moment = Gradients::ZerosLike(model).layers;
  state.second_moment = state.first_moment;
  return state;
}

void AdamStep(AdamState& state, CnnModel& model, const Gradients& grads) {
  if (!SameShapes(state.first_moment, grads.layers) ||
      !SameShapes(state.first_moment, model.params())) {
    Fail(ErrorCode::kDimensionMismatch, "optimizer state does not match the model");
  }
  const double lr = state.schedule.At(state.step);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](double* p, double* m, double* v, const double* g, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  auto& params = model.mutable_params();
  for (size_t l = 0; l < params.size(); ++l) {
    if (params[l].empty()) continue;
    update(params[l].weight.data(), state.first_moment[l].weight.data(),
           state.second_moment[l].weight.data(), grads.layers[l].weight.data(),
           params[l].weight.size());
    update(params[l].bias.data(), state.first_moment[l].bias.data(),
           state.second_moment[l].bias.data(), grads.layers[l].bias.data(), params[l].bias.size());
  }
}

void SaveModel(const CnnModel& model, const AdamState* optimizer, const std::string& path,
               uint64_t config_tag) {
  ByteWriter w;
  w.PutBytes(std::string_view(kModelMagic, 4));
  w.PutU32(kModelVersion);
  w.PutU64(config_tag);
  w.PutU32(static_cast<uint32_t>(model.input_dim()));
  w.PutU64(model.seed());
  w.PutU32(static_cast<uint32_t>(model.layers().size()));
  for (const auto& s : model.layers()) {
    w.PutU8(static_cast<uint8_t>(s.kind));
    w.PutU32(static_cast<uint32_t>(s.filters));
    w.PutU32(static_cast<uint32_t>(s.kernel_width));
    w.PutU32(static_cast<uint32_t>(s.stride));
    w.PutU32(static_cast<uint32_t>(s.units));
    w.PutF64(s.drop_prob);
    w.PutF64(s.noise_stddev);
    w.PutF64(s.leak);
  }
  PutParamList(w, model.params());
  w.PutU8(optimizer != nullptr ? 1 : 0);
  if (optimizer != nullptr) {
    w.PutU64(static_cast<uint64_t>(optimizer->step));
    w.PutF64(optimizer->beta1);
    w.PutF64(optimizer->beta2);
    w.PutF64(optimizer->epsilon);
    w.PutF64(optimizer->schedule.lr_start);
    w.PutF64(optimizer->schedule.lr_end);
    w.PutU64(static_cast<uint64_t>(optimizer->schedule.total_steps));
    PutParamList(w, optimizer->first_moment);
    PutParamList(w, optimizer->second_moment);
  }
  w.PutChecksum();
  WriteFileAtomic(path, w.bytes());
}

LoadedModel LoadModel(const std::string& path) {
  CheckedFile file =
      ReadChecked(path, std::string_view(kModelMagic, 4), kModelVersion, ErrorCode::kCorruptModel);
  ByteReader r = PayloadReader(file, ErrorCode::kCorruptModel);
  LoadedModel loaded;
  loaded.config_tag = r.GetU64();
  const int input_dim = static_cast<int>(r.GetU32());
  const uint64_t seed = r.GetU64();
  const uint32_t num_layers = r.GetU32();
  if (num_layers == 0 || num_layers > 4096) r.Corrupt("bad layer count");
  std::vector<LayerSpec> layers(num_layers);
  for (auto& s : layers) {
    const uint8_t kind = r.GetU8();
    if (kind < 1 || kind > 7) r.Corrupt("unknown layer kind " + std::to_string(kind));
    s.kind = static_cast<LayerKind>(kind);
    s.filters = static_cast<int>(r.GetU32());
    s.kernel_width = static_cast<int>(r.GetU32());
    s.stride = static_cast<int>(r.GetU32());
    s.units = static_cast<int>(r.GetU32());
    s.drop_prob = r.GetF64();
    s.noise_stddev = r.GetF64();
    s.leak = r.GetF64();
  }
  std::vector<LayerParams> params = GetParamList(r, num_layers);
  try {
    loaded.model = CnnModel::FromParts(input_dim, std::move(layers), seed, std::move(params));
  } catch (const Error& e) {
    Fail(ErrorCode::kCorruptModel, e.what());
  }
  if (r.GetU8() != 0) {
    AdamState state;
    state.step = static_cast<int64_t>(r.GetU64());
    state.beta1 = r.GetF64();
    state.beta2 = r.GetF64();
    state.epsilon = r.GetF64();
    state.schedule.lr_start = r.GetF64();
    state.schedule.lr_end = r.GetF64();
    state.schedule.total_steps = static_cast<int64_t>(r.GetU64());
    state.first_moment = GetParamList(r, num_layers);
    state.second_moment = GetParamList(r, num_layers);
    if (!SameShapes(state.first_moment, loaded.model.params()) ||
        !SameShapes(state.second_moment, loaded.model.params())) {
      r.Corrupt("optimizer state shape mismatch");
    }
    loaded.optimizer = std::move(state);
  }
  if (!r.AtEnd()) r.Corrupt("trailing bytes");
  return loaded;
}

}  // namespace kws

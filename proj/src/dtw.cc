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

#include "kws/dtw.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include "kws/error.h"

namespace kws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ClampDistance(double d) { return std::clamp(d, 0.0, 2.0); }

}  // namespace

void SweepConfig::Validate() const {
  if (frame_skip < 1) Fail(ErrorCode::kConfigError, "frame_skip must be >= 1");
  if (window_factors.empty()) Fail(ErrorCode::kConfigError, "window_factors is empty");
  for (double f : window_factors) {
    if (!(f > 0)) Fail(ErrorCode::kConfigError, "window factors must be positive");
  }
  if (band_width && *band_width < 0) Fail(ErrorCode::kConfigError, "band_width must be >= 0");
}

double CosineDistance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    Fail(ErrorCode::kDimensionMismatch,
         "frame dims " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) Fail(ErrorCode::kZeroNormFrame, "zero-norm frame");
  return ClampDistance(1.0 - dot / std::sqrt(xx * yy));
}

Eigen::MatrixXd CosineDistanceMatrix(const FrameMatrix& a, const FrameMatrix& b) {
  if (a.cols() != b.cols()) {
    Fail(ErrorCode::kDimensionMismatch,
         "feature dims " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  const Eigen::Index dim = a.cols();
  auto sq_norms = [dim](const FrameMatrix& m) {
    Eigen::VectorXd out(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double* p = m.row(r).data();
      double s = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) s += p[i] * p[i];
      if (s == 0.0) Fail(ErrorCode::kZeroNormFrame, "zero-norm frame at row " + std::to_string(r));
      out(r) = s;
    }
    return out;
  };
  const Eigen::VectorXd na = sq_norms(a);
  const Eigen::VectorXd nb = sq_norms(b);
  Eigen::MatrixXd dist(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    const double* y = b.row(j).data();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double* x = a.row(i).data();
      double dot = 0.0;
      for (Eigen::Index k = 0; k < dim; ++k) dot += x[k] * y[k];
      dist(i, j) = ClampDistance(1.0 - dot / std::sqrt(na(i) * nb(j)));
    }
  }
  return dist;
}

std::optional<double> DtwCostFromDistances(const Eigen::Ref<const Eigen::MatrixXd>& dist,
                                           std::optional<int> band) {
  const int n = static_cast<int>(dist.rows());
  const int m = static_cast<int>(dist.cols());
  if (n == 0 || m == 0) return std::nullopt;
  if (band && std::abs(n - m) > *band) return std::nullopt;

  // Rolling rows of (accumulated cost, path length).
  std::vector<double> prev_cost(m, kInf), cur_cost(m, kInf);
  std::vector<int> prev_len(m, 0), cur_len(m, 0);
  for (int i = 0; i < n; ++i) {
    int j_lo = 0, j_hi = m - 1;
    if (band) {
      j_lo = std::max(0, i - *band);
      j_hi = std::min(m - 1, i + *band);
    }
    std::fill(cur_cost.begin(), cur_cost.end(), kInf);
    for (int j = j_lo; j <= j_hi; ++j) {
      const double d = dist(i, j);
      if (i == 0 && j == 0) {
        cur_cost[0] = d;
        cur_len[0] = 1;
        continue;
      }
      double best = kInf;
      int best_len = 0;
      auto consider = [&](double c, int len) {
        if (c < best || (c == best && len < best_len)) {
          best = c;
          best_len = len;
        }
      };
      if (i > 0) consider(prev_cost[j], prev_len[j]);
      if (j > 0) consider(cur_cost[j - 1], cur_len[j - 1]);
      if (i > 0 && j > 0) consider(prev_cost[j - 1], prev_len[j - 1]);
      if (best == kInf) continue;
      cur_cost[j] = best + d;
      cur_len[j] = best_len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }
  if (prev_cost[m - 1] == kInf) return std::nullopt;
  return prev_cost[m - 1] / prev_len[m - 1];
}

double DtwCost(const FrameMatrix& a, const FrameMatrix& b, std::optional<int> band) {
  if (a.rows() == 0 || b.rows() == 0) Fail(ErrorCode::kEmptyInput, "DTW on an empty sequence");
  const Eigen::MatrixXd dist = CosineDistanceMatrix(a, b);
  std::optional<double> cost = DtwCostFromDistances(dist, band);
  if (!cost) {
    Fail(ErrorCode::kBandTooNarrow, "band " + std::to_string(band.value_or(-1)) +
                                        " admits no path for lengths " + std::to_string(a.rows()) +
                                        " and " + std::to_string(b.rows()));
  }
  return *cost;
}

SweepResult SweepMinCost(const FrameMatrix& exemplar, const FrameMatrix& utterance,
                         const SweepConfig& config) {
  config.Validate();
  if (exemplar.rows() == 0 || utterance.rows() == 0) {
    Fail(ErrorCode::kEmptyInput, "sweep over an empty sequence");
  }
  const int exemplar_len = static_cast<int>(exemplar.rows());
  const int utt_len = static_cast<int>(utterance.rows());
  std::set<int> widths;
  for (double f : config.window_factors) {
    widths.insert(std::max(1, static_cast<int>(std::lround(f * exemplar_len))));
  }
  const Eigen::MatrixXd dist = CosineDistanceMatrix(exemplar, utterance);

  SweepResult best;
  bool found = false;
  auto evaluate = [&](int start, int len) {
    std::optional<double> c = DtwCostFromDistances(dist.middleCols(start, len), config.band_width);
    if (c && (!found || *c < best.cost)) {
      best = {*c, start, len};
      found = true;
    }
  };

  if (utt_len >= *widths.begin()) {
    for (int start = 0; start < utt_len; start += config.frame_skip) {
      for (int w : widths) {
        const int len = std::min(w, utt_len - start);
        if (len < w && len < 2) continue;
        evaluate(start, len);
      }
    }
  }
  if (!found && (utt_len < *widths.begin() || !config.band_width)) evaluate(0, utt_len);
  if (!found) {
    Fail(ErrorCode::kBandTooNarrow,
         "band " + std::to_string(*config.band_width) + " admits no segment alignment");
  }
  return best;
}

std::vector<double> ExemplarSweepCosts(const ExemplarSet& set, const FrameMatrix& utterance,
                                       const SweepConfig& config) {
  if (set.exemplars.empty()) {
    Fail(ErrorCode::kEmptyInput, "keyword '" + set.keyword_id + "' has no exemplars");
  }
  std::vector<double> costs;
  costs.reserve(set.exemplars.size());
  for (const auto& ex : set.exemplars) {
    costs.push_back(SweepMinCost(ex.frames, utterance, config).cost);
  }
  return costs;
}

double MinOf(std::span<const double> costs) {
  return *std::min_element(costs.begin(), costs.end());
}

double MeanOf(std::span<const double> costs) {
  double sum = 0.0;
  for (double c : costs) sum += c;
  // Rounding in the sum must not push the mean below the minimum.
  return std::max(sum / static_cast<double>(costs.size()), MinOf(costs));
}

double KeywordCost(const ExemplarSet& set, const FrameMatrix& utterance,
                   const SweepConfig& config) {
  return MinOf(ExemplarSweepCosts(set, utterance, config));
}

double KeywordCostAvg(const ExemplarSet& set, const FrameMatrix& utterance,
                      const SweepConfig& config) {
  return MeanOf(ExemplarSweepCosts(set, utterance, config));
}

void ValidateExemplarSet(const ExemplarSet& set, int dim) {
  if (set.exemplars.empty()) {
    Fail(ErrorCode::kEmptyInput, "keyword '" + set.keyword_id + "' has no exemplars");
  }
  for (const auto& ex : set.exemplars) {
    if (ex.num_frames() < 1) {
      Fail(ErrorCode::kEmptyInput, "empty exemplar in keyword '" + set.keyword_id + "'");
    }
    if (ex.dim() != dim) {
      Fail(ErrorCode::kDimensionMismatch, "exemplar '" + ex.source_id +
                                              "' has D=" + std::to_string(ex.dim()) +
                                              ", expected " + std::to_string(dim));
    }
  }
}

std::vector<ExemplarSet> LoadExemplarSets(const std::string& path) {
  namespace fs = std::filesystem;
  std::map<std::string, ExemplarSet> by_keyword;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".kwf") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      FeatureArchive archive = ReadArchive(f.string());
      ExemplarSet& set = by_keyword[f.stem().string()];
      set.keyword_id = f.stem().string();
      for (auto& e : archive.entries) set.exemplars.push_back(std::move(e));
    }
  } else {
    FeatureArchive archive = ReadArchive(path);
    for (auto& e : archive.entries) {
      const auto slash = e.source_id.find('/');
      if (slash == std::string::npos || slash == 0) {
        Fail(ErrorCode::kConfigError,
             "exemplar id '" + e.source_id + "' is not of the form <keyword>/<name>");
      }
      const std::string kw = e.source_id.substr(0, slash);
      ExemplarSet& set = by_keyword[kw];
      set.keyword_id = kw;
      set.exemplars.push_back(std::move(e));
    }
  }
  if (by_keyword.empty()) Fail(ErrorCode::kMissingInput, "no keyword exemplars in " + path);
  std::vector<ExemplarSet> sets;
  for (auto& [kw, set] : by_keyword) sets.push_back(std::move(set));
  return sets;
}

FeatureArchive ExemplarSetsToArchive(std::span<const ExemplarSet> sets) {
  FeatureArchive archive;
  for (const auto& set : sets) {
    for (const auto& ex : set.exemplars) {
      FeatureSequence seq = ex;
      if (seq.source_id.rfind(set.keyword_id + "/", 0) != 0) {
        seq.source_id = set.keyword_id + "/" + seq.source_id;
      }
      if (archive.entries.empty()) {
        archive.dimension = seq.dim();
        archive.frame_shift_ms = seq.frame_shift_ms;
      }
      archive.entries.push_back(std::move(seq));
    }
  }
  return archive;
}

}  // namespace kws

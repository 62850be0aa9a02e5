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

#include "kws/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "kws/binary_io.h"
#include "kws/error.h"

namespace kws {

namespace {

using RowVector = Eigen::RowVectorXd;

class Generator {
 public:
  explicit Generator(const SynthConfig& config) : cfg_(config), rng_(config.seed) {}

  SynthCorpus Run();

 private:
  int UniformInt(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double Normal(double stddev) { return std::normal_distribution<double>(0.0, stddev)(rng_); }
  bool Bernoulli(double p) { return Uniform(0.0, 1.0) < p; }

  RowVector RandomVector(double stddev) {
    RowVector v(cfg_.dim);
    for (int d = 0; d < cfg_.dim; ++d) v(d) = Normal(stddev);
    return v;
  }

  std::vector<int> SubstitutePhone(std::vector<int> phones) {
    const int pos = UniformInt(0, static_cast<int>(phones.size()) - 1);
    int replacement = UniformInt(0, cfg_.num_phones - 2);
    if (replacement >= phones[pos]) ++replacement;
    phones[pos] = replacement;
    return phones;
  }

  const FrameMatrix& RandomVariant(int keyword) {
    const auto& v = prototypes_[keyword];
    return v[UniformInt(0, static_cast<int>(v.size()) - 1)];
  }

  std::vector<int> RandomPhoneString(int num_phones) {
    std::vector<int> s(num_phones);
    for (auto& p : s) p = UniformInt(0, cfg_.num_phones - 1);
    return s;
  }

  std::vector<int> RandomDurations(size_t count) {
    std::vector<int> d(count);
    for (auto& x : d) x = UniformInt(cfg_.min_phone_frames, cfg_.max_phone_frames);
    return d;
  }

  // Phone string -> frames, phone i held for durations[i] frames.
  FrameMatrix Render(const std::vector<int>& phones, const std::vector<int>& durations) {
    FrameMatrix out(std::accumulate(durations.begin(), durations.end(), 0), cfg_.dim);
    int t = 0;
    for (size_t i = 0; i < phones.size(); ++i) {
      for (int k = 0; k < durations[i]; ++k) out.row(t++) = phone_vectors_[phones[i]];
    }
    return out;
  }

  FrameMatrix Render(const std::vector<int>& phones) {
    return Render(phones, RandomDurations(phones.size()));
  }

  // Piecewise-linear time warp with one random interior knot, overall
  // stretch drawn from [warp_min, warp_max]; frames are linearly interpolated.
  FrameMatrix Warp(const FrameMatrix& src) {
    const int n = static_cast<int>(src.rows());
    const double factor = Uniform(cfg_.warp_min, cfg_.warp_max);
    const int m = std::max(2, static_cast<int>(std::lround(n * factor)));
    const double knot_in = Uniform(0.35, 0.65);
    const double jitter = cfg_.warp_max > cfg_.warp_min ? Uniform(-0.1, 0.1) : 0.0;
    if (m == n && jitter == 0.0) return src;
    const double knot_out = std::clamp(knot_in + jitter, 0.2, 0.8);
    FrameMatrix out(m, src.cols());
    for (int j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / (m - 1);
      const double v = u <= knot_out
                           ? u / knot_out * knot_in
                           : knot_in + (u - knot_out) / (1.0 - knot_out) * (1.0 - knot_in);
      const double pos = v * (n - 1);
      const int lo = std::min(static_cast<int>(std::floor(pos)), n - 1);
      const int hi = std::min(lo + 1, n - 1);
      const double w = pos - lo;
      out.row(j) = (1.0 - w) * src.row(lo) + w * src.row(hi);
    }
    return out;
  }

  void AddNoise(FrameMatrix& m, const RowVector& offset) {
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      m.row(t) += offset;
      for (Eigen::Index d = 0; d < m.cols(); ++d) m(t, d) += Normal(cfg_.noise_stddev);
    }
  }

  FeatureSequence MakeUtterance(const std::string& split, const std::string& id, GroundTruth& truth,
                                std::vector<Plant>& plants);

  const SynthConfig& cfg_;
  Rng rng_;
  std::vector<RowVector> phone_vectors_;
  std::vector<std::vector<int>> keyword_phones_;
  std::vector<std::vector<FrameMatrix>> prototypes_;
  std::vector<RowVector> speakers_;
  std::vector<std::string> keyword_ids_;
};

FeatureSequence Generator::MakeUtterance(const std::string& split, const std::string& id,
                                         GroundTruth& truth, std::vector<Plant>& plants) {
  const RowVector& speaker = speakers_[UniformInt(0, cfg_.num_speakers - 1)];
  const int target_len = UniformInt(cfg_.min_utterance_frames, cfg_.max_utterance_frames);

  // Pieces in random order: planted keywords (tagged) and at most one confuser.
  struct Piece {
    FrameMatrix frames;
    int keyword = -1;
  };
  std::vector<Piece> pieces;
  auto& present = truth.present[id];
  for (int k = 0; k < cfg_.num_keywords; ++k) {
    if (Bernoulli(cfg_.keyword_prior)) {
      pieces.push_back({Warp(RandomVariant(k)), k});
      present.insert(keyword_ids_[k]);
    }
  }
  if (Bernoulli(cfg_.confuser_prior)) {
    const auto& phones = keyword_phones_[UniformInt(0, cfg_.num_keywords - 1)];
    pieces.push_back({Warp(Render(SubstitutePhone(phones))), -1});
  }
  std::shuffle(pieces.begin(), pieces.end(), rng_);

  int planted = 0;
  for (const auto& p : pieces) planted += static_cast<int>(p.frames.rows());
  // Background budget split into pieces.size() + 1 gaps.
  const int background = std::max(0, target_len - planted);
  std::vector<double> weights(pieces.size() + 1);
  for (auto& w : weights) w = Uniform(0.0, 1.0);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> gaps;
  int used = 0;
  for (size_t g = 0; g + 1 < weights.size(); ++g) {
    gaps.push_back(static_cast<int>(std::floor(background * weights[g] / wsum)));
    used += gaps.back();
  }
  gaps.push_back(background - used);

  std::vector<FrameMatrix> chunks;
  int cursor = 0;
  auto add_background = [&](int frames) {
    if (frames <= 0) return;
    FrameMatrix bg(0, cfg_.dim);
    while (bg.rows() < frames) {
      FrameMatrix more = Render(RandomPhoneString(1));
      FrameMatrix joined(bg.rows() + more.rows(), cfg_.dim);
      joined << bg, more;
      bg = std::move(joined);
    }
    chunks.push_back(bg.topRows(frames));
    cursor += frames;
  };
  for (size_t i = 0; i < pieces.size(); ++i) {
    int gap = gaps[i];
    if (cfg_.plant_grid > 1)
      gap += (cfg_.plant_grid - (cursor + gap) % cfg_.plant_grid) % cfg_.plant_grid;
    add_background(gap);
    if (pieces[i].keyword >= 0) {
      plants.push_back({split, id, keyword_ids_[pieces[i].keyword], cursor,
                        static_cast<int>(pieces[i].frames.rows())});
    }
    chunks.push_back(pieces[i].frames);
    cursor += static_cast<int>(pieces[i].frames.rows());
  }
  add_background(gaps.back());
  if (cursor == 0) add_background(cfg_.min_utterance_frames);

  FeatureSequence seq;
  seq.source_id = id;
  seq.frames.resize(cursor, cfg_.dim);
  int t = 0;
  for (const auto& c : chunks) {
    seq.frames.middleRows(t, c.rows()) = c;
    t += static_cast<int>(c.rows());
  }
  AddNoise(seq.frames, speaker);
  QuantizeToFloat(seq.frames);
  return seq;
}

SynthCorpus Generator::Run() {
  for (int p = 0; p < cfg_.num_phones; ++p) phone_vectors_.push_back(RandomVector(1.0));
  for (int s = 0; s < cfg_.num_speakers; ++s)
    speakers_.push_back(RandomVector(cfg_.speaker_stddev));
  SynthCorpus corpus;
  for (int k = 0; k < cfg_.num_keywords; ++k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "kw%02d", k + 1);
    keyword_ids_.push_back(buf);
    keyword_phones_.push_back(
        RandomPhoneString(UniformInt(cfg_.min_keyword_phones, cfg_.max_keyword_phones)));
    // Variants share phone durations with the base so they differ only in
    // the substituted phone.
    const std::vector<int> durations = RandomDurations(keyword_phones_.back().size());
    std::vector<FrameMatrix> variants = {Render(keyword_phones_.back(), durations)};
    for (int v = 1; v < cfg_.pronunciation_variants; ++v) {
      variants.push_back(Render(SubstitutePhone(keyword_phones_.back()), durations));
    }
    prototypes_.push_back(std::move(variants));
  }
  corpus.prototypes = prototypes_;

  // Exemplars: speakers from the shared pool plus one channel offset.
  RowVector channel(cfg_.dim);
  for (int d = 0; d < cfg_.dim; ++d)
    channel(d) = Bernoulli(0.5) ? cfg_.channel_offset : -cfg_.channel_offset;
  for (int k = 0; k < cfg_.num_keywords; ++k) {
    ExemplarSet set;
    set.keyword_id = keyword_ids_[k];
    for (int i = 0; i < cfg_.exemplars_per_keyword; ++i) {
      FeatureSequence ex;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s/ex%02d", keyword_ids_[k].c_str(), i + 1);
      ex.source_id = buf;
      ex.frames = Warp(RandomVariant(k));
      const RowVector offset = speakers_[UniformInt(0, cfg_.num_speakers - 1)] + channel;
      AddNoise(ex.frames, offset);
      QuantizeToFloat(ex.frames);
      set.exemplars.push_back(std::move(ex));
    }
    corpus.keywords.push_back(std::move(set));
  }

  const uint64_t tag = cfg_.Tag();
  auto make_split = [&](const std::string& split, int count, FeatureArchive& archive,
                        GroundTruth& truth) {
    archive.dimension = cfg_.dim;
    archive.config_tag = tag;
    for (int i = 0; i < count; ++i) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%s_%05d", split.c_str(), i + 1);
      archive.entries.push_back(MakeUtterance(split, buf, truth, corpus.plants));
    }
  };
  make_split("train", cfg_.train_utterances, corpus.train, corpus.train_truth);
  make_split("dev", cfg_.dev_utterances, corpus.dev, corpus.dev_truth);
  make_split("test", cfg_.test_utterances, corpus.test, corpus.test_truth);
  for (auto& set : corpus.keywords) {
    for (auto& ex : set.exemplars) ValidateSequence(ex);
  }
  return corpus;
}

}  // namespace

void SynthConfig::Validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kConfigError, "synth: " + what); };
  if (num_keywords < 1 || exemplars_per_keyword < 1 || pronunciation_variants < 1) {
    bad("keyword counts must be >= 1");
  }
  if (train_utterances < 1 || dev_utterances < 1 || test_utterances < 1) {
    bad("utterance counts must be >= 1");
  }
  if (dim < 1 || num_phones < 2) bad("need dim >= 1 and at least 2 phones");
  if (min_keyword_phones < 1 || max_keyword_phones < min_keyword_phones)
    bad("bad keyword phone range");
  if (min_phone_frames < 1 || max_phone_frames < min_phone_frames) bad("bad phone duration range");
  if (min_utterance_frames < 2 || max_utterance_frames < min_utterance_frames) {
    bad("bad utterance length range");
  }
  if (!(keyword_prior >= 0 && keyword_prior < 1)) bad("keyword_prior must be in [0, 1)");
  if (!(confuser_prior >= 0 && confuser_prior <= 1)) bad("confuser_prior must be in [0, 1]");
  if (!(warp_min > 0) || warp_max < warp_min) bad("warp factors must satisfy 0 < min <= max");
  if (!(noise_stddev >= 0) || !(speaker_stddev >= 0)) bad("stddevs must be >= 0");
  if (num_speakers < 1) bad("num_speakers must be >= 1");
  if (plant_grid < 1) bad("plant_grid must be >= 1");
  if (min_utterance_frames < MaxWarpedKeywordFrames()) {
    bad("min_utterance_frames (" + std::to_string(min_utterance_frames) +
        ") is shorter than the longest warped keyword (" +
        std::to_string(MaxWarpedKeywordFrames()) + ")");
  }
}

int SynthConfig::MaxWarpedKeywordFrames() const {
  return static_cast<int>(std::lround(max_keyword_phones * max_phone_frames * warp_max));
}

uint64_t SynthConfig::Tag() const {
  ByteWriter w;
  for (int v : {num_keywords, exemplars_per_keyword, pronunciation_variants, train_utterances,
                dev_utterances, test_utterances, dim, num_phones, min_keyword_phones,
                max_keyword_phones, min_phone_frames, max_phone_frames, min_utterance_frames,
                max_utterance_frames, num_speakers, plant_grid}) {
    w.PutU32(static_cast<uint32_t>(v));
  }
  for (double v : {keyword_prior, confuser_prior, warp_min, warp_max, noise_stddev, speaker_stddev,
                   channel_offset}) {
    w.PutF64(v);
  }
  w.PutU64(seed);
  return Crc64(w.bytes());
}

SynthCorpus GenerateSynth(const SynthConfig& config) {
  config.Validate();
  return Generator(config).Run();
}

void WriteSynthCorpus(const SynthCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  FeatureArchive keywords = ExemplarSetsToArchive(corpus.keywords);
  keywords.config_tag = corpus.train.config_tag;
  WriteArchive(keywords, (fs::path(dir) / "keywords.kwf").string());
  WriteArchive(corpus.train, (fs::path(dir) / "train.kwf").string());
  WriteArchive(corpus.dev, (fs::path(dir) / "dev.kwf").string());
  WriteArchive(corpus.test, (fs::path(dir) / "test.kwf").string());
  WriteGroundTruth(corpus.train_truth, (fs::path(dir) / "train_truth.tsv").string());
  WriteGroundTruth(corpus.dev_truth, (fs::path(dir) / "dev_truth.tsv").string());
  WriteGroundTruth(corpus.test_truth, (fs::path(dir) / "test_truth.tsv").string());
  std::ofstream plants(fs::path(dir) / "plants.tsv", std::ios::trunc);
  plants << "# split\tutterance\tkeyword\tstart\tlength\n";
  for (const auto& p : corpus.plants) {
    plants << p.split << '\t' << p.utterance_id << '\t' << p.keyword_id << '\t' << p.start << '\t'
           << p.length << '\n';
  }
}

}  // namespace kws

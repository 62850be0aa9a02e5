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

#include "kws/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "kws/error.h"

namespace kws {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

json RocToJson(const RocCurve& roc) {
  json points = json::array();
  for (const auto& p : roc.points) points.push_back({p.threshold, p.fpr, p.tpr});
  return {
      {"auc", roc.auc}, {"eer", roc.eer}, {"eer_threshold", roc.eer_threshold}, {"points", points}};
}

RocCurve RocFromJson(const json& j) {
  RocCurve roc;
  roc.auc = j.at("auc").get<double>();
  roc.eer = j.at("eer").get<double>();
  roc.eer_threshold = j.at("eer_threshold").get<double>();
  for (const auto& p : j.at("points")) {
    roc.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  return roc;
}

json TimingToJson(const TimingRecord& t) {
  return {{"detector", t.detector},
          {"utterances", t.utterances},
          {"seconds", t.seconds},
          {"load_seconds", t.load_seconds},
          {"utterances_per_second", t.utterances_per_second},
          {"audio_seconds", t.audio_seconds},
          {"real_time_factor", t.real_time_factor},
          {"workers", t.workers}};
}

}  // namespace

bool GroundTruth::Contains(const std::string& utterance_id, const std::string& keyword_id) const {
  auto it = present.find(utterance_id);
  return it != present.end() && it->second.count(keyword_id) > 0;
}

GroundTruth ReadGroundTruth(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kMissingInput, "cannot open ground truth " + path);
  GroundTruth truth;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string utt = line.substr(0, tab);
    if (utt.empty()) {
      Fail(ErrorCode::kConfigError, path + ":" + std::to_string(line_no) + ": empty utterance id");
    }
    auto& set = truth.present[utt];
    if (tab == std::string::npos) continue;
    std::stringstream list(line.substr(tab + 1));
    std::string kw;
    while (std::getline(list, kw, ',')) {
      if (!kw.empty()) set.insert(kw);
    }
  }
  return truth;
}

void WriteGroundTruth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& [utt, kws] : truth.present) {
    out << utt << '\t';
    bool first = true;
    for (const auto& k : kws) {
      out << (first ? "" : ",") << k;
      first = false;
    }
    out << '\n';
  }
}

RocCurve ComputeRoc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) {
    Fail(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  }
  const int64_t positives = std::count(labels.begin(), labels.end(), true);
  const int64_t negatives = static_cast<int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    Fail(ErrorCode::kDegenerateLabels, "ROC needs both classes (" + std::to_string(positives) +
                                           " positives, " + std::to_string(negatives) +
                                           " negatives)");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  const double top = scores[order.front()];
  roc.points.push_back({std::nextafter(top, std::numeric_limits<double>::infinity()), 0.0, 0.0});
  int64_t tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
  // Twice the area, in units of one (positive, negative) pair.
  int64_t area2 = 0;
  std::vector<std::pair<int64_t, int64_t>> counts = {{0, 0}};
  for (size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
    }
    area2 += (fp - prev_fp) * (tp + prev_tp);
    prev_tp = tp;
    prev_fp = fp;
    counts.emplace_back(tp, fp);
    roc.points.push_back(
        {s, static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives});
  }
  roc.auc = static_cast<double>(area2) /
            (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));

  // f = FPR - FNR goes from -1 at the sentinel to +1 at the last point.
  auto f = [&](size_t k) { return roc.points[k].fpr + roc.points[k].tpr - 1.0; };
  size_t k = 1;
  while (k < roc.points.size() && f(k) < 0) ++k;
  const double f_hi = f(k), f_lo = f(k - 1);
  if (f_hi == 0.0) {
    roc.eer = roc.points[k].fpr;
    roc.eer_threshold = roc.points[k].threshold;
  } else {
    const double t = -f_lo / (f_hi - f_lo);
    roc.eer = roc.points[k - 1].fpr + t * (roc.points[k].fpr - roc.points[k - 1].fpr);
    roc.eer_threshold =
        std::abs(f_lo) < std::abs(f_hi) ? roc.points[k - 1].threshold : roc.points[k].threshold;
  }
  return roc;
}

Confusion ConfusionAt(std::span<const double> scores, const std::vector<bool>& labels,
                      double threshold) {
  if (scores.size() != labels.size()) {
    Fail(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  }
  Confusion c;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool detected = scores[i] >= threshold;
    if (labels[i]) {
      ++(detected ? c.tp : c.fn);
    } else {
      ++(detected ? c.fp : c.tn);
    }
  }
  return c;
}

MacroMetrics MacroAverage(std::span<const RocCurve> curves) {
  if (curves.empty()) Fail(ErrorCode::kMissingInput, "macro average over zero keywords");
  MacroMetrics m;
  for (const auto& c : curves) {
    m.auc += c.auc;
    m.eer += c.eer;
  }
  m.auc /= static_cast<double>(curves.size());
  m.eer /= static_cast<double>(curves.size());
  return m;
}

std::pair<std::vector<double>, std::vector<bool>> KeywordColumn(const ScoreSet& scores,
                                                                const GroundTruth& truth,
                                                                size_t keyword_index) {
  std::vector<double> column;
  std::vector<bool> labels;
  const std::string& kw = scores.keyword_ids.at(keyword_index);
  for (size_t u = 0; u < scores.utterance_ids.size(); ++u) {
    const std::string& utt = scores.utterance_ids[u];
    if (truth.present.find(utt) == truth.present.end()) {
      Fail(ErrorCode::kMissingInput, "utterance '" + utt + "' missing from ground truth");
    }
    column.push_back(scores.scores[u][keyword_index]);
    labels.push_back(truth.Contains(utt, kw));
  }
  return {std::move(column), std::move(labels)};
}

EvalReport Evaluate(const ScoreSet& scores, const GroundTruth& truth) {
  const std::set<std::string> known(scores.keyword_ids.begin(), scores.keyword_ids.end());
  for (const auto& [utt, kws] : truth.present) {
    for (const auto& k : kws) {
      if (!known.count(k)) {
        Fail(ErrorCode::kConfigError,
             "ground truth keyword '" + k + "' (utterance '" + utt + "') is not in the score file");
      }
    }
  }
  EvalReport report;
  report.system = scores.system;
  report.config_tag = scores.config_tag;
  std::vector<RocCurve> curves;
  for (size_t k = 0; k < scores.keyword_ids.size(); ++k) {
    auto [column, labels] = KeywordColumn(scores, truth, k);
    KeywordReport kr;
    kr.keyword_id = scores.keyword_ids[k];
    kr.roc = ComputeRoc(column, labels);
    kr.at_eer = ConfusionAt(column, labels, kr.roc.eer_threshold);
    kr.positives = std::count(labels.begin(), labels.end(), true);
    kr.negatives = static_cast<int64_t>(labels.size()) - kr.positives;
    curves.push_back(kr.roc);
    report.keywords.push_back(std::move(kr));
  }
  report.macro = MacroAverage(curves);
  return report;
}

void CheckCompatible(std::span<const ScoreSet> sets) {
  for (const auto& s : sets) {
    if (s.config_tag != sets.front().config_tag) {
      Fail(ErrorCode::kConfigError, "score files come from different corpora (tags differ: '" +
                                        sets.front().system + "' vs '" + s.system + "')");
    }
    if (s.keyword_ids != sets.front().keyword_ids ||
        s.utterance_ids != sets.front().utterance_ids) {
      Fail(ErrorCode::kConfigError, "score files '" + sets.front().system + "' and '" + s.system +
                                        "' cover different keywords or utterances");
    }
  }
}

std::vector<int64_t> KeywordDistribution(const GroundTruth& truth,
                                         std::span<const std::string> keyword_ids) {
  std::vector<int64_t> counts(keyword_ids.size(), 0);
  for (const auto& [utt, kws] : truth.present) {
    for (size_t k = 0; k < keyword_ids.size(); ++k) {
      if (kws.count(keyword_ids[k])) ++counts[k];
    }
  }
  return counts;
}

TimingRecord BenchmarkDetector(const std::string& name,
                               const std::function<void(const FeatureSequence&)>& detect,
                               const FeatureArchive& corpus, int warmup_utterances) {
  if (corpus.entries.empty()) Fail(ErrorCode::kMissingInput, "benchmark on an empty corpus");
  TimingRecord rec;
  rec.detector = name;
  rec.utterances = static_cast<int64_t>(corpus.entries.size());
  const size_t warm = std::min<size_t>(corpus.entries.size(), std::max(0, warmup_utterances));
  for (size_t i = 0; i < warm; ++i) detect(corpus.entries[i]);

  // Loading baseline: copy each utterance's features, no detector.
  volatile double sink = 0.0;
  auto start = Clock::now();
  for (const auto& utt : corpus.entries) {
    FeatureSequence copy = utt;
    sink = sink + copy.frames(0, 0);
  }
  rec.load_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  start = Clock::now();
  for (const auto& utt : corpus.entries) {
    FeatureSequence copy = utt;
    detect(copy);
  }
  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  // The copy cost is measured separately and can exceed a trivial detector
  // through timer noise.
  rec.seconds = std::max(0.0, total - rec.load_seconds);
  rec.utterances_per_second = rec.seconds > 0 ? rec.utterances / rec.seconds : 0.0;
  for (const auto& utt : corpus.entries) {
    rec.audio_seconds += utt.num_frames() * utt.frame_shift_ms / 1000.0;
  }
  rec.real_time_factor = rec.audio_seconds > 0 ? rec.seconds / rec.audio_seconds : 0.0;
  return rec;
}

std::string Slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    out.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_');
  }
  return out.empty() ? "_" : out;
}

void WriteEvalReport(const EvalReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json keywords = json::array();
  for (const auto& k : report.keywords) {
    keywords.push_back({{"keyword", k.keyword_id},
                        {"positives", k.positives},
                        {"negatives", k.negatives},
                        {"tp", k.at_eer.tp},
                        {"fp", k.at_eer.fp},
                        {"tn", k.at_eer.tn},
                        {"fn", k.at_eer.fn},
                        {"roc", RocToJson(k.roc)}});
    std::ofstream csv(fs::path(dir) /
                      ("roc_" + Slug(report.system) + "_" + Slug(k.keyword_id) + ".csv"));
    csv << "threshold,fpr,tpr\n";
    csv.precision(17);
    for (const auto& p : k.roc.points) csv << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  }
  json timings = json::array();
  for (const auto& t : report.timings) timings.push_back(TimingToJson(t));
  json j = {{"system", report.system},       {"config_tag", report.config_tag},
            {"macro_auc", report.macro.auc}, {"macro_eer", report.macro.eer},
            {"keywords", keywords},          {"timings", timings}};
  std::ofstream out(fs::path(dir) / ("report_" + Slug(report.system) + ".json"), std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write report into " + dir);
  out << j.dump(2) << '\n';
}

void WriteTimings(std::span<const TimingRecord> timings, const std::string& path) {
  json records = json::array();
  for (const auto& t : timings) records.push_back(TimingToJson(t));
  json j = {{"timings", records}};
  // Throughput of every detector relative to the DTW-KS sweep.
  for (const auto& t : timings) {
    if (t.detector != "dtw-ks" || t.seconds <= 0) continue;
    for (const auto& other : timings) {
      if (other.seconds > 0) j["speedup_vs_dtw_ks"][other.detector] = t.seconds / other.seconds;
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

EvalReport ReadEvalReport(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kMissingInput, "cannot open report " + path);
  EvalReport report;
  try {
    const json j = json::parse(in);
    report.system = j.at("system").get<std::string>();
    report.config_tag = j.at("config_tag").get<uint64_t>();
    report.macro.auc = j.at("macro_auc").get<double>();
    report.macro.eer = j.at("macro_eer").get<double>();
    for (const auto& k : j.at("keywords")) {
      KeywordReport kr;
      kr.keyword_id = k.at("keyword").get<std::string>();
      kr.positives = k.at("positives").get<int64_t>();
      kr.negatives = k.at("negatives").get<int64_t>();
      kr.at_eer = {k.at("tp").get<int64_t>(), k.at("fp").get<int64_t>(), k.at("tn").get<int64_t>(),
                   k.at("fn").get<int64_t>()};
      kr.roc = RocFromJson(k.at("roc"));
      report.keywords.push_back(std::move(kr));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfigError, path + ": " + e.what());
  }
  return report;
}

}  // namespace kws

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

#include "kws/plots.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kws/error.h"
#include "kws/eval.h"

namespace kws {

namespace fs = std::filesystem;

namespace {

constexpr int kWidth = 480;
constexpr int kHeight = 400;
constexpr int kMargin = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double PlotX(double v) { return kMargin + v * (kWidth - 2 * kMargin); }
double PlotY(double v) { return kHeight - kMargin - v * (kHeight - 2 * kMargin); }

void WriteText(const fs::path& path, const std::string& text, std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  written.push_back(path.string());
}

std::string Axes(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << Escape(title) << "</text>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
    << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
    << kHeight - kMargin << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
    << Escape(xlabel) << "</text>\n"
    << "<text x=\"14\" y=\"" << kHeight / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kHeight / 2 << ")\">"
    << Escape(ylabel) << "</text>\n";
  return s.str();
}

std::string RocSvg(const std::string& keyword, const std::vector<const EvalReport*>& reports,
                   const std::vector<const KeywordReport*>& curves) {
  std::ostringstream s;
  s << Axes("ROC: " + keyword, "false positive rate", "true positive rate");
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    s << "<text x=\"" << PlotX(v) << "\" y=\"" << kHeight - kMargin + 15
      << "\" text-anchor=\"middle\" font-size=\"10\">" << v << "</text>\n"
      << "<text x=\"" << kMargin - 6 << "\" y=\"" << PlotY(v) + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << v << "</text>\n";
  }
  s << "<line x1=\"" << PlotX(0) << "\" y1=\"" << PlotY(0) << "\" x2=\"" << PlotX(1) << "\" y2=\""
    << PlotY(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
  for (size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[i]->roc.points) s << PlotX(p.fpr) << ',' << PlotY(p.tpr) << ' ';
    s << "\"/>\n";
    char auc[32];
    std::snprintf(auc, sizeof(auc), "%.3f", curves[i]->roc.auc);
    const double y = kHeight - kMargin - 20.0 * (curves.size() - i);
    s << "<text x=\"" << kWidth - kMargin - 5 << "\" y=\"" << y << "\" text-anchor=\"end\" fill=\""
      << color << "\">" << Escape(reports[i]->system) << " (AUC " << auc << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string DistributionSvg(const std::vector<std::pair<std::string, int64_t>>& counts) {
  std::ostringstream s;
  s << Axes("Keyword occurrences", "keyword", "utterances");
  int64_t max_count = 1;
  for (const auto& [k, c] : counts) max_count = std::max(max_count, c);
  const double slot = static_cast<double>(kWidth - 2 * kMargin) / counts.size();
  for (size_t i = 0; i < counts.size(); ++i) {
    const double h = static_cast<double>(counts[i].second) / max_count;
    const double x = kMargin + slot * i + slot * 0.1;
    s << "<rect x=\"" << x << "\" y=\"" << PlotY(h) << "\" width=\"" << slot * 0.8 << "\" height=\""
      << PlotY(0) - PlotY(h) << "\" fill=\"" << kColors[0] << "\"/>\n"
      << "<text x=\"" << x + slot * 0.4 << "\" y=\"" << PlotY(h) - 4
      << "\" text-anchor=\"middle\" font-size=\"10\">" << counts[i].second << "</text>\n"
      << "<text x=\"" << x + slot * 0.4 << "\" y=\"" << kHeight - kMargin + 15
      << "\" text-anchor=\"middle\" font-size=\"10\">" << Escape(counts[i].first) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::vector<std::string> EmitPlots(const std::string& report_dir, const std::string& out_dir) {
  std::vector<fs::path> paths;
  if (fs::is_directory(report_dir)) {
    for (const auto& entry : fs::directory_iterator(report_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("report_") && name.ends_with(".json")) paths.push_back(entry.path());
    }
  }
  if (paths.empty()) Fail(ErrorCode::kMissingInput, "no report_*.json in " + report_dir);
  std::sort(paths.begin(), paths.end());
  std::vector<EvalReport> reports;
  for (const auto& p : paths) reports.push_back(ReadEvalReport(p.string()));
  if (reports.front().keywords.empty()) {
    Fail(ErrorCode::kMissingInput, paths.front().string() + ": report lists no keywords");
  }

  std::vector<const EvalReport*> overlay;
  for (const char* preferred : {"dtw-ks", "cnn-dtw"}) {
    for (const auto& r : reports) {
      if (r.system == preferred) overlay.push_back(&r);
    }
  }
  if (overlay.empty()) {
    for (const auto& r : reports) overlay.push_back(&r);
  }

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  std::set<std::string> used_slugs;
  std::vector<std::pair<std::string, int64_t>> counts;
  for (const auto& kw : reports.front().keywords) {
    counts.emplace_back(kw.keyword_id, kw.positives);
    std::string slug = Slug(kw.keyword_id);
    for (int n = 2; used_slugs.count(slug); ++n)
      slug = Slug(kw.keyword_id) + "_" + std::to_string(n);
    used_slugs.insert(slug);

    std::vector<const EvalReport*> systems;
    std::vector<const KeywordReport*> curves;
    std::ostringstream csv;
    csv.precision(17);
    csv << "system,threshold,fpr,tpr\n";
    for (const EvalReport* r : overlay) {
      for (const auto& k : r->keywords) {
        if (k.keyword_id != kw.keyword_id) continue;
        systems.push_back(r);
        curves.push_back(&k);
        for (const auto& p : k.roc.points) {
          csv << r->system << ',' << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
        }
      }
    }
    WriteText(fs::path(out_dir) / ("roc_" + slug + ".svg"), RocSvg(kw.keyword_id, systems, curves),
              written);
    WriteText(fs::path(out_dir) / ("roc_" + slug + ".csv"), csv.str(), written);
  }

  std::ostringstream csv;
  csv << "keyword,utterances\n";
  for (const auto& [k, c] : counts) csv << k << ',' << c << '\n';
  WriteText(fs::path(out_dir) / "distribution.svg", DistributionSvg(counts), written);
  WriteText(fs::path(out_dir) / "distribution.csv", csv.str(), written);
  return written;
}

}  // namespace kws

// Copyright 2026 The adlrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADL_EVAL_HPP_
#define ADL_EVAL_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adl/error.hpp"
#include "adl/io.hpp"
#include "adl/ontology.hpp"

namespace adl {

// Fraction of instances whose true class appears among the first k entries
// of its prediction list.
inline double top_k_accuracy(const std::vector<std::vector<int>>& preds,
                             const std::vector<int>& truths, int k) {
  if (preds.empty() || preds.size() != truths.size()) {
    throw input_error("top_k_accuracy: need equal-length, non-empty predictions and truths");
  }
  if (k < 1) throw input_error("top_k_accuracy: k must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& list = preds[i];
    const std::size_t limit = std::min(static_cast<std::size_t>(k), list.size());
    for (std::size_t j = 0; j < limit; ++j) {
      if (list[j] == truths[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// Weighted overall accuracy: every instance is weighted inversely to its
// class's instance count, which makes each present class contribute equally.
// Numerically this is just the unweighted mean of per-class accuracies.
inline double weighted_accuracy(const std::vector<int>& classes,
                                const std::vector<bool>& correct) {
  if (classes.empty() || classes.size() != correct.size()) {
    throw input_error("weighted_accuracy: need equal-length, non-empty inputs");
  }
  std::array<std::int64_t, kNumClasses> counts{};
  std::array<std::int64_t, kNumClasses> hits{};
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int c = classes[i];
    if (c < 0 || c >= kNumClasses) throw input_error("weighted_accuracy: class id out of range");
    counts[static_cast<std::size_t>(c)]++;
    if (correct[i]) hits[static_cast<std::size_t>(c)]++;
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) continue;
    sum += static_cast<double>(hits[static_cast<std::size_t>(c)]) /
           static_cast<double>(counts[static_cast<std::size_t>(c)]);
    ++present;
  }
  return sum / static_cast<double>(present);
}

// Support-weighted mean of one-vs-rest F1 scores over top-1 predictions.
// A class with precision + recall == 0 contributes F1 = 0.
inline double weighted_f_score(const std::vector<int>& preds, const std::vector<int>& truths) {
  if (preds.empty() || preds.size() != truths.size()) {
    throw input_error("weighted_f_score: need equal-length, non-empty predictions and truths");
  }
  std::array<std::int64_t, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = truths[i];
    if (p < 0 || p >= kNumClasses || t < 0 || t >= kNumClasses) {
      throw input_error("weighted_f_score: class id out of range");
    }
    if (p == t) {
      tp[static_cast<std::size_t>(t)]++;
    } else {
      fp[static_cast<std::size_t>(p)]++;
      fn[static_cast<std::size_t>(t)]++;
    }
  }
  double f_sum = 0.0;  // sum of support_c * F1_c; divided by N once at the end
  for (int c = 0; c < kNumClasses; ++c) {
    const std::int64_t support = tp[static_cast<std::size_t>(c)] + fn[static_cast<std::size_t>(c)];
    if (support == 0) continue;
    const double denom_p = static_cast<double>(tp[static_cast<std::size_t>(c)] + fp[static_cast<std::size_t>(c)]);
    const double denom_r = static_cast<double>(support);
    const double precision = denom_p > 0.0 ? static_cast<double>(tp[static_cast<std::size_t>(c)]) / denom_p : 0.0;
    const double recall = static_cast<double>(tp[static_cast<std::size_t>(c)]) / denom_r;
    const double f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    f_sum += static_cast<double>(support) * f1;
  }
  return f_sum / static_cast<double>(preds.size());
}

struct ClassStat {
  int class_id;
  double mean;
  double deviation;  // population standard deviation across subjects
  int subjects;
};

// Per-subject class accuracies for one k. Absent classes are simply not in
// the map.
struct SubjectClassAccuracies {
  std::string subject;
  std::map<int, double> accuracy;
};

// Mean and population standard deviation of each class's accuracy across
// subjects; every subject that has the class contributes equally. Classes
// absent from all subjects are omitted and reported through `warnings`.
inline std::vector<ClassStat> per_class_stats(const std::vector<SubjectClassAccuracies>& subjects,
                                              std::vector<std::string>* warnings = nullptr) {
  std::vector<ClassStat> stats;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<double> values;
    for (const auto& s : subjects) {
      const auto it = s.accuracy.find(c);
      if (it != s.accuracy.end()) values.push_back(it->second);
    }
    if (values.empty()) {
      if (warnings != nullptr) {
        warnings->push_back("class '" + std::string(class_name(c)) +
                            "' absent from all subjects; omitted from per-class stats");
      }
      continue;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    stats.push_back(ClassStat{c, mean, std::sqrt(var), static_cast<int>(values.size())});
  }
  return stats;
}

using ConfusionMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

// Row c holds the distribution of top-1 predictions for true class c. Rows
// with no support stay all-zero.
inline ConfusionMatrix confusion_matrix(const std::vector<int>& preds,
                                        const std::vector<int>& truths) {
  if (preds.size() != truths.size()) {
    throw input_error("confusion_matrix: predictions and truths differ in length");
  }
  ConfusionMatrix m{};
  std::array<std::int64_t, kNumClasses> support{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = truths[i];
    if (p < 0 || p >= kNumClasses || t < 0 || t >= kNumClasses) {
      throw input_error("confusion_matrix: class id out of range");
    }
    m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1.0;
    support[static_cast<std::size_t>(t)]++;
  }
  for (int t = 0; t < kNumClasses; ++t) {
    if (support[static_cast<std::size_t>(t)] == 0) continue;
    for (int p = 0; p < kNumClasses; ++p) {
      m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] /=
          static_cast<double>(support[static_cast<std::size_t>(t)]);
    }
  }
  return m;
}

struct SubjectSummary {
  std::string subject;
  std::size_t instances;
  double top1_weighted;
  double top3_weighted;
};

struct EvalReport {
  std::vector<SubjectSummary> per_subject;
  std::vector<ClassStat> per_class_top1;
  std::vector<ClassStat> per_class_top3;
  double overall_f1 = 0.0;
  double top1_weighted_mean = 0.0;  // mean of per-subject weighted top-1
  double top3_weighted_mean = 0.0;
  // Same statistic for any further requested k values.
  std::vector<std::pair<int, double>> extra_topk_weighted_mean;
  ConfusionMatrix confusion{};
  std::vector<std::string> warnings;
};

// One labeled prediction with provenance, the raw material for a report.
struct EvalInstance {
  std::string subject;
  int truth;
  std::vector<int> topk;  // descending probability, at least 3 entries when available
};

inline bool topk_hit(const std::vector<int>& list, int truth, int k) {
  const std::size_t limit = std::min(static_cast<std::size_t>(k), list.size());
  for (std::size_t j = 0; j < limit; ++j) {
    if (list[j] == truth) return true;
  }
  return false;
}

// Aggregates instances into the full report: per-subject weighted top-1/
// top-3, across-subject per-class means and deviations, pooled weighted
// F-score and row-normalized confusion over top-1. ks beyond {1, 3} add
// summary-level weighted accuracies (their lists must be long enough).
inline EvalReport build_report(const std::vector<EvalInstance>& instances,
                               const std::vector<int>& ks = {1, 3}) {
  if (instances.empty()) throw input_error("build_report: no evaluation instances");
  EvalReport report;

  std::map<std::string, std::vector<const EvalInstance*>> by_subject;
  for (const auto& inst : instances) by_subject[inst.subject].push_back(&inst);

  std::vector<SubjectClassAccuracies> top1_subject, top3_subject;
  for (const auto& [subject, rows] : by_subject) {
    std::vector<int> classes;
    std::vector<bool> hit1, hit3;
    classes.reserve(rows.size());
    for (const auto* r : rows) {
      classes.push_back(r->truth);
      hit1.push_back(topk_hit(r->topk, r->truth, 1));
      hit3.push_back(topk_hit(r->topk, r->truth, 3));
    }
    SubjectSummary summary;
    summary.subject = subject;
    summary.instances = rows.size();
    summary.top1_weighted = weighted_accuracy(classes, hit1);
    summary.top3_weighted = weighted_accuracy(classes, hit3);
    report.per_subject.push_back(summary);

    SubjectClassAccuracies s1{subject, {}}, s3{subject, {}};
    std::array<std::int64_t, kNumClasses> counts{}, h1{}, h3{};
    for (std::size_t i = 0; i < classes.size(); ++i) {
      counts[static_cast<std::size_t>(classes[i])]++;
      if (hit1[i]) h1[static_cast<std::size_t>(classes[i])]++;
      if (hit3[i]) h3[static_cast<std::size_t>(classes[i])]++;
    }
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      s1.accuracy[c] = static_cast<double>(h1[static_cast<std::size_t>(c)]) /
                       static_cast<double>(counts[static_cast<std::size_t>(c)]);
      s3.accuracy[c] = static_cast<double>(h3[static_cast<std::size_t>(c)]) /
                       static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    top1_subject.push_back(std::move(s1));
    top3_subject.push_back(std::move(s3));
  }

  for (const auto& s : report.per_subject) {
    report.top1_weighted_mean += s.top1_weighted;
    report.top3_weighted_mean += s.top3_weighted;
  }
  report.top1_weighted_mean /= static_cast<double>(report.per_subject.size());
  report.top3_weighted_mean /= static_cast<double>(report.per_subject.size());

  for (const int k : ks) {
    if (k == 1 || k == 3) continue;
    double mean = 0.0;
    for (const auto& [subject, rows] : by_subject) {
      std::vector<int> classes;
      std::vector<bool> hit;
      for (const auto* r : rows) {
        classes.push_back(r->truth);
        hit.push_back(topk_hit(r->topk, r->truth, k));
      }
      mean += weighted_accuracy(classes, hit);
    }
    report.extra_topk_weighted_mean.push_back(
        {k, mean / static_cast<double>(by_subject.size())});
  }

  report.per_class_top1 = per_class_stats(top1_subject, &report.warnings);
  report.per_class_top3 = per_class_stats(top3_subject, nullptr);

  std::vector<int> top1_preds, truths;
  top1_preds.reserve(instances.size());
  truths.reserve(instances.size());
  for (const auto& inst : instances) {
    top1_preds.push_back(inst.topk.empty() ? -1 : inst.topk[0]);
    truths.push_back(inst.truth);
  }
  report.overall_f1 = weighted_f_score(top1_preds, truths);
  report.confusion = confusion_matrix(top1_preds, truths);
  return report;
}

// CSV layouts (documented in the README):
//   per_subject.csv: subject,instances,top1_weighted,top3_weighted
//   per_class.csv:   class_id,class_name,subjects,top1_mean,top1_deviation,
//                    top3_mean,top3_deviation
//   confusion.csv:   true_class header row, then one row per true class
//   summary.csv:     metric,value
inline void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  {
    auto out = open_output(dir / "per_subject.csv", /*binary=*/false);
    out << "subject,instances,top1_weighted,top3_weighted\n";
    for (const auto& s : report.per_subject) {
      out << csv_field(s.subject) << ',' << s.instances << ',' << format_double(s.top1_weighted)
          << ',' << format_double(s.top3_weighted) << '\n';
    }
  }
  {
    auto out = open_output(dir / "per_class.csv", /*binary=*/false);
    out << "class_id,class_name,subjects,top1_mean,top1_deviation,top3_mean,top3_deviation\n";
    for (std::size_t i = 0; i < report.per_class_top1.size(); ++i) {
      const auto& s1 = report.per_class_top1[i];
      // per_class_top3 is built from the same subjects, so rows align.
      const auto& s3 = report.per_class_top3[i];
      out << s1.class_id << ',' << csv_field(std::string(class_name(s1.class_id))) << ','
          << s1.subjects << ',' << format_double(s1.mean) << ',' << format_double(s1.deviation)
          << ',' << format_double(s3.mean) << ',' << format_double(s3.deviation) << '\n';
    }
  }
  {
    auto out = open_output(dir / "confusion.csv", /*binary=*/false);
    out << "true_class";
    for (int p = 0; p < kNumClasses; ++p) out << ',' << csv_field(std::string(class_name(p)));
    out << '\n';
    for (int t = 0; t < kNumClasses; ++t) {
      out << csv_field(std::string(class_name(t)));
      for (int p = 0; p < kNumClasses; ++p) {
        out << ',' << format_double(report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "summary.csv", /*binary=*/false);
    out << "metric,value\n";
    out << "top1_weighted_mean," << format_double(report.top1_weighted_mean) << '\n';
    out << "top3_weighted_mean," << format_double(report.top3_weighted_mean) << '\n';
    for (const auto& [k, mean] : report.extra_topk_weighted_mean) {
      out << "top" << k << "_weighted_mean," << format_double(mean) << '\n';
    }
    out << "overall_f1," << format_double(report.overall_f1) << '\n';
    out << "subjects," << report.per_subject.size() << '\n';
  }
  {
    auto out = open_output(dir / "summary.txt", /*binary=*/false);
    out << "Evaluation summary\n";
    out << "==================\n";
    out << "Subjects: " << report.per_subject.size() << "\n";
    out << "Weighted top-1 accuracy (mean over subjects): "
        << format_double(report.top1_weighted_mean) << "\n";
    out << "Weighted top-3 accuracy (mean over subjects): "
        << format_double(report.top3_weighted_mean) << "\n";
    out << "Overall weighted F-score (top-1, pooled): " << format_double(report.overall_f1)
        << "\n\n";
    out << "Per-class top-1 (mean +/- population deviation across subjects):\n";
    for (const auto& s : report.per_class_top1) {
      out << "  " << class_name(s.class_id) << ": " << format_double(s.mean) << " +/- "
          << format_double(s.deviation) << " (" << s.subjects << " subjects)\n";
    }
    if (!report.warnings.empty()) {
      out << "\nWarnings:\n";
      for (const auto& w : report.warnings) out << "  " << w << '\n';
    }
  }
}

}  // namespace adl

#endif  // ADL_EVAL_HPP_

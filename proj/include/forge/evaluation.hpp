// Copyright 2026 The Forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/records.hpp"
#include "forge/scene.hpp"

namespace forge::eval {

/// Corner-form box [x1, y1, x2, y2] in pixels.
struct BoxXYXY {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  bool valid() const { return x1 < x2 && y1 < y2; }
  double area() const { return (x2 - x1) * (y2 - y1); }
  static BoxXYXY from_xywh(const scene::Box& b) { return {b.x, b.y, b.x + b.w, b.y + b.h}; }
  bool operator==(const BoxXYXY&) const = default;
  auto operator<=>(const BoxXYXY&) const = default;
};

struct GroundedTriplet {
  std::string subject_label;
  BoxXYXY subject_box;
  std::string predicate;
  std::string object_label;
  BoxXYXY object_box;

  bool operator==(const GroundedTriplet&) const = default;
  auto operator<=>(const GroundedTriplet&) const = default;
};

struct ParseDiagnostic {
  int line = 0;  // 1-based
  std::string message;
};

struct ParsedPrediction {
  std::vector<GroundedTriplet> triplets;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Reads triplets written as "(label [x1,y1,x2,y2], predicate, label [x1,y1,x2,y2])".
/// A line may hold several comma-separated triplets. Blank lines are skipped;
/// any other line that does not parse is reported and left out.
ParsedPrediction parse_prediction(std::string_view text);

/// One triplet in the grammar accepted by parse_prediction.
std::string format_triplet(const GroundedTriplet& triplet);

/// Ground-truth triplets of a scene with reference boxes and normalized text.
std::vector<GroundedTriplet> ground_truth(const scene::SceneRecord& scene);

double iou(const BoxXYXY& a, const BoxXYXY& b);

enum class MatchStrategy {
  /// Augmenting-path matching: maximum number of matched pairs.
  kMaxCardinality,
  /// Highest min-IoU first; can leave matchable pairs unmatched.
  kGreedy,
};

struct MatchConfig {
  double iou_threshold = 0.5;
  std::map<std::string, std::string> synonyms;  // label -> canonical label
  MatchStrategy strategy = MatchStrategy::kMaxCardinality;

  void validate() const;
  std::string canonical(std::string_view label) const;
};

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double score = 0;  // min(subject IoU, object IoU)
};

struct Matching {
  std::vector<MatchPair> pairs;

  std::size_t size() const { return pairs.size(); }
};

/// True when pred and gt agree on labels and predicate and both boxes clear
/// the threshold; `score` receives min(subject IoU, object IoU).
bool compatible(const GroundedTriplet& pred, const GroundedTriplet& gt, const MatchConfig& cfg,
                double* score = nullptr);

/// One-to-one matching of predictions to ground truth.
Matching match_triplets(std::span<const GroundedTriplet> preds,
                        std::span<const GroundedTriplet> gt, const MatchConfig& cfg);

double compute_recall(const Matching& matching, std::span<const GroundedTriplet> gt);
double compute_mean_recall(const Matching& matching, std::span<const GroundedTriplet> gt);

struct ClassStats {
  std::size_t matched = 0;
  std::size_t total = 0;

  double recall() const { return total == 0 ? 0.0 : static_cast<double>(matched) / total; }
  bool operator==(const ClassStats&) const = default;
};

struct EvalReport {
  double recall = 0;
  double mean_recall = 0;
  std::size_t num_classes = 0;
  std::size_t matched = 0;
  std::size_t total = 0;
  std::map<std::string, ClassStats> per_predicate;
  std::vector<scene::ImageId> missing_images;
};

/// Accumulates per-image matches into dataset-level Recall and mRecall.
class SggEvaluator {
 public:
  explicit SggEvaluator(MatchConfig cfg, std::optional<std::size_t> topk = std::nullopt);

  /// Adds one image. Predictions beyond top-k are dropped before matching.
  void add_image(std::span<const GroundedTriplet> preds, std::span<const GroundedTriplet> gt);
  void add_missing_image(scene::ImageId id, std::span<const GroundedTriplet> gt);

  /// Throws when no ground truth was added.
  EvalReport report() const;

 private:
  MatchConfig cfg_;
  std::optional<std::size_t> topk_;
  std::map<std::string, ClassStats> per_predicate_;
  std::vector<scene::ImageId> missing_;
};

std::string to_json(const EvalReport& report);

struct QaScore {
  double accuracy = 0;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<std::string> missing_ids;
};

/// Gold items without a prediction count as wrong and are listed.
QaScore score_choice_qa(const std::map<std::string, int>& predictions,
                        std::span<const records::ChoiceItem> gold);

std::string to_json(const QaScore& score);

}  // namespace forge::eval

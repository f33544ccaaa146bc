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
#include "forge/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::eval {

namespace {

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Parses "x1,y1,x2,y2" (the text between the brackets).
std::optional<BoxXYXY> parse_box(std::string_view text, std::string& error) {
  std::array<double, 4> v{};
  std::size_t n = 0;
  while (true) {
    const auto comma = text.find(',');
    const auto piece = text.substr(0, comma);
    if (n == 4) {
      error = "box has more than four coordinates";
      return std::nullopt;
    }
    auto value = parse_double(piece);
    if (!value) {
      error = "box coordinate is not a number";
      return std::nullopt;
    }
    v[n++] = *value;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (n != 4) {
    error = "box needs four coordinates";
    return std::nullopt;
  }
  BoxXYXY box{v[0], v[1], v[2], v[3]};
  if (!box.valid()) {
    error = "box corners must satisfy x1 < x2 and y1 < y2";
    return std::nullopt;
  }
  return box;
}

// Parses the text inside one pair of parentheses.
std::optional<GroundedTriplet> parse_group(std::string_view inner, std::string& error) {
  const auto open1 = inner.find('[');
  if (open1 == std::string_view::npos) {
    error = "subject box missing";
    return std::nullopt;
  }
  const auto close1 = inner.find(']', open1);
  if (close1 == std::string_view::npos) {
    error = "unterminated subject box";
    return std::nullopt;
  }
  GroundedTriplet t;
  t.subject_label = normalize_label(inner.substr(0, open1));
  auto subject_box = parse_box(inner.substr(open1 + 1, close1 - open1 - 1), error);
  if (!subject_box) return std::nullopt;
  t.subject_box = *subject_box;

  auto rest = trim(inner.substr(close1 + 1));
  if (rest.empty() || rest.front() != ',') {
    error = "expected ',' after the subject";
    return std::nullopt;
  }
  rest.remove_prefix(1);

  const auto open2 = rest.rfind('[');
  const auto close2 = rest.rfind(']');
  if (open2 == std::string_view::npos || close2 == std::string_view::npos || close2 < open2) {
    error = "object box missing";
    return std::nullopt;
  }
  if (!trim(rest.substr(close2 + 1)).empty()) {
    error = "unexpected text after the object box";
    return std::nullopt;
  }
  auto object_box = parse_box(rest.substr(open2 + 1, close2 - open2 - 1), error);
  if (!object_box) return std::nullopt;
  t.object_box = *object_box;

  const auto middle = rest.substr(0, open2);
  const auto comma = middle.rfind(',');
  if (comma == std::string_view::npos) {
    error = "expected ',' between predicate and object";
    return std::nullopt;
  }
  t.predicate = normalize_label(middle.substr(0, comma));
  t.object_label = normalize_label(middle.substr(comma + 1));
  if (t.subject_label.empty() || t.object_label.empty()) {
    error = "empty label";
    return std::nullopt;
  }
  if (t.predicate.empty()) {
    error = "empty predicate";
    return std::nullopt;
  }
  if (t.predicate.find_first_of("[]") != std::string::npos ||
      t.subject_label.find_first_of("[],") != std::string::npos ||
      t.object_label.find_first_of("[]") != std::string::npos) {
    error = "stray bracket in label or predicate";
    return std::nullopt;
  }
  return t;
}

void parse_line(std::string_view line, int number, ParsedPrediction& out) {
  std::size_t pos = 0;
  bool found_group = false;
  while (pos < line.size()) {
    const char c = line[pos];
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    if (c != '(') {
      ++pos;
      continue;
    }
    const auto close = line.find(')', pos + 1);
    if (close == std::string_view::npos) {
      out.diagnostics.push_back({number, "unterminated triplet"});
      return;
    }
    found_group = true;
    std::string error;
    if (auto t = parse_group(line.substr(pos + 1, close - pos - 1), error)) {
      out.triplets.push_back(std::move(*t));
    } else {
      out.diagnostics.push_back({number, error});
    }
    pos = close + 1;
  }
  if (!found_group) out.diagnostics.push_back({number, "no triplet on line"});
}

}  // namespace

ParsedPrediction parse_prediction(std::string_view text) {
  ParsedPrediction out;
  int number = 0;
  while (!text.empty() || number == 0) {
    ++number;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!trim(line).empty()) parse_line(line, number, out);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::string format_triplet(const GroundedTriplet& t) {
  auto box = [](const BoxXYXY& b) {
    return "[" + format_number(b.x1) + "," + format_number(b.y1) + "," + format_number(b.x2) +
           "," + format_number(b.y2) + "]";
  };
  return "(" + t.subject_label + " " + box(t.subject_box) + ", " + t.predicate + ", " +
         t.object_label + " " + box(t.object_box) + ")";
}

std::vector<GroundedTriplet> ground_truth(const scene::SceneRecord& scene) {
  std::vector<GroundedTriplet> out;
  out.reserve(scene.triplets.size());
  for (const auto& t : scene.triplets) {
    const auto* s = scene.find_object(t.subject_id);
    const auto* o = scene.find_object(t.object_id);
    if (s == nullptr || o == nullptr) {
      throw Error("triplet endpoint does not resolve in image " + std::to_string(scene.meta.id));
    }
    out.push_back({normalize_label(s->label), BoxXYXY::from_xywh(scene::reference_box(*s)),
                   normalize_label(t.predicate), normalize_label(o->label),
                   BoxXYXY::from_xywh(scene::reference_box(*o))});
  }
  return out;
}

double iou(const BoxXYXY& a, const BoxXYXY& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0.0;
  const double inter = w * h;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

void MatchConfig::validate() const {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) throw Error("iou threshold must lie in (0, 1]");
}

std::string MatchConfig::canonical(std::string_view label) const {
  std::string norm = normalize_label(label);
  if (synonyms.empty()) return norm;
  for (const auto& [from, to] : synonyms) {
    if (normalize_label(from) == norm) return normalize_label(to);
  }
  return norm;
}

bool compatible(const GroundedTriplet& pred, const GroundedTriplet& gt, const MatchConfig& cfg,
                double* score) {
  if (normalize_label(pred.predicate) != normalize_label(gt.predicate)) return false;
  if (cfg.canonical(pred.subject_label) != cfg.canonical(gt.subject_label)) return false;
  if (cfg.canonical(pred.object_label) != cfg.canonical(gt.object_label)) return false;
  const double s = std::min(iou(pred.subject_box, gt.subject_box), iou(pred.object_box, gt.object_box));
  if (!(s > cfg.iou_threshold)) return false;
  if (score != nullptr) *score = s;
  return true;
}

Matching match_triplets(std::span<const GroundedTriplet> preds,
                        std::span<const GroundedTriplet> gt, const MatchConfig& cfg) {
  cfg.validate();
  struct Edge {
    std::size_t pred;
    std::size_t gt;
    double score;
  };
  auto better = [](const Edge& l, const Edge& r) {
    if (l.score != r.score) return l.score > r.score;
    if (l.pred != r.pred) return l.pred < r.pred;
    return l.gt < r.gt;
  };

  std::vector<std::vector<Edge>> adjacency(preds.size());
  std::vector<Edge> edges;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      double s = 0;
      if (compatible(preds[p], gt[g], cfg, &s)) {
        adjacency[p].push_back({p, g, s});
        edges.push_back({p, g, s});
      }
    }
    std::sort(adjacency[p].begin(), adjacency[p].end(), better);
  }

  Matching out;
  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> gt_owner(gt.size(), kFree);

  if (cfg.strategy == MatchStrategy::kGreedy) {
    std::sort(edges.begin(), edges.end(), better);
    std::vector<bool> pred_used(preds.size(), false);
    for (const auto& e : edges) {
      if (pred_used[e.pred] || gt_owner[e.gt] != kFree) continue;
      pred_used[e.pred] = true;
      gt_owner[e.gt] = e.pred;
      out.pairs.push_back({e.pred, e.gt, e.score});
    }
  } else {
    // Predictions with the strongest candidate claim first; augmenting paths
    // then reroute earlier claims whenever that frees a ground truth.
    std::vector<std::size_t> order;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (!adjacency[p].empty()) order.push_back(p);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      return adjacency[l].front().score > adjacency[r].front().score;
    });
    std::vector<bool> visited(gt.size());
    std::function<bool(std::size_t)> augment = [&](std::size_t p) {
      for (const auto& e : adjacency[p]) {
        if (visited[e.gt]) continue;
        visited[e.gt] = true;
        if (gt_owner[e.gt] == kFree || augment(gt_owner[e.gt])) {
          gt_owner[e.gt] = p;
          return true;
        }
      }
      return false;
    };
    for (auto p : order) {
      std::fill(visited.begin(), visited.end(), false);
      augment(p);
    }
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_owner[g] == kFree) continue;
      const auto p = gt_owner[g];
      const auto it = std::find_if(adjacency[p].begin(), adjacency[p].end(),
                                   [g](const Edge& e) { return e.gt == g; });
      out.pairs.push_back({p, g, it->score});
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MatchPair& l, const MatchPair& r) { return l.pred < r.pred; });
  return out;
}

double compute_recall(const Matching& matching, std::span<const GroundedTriplet> gt) {
  if (gt.empty()) throw Error("recall is undefined without ground truth");
  return static_cast<double>(matching.size()) / static_cast<double>(gt.size());
}

double compute_mean_recall(const Matching& matching, std::span<const GroundedTriplet> gt) {
  if (gt.empty()) throw Error("mean recall is undefined without ground truth");
  std::map<std::string, ClassStats> classes;
  std::vector<bool> matched(gt.size(), false);
  for (const auto& pair : matching.pairs) matched.at(pair.gt) = true;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    auto& stats = classes[normalize_label(gt[g].predicate)];
    ++stats.total;
    if (matched[g]) ++stats.matched;
  }
  double sum = 0;
  for (const auto& [name, stats] : classes) sum += stats.recall();
  return sum / static_cast<double>(classes.size());
}

SggEvaluator::SggEvaluator(MatchConfig cfg, std::optional<std::size_t> topk)
    : cfg_(std::move(cfg)), topk_(topk) {
  cfg_.validate();
}

void SggEvaluator::add_image(std::span<const GroundedTriplet> preds,
                             std::span<const GroundedTriplet> gt) {
  if (topk_ && preds.size() > *topk_) preds = preds.first(*topk_);
  const auto matching = match_triplets(preds, gt, cfg_);
  std::vector<bool> matched(gt.size(), false);
  for (const auto& pair : matching.pairs) matched[pair.gt] = true;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    auto& stats = per_predicate_[normalize_label(gt[g].predicate)];
    ++stats.total;
    if (matched[g]) ++stats.matched;
  }
}

void SggEvaluator::add_missing_image(scene::ImageId id, std::span<const GroundedTriplet> gt) {
  missing_.push_back(id);
  add_image({}, gt);
}

EvalReport SggEvaluator::report() const {
  EvalReport r;
  r.per_predicate = per_predicate_;
  r.missing_images = missing_;
  std::sort(r.missing_images.begin(), r.missing_images.end());
  double class_sum = 0;
  for (const auto& [name, stats] : per_predicate_) {
    if (stats.total == 0) continue;
    r.matched += stats.matched;
    r.total += stats.total;
    class_sum += stats.recall();
    ++r.num_classes;
  }
  if (r.total == 0) throw Error("no ground-truth triplets to evaluate against");
  r.recall = static_cast<double>(r.matched) / static_cast<double>(r.total);
  r.mean_recall = class_sum / static_cast<double>(r.num_classes);
  return r;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json node;
  node["recall"] = report.recall;
  node["mean_recall"] = report.mean_recall;
  node["N"] = report.num_classes;
  node["matched"] = report.matched;
  node["total"] = report.total;
  node["per_predicate"] = nlohmann::ordered_json::object();
  for (const auto& [name, stats] : report.per_predicate) {
    node["per_predicate"][name] = {
        {"matched", stats.matched}, {"total", stats.total}, {"recall", stats.recall()}};
  }
  node["missing_images"] = report.missing_images;
  return node.dump(2);
}

QaScore score_choice_qa(const std::map<std::string, int>& predictions,
                        std::span<const records::ChoiceItem> gold) {
  QaScore score;
  score.total = gold.size();
  for (const auto& item : gold) {
    auto it = predictions.find(item.id);
    if (it == predictions.end()) {
      score.missing_ids.push_back(item.id);
      continue;
    }
    if (it->second == item.answer) ++score.correct;
  }
  score.accuracy =
      score.total == 0 ? 0.0 : static_cast<double>(score.correct) / static_cast<double>(score.total);
  return score;
}

std::string to_json(const QaScore& score) {
  nlohmann::ordered_json node;
  node["accuracy"] = score.accuracy;
  node["total"] = score.total;
  node["correct"] = score.correct;
  node["missing_ids"] = score.missing_ids;
  return node.dump(2);
}

}  // namespace forge::eval

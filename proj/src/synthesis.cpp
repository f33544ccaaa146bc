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
#include "forge/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

#include "forge/error.hpp"
#include "forge/evaluation.hpp"
#include "forge/random.hpp"
#include "forge/text.hpp"

namespace forge::synthesis {

namespace {

using spatial::RelationKind;
using spatial::SpatialRelation;

class RelationIndex {
 public:
  explicit RelationIndex(std::span<const SpatialRelation> relations) {
    for (const auto& r : relations) kinds_[{r.a, r.b}].insert(r.kind);
  }

  bool has(ObjectId a, ObjectId b, RelationKind kind) const {
    auto it = kinds_.find({a, b});
    return it != kinds_.end() && it->second.contains(kind);
  }

  std::vector<RelationKind> between(ObjectId a, ObjectId b) const {
    auto it = kinds_.find({a, b});
    if (it == kinds_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  std::map<std::pair<ObjectId, ObjectId>, std::set<RelationKind>> kinds_;
};

std::string label_of(const scene::SceneRecord& scene, ObjectId id) {
  const auto* o = scene.find_object(id);
  if (o == nullptr) throw Error("object " + std::to_string(id) + " is not in image " +
                                std::to_string(scene.meta.id));
  return o->label;
}

std::string article(std::string_view word) {
  if (!word.empty() && std::string_view("aeiouAEIOU").find(word.front()) != std::string_view::npos) {
    return "An";
  }
  return "A";
}

constexpr std::array<QaKind, 6> kAllKinds{QaKind::kFrontBack, QaKind::kUpDown,
                                          QaKind::kLeftRight, QaKind::kSorting,
                                          QaKind::kOcclusion, QaKind::kSize};

// The relation pair that settles a pairwise kind: (yes-kind, no-kind).
std::pair<RelationKind, RelationKind> deciding_kinds(QaKind kind) {
  switch (kind) {
    case QaKind::kFrontBack:
    case QaKind::kSorting:
      return {RelationKind::kInFrontOf, RelationKind::kBehind};
    case QaKind::kUpDown:
      return {RelationKind::kAbove, RelationKind::kBelow};
    case QaKind::kLeftRight:
      return {RelationKind::kLeftOf, RelationKind::kRightOf};
    case QaKind::kOcclusion:
      return {RelationKind::kOccludes, RelationKind::kOccludedBy};
    case QaKind::kSize:
      return {RelationKind::kLargerThan, RelationKind::kSmallerThan};
  }
  return {RelationKind::kInFrontOf, RelationKind::kBehind};
}

std::optional<QAItem> answer_front_back(const scene::SceneRecord& scene, const RelationIndex& index,
                                        const QaQuery& q) {
  const ObjectId x = q.ids[0], y = q.ids[1];
  bool x_near;
  if (index.has(x, y, RelationKind::kInFrontOf)) {
    x_near = true;
  } else if (index.has(x, y, RelationKind::kBehind)) {
    x_near = false;
  } else {
    return std::nullopt;
  }
  const std::string X = label_of(scene, x), Y = label_of(scene, y);
  QAItem item;
  item.kind = QaKind::kFrontBack;
  item.subject_ids = {x, y};
  switch (q.phrasing) {
    case 1:
      item.question = "Is the " + X + " farther away from the camera than the " + Y + "?";
      item.expected_yes = !x_near;
      item.answer = item.expected_yes
                        ? "Yes, the " + X + " is farther away from the camera than the " + Y + "."
                        : "No, the " + Y + " is farther away from the camera than the " + X + ".";
      break;
    case 2:
      item.question = "Is the " + X + " in front of the " + Y + "?";
      item.expected_yes = x_near;
      item.answer = item.expected_yes ? "Yes, the " + X + " is in front of the " + Y + "."
                                      : "No, the " + Y + " is in front of the " + X + ".";
      break;
    default:
      item.question = "Is the " + X + " closer to the camera than the " + Y + "?";
      item.expected_yes = x_near;
      item.answer = item.expected_yes
                        ? "Yes, the " + X + " is closer to the camera than the " + Y + "."
                        : "No, the " + Y + " is closer to the camera than the " + X + ".";
      break;
  }
  item.fact_subject = x_near ? x : y;
  item.fact_object = x_near ? y : x;
  item.fact = {x_near ? X : Y, "in front of", x_near ? Y : X};
  return item;
}

std::optional<QAItem> answer_sorting(const scene::SceneRecord& scene, const RelationIndex& index,
                                     const QaQuery& q) {
  if (q.ids.size() != 3) return std::nullopt;
  std::array<int, 3> ahead_of{0, 0, 0};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      if (index.has(q.ids[i], q.ids[j], RelationKind::kInFrontOf)) {
        ++ahead_of[i];
      } else if (!index.has(q.ids[i], q.ids[j], RelationKind::kBehind)) {
        return std::nullopt;
      }
    }
  }
  // Ranks other than {2, 1, 0} mean the three relations form a cycle.
  const std::set<int> ranks(ahead_of.begin(), ahead_of.end());
  if (ranks != std::set<int>{0, 1, 2}) return std::nullopt;
  std::array<ObjectId, 3> order{};
  for (std::size_t i = 0; i < 3; ++i) order[2 - ahead_of[i]] = q.ids[i];

  auto list = [&](const auto& ids) {
    return "the " + label_of(scene, ids[0]) + ", the " + label_of(scene, ids[1]) + ", and the " +
           label_of(scene, ids[2]);
  };
  QAItem item;
  item.kind = QaKind::kSorting;
  item.subject_ids = q.ids;
  item.question = "Are " + list(q.ids) + " ordered from nearest to farthest?";
  item.expected_yes = std::equal(order.begin(), order.end(), q.ids.begin());
  item.answer = (item.expected_yes ? "Yes, " : "No, ") +
                std::string("from nearest to farthest they are ") + list(order) + ".";
  item.fact_subject = order[0];
  item.fact_object = order[2];
  item.fact = {label_of(scene, order[0]), "in front of", label_of(scene, order[2])};
  return item;
}

std::optional<QAItem> answer_pairwise(const scene::SceneRecord& scene, const RelationIndex& index,
                                      const QaQuery& q) {
  const ObjectId x = q.ids[0], y = q.ids[1];
  const auto [yes_kind, no_kind] = deciding_kinds(q.kind);
  bool yes;
  if (index.has(x, y, yes_kind)) {
    yes = true;
  } else if (index.has(x, y, no_kind)) {
    yes = false;
  } else {
    return std::nullopt;
  }
  const std::string X = label_of(scene, x), Y = label_of(scene, y);
  QAItem item;
  item.kind = q.kind;
  item.subject_ids = {x, y};
  item.expected_yes = yes;
  const RelationKind holding = yes ? yes_kind : no_kind;
  if (q.kind == QaKind::kOcclusion) {
    item.question = "Does the " + X + " occlude the " + Y + "?";
    item.answer = yes ? "Yes, the " + X + " occludes the " + Y + "."
                      : "No, the " + X + " is occluded by the " + Y + ".";
  } else {
    const std::string asked(spatial::phrase(yes_kind));
    item.question = "Is the " + X + " " + asked + " the " + Y + "?";
    item.answer = (yes ? "Yes, the " : "No, the ") + X + " is " +
                  std::string(spatial::phrase(holding)) + " the " + Y + ".";
  }
  item.fact_subject = x;
  item.fact_object = y;
  item.fact = {X, std::string(spatial::phrase(holding)), Y};
  return item;
}

}  // namespace

std::string verbalize(std::string_view subject, std::string_view predicate, std::string_view object) {
  return article(subject) + " " + std::string(subject) + " is " + std::string(predicate) + " the " +
         std::string(object) + ".";
}

std::string layered_description(const scene::SceneRecord& scene,
                                const spatial::LayerAssignment& layers,
                                const std::vector<std::vector<scene::Triplet>>& grouped) {
  std::string out;
  for (std::size_t k = 0; k < layers.layers.size(); ++k) {
    if (k > 0) out += "\n\n";
    out += "Layer " + std::to_string(k + 1) + ":\n";
    const auto& triplets = k < grouped.size() ? grouped[k] : std::vector<scene::Triplet>{};
    if (triplets.empty()) {
      const std::string basic = label_of(scene, layers.layers[k].basic);
      out += article(basic) + " " + basic + " is at this depth.";
      continue;
    }
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      if (i > 0) out += " ";
      const auto& t = triplets[i];
      out += verbalize(label_of(scene, t.subject_id), t.predicate, label_of(scene, t.object_id));
    }
  }
  return out;
}

bool preserves_triplets(const scene::SceneRecord& scene, std::string_view text) {
  const auto words = split_words(text);
  const std::set<std::string> present(words.begin(), words.end());
  auto all_present = [&](std::string_view phrase) {
    for (const auto& w : split_words(phrase)) {
      if (!present.contains(w)) return false;
    }
    return true;
  };
  for (const auto& t : scene.triplets) {
    if (!all_present(label_of(scene, t.subject_id)) || !all_present(t.predicate) ||
        !all_present(label_of(scene, t.object_id))) {
      return false;
    }
  }
  return true;
}

InstructionRecord render_desc(const scene::SceneRecord& scene,
                              const spatial::LayerAssignment& layers,
                              const std::vector<std::vector<scene::Triplet>>& grouped,
                              const llm::Rewriter& rewriter) {
  std::string text = layered_description(scene, layers, grouped);
  if (rewriter) {
    std::string graph;
    for (const auto& t : scene.triplets) {
      graph += "(" + label_of(scene, t.subject_id) + ", " + t.predicate + ", " +
               label_of(scene, t.object_id) + ")\n";
    }
    try {
      const auto prompt =
          llm::build_prompt(llm::desc_rewrite_template(), {{"scene_graph", graph}, {"layout", text}});
      if (auto rewritten = rewriter(prompt)) {
        const auto body = std::string(trim(*rewritten));
        if (!body.empty() && preserves_triplets(scene, body)) text = body;
      }
    } catch (const std::exception&) {
      // Template text stands.
    }
  }
  return InstructionRecord{std::to_string(scene.meta.id) + "_desc",
                           scene.meta.file_name,
                           "desc",
                           {{"human", std::string(kDescPrompt)}, {"gpt", std::move(text)}}};
}

std::string_view to_string(QaKind kind) {
  switch (kind) {
    case QaKind::kFrontBack:
      return "front_back";
    case QaKind::kUpDown:
      return "up_down";
    case QaKind::kLeftRight:
      return "left_right";
    case QaKind::kSorting:
      return "sorting";
    case QaKind::kOcclusion:
      return "occlusion";
    case QaKind::kSize:
      return "size";
  }
  return "unknown";
}

std::string Statement::text() const { return "the " + subject + " is " + relation + " the " + object; }

std::optional<QAItem> answer_query(const scene::SceneRecord& scene,
                                   std::span<const SpatialRelation> relations, const QaQuery& query) {
  const RelationIndex index(relations);
  if (query.kind == QaKind::kSorting) return answer_sorting(scene, index, query);
  if (query.ids.size() != 2 || query.ids[0] == query.ids[1]) return std::nullopt;
  if (query.kind == QaKind::kFrontBack) return answer_front_back(scene, index, query);
  return answer_pairwise(scene, index, query);
}

QaResult gen_qa(const scene::SceneRecord& scene, std::span<const SpatialRelation> relations,
                std::size_t n, std::uint64_t seed) {
  if (relations.empty()) throw Error("question generation needs at least one relation");
  if (n == 0) throw Error("question count must be at least 1");

  const RelationIndex index(relations);
  const auto& objects = scene.objects;
  std::array<std::vector<std::vector<ObjectId>>, kAllKinds.size()> pools;

  auto pair_settled = [&](ObjectId a, ObjectId b, QaKind kind) {
    const auto [yes_kind, no_kind] = deciding_kinds(kind);
    return index.has(a, b, yes_kind) || index.has(a, b, no_kind);
  };
  // Same-label pairs would make the question ambiguous to a reader.
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (objects[i].label == objects[j].label) continue;
      for (std::size_t k = 0; k < kAllKinds.size(); ++k) {
        if (kAllKinds[k] == QaKind::kSorting) continue;
        if (pair_settled(objects[i].id, objects[j].id, kAllKinds[k])) {
          pools[k].push_back({objects[i].id, objects[j].id});
        }
      }
    }
  }
  const std::size_t sorting_slot = static_cast<std::size_t>(QaKind::kSorting);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (objects[i].label == objects[j].label ||
          !pair_settled(objects[i].id, objects[j].id, QaKind::kFrontBack)) {
        continue;
      }
      for (std::size_t k = j + 1; k < objects.size(); ++k) {
        if (objects[k].label == objects[i].label || objects[k].label == objects[j].label) continue;
        QaQuery q{QaKind::kSorting, {objects[i].id, objects[j].id, objects[k].id}, 0};
        if (answer_sorting(scene, index, q)) pools[sorting_slot].push_back(q.ids);
      }
    }
  }

  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(scene.meta.id)));
  for (auto& pool : pools) rng.shuffle(pool);

  QaResult result;
  while (result.items.size() < n) {
    std::vector<std::size_t> available;
    for (std::size_t k = 0; k < pools.size(); ++k) {
      if (!pools[k].empty()) available.push_back(k);
    }
    if (available.empty()) break;
    const std::size_t slot = available[rng.below(available.size())];
    QaQuery q{kAllKinds[slot], std::move(pools[slot].back()), 0};
    pools[slot].pop_back();
    if (q.kind == QaKind::kSorting) {
      rng.shuffle(q.ids);
    } else if (rng.coin()) {
      std::swap(q.ids[0], q.ids[1]);
    }
    if (q.kind == QaKind::kFrontBack) q.phrasing = static_cast<int>(rng.below(3));
    auto item = q.kind == QaKind::kSorting ? answer_sorting(scene, index, q)
                : q.kind == QaKind::kFrontBack ? answer_front_back(scene, index, q)
                                               : answer_pairwise(scene, index, q);
    if (!item) continue;
    item->id = std::to_string(scene.meta.id) + "_qa_" + std::to_string(result.items.size());
    item->image = scene.meta.file_name;
    result.items.push_back(std::move(*item));
  }
  result.shortfall = n - result.items.size();
  return result;
}

InstructionRecord qa_record(const QAItem& item) {
  return InstructionRecord{item.id, item.image, "qa", {{"human", item.question}, {"gpt", item.answer}}};
}

InstructionRecord gen_conv(const scene::SceneRecord& scene, const spatial::LayerAssignment& layers,
                           const std::vector<std::vector<scene::Triplet>>& grouped,
                           std::span<const SpatialRelation> relations) {
  std::string objects_text;
  for (const auto& o : scene.objects) {
    const auto box = eval::BoxXYXY::from_xywh(scene::reference_box(o));
    if (!objects_text.empty()) objects_text += "\n";
    objects_text += o.label + " [" + format_number(box.x1) + "," + format_number(box.y1) + "," +
                    format_number(box.x2) + "," + format_number(box.y2) + "]";
  }

  std::map<ObjectId, std::size_t> position;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) position[scene.objects[i].id] = i;
  std::string relations_text;
  for (const auto& r : relations) {
    auto pa = position.find(r.a), pb = position.find(r.b);
    if (pa == position.end() || pb == position.end() || pa->second > pb->second) continue;
    if (!relations_text.empty()) relations_text += "\n";
    relations_text += "The " + label_of(scene, r.a) + " is " + std::string(spatial::phrase(r.kind)) +
                      " the " + label_of(scene, r.b) + ".";
  }
  if (relations_text.empty()) relations_text = "No pairwise spatial relations can be determined.";

  std::string layout_text;
  for (std::size_t k = 0; k < layers.layers.size(); ++k) {
    const auto& layer = layers.layers[k];
    if (k > 0) layout_text += "\n";
    layout_text += "Layer " + std::to_string(k + 1) + ": " + label_of(scene, layer.basic);
    for (auto m : layer.members) layout_text += ", " + label_of(scene, m);
  }

  const auto gt = eval::ground_truth(scene);
  std::string graph_text;
  std::vector<bool> emitted(scene.triplets.size(), false);
  auto emit = [&](std::size_t i) {
    if (emitted[i]) return;
    emitted[i] = true;
    if (!graph_text.empty()) graph_text += "\n";
    graph_text += eval::format_triplet(gt[i]);
  };
  // Layer order first, then anything the grouping did not cover.
  for (const auto& bucket : grouped) {
    for (const auto& t : bucket) {
      for (std::size_t i = 0; i < scene.triplets.size(); ++i) {
        if (!emitted[i] && scene.triplets[i] == t) {
          emit(i);
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < scene.triplets.size(); ++i) emit(i);
  if (graph_text.empty()) graph_text = "The scene graph has no relations.";

  return InstructionRecord{
      std::to_string(scene.meta.id) + "_conv",
      scene.meta.file_name,
      "conv",
      {{"human", "List the objects in the image with their bounding boxes."},
       {"gpt", objects_text},
       {"human", "Describe the spatial relations between these objects."},
       {"gpt", relations_text},
       {"human", "Group the objects into depth layers from near to far."},
       {"gpt", layout_text},
       {"human", "Generate the scene graph of the image as (subject [box], predicate, object [box]) "
                 "triplets."},
       {"gpt", graph_text}}};
}

std::vector<std::string> default_relation_vocab() {
  return {"in front of",     "behind",      "above",        "below",     "to the left of",
          "to the right of", "larger than", "smaller than", "occluding", "occluded by"};
}

std::vector<std::string> true_phrases(std::span<const SpatialRelation> relations, ObjectId a,
                                      ObjectId b) {
  std::vector<std::string> out;
  for (const auto& r : relations) {
    if (r.a == a && r.b == b) out.emplace_back(spatial::phrase(r.kind));
  }
  return out;
}

ChoiceItem to_choice_format(const QAItem& item, std::span<const std::string> relation_vocab,
                            std::uint64_t seed, std::span<const std::string> also_true) {
  std::vector<std::string> distinct;
  for (const auto& v : relation_vocab) {
    auto norm = normalize_label(v);
    if (!norm.empty() && std::find(distinct.begin(), distinct.end(), norm) == distinct.end()) {
      distinct.push_back(std::move(norm));
    }
  }
  if (distinct.size() < 4) throw Error("relation vocabulary needs at least 4 distinct entries");

  std::set<std::string> excluded{normalize_label(item.fact.relation)};
  for (const auto& t : also_true) excluded.insert(normalize_label(t));
  std::vector<std::string> wrong;
  for (const auto& v : distinct) {
    if (!excluded.contains(v)) wrong.push_back(v);
  }
  if (wrong.size() < 3) throw Error("insufficient distinct distractors for " + item.id);

  Rng rng(mix_seed(seed, hash_text(item.id)));
  rng.shuffle(wrong);
  std::vector<std::string> options{item.fact.text()};
  for (std::size_t i = 0; i < 3; ++i) {
    options.push_back(Statement{item.fact.subject, wrong[i], item.fact.object}.text());
  }
  std::vector<int> order{0, 1, 2, 3};
  rng.shuffle(order);

  ChoiceItem out;
  out.id = item.id;
  out.image = item.image;
  out.question = "Which statement about the " + item.fact.subject + " and the " + item.fact.object +
                 " is correct?";
  for (std::size_t i = 0; i < 4; ++i) {
    out.choices[i] = options[order[i]];
    if (order[i] == 0) out.answer = static_cast<int>(i);
  }
  return out;
}

}  // namespace forge::synthesis

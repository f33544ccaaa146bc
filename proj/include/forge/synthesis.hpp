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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/llm_client.hpp"
#include "forge/records.hpp"
#include "forge/scene.hpp"
#include "forge/spatial.hpp"

namespace forge::synthesis {

using records::ChoiceItem;
using records::InstructionRecord;
using scene::ObjectId;

/// Human turn of every layered-description record.
inline constexpr std::string_view kDescPrompt =
    "Provide a spatial layout in detail, including scene graph description in each-layer from "
    "near to far.";

/// Sentence form of one triplet: "A fire hydrant is in front of the fence."
std::string verbalize(std::string_view subject, std::string_view predicate, std::string_view object);

/// The templated per-layer description.
std::string layered_description(const scene::SceneRecord& scene,
                                const spatial::LayerAssignment& layers,
                                const std::vector<std::vector<scene::Triplet>>& grouped);

/// True when every word of every triplet's subject, predicate and object
/// occurs in `text`.
bool preserves_triplets(const scene::SceneRecord& scene, std::string_view text);

/// Layered description record. A supplied rewriter replaces the templated text
/// only if its output keeps every triplet's words; otherwise the template is
/// kept.
InstructionRecord render_desc(const scene::SceneRecord& scene,
                              const spatial::LayerAssignment& layers,
                              const std::vector<std::vector<scene::Triplet>>& grouped,
                              const llm::Rewriter& rewriter = {});

enum class QaKind { kFrontBack, kUpDown, kLeftRight, kSorting, kOcclusion, kSize };

std::string_view to_string(QaKind kind);

/// "the {subject} is {relation} the {object}"
struct Statement {
  std::string subject;
  std::string relation;
  std::string object;

  std::string text() const;
  bool operator==(const Statement&) const = default;
};

struct QAItem {
  std::string id;
  std::string image;
  QaKind kind = QaKind::kFrontBack;
  std::string question;
  std::string answer;
  /// Objects in the order the question names them.
  std::vector<ObjectId> subject_ids;
  bool expected_yes = false;
  /// The true fact behind the answer; choice items are built around it.
  Statement fact;
  ObjectId fact_subject = 0;
  ObjectId fact_object = 0;

  bool operator==(const QAItem&) const = default;
};

/// Which question to ask about which objects. `phrasing` picks among the
/// surface forms of a kind (front-back has three, the others one).
struct QaQuery {
  QaKind kind = QaKind::kFrontBack;
  std::vector<ObjectId> ids;
  int phrasing = 0;
};

/// Phrases the query and answers it from `relations`. nullopt when the
/// relations do not settle the question.
std::optional<QAItem> answer_query(const scene::SceneRecord& scene,
                                   std::span<const spatial::SpatialRelation> relations,
                                   const QaQuery& query);

struct QaResult {
  std::vector<QAItem> items;
  /// Requested items that could not be realized.
  std::size_t shortfall = 0;
};

/// Samples up to n questions without replacement, picking a kind uniformly
/// among those with candidates left at every draw.
QaResult gen_qa(const scene::SceneRecord& scene, std::span<const spatial::SpatialRelation> relations,
                std::size_t n, std::uint64_t seed);

InstructionRecord qa_record(const QAItem& item);

/// Four exchanges: objects with boxes, pairwise relations, layered layout and
/// the full scene graph as triplet lines.
InstructionRecord gen_conv(const scene::SceneRecord& scene, const spatial::LayerAssignment& layers,
                           const std::vector<std::vector<scene::Triplet>>& grouped,
                           std::span<const spatial::SpatialRelation> relations);

/// Relation phrases used as distractor material for choice items.
std::vector<std::string> default_relation_vocab();

/// Relation phrases that hold from `a` to `b` according to `relations`.
std::vector<std::string> true_phrases(std::span<const spatial::SpatialRelation> relations,
                                      ObjectId a, ObjectId b);

/// The item's fact plus three statements with a substituted relation, in a
/// seeded order. Relations listed in `also_true` are never used as
/// distractors. Throws when fewer than three distractors remain.
ChoiceItem to_choice_format(const QAItem& item, std::span<const std::string> relation_vocab,
                            std::uint64_t seed, std::span<const std::string> also_true = {});

}  // namespace forge::synthesis

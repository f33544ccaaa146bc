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
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/evaluation.hpp"
#include "forge/random.hpp"

namespace {

using namespace forge::eval;

GroundedTriplet trip(std::string s, BoxXYXY sb, std::string p, std::string o, BoxXYXY ob) {
  return {std::move(s), sb, std::move(p), std::move(o), ob};
}

// Integer pixel-grid IoU: counts unit cells [x, x+1) x [y, y+1) in each box.
double pixel_iou(const BoxXYXY& a, const BoxXYXY& b) {
  long inter = 0, uni = 0;
  for (int x = -50; x < 100; ++x) {
    for (int y = -50; y < 100; ++y) {
      const bool in_a = x >= a.x1 && x + 1 <= a.x2 && y >= a.y1 && y + 1 <= a.y2;
      const bool in_b = x >= b.x1 && x + 1 <= b.x2 && y >= b.y1 && y + 1 <= b.y2;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Largest one-to-one matching by trying every assignment.
std::size_t brute_force_matches(std::span<const GroundedTriplet> preds,
                                std::span<const GroundedTriplet> gt, const MatchConfig& cfg) {
  std::vector<bool> used(gt.size(), false);
  std::function<std::size_t(std::size_t)> go = [&](std::size_t i) -> std::size_t {
    if (i == preds.size()) return 0;
    std::size_t best = go(i + 1);
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (used[j] || !compatible(preds[i], gt[j], cfg)) continue;
      used[j] = true;
      best = std::max(best, 1 + go(i + 1));
      used[j] = false;
    }
    return best;
  };
  return go(0);
}

}  // namespace

TEST_CASE("prediction grammar") {
  const auto p = parse_prediction("(fire hydrant [10,20,50,90], in front of, fence [0,30,200,120])");
  REQUIRE(p.triplets.size() == 1);
  CHECK(p.diagnostics.empty());
  const auto& t = p.triplets[0];
  CHECK(t.subject_label == "fire hydrant");
  CHECK(t.object_label == "fence");
  CHECK(t.predicate == "in front of");
  CHECK(t.subject_box == BoxXYXY{10, 20, 50, 90});
  CHECK(t.object_box == BoxXYXY{0, 30, 200, 120});

  const auto missing = parse_prediction("(fire hydrant, in front of, fence [0,30,200,120])");
  CHECK(missing.triplets.empty());
  CHECK(missing.diagnostics.size() == 1);

  const auto mixed = parse_prediction(
      "Layer 1: (Man [0,0,10,10], holding, child [2,2,8,8]), (fence [0, 0, 5, 5], next to, tree [1,1,4,4])\n"
      "garbage line\n"
      "(cup [5,5,1,1], on, table [0,0,9,9])\n"
      "(dog [1.5,2,3.25,4], sitting on, mat [0,0,9,9])");
  CHECK(mixed.triplets.size() == 3);
  REQUIRE(mixed.diagnostics.size() == 2);
  CHECK(mixed.diagnostics[0].line == 2);
  CHECK(mixed.diagnostics[1].line == 3);
  CHECK(mixed.triplets[0].subject_label == "man");
  CHECK(mixed.triplets[2].subject_box == BoxXYXY{1.5, 2, 3.25, 4});
}

TEST_CASE("format_triplet round trips through the parser") {
  const auto t = trip("fire hydrant", {10, 20, 50, 90}, "in front of", "fence", {0, 30, 200.5, 120});
  const auto text = format_triplet(t);
  CHECK(text == "(fire hydrant [10,20,50,90], in front of, fence [0,30,200.5,120])");
  const auto back = parse_prediction(text);
  REQUIRE(back.triplets.size() == 1);
  CHECK(back.triplets[0] == t);
}

TEST_CASE("iou against pixel enumeration") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {20, 20, 30, 30}) == 0.0);
  CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
  const double third = iou({0, 0, 10, 10}, {5, 0, 15, 10});
  CHECK(std::abs(third - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(third - pixel_iou({0, 0, 10, 10}, {5, 0, 15, 10})) < 1e-12);

  forge::Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    auto box = [&] {
      const double x = static_cast<double>(rng.below(40)), y = static_cast<double>(rng.below(40));
      return BoxXYXY{x, y, x + 1 + static_cast<double>(rng.below(30)), y + 1 + static_cast<double>(rng.below(30))};
    };
    const auto a = box(), b = box();
    CHECK(std::abs(iou(a, b) - pixel_iou(a, b)) < 1e-12);
    CHECK(iou(a, b) == iou(b, a));
  }
}

TEST_CASE("match rules") {
  MatchConfig cfg;
  const auto gt = trip("man", {0, 0, 10, 10}, "on", "horse", {0, 0, 10, 10});
  const auto p06 = trip("man", {0, 0, 10, 6}, "on", "horse", {0, 4, 10, 10});
  const std::vector<GroundedTriplet> g{gt};
  CHECK(match_triplets(std::vector{p06}, g, cfg).size() == 1);

  const auto p04 = trip("man", {0, 0, 10, 4}, "on", "horse", {0, 4, 10, 10});
  CHECK(match_triplets(std::vector{p04}, g, cfg).size() == 0);

  const auto exact_half = trip("man", {0, 0, 10, 5}, "on", "horse", {0, 0, 10, 10});
  CHECK(match_triplets(std::vector{exact_half}, g, cfg).size() == 0);

  CHECK(match_triplets(std::vector{gt, gt}, g, cfg).size() == 1);

  auto wrong_pred = gt;
  wrong_pred.predicate = "beside";
  CHECK(match_triplets(std::vector{wrong_pred}, g, cfg).size() == 0);

  auto synonym = gt;
  synonym.object_label = "pony";
  CHECK(match_triplets(std::vector{synonym}, g, cfg).size() == 0);
  cfg.synonyms = {{"pony", "horse"}};
  CHECK(match_triplets(std::vector{synonym}, g, cfg).size() == 1);
}

TEST_CASE("max-cardinality matching beats greedy on a crossing instance") {
  const BoxXYXY unit{0, 0, 10, 10};
  const std::vector<GroundedTriplet> gt{trip("a", {0, 0, 10, 10}, "on", "b", unit),
                                        trip("a", {0, 3, 10, 10}, "on", "b", unit)};
  const std::vector<GroundedTriplet> preds{trip("a", {0, 1, 10, 10}, "on", "b", unit),
                                           trip("a", {0, -2, 10, 8}, "on", "b", unit)};
  // Subject IoUs: p0-g0 0.9, p0-g1 7/9, p1-g0 8/12, p1-g1 5/13.
  // Greedy takes p0-g0 first and strands p1; the optimum pairs p0-g1, p1-g0.
  MatchConfig cfg;
  CHECK(brute_force_matches(preds, gt, cfg) == 2);
  const auto best = match_triplets(preds, gt, cfg);
  REQUIRE(best.size() == 2);
  CHECK(best.pairs[0].pred == 0);
  CHECK(best.pairs[0].gt == 1);
  MatchConfig greedy = cfg;
  greedy.strategy = MatchStrategy::kGreedy;
  CHECK(match_triplets(preds, gt, greedy).size() == 1);
}

TEST_CASE("matching equals the exhaustive oracle on random instances") {
  forge::Rng rng(2024);
  MatchConfig cfg;
  const std::vector<std::string> labels{"a", "b"};
  const std::vector<std::string> preds_vocab{"on", "near"};
  auto box = [&] {
    const double x = static_cast<double>(rng.below(6)), y = static_cast<double>(rng.below(6));
    return BoxXYXY{x, y, x + 6 + static_cast<double>(rng.below(3)), y + 6 + static_cast<double>(rng.below(3))};
  };
  auto random_trip = [&] {
    return trip(labels[rng.below(2)], box(), preds_vocab[rng.below(2)], labels[rng.below(2)], box());
  };
  for (int i = 0; i < 300; ++i) {
    std::vector<GroundedTriplet> preds(rng.below(7)), gt(rng.below(7));
    for (auto& p : preds) p = random_trip();
    for (auto& g : gt) g = random_trip();
    const auto m = match_triplets(preds, gt, cfg);
    CHECK(m.size() == brute_force_matches(preds, gt, cfg));
    std::vector<int> pred_use(preds.size()), gt_use(gt.size());
    for (const auto& pair : m.pairs) {
      CHECK(++pred_use[pair.pred] == 1);
      CHECK(++gt_use[pair.gt] == 1);
      CHECK(compatible(preds[pair.pred], gt[pair.gt], cfg));
    }
  }
}

TEST_CASE("recall and mean recall") {
  const BoxXYXY b{0, 0, 10, 10};
  const std::vector<GroundedTriplet> gt{trip("a", b, "on", "b", b), trip("c", b, "on", "d", b),
                                        trip("e", b, "beside", "f", b)};
  MatchConfig cfg;
  const std::vector<GroundedTriplet> two{gt[0], gt[2]};
  const auto m = match_triplets(two, gt, cfg);
  CHECK(compute_recall(m, gt) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(compute_mean_recall(m, gt) == doctest::Approx(0.75).epsilon(1e-12));

  const auto none = match_triplets(std::vector<GroundedTriplet>{}, gt, cfg);
  CHECK(compute_recall(none, gt) == 0.0);
  CHECK(compute_mean_recall(none, gt) == 0.0);
  const auto all = match_triplets(gt, gt, cfg);
  CHECK(compute_recall(all, gt) == 1.0);
  CHECK(compute_mean_recall(all, gt) == 1.0);

  const std::vector<GroundedTriplet> one_class{gt[0], gt[1]};
  const auto half = match_triplets(std::vector{gt[0]}, one_class, cfg);
  CHECK(compute_mean_recall(half, one_class) == compute_recall(half, one_class));

  CHECK_THROWS_AS(compute_recall(none, std::vector<GroundedTriplet>{}), forge::Error);
}

TEST_CASE("evaluator aggregates images and honours top-k") {
  const BoxXYXY b{0, 0, 10, 10};
  const std::vector<GroundedTriplet> img1{trip("a", b, "on", "b", b), trip("c", b, "beside", "d", b)};
  const std::vector<GroundedTriplet> img2{trip("e", b, "on", "f", b)};
  SggEvaluator ev(MatchConfig{}, 1);
  ev.add_image(std::vector{trip("x", b, "on", "y", b), img1[0], img1[1]}, img1);
  ev.add_missing_image(2, img2);
  const auto r = ev.report();
  CHECK(r.total == 3);
  CHECK(r.matched == 0);
  CHECK(r.missing_images == std::vector<forge::scene::ImageId>{2});

  SggEvaluator full(MatchConfig{});
  full.add_image(img1, img1);
  full.add_image(std::vector<GroundedTriplet>{}, img2);
  const auto f = full.report();
  CHECK(f.recall == doctest::Approx(2.0 / 3.0));
  CHECK(f.num_classes == 2);
  CHECK(f.mean_recall == doctest::Approx(0.75));
  const auto json = nlohmann::json::parse(to_json(f));
  CHECK(json["N"] == 2);
  CHECK(json["per_predicate"]["on"]["total"] == 2);

  CHECK_THROWS_AS(SggEvaluator(MatchConfig{}).report(), forge::Error);
}

TEST_CASE("choice accuracy") {
  std::vector<forge::records::ChoiceItem> gold;
  for (int i = 0; i < 4; ++i) {
    gold.push_back({"q" + std::to_string(i), "x.jpg", "?", {"a", "b", "c", "d"}, i});
  }
  std::map<std::string, int> all{{"q0", 0}, {"q1", 1}, {"q2", 2}, {"q3", 3}};
  CHECK(score_choice_qa(all, gold).accuracy == 1.0);
  std::map<std::string, int> half{{"q0", 0}, {"q1", 1}, {"q2", 0}};
  const auto s = score_choice_qa(half, gold);
  CHECK(s.accuracy == 0.5);
  CHECK(s.missing_ids == std::vector<std::string>{"q3"});
}

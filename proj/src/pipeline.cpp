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
#include "forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/evaluation.hpp"
#include "forge/geometry.hpp"
#include "forge/random.hpp"
#include "forge/records.hpp"
#include "forge/synthesis.hpp"
#include "forge/text.hpp"

namespace forge::pipeline {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

unsigned worker_count(const PipelineConfig& cfg, std::size_t items) {
  unsigned n = cfg.jobs != 0 ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(items, 1)));
}

// Runs fn(i) for i in [0, n) on `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string join_diagnostics(const std::vector<scene::Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "; ";
    out += d.subject + ": " + d.rule;
  }
  return out;
}

// An annotation file that is empty or whitespace-only holds no scenes.
std::optional<scene::Dataset> load_dataset_or_empty(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotation file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (trim(text).empty()) return std::nullopt;
  return scene::parse_annotations(text);
}

void report_failures(const std::vector<SceneOutcome>& outcomes, std::ostream& err) {
  for (const auto& o : outcomes) {
    if (!o.result) err << "image " << o.image_id << ": " << o.error << '\n';
  }
}

std::size_t count_ok(const std::vector<SceneOutcome>& outcomes) {
  return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                [](const SceneOutcome& o) { return o.result.has_value(); }));
}

// Shared front half of extract and synthesize. Returns nullopt after printing
// the reason when there is nothing to process.
std::optional<std::vector<SceneOutcome>> load_and_process(const std::filesystem::path& annotations,
                                                          const std::filesystem::path& depth_dir,
                                                          const PipelineConfig& cfg, CommandIo io,
                                                          int& exit_code) {
  auto dataset = load_dataset_or_empty(annotations);
  if (!dataset || dataset->scenes.empty()) {
    io.err << "no scenes in " << annotations.string() << '\n';
    exit_code = kExitNoInput;
    return std::nullopt;
  }
  const std::size_t total = dataset->scenes.size();
  auto outcomes = process_all(std::move(dataset->scenes), cfg, depth_dir);
  report_failures(outcomes, io.err);
  const std::size_t ok = count_ok(outcomes);
  io.err << "processed " << ok << "/" << total << " scenes\n";
  if (ok == 0) {
    io.err << "no processable scenes\n";
    exit_code = kExitNoInput;
    return std::nullopt;
  }
  return outcomes;
}

void write_text_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::string percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << fraction * 100.0;
  return s.str();
}

// Rewriter over the configured endpoint that never has more than
// llm.concurrency requests in flight across worker threads.
class BoundedRewriter {
 public:
  explicit BoundedRewriter(const llm::EndpointConfig& cfg)
      : slots_(std::clamp(cfg.concurrency, 1, 1024)), inner_(llm::make_rewriter(cfg)) {}

  std::optional<std::string> operator()(const std::string& prompt) {
    slots_.acquire();
    std::optional<std::string> out;
    try {
      out = inner_(prompt);
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();
    return out;
  }

 private:
  std::counting_semaphore<1024> slots_;
  llm::Rewriter inner_;
};

}  // namespace

ProcessedScene analyze_scene(scene::SceneRecord scene, const PipelineConfig& cfg) {
  if (scene.depth.empty()) throw Error("no depth map attached");
  if (auto diags = scene::validate_scene(scene); !diags.empty()) {
    throw Error("invalid scene: " + join_diagnostics(diags));
  }
  if (scene.objects.empty()) throw Error("scene has no objects");

  const auto& meta = scene.meta;
  const auto cam = geometry::default_intrinsics(meta.width, meta.height, cfg.fov_deg);
  ProcessedScene out;
  std::vector<spatial::LayerInput> inputs;
  std::vector<geometry::ZRange> ranges;
  for (const auto& o : scene.objects) {
    const auto region = scene::object_region(o, meta.width, meta.height);
    const auto points = geometry::backproject(scene.depth, cam, region, o.id, cfg.rotation);
    const auto z = geometry::object_z_range(points, cfg.trim_pct);
    out.objects.push_back(spatial::describe_object(o, z));
    inputs.push_back({o.id, z});
    ranges.push_back(z);
  }
  out.eps = spatial::scene_eps(ranges, cfg.eps_rel);
  out.relations =
      spatial::extract_relations(out.objects, meta.width, meta.height, out.eps, cfg.margin_frac);
  out.layers = spatial::assign_layers(inputs);
  out.grouped = spatial::group_triplets_by_layer(scene.triplets, out.layers);
  out.scene = std::move(scene);
  return out;
}

ProcessedScene process_scene(scene::SceneRecord skeleton, const PipelineConfig& cfg,
                             const std::filesystem::path& depth_dir) {
  skeleton.depth = scene::load_depth(skeleton.meta, depth_dir, cfg.depth_scale, cfg.depth_mode);
  return analyze_scene(std::move(skeleton), cfg);
}

std::vector<SceneOutcome> process_all(std::vector<scene::SceneRecord> skeletons,
                                      const PipelineConfig& cfg,
                                      const std::filesystem::path& depth_dir) {
  std::vector<SceneOutcome> outcomes(skeletons.size());
  parallel_for(skeletons.size(), worker_count(cfg, skeletons.size()), [&](std::size_t i) {
    outcomes[i].image_id = skeletons[i].meta.id;
    try {
      outcomes[i].result = process_scene(std::move(skeletons[i]), cfg, depth_dir);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });
  return outcomes;
}

std::vector<std::string> relation_lines(const ProcessedScene& scene) {
  std::vector<std::string> lines;
  for (const auto& r : scene.relations) {
    ordered_json node;
    node["image_id"] = scene.scene.meta.id;
    node["a"] = r.a;
    node["b"] = r.b;
    node["kind"] = spatial::to_string(r.kind);
    lines.push_back(node.dump());
  }
  return lines;
}

std::string layers_line(const ProcessedScene& scene) {
  ordered_json node;
  node["image_id"] = scene.scene.meta.id;
  node["layers"] = ordered_json::array();
  for (const auto& layer : scene.layers.layers) {
    node["layers"].push_back(ordered_json{
        {"basic", layer.basic}, {"members", layer.members}, {"depth_key", layer.depth_key}});
  }
  return node.dump();
}

int cmd_extract(const ExtractOptions& opts, const PipelineConfig& cfg, CommandIo io) {
  int code = kExitOk;
  auto outcomes = load_and_process(opts.annotations, opts.depth_dir, cfg, io, code);
  if (!outcomes) return code;
  std::filesystem::create_directories(opts.out_dir);
  std::vector<std::string> relations, layers;
  for (const auto& o : *outcomes) {
    if (!o.result) continue;
    auto lines = relation_lines(*o.result);
    relations.insert(relations.end(), lines.begin(), lines.end());
    layers.push_back(layers_line(*o.result));
  }
  write_text_lines(opts.out_dir / "relations.jsonl", relations);
  write_text_lines(opts.out_dir / "layers.jsonl", layers);
  io.out << "wrote " << layers.size() << " layer records and " << relations.size()
         << " relations to " << opts.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_synthesize(const SynthesizeOptions& opts, const PipelineConfig& cfg, CommandIo io) {
  static const std::set<std::string> kKnown{"desc", "qa", "conv", "choice"};
  std::set<std::string> tasks;
  for (const auto& t : opts.tasks) {
    if (!kKnown.contains(t)) {
      io.err << "unknown task \"" << t << "\" (expected desc, qa, conv or choice)\n";
      return kExitUsage;
    }
    tasks.insert(t);
  }
  if (tasks.empty()) {
    io.err << "no tasks requested\n";
    return kExitUsage;
  }

  int code = kExitOk;
  auto outcomes = load_and_process(opts.annotations, opts.depth_dir, cfg, io, code);
  if (!outcomes) return code;

  std::optional<BoundedRewriter> bounded;
  llm::Rewriter rewriter;
  if (cfg.llm_enabled() && tasks.contains("desc")) {
    auto endpoint = cfg.llm;
    if (!endpoint.auth_token) endpoint.auth_token = llm::auth_token_from_env();
    bounded.emplace(endpoint);
    rewriter = [&bounded](const std::string& prompt) { return (*bounded)(prompt); };
  }
  const auto vocab = cfg.relation_vocab.empty() ? synthesis::default_relation_vocab() : cfg.relation_vocab;

  struct SceneOutput {
    std::optional<records::InstructionRecord> desc;
    std::optional<records::InstructionRecord> conv;
    std::vector<records::InstructionRecord> qa;
    std::vector<records::ChoiceItem> choice;
    std::vector<std::string> notes;
  };
  std::vector<SceneOutput> produced(outcomes->size());
  parallel_for(outcomes->size(), worker_count(cfg, outcomes->size()), [&](std::size_t i) {
    const auto& outcome = (*outcomes)[i];
    if (!outcome.result) return;
    const auto& ps = *outcome.result;
    auto& out = produced[i];
    if (tasks.contains("desc")) out.desc = synthesis::render_desc(ps.scene, ps.layers, ps.grouped, rewriter);
    if (tasks.contains("conv")) out.conv = synthesis::gen_conv(ps.scene, ps.layers, ps.grouped, ps.relations);
    if (!tasks.contains("qa") && !tasks.contains("choice")) return;
    if (ps.relations.empty()) {
      out.notes.push_back("no spatial relations, questions skipped");
      return;
    }
    const auto qa = synthesis::gen_qa(ps.scene, ps.relations, cfg.qa_per_scene, cfg.seed);
    if (qa.shortfall > 0) {
      out.notes.push_back(std::to_string(qa.shortfall) + " of " + std::to_string(cfg.qa_per_scene) +
                          " questions not realizable");
    }
    for (std::size_t k = 0; k < qa.items.size(); ++k) {
      const auto& item = qa.items[k];
      if (tasks.contains("qa")) out.qa.push_back(synthesis::qa_record(item));
      if (!tasks.contains("choice")) continue;
      try {
        const auto truths = synthesis::true_phrases(ps.relations, item.fact_subject, item.fact_object);
        out.choice.push_back(synthesis::to_choice_format(item, vocab, cfg.seed, truths));
      } catch (const Error& e) {
        out.notes.push_back("choice item " + item.id + ": " + e.what());
      }
    }
  });

  std::vector<records::InstructionRecord> desc, qa, conv;
  std::vector<records::ChoiceItem> choice;
  for (std::size_t i = 0; i < produced.size(); ++i) {
    auto& p = produced[i];
    for (const auto& note : p.notes) io.err << "image " << (*outcomes)[i].image_id << ": " << note << '\n';
    if (p.desc) desc.push_back(std::move(*p.desc));
    if (p.conv) conv.push_back(std::move(*p.conv));
    for (auto& r : p.qa) qa.push_back(std::move(r));
    for (auto& c : p.choice) choice.push_back(std::move(c));
  }

  std::filesystem::create_directories(opts.out_dir);
  if (tasks.contains("desc")) {
    io.out << "desc: " << records::emit_jsonl(desc, opts.out_dir / "desc.jsonl") << " records\n";
  }
  if (tasks.contains("qa")) {
    io.out << "qa: " << records::emit_jsonl(qa, opts.out_dir / "qa.jsonl") << " records\n";
  }
  if (tasks.contains("conv")) {
    io.out << "conv: " << records::emit_jsonl(conv, opts.out_dir / "conv.jsonl") << " records\n";
  }
  if (tasks.contains("choice")) {
    io.out << "choice: " << records::emit_jsonl(choice, opts.out_dir / "choice.jsonl") << " records\n";
  }
  return kExitOk;
}

int cmd_evaluate_sgg(const EvaluateOptions& opts, const PipelineConfig& cfg, CommandIo io) {
  auto dataset = load_dataset_or_empty(opts.gold);
  if (!dataset || dataset->scenes.empty()) {
    io.err << "no scenes in " << opts.gold.string() << '\n';
    return kExitNoInput;
  }

  std::map<scene::ImageId, std::string> outputs;
  const auto lines = records::read_lines(opts.predictions);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto node = json::parse(lines[i], nullptr, false);
    if (node.is_discarded() || !node.is_object() || !node.contains("image_id") ||
        !node["image_id"].is_number_integer() || !node.contains("output") ||
        !node["output"].is_string()) {
      io.err << "prediction line " << i + 1 << ": expected {\"image_id\": int, \"output\": text}\n";
      continue;
    }
    auto& text = outputs[node["image_id"].get<scene::ImageId>()];
    if (!text.empty()) text += '\n';
    text += node["output"].get<std::string>();
  }

  eval::MatchConfig match;
  match.iou_threshold = cfg.iou;
  eval::SggEvaluator evaluator(match, cfg.topk);
  std::size_t diagnostics = 0;
  for (const auto& scene : dataset->scenes) {
    const auto gt = eval::ground_truth(scene);
    auto it = outputs.find(scene.meta.id);
    if (it == outputs.end()) {
      evaluator.add_missing_image(scene.meta.id, gt);
      continue;
    }
    const auto parsed = eval::parse_prediction(it->second);
    diagnostics += parsed.diagnostics.size();
    evaluator.add_image(parsed.triplets, gt);
  }
  if (diagnostics > 0) io.err << diagnostics << " prediction lines could not be parsed\n";

  eval::EvalReport report;
  try {
    report = evaluator.report();
  } catch (const Error& e) {
    io.err << e.what() << '\n';
    return kExitNoInput;
  }
  if (!opts.out.empty()) write_text(opts.out, eval::to_json(report));
  io.out << "Recall: " << percent(report.recall) << "  mRecall: " << percent(report.mean_recall)
         << "  (matched " << report.matched << "/" << report.total << ", N=" << report.num_classes
         << ", images without predictions: " << report.missing_images.size() << ")\n";
  return kExitOk;
}

int cmd_evaluate_qa(const EvaluateOptions& opts, CommandIo io) {
  const auto gold = records::read_choice_jsonl(opts.gold);
  if (gold.empty()) {
    io.err << "no gold items in " << opts.gold.string() << '\n';
    return kExitNoInput;
  }
  std::map<std::string, int> predictions;
  const auto lines = records::read_lines(opts.predictions);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto node = json::parse(lines[i], nullptr, false);
    if (node.is_discarded() || !node.is_object() || !node.contains("id") || !node["id"].is_string() ||
        !node.contains("answer") || !node["answer"].is_number_integer()) {
      io.err << "prediction line " << i + 1 << ": expected {\"id\": text, \"answer\": int}\n";
      continue;
    }
    predictions[node["id"].get<std::string>()] = node["answer"].get<int>();
  }
  const auto score = eval::score_choice_qa(predictions, gold);
  for (const auto& id : score.missing_ids) io.err << "no prediction for " << id << '\n';
  if (!opts.out.empty()) write_text(opts.out, eval::to_json(score));
  io.out << "Accuracy: " << percent(score.accuracy) << "%  (" << score.correct << "/" << score.total
         << ")\n";
  return kExitOk;
}

int cmd_stats(const StatsOptions& opts, const PipelineConfig& cfg, CommandIo io) {
  auto dataset = load_dataset_or_empty(opts.annotations);
  if (!dataset || dataset->scenes.empty()) {
    io.err << "no scenes in " << opts.annotations.string() << '\n';
    return kExitNoInput;
  }
  std::size_t objects = 0, triplets = 0, masks = 0, invalid = 0;
  std::map<std::string, std::size_t> predicates;
  for (const auto& s : dataset->scenes) {
    objects += s.objects.size();
    triplets += s.triplets.size();
    for (const auto& o : s.objects) masks += o.mask ? 1 : 0;
    for (const auto& t : s.triplets) ++predicates[t.predicate];
    if (!scene::validate_scene(s).empty()) ++invalid;
  }
  ordered_json node;
  node["images"] = dataset->scenes.size();
  node["categories"] = dataset->categories.size();
  node["objects"] = objects;
  node["objects_with_mask"] = masks;
  node["triplets"] = triplets;
  node["invalid_scenes"] = invalid;
  node["predicates"] = predicates;

  if (opts.depth_dir) {
    const auto outcomes = process_all(dataset->scenes, cfg, *opts.depth_dir);
    std::size_t ok = 0, layers = 0, relations = 0;
    std::map<std::string, std::size_t> kinds;
    for (const auto& o : outcomes) {
      if (!o.result) continue;
      ++ok;
      layers += o.result->layers.layers.size();
      relations += o.result->relations.size();
      for (const auto& r : o.result->relations) ++kinds[std::string(spatial::to_string(r.kind))];
    }
    report_failures(outcomes, io.err);
    node["processed_scenes"] = ok;
    node["failed_scenes"] = outcomes.size() - ok;
    node["mean_layers"] = ok == 0 ? 0.0 : static_cast<double>(layers) / static_cast<double>(ok);
    node["relations"] = relations;
    node["relation_kinds"] = kinds;
  }
  const std::string text = node.dump(2);
  if (opts.out) {
    write_text(*opts.out, text);
  } else {
    io.out << text << '\n';
  }
  return kExitOk;
}

}  // namespace forge::pipeline

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
// forge: builds spatial scene-graph instruction data and scores predictions.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using forge::PipelineConfig;
namespace pl = forge::pipeline;

// Values given on the command line; each overrides the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<double> iou;
  std::optional<std::size_t> topk;
  std::optional<std::string> llm_endpoint;
};

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg;
  if (o.config) cfg = forge::load_config(*o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.iou) cfg.iou = *o.iou;
  if (o.topk) cfg.topk = *o.topk;
  if (o.llm_endpoint) cfg.llm.url = *o.llm_endpoint;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "seed for question sampling and choice order");
  cmd->add_option("--jobs", o.jobs, "worker threads (default: logical CPU count)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial scene-graph instruction data builder"};
  app.require_subcommand(1);
  Overrides o;

  pl::ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "derive spatial relations and depth layers");
  extract->add_option("--annotations", ex.annotations, "annotation JSON")->required();
  extract->add_option("--depth-dir", ex.depth_dir, "directory of 16-bit depth PNGs")->required();
  extract->add_option("--out", ex.out_dir, "output directory")->required();
  add_common(extract, o);

  pl::SynthesizeOptions syn;
  auto* synthesize = app.add_subcommand("synthesize", "write instruction records");
  synthesize->add_option("--annotations", syn.annotations, "annotation JSON")->required();
  synthesize->add_option("--depth-dir", syn.depth_dir, "directory of 16-bit depth PNGs")->required();
  synthesize->add_option("--out", syn.out_dir, "output directory")->required();
  synthesize->add_option("--tasks", syn.tasks, "comma-separated subset of desc,qa,conv,choice")
      ->delimiter(',');
  synthesize->add_option("--llm-endpoint", o.llm_endpoint, "completion endpoint for description rewriting");
  add_common(synthesize, o);

  pl::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->require_subcommand(1);
  auto* sgg = evaluate->add_subcommand("sgg", "triplet recall and mean recall");
  sgg->add_option("--pred", ev.predictions, "prediction JSONL")->required()->check(CLI::ExistingFile);
  sgg->add_option("--gold", ev.gold, "annotation JSON")->required()->check(CLI::ExistingFile);
  sgg->add_option("--out", ev.out, "report JSON");
  sgg->add_option("--iou", o.iou, "IoU threshold (match when strictly greater)");
  sgg->add_option("--topk", o.topk, "predictions kept per image");
  sgg->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  auto* qa = evaluate->add_subcommand("qa", "multiple-choice accuracy");
  qa->add_option("--pred", ev.predictions, "prediction JSONL")->required()->check(CLI::ExistingFile);
  qa->add_option("--gold", ev.gold, "choice JSONL")->required()->check(CLI::ExistingFile);
  qa->add_option("--out", ev.out, "report JSON");

  pl::StatsOptions st;
  std::string stats_depth, stats_out;
  auto* stats = app.add_subcommand("stats", "dataset summary");
  stats->add_option("--annotations", st.annotations, "annotation JSON")->required();
  stats->add_option("--depth-dir", stats_depth, "also run extraction and report layer counts");
  stats->add_option("--out", stats_out, "write JSON here instead of stdout");
  add_common(stats, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pl::kExitOk : pl::kExitUsage;
  }

  pl::CommandIo io{std::cout, std::cerr};
  try {
    const PipelineConfig cfg = resolve_config(o);
    if (*extract) return pl::cmd_extract(ex, cfg, io);
    if (*synthesize) return pl::cmd_synthesize(syn, cfg, io);
    if (*sgg) return pl::cmd_evaluate_sgg(ev, cfg, io);
    if (*qa) return pl::cmd_evaluate_qa(ev, io);
    if (*stats) {
      if (!stats_depth.empty()) st.depth_dir = stats_depth;
      if (!stats_out.empty()) st.out = stats_out;
      return pl::cmd_stats(st, cfg, io);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::kExitUsage;
  }
  return pl::kExitUsage;
}

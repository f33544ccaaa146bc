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
#include "forge/records.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::records {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
std::size_t write_lines(const std::vector<T>& items, const std::filesystem::path& path) {
  for (const auto& item : items) {
    if (auto problem = check(item); !problem.empty()) {
      throw Error("refusing to write invalid record " + item.id + ": " + problem);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& item : items) out << to_json_line(item) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return items.size();
}

json parse_object(const std::string& line) {
  auto node = json::parse(line, nullptr, false);
  if (node.is_discarded() || !node.is_object()) throw SchemaError("<line>", "expected a JSON object");
  return node;
}

std::string get_string(const json& node, const char* key) {
  auto it = node.find(key);
  if (it == node.end() || !it->is_string()) throw SchemaError(key, "expected a string");
  return it->get<std::string>();
}

}  // namespace

std::string check(const InstructionRecord& record) {
  if (record.task != "desc" && record.task != "qa" && record.task != "conv") {
    return "unknown task \"" + record.task + "\"";
  }
  if (record.conversations.empty()) return "conversation is empty";
  for (std::size_t i = 0; i < record.conversations.size(); ++i) {
    const char* expected = i % 2 == 0 ? "human" : "gpt";
    if (record.conversations[i].from != expected) {
      return "turn " + std::to_string(i) + " should come from " + expected;
    }
  }
  return {};
}

std::string check(const ChoiceItem& item) {
  if (item.answer < 0 || item.answer > 3) return "answer index out of range";
  std::set<std::string> distinct(item.choices.begin(), item.choices.end());
  if (distinct.size() != item.choices.size()) return "choices are not pairwise distinct";
  return {};
}

std::string to_json_line(const InstructionRecord& record) {
  ordered_json node;
  node["id"] = record.id;
  node["image"] = record.image;
  node["task"] = record.task;
  node["conversations"] = ordered_json::array();
  for (const auto& t : record.conversations) {
    node["conversations"].push_back(ordered_json{{"from", t.from}, {"value", t.value}});
  }
  return node.dump();
}

std::string to_json_line(const ChoiceItem& item) {
  ordered_json node;
  node["id"] = item.id;
  node["image"] = item.image;
  node["question"] = item.question;
  node["choices"] = item.choices;
  node["answer"] = item.answer;
  return node.dump();
}

InstructionRecord instruction_from_json(const std::string& line) {
  const json node = parse_object(line);
  InstructionRecord record{get_string(node, "id"), get_string(node, "image"),
                           get_string(node, "task"), {}};
  auto it = node.find("conversations");
  if (it == node.end() || !it->is_array()) throw SchemaError("conversations", "expected an array");
  for (const auto& turn : *it) {
    if (!turn.is_object()) throw SchemaError("conversations", "expected turn objects");
    record.conversations.push_back({get_string(turn, "from"), get_string(turn, "value")});
  }
  return record;
}

ChoiceItem choice_from_json(const std::string& line) {
  const json node = parse_object(line);
  ChoiceItem item;
  item.id = get_string(node, "id");
  item.image = get_string(node, "image");
  item.question = get_string(node, "question");
  auto choices = node.find("choices");
  if (choices == node.end() || !choices->is_array() || choices->size() != 4) {
    throw SchemaError("choices", "expected exactly 4 choices");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(*choices)[i].is_string()) throw SchemaError("choices", "expected strings");
    item.choices[i] = (*choices)[i].get<std::string>();
  }
  auto answer = node.find("answer");
  if (answer == node.end() || !answer->is_number_integer()) {
    throw SchemaError("answer", "expected an integer");
  }
  item.answer = answer->get<int>();
  return item;
}

std::size_t emit_jsonl(const std::vector<InstructionRecord>& records,
                       const std::filesystem::path& path) {
  return write_lines(records, path);
}

std::size_t emit_jsonl(const std::vector<ChoiceItem>& items, const std::filesystem::path& path) {
  return write_lines(items, path);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<InstructionRecord> read_instruction_jsonl(const std::filesystem::path& path) {
  std::vector<InstructionRecord> out;
  for (const auto& line : read_lines(path)) out.push_back(instruction_from_json(line));
  return out;
}

std::vector<ChoiceItem> read_choice_jsonl(const std::filesystem::path& path) {
  std::vector<ChoiceItem> out;
  for (const auto& line : read_lines(path)) out.push_back(choice_from_json(line));
  return out;
}

}  // namespace forge::records

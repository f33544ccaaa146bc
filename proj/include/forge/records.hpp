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

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace forge::records {

struct Turn {
  std::string from;  // "human" or "gpt"
  std::string value;

  bool operator==(const Turn&) const = default;
};

/// One role-tagged conversation, tagged "desc", "qa" or "conv".
struct InstructionRecord {
  std::string id;
  std::string image;
  std::string task;
  std::vector<Turn> conversations;

  bool operator==(const InstructionRecord&) const = default;
};

/// Four-option single-choice question.
struct ChoiceItem {
  std::string id;
  std::string image;
  std::string question;
  std::array<std::string, 4> choices;
  int answer = 0;

  bool operator==(const ChoiceItem&) const = default;
};

/// Empty string when the record is well formed, else the first violated rule.
std::string check(const InstructionRecord& record);
std::string check(const ChoiceItem& item);

std::string to_json_line(const InstructionRecord& record);
std::string to_json_line(const ChoiceItem& item);
InstructionRecord instruction_from_json(const std::string& line);
ChoiceItem choice_from_json(const std::string& line);

/// Writes one compact JSON object per line and returns the count. Keys follow
/// the published field order so identical inputs give identical bytes.
std::size_t emit_jsonl(const std::vector<InstructionRecord>& records,
                       const std::filesystem::path& path);
std::size_t emit_jsonl(const std::vector<ChoiceItem>& items, const std::filesystem::path& path);

std::vector<InstructionRecord> read_instruction_jsonl(const std::filesystem::path& path);
std::vector<ChoiceItem> read_choice_jsonl(const std::filesystem::path& path);

/// Non-blank lines of a text file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace forge::records

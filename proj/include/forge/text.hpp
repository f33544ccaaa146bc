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

#include <string>
#include <string_view>
#include <vector>

namespace forge {

/// Lowercases ASCII letters, collapses whitespace runs to one space and trims
/// both ends. Every label and predicate comparison goes through this.
std::string normalize_label(std::string_view text);

/// Lowercase alphanumeric words of `text`, in order.
std::vector<std::string> split_words(std::string_view text);

std::string_view trim(std::string_view text);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

}  // namespace forge

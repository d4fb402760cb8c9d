// Copyright 2026 The Bitext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BITEXT_UTF8_H_
#define BITEXT_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace bitext {

// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count
// as one scalar each.
size_t CountScalars(std::string_view text);

// Splits UTF-8 text into one string per scalar value.
std::vector<std::string> SplitScalars(std::string_view text);

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> SplitWhitespace(std::string_view text);

// Splits on a single delimiter character, keeping empty fields.
std::vector<std::string> SplitFields(std::string_view text, char delimiter);

}  // namespace bitext

#endif  // BITEXT_UTF8_H_
